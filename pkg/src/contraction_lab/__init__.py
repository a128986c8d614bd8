"""Contraction analysis for dissipative mechanical, contact and Chaplygin systems."""

from .contraction import (
    Certificate,
    EpsilonInterval,
    SystemKind,
    certify,
    certify_contact,
    certify_disk,
    certify_mech,
    contact_lie_matrix,
    contact_radius,
    epsilon_interval_mech,
    lie_derivative_fd,
    mech_lie_matrix,
)
from .sim import Trajectory, RateFit, rk4_integrate
from .sysfile import parse_system
from .systems import ChaplyginDisk, ContactSystem, MechanicalSystem

__all__ = [
    "Certificate",
    "ChaplyginDisk",
    "ContactSystem",
    "EpsilonInterval",
    "MechanicalSystem",
    "RateFit",
    "SystemKind",
    "Trajectory",
    "certify",
    "certify_contact",
    "certify_disk",
    "certify_mech",
    "contact_lie_matrix",
    "contact_radius",
    "epsilon_interval_mech",
    "lie_derivative_fd",
    "mech_lie_matrix",
    "parse_system",
    "rk4_integrate",
]
