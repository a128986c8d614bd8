"""System models: vector fields, energies, contraction metrics and Lyapunov functions.

Phase states are numpy arrays whose trailing axis holds the coordinates, ordered
positions first, then velocities, then (contact systems only) the action ``z``.
Leading axes are treated as a batch, so the fields can drive many trajectories
at once.

The three families are

* :class:`MechanicalSystem` -- ``L = 1/2 qd.T M qd - 1/2 q.T K q`` with the
  dissipative force ``F = -b qd``;
* :class:`ContactSystem` -- the contact Lagrangian ``L - (b/m) z`` with
  ``M = m I``;
* :class:`ChaplyginDisk` -- the vertical rolling disk, whose reduced dynamics is
  a mechanical system on the ``(theta, phi)`` torus.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConstraintViolation, DimensionMismatch, NotPositiveDefinite
from .numerics import SPD_FLOOR, is_positive_definite, min_pencil_eigenvalue, sym

COMMUTE_TOL = 1e-10


def _spd_or_raise(a: np.ndarray, name: str) -> None:
    lo = float(np.linalg.eigvalsh(a)[0])
    if lo <= SPD_FLOOR:
        raise NotPositiveDefinite(f"{name} is not positive definite (min eigenvalue {lo:.6g})")


def _state(s, dim: int) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    if s.ndim == 0 or s.shape[-1] != dim:
        raise DimensionMismatch(f"expected phase state of dimension {dim}, got shape {s.shape}")
    return s


@dataclass(frozen=True)
class MechanicalSystem:
    """Quadratic Lagrangian with linear viscous damping ``-b qd``.

    ``b == 0`` is accepted so that conservative negative controls can be built;
    everything that certifies contraction requires ``b > 0``.
    """

    M: np.ndarray
    K: np.ndarray
    b: float
    M_inv: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        M = sym(self.M)
        K = sym(self.K)
        if M.shape != K.shape:
            raise DimensionMismatch(f"M is {M.shape} but K is {K.shape}")
        _spd_or_raise(M, "M")
        _spd_or_raise(K, "K")
        if not np.isfinite(self.b) or self.b < 0:
            raise ValueError(f"damping b must be finite and >= 0, got {self.b}")
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "b", float(self.b))
        object.__setattr__(self, "M_inv", sym(np.linalg.inv(M)))

    @property
    def n(self) -> int:
        return self.M.shape[0]

    @property
    def phase_dim(self) -> int:
        return 2 * self.n

    @property
    def commutator_norm(self) -> float:
        """``max |K M^-1 - M^-1 K|``; certification needs it below 1e-10."""
        return float(np.max(np.abs(self.K @ self.M_inv - self.M_inv @ self.K)))

    @property
    def commutes(self) -> bool:
        return self.commutator_norm <= COMMUTE_TOL


@dataclass(frozen=True)
class ContactSystem:
    """Contact Lagrangian ``1/2 qd.T M qd - 1/2 q.T K q - (b/m) z`` with ``M = m I``."""

    m: float
    K: np.ndarray
    b: float

    def __post_init__(self):
        K = sym(self.K)
        _spd_or_raise(K, "K")
        if not self.m > 0:
            raise ValueError(f"mass m must be > 0, got {self.m}")
        if not np.isfinite(self.b) or self.b < 0:
            raise ValueError(f"damping b must be finite and >= 0, got {self.b}")
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "m", float(self.m))
        object.__setattr__(self, "b", float(self.b))

    @property
    def n(self) -> int:
        return self.K.shape[0]

    @property
    def M(self) -> np.ndarray:
        return self.m * np.eye(self.n)

    @property
    def phase_dim(self) -> int:
        return 2 * self.n + 1

    def mechanical_part(self) -> MechanicalSystem:
        """The ``(q, qd)`` dynamics, which coincide with a mechanical system."""
        return MechanicalSystem(M=self.M, K=self.K, b=self.b)


@dataclass(frozen=True)
class ChaplyginDisk:
    """Vertical rolling disk with restoring potential and cyclic damping.

    The reduced inertia of the rolling angle is ``I + mass * R``, matching the
    reduced equations used throughout (the textbook reduction gives ``I + mass * R**2``).
    """

    mass: float
    I: float  # noqa: E741
    J: float
    R: float
    b: float

    def __post_init__(self):
        for name in ("mass", "I", "J", "R"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be > 0, got {value}")
            object.__setattr__(self, name, float(value))
        if not np.isfinite(self.b) or self.b < 0:
            raise ValueError(f"damping b must be finite and >= 0, got {self.b}")
        object.__setattr__(self, "b", float(self.b))

    @property
    def rolling_inertia(self) -> float:
        return self.I + self.mass * self.R

    def reduced(self) -> MechanicalSystem:
        return MechanicalSystem(
            M=np.diag([self.rolling_inertia, self.J]), K=np.eye(2), b=self.b
        )


# -- vector fields -----------------------------------------------------------


def mech_field(sys: MechanicalSystem, s) -> np.ndarray:
    """``(qd, M^-1 (-K q - b qd))``."""
    s = _state(s, sys.phase_dim)
    n = sys.n
    q, qd = s[..., :n], s[..., n:]
    acc = (-(q @ sys.K) - sys.b * qd) @ sys.M_inv
    return np.concatenate([qd, acc], axis=-1)


def contact_lagrangian(sys: ContactSystem, s) -> np.ndarray:
    s = _state(s, sys.phase_dim)
    n = sys.n
    q, qd, z = s[..., :n], s[..., n : 2 * n], s[..., 2 * n]
    kinetic = 0.5 * sys.m * np.sum(qd * qd, axis=-1)
    potential = 0.5 * np.sum(q * (q @ sys.K), axis=-1)
    return kinetic - potential - (sys.b / sys.m) * z


def contact_field(sys: ContactSystem, s) -> np.ndarray:
    """``(qd, M^-1 (-K q - b qd), L(q, qd, z))``."""
    s = _state(s, sys.phase_dim)
    n = sys.n
    q, qd = s[..., :n], s[..., n : 2 * n]
    acc = (-(q @ sys.K) - sys.b * qd) / sys.m
    zdot = contact_lagrangian(sys, s)[..., None]
    return np.concatenate([qd, acc, zdot], axis=-1)


def disk_reduced_field(sys: ChaplyginDisk, s) -> np.ndarray:
    """Reduced disk dynamics on ``(theta, phi, theta_dot, phi_dot)``."""
    s = _state(s, 4)
    theta, phi, dtheta, dphi = (s[..., i] for i in range(4))
    ddtheta = (-theta - sys.b * dtheta) / sys.rolling_inertia
    ddphi = (-phi - sys.b * dphi) / sys.J
    return np.stack([dtheta, dphi, ddtheta, ddphi], axis=-1)


def disk_constraint_residual(sys: ChaplyginDisk, s) -> np.ndarray:
    """``(xd - R thd cos phi, yd - R thd sin phi)`` for full 8-D states."""
    s = _state(s, 8)
    phi, xd, yd, dtheta = s[..., 3], s[..., 4], s[..., 5], s[..., 6]
    return np.stack(
        [xd - sys.R * dtheta * np.cos(phi), yd - sys.R * dtheta * np.sin(phi)], axis=-1
    )


def disk_full_field(sys: ChaplyginDisk, s, constraint_tol: float = 1e-8) -> np.ndarray:
    """Horizontal lift of the reduced disk dynamics.

    State layout is ``(x, y, theta, phi, xd, yd, thd, phd)``. The planar
    velocities are slaved to the rolling constraints: ``x`` and ``y`` advance
    with ``R thd (cos phi, sin phi)`` and ``xd, yd`` follow the time derivative
    of those expressions, so an exact flow stays on the constraint set.
    """
    s = _state(s, 8)
    phi, xd, yd = s[..., 3], s[..., 4], s[..., 5]
    theta, dtheta, dphi = s[..., 2], s[..., 6], s[..., 7]
    c, sn = np.cos(phi), np.sin(phi)
    R = sys.R
    xdot = R * dtheta * c
    ydot = R * dtheta * sn
    residual = max(np.max(np.abs(xd - xdot)), np.max(np.abs(yd - ydot)))
    if residual > constraint_tol:
        raise ConstraintViolation(f"rolling constraint residual {residual:.3g} > {constraint_tol:g}")
    ddtheta = (-theta - sys.b * dtheta) / sys.rolling_inertia
    out = np.empty_like(s)
    out[..., 0] = xdot
    out[..., 1] = ydot
    out[..., 2] = dtheta
    out[..., 3] = dphi
    out[..., 4] = R * (ddtheta * c - dtheta * dphi * sn)
    out[..., 5] = R * (ddtheta * sn + dtheta * dphi * c)
    out[..., 6] = ddtheta
    out[..., 7] = (-phi - sys.b * dphi) / sys.J
    return out


def disk_flow(sys: ChaplyginDisk, constraint_tol: float = 1e-6):
    """:func:`disk_full_field` as a one-argument callable for integrators.

    Intermediate Runge-Kutta stages sit ``O(dt^2)`` off the constraint set even
    when every accepted step is on it, so stages are checked against the looser
    residual budget ``constraint_tol``.
    """
    return lambda s: disk_full_field(sys, s, constraint_tol)


def disk_state(sys: ChaplyginDisk, theta, phi, dtheta, dphi, x=0.0, y=0.0) -> np.ndarray:
    """Full 8-D state on the constraint set from reduced coordinates."""
    return np.array(
        [
            x,
            y,
            theta,
            phi,
            sys.R * dtheta * np.cos(phi),
            sys.R * dtheta * np.sin(phi),
            dtheta,
            dphi,
        ],
        dtype=float,
    )


# -- contraction metrics -----------------------------------------------------


def mech_metric(sys: MechanicalSystem, eps: float) -> np.ndarray:
    """``[[K, b eps I], [b eps I, M]]``. Not necessarily SPD."""
    coupling = sys.b * eps * np.eye(sys.n)
    return sym(np.block([[sys.K, coupling], [coupling, sys.M]]))


def contact_metric(sys: ContactSystem, eps: float) -> np.ndarray:
    n = sys.n
    g = np.zeros((2 * n + 1, 2 * n + 1))
    g[: 2 * n, : 2 * n] = mech_metric(sys.mechanical_part(), eps)
    g[2 * n, 2 * n] = sys.b
    return sym(g)


def disk_metric(sys: ChaplyginDisk, eps: float) -> np.ndarray:
    return mech_metric(sys.reduced(), eps)


def metric_spd_limit(sys: MechanicalSystem) -> float:
    """Supremum of ``eps >= 0`` for which :func:`mech_metric` is SPD.

    ``G_eps`` is SPD iff ``M - (b eps)^2 K^-1`` is, i.e. iff
    ``(b eps)^2 < min eig of the pencil (M, K^-1)``.
    """
    if sys.b == 0:
        return np.inf
    return float(np.sqrt(min_pencil_eigenvalue(sys.M, np.linalg.inv(sys.K))) / sys.b)


# -- energies and Lyapunov functions -----------------------------------------


def energy(sys: MechanicalSystem, s) -> np.ndarray:
    """``1/2 qd.T M qd + 1/2 q.T K q``."""
    s = _state(s, sys.phase_dim)
    n = sys.n
    q, qd = s[..., :n], s[..., n:]
    return 0.5 * np.sum(qd * (qd @ sys.M), axis=-1) + 0.5 * np.sum(q * (q @ sys.K), axis=-1)


def _quad(g: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.einsum("...i,ij,...j->...", v, g, v)


def lyapunov(sys: MechanicalSystem, eps: float, s) -> np.ndarray:
    """``V = |Gamma(s)|^2`` in the metric ``G_eps``."""
    g = mech_metric(sys, eps)
    if not is_positive_definite(g):
        raise NotPositiveDefinite(f"G_eps is not positive definite at eps={eps}")
    return _quad(g, mech_field(sys, s))


def lyapunov_closed_form(sys: MechanicalSystem, eps: float, s) -> np.ndarray:
    """Expanded polynomial form of :func:`lyapunov` (independent evaluation)."""
    s = _state(s, sys.phase_dim)
    n = sys.n
    q, qd = s[..., :n], s[..., n:]
    K, Mi, b = sys.K, sys.M_inv, sys.b
    MiK = Mi @ K
    return (
        _quad(K @ Mi @ K, q)
        + 2 * b * np.einsum("...i,ij,...j->...", qd, MiK - eps * MiK, q)
        + _quad(K + b**2 * Mi - 2 * b**2 * eps * Mi, qd)
    )


def contact_lyapunov(sys: ContactSystem, eps: float, s) -> np.ndarray:
    g = contact_metric(sys, eps)
    if not is_positive_definite(g):
        raise NotPositiveDefinite(f"contact G_eps is not positive definite at eps={eps}")
    return _quad(g, contact_field(sys, s))


def contact_lyapunov_short_form(b: float, eps: float, s) -> np.ndarray:
    """Short 1-D expansion for ``m = 1, K = [[1]]`` that drops the acceleration term.

    ``(1 - 2 b^2 eps) qd^2 - 2 b eps qd q + b (qd^2/2 - q^2/2 - b z)^2``.
    This omits the ``|q + b qd|^2`` contribution of the acceleration block and
    therefore does not equal :func:`contact_lyapunov`.
    """
    s = np.asarray(s, dtype=float)
    q, qd, z = s[..., 0], s[..., 1], s[..., 2]
    return (1 - 2 * b**2 * eps) * qd**2 - 2 * b * eps * qd * q + b * (0.5 * qd**2 - 0.5 * q**2 - b * z) ** 2


def contact_lyapunov_closed_form(b: float, eps: float, s) -> np.ndarray:
    """Full expansion of ``|Gamma|^2`` for ``m = 1, K = [[1]]``."""
    s = np.asarray(s, dtype=float)
    q, qd, z = s[..., 0], s[..., 1], s[..., 2]
    return (
        (1 + b**2 - 2 * b**2 * eps) * qd**2
        + 2 * b * (1 - eps) * qd * q
        + q**2
        + b * (0.5 * qd**2 - 0.5 * q**2 - b * z) ** 2
    )
