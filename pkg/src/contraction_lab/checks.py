"""Property checks run by ``contraction-lab verify`` against a single system."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .contraction import (
    RouteDisagreement,
    certify_contact,
    certify_mech,
    contact_extremal_direction,
    contact_lie_matrix,
    contact_radius,
    epsilon_interval_mech,
    lie_derivative_fd,
    mech_lie_matrix,
)
from .errors import ContractionLabError
from .numerics import is_negative_definite
from .systems import (
    ChaplyginDisk,
    ContactSystem,
    MechanicalSystem,
    contact_field,
    contact_lagrangian,
    contact_lyapunov,
    contact_lyapunov_closed_form,
    contact_lyapunov_short_form,
    contact_metric,
    disk_constraint_residual,
    disk_flow,
    disk_state,
    energy,
    lyapunov,
    lyapunov_closed_form,
    mech_field,
    mech_metric,
)
from .sim import (
    disk_distance_to_EP,
    lyapunov_decay_check,
    pair_divergence,
    rk4_integrate,
    time_derivative,
    verify_contraction_bound,
)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    gating: bool = True


def _lie_derivative_check(field, g, s_mat, states, dirs) -> CheckResult:
    worst = 0.0
    for s, v in zip(states, dirs):
        fd = lie_derivative_fd(field, g, s, v, h=1e-5)
        analytic = 2.0 * float(v @ s_mat(s) @ v)
        worst = max(worst, abs(fd - analytic))
    return CheckResult("lie_derivative_crosscheck", worst <= 1e-6, f"max |fd - 2 v.T S v| = {worst:.3g}")


def _mechanical_checks(sys: MechanicalSystem, rng: np.random.Generator) -> list[CheckResult]:
    out: list[CheckResult] = []
    if not sys.b > 0:
        return [CheckResult("damping_positive", False, "b = 0: conservative system cannot contract")]
    interval = epsilon_interval_mech(sys)
    eps = 0.5 * interval.hi
    out.append(CheckResult("epsilon_interval", True, f"({interval.lo:.17g}, {interval.hi:.17g})"))

    dim = sys.phase_dim
    states = rng.standard_normal((100, dim))
    dirs = rng.standard_normal((100, dim))
    s_mat = mech_lie_matrix(sys, eps)
    out.append(_lie_derivative_check(lambda x: mech_field(sys, x), mech_metric(sys, eps), lambda _: s_mat, states, dirs))

    inside = is_negative_definite(mech_lie_matrix(sys, interval.hi * (1 - 1e-6)))
    outside = is_negative_definite(mech_lie_matrix(sys, interval.hi * 1.01))
    out.append(
        CheckResult(
            "interval_boundary",
            inside and not outside,
            f"negative definite just inside: {inside}, just outside: {outside}",
        )
    )

    try:
        for e in interval.grid(50):
            certify_mech(sys, e)
        out.append(CheckResult("schur_eigen_agreement", True, "50 eps values agree"))
    except RouteDisagreement as exc:
        out.append(CheckResult("schur_eigen_agreement", False, str(exc)))

    v_direct = lyapunov(sys, eps, states)
    v_closed = lyapunov_closed_form(sys, eps, states)
    err = float(np.max(np.abs(v_direct - v_closed) / np.maximum(1.0, np.abs(v_direct))))
    out.append(CheckResult("lyapunov_closed_form", err <= 1e-10, f"max rel. deviation {err:.3g}"))

    cert = certify_mech(sys, eps)
    dt, steps = 1e-3, 20_000
    x0 = 0.5 * rng.standard_normal((2, dim))
    traj = rk4_integrate(lambda x: mech_field(sys, x), x0, dt, steps)

    e = energy(sys, traj.states[:, 0])
    de = time_derivative(e, dt)
    qd = traj.states[2:-2, 0, sys.n :]
    dev = float(np.max(np.abs(de + sys.b * np.sum(qd * qd, axis=-1))))
    out.append(CheckResult("energy_dissipation", dev <= 1e-5, f"max |dE/dt + b|qd|^2| = {dev:.3g}"))

    g = mech_metric(sys, eps)
    d = pair_divergence(traj.member(0), traj.member(1), g)
    ok = verify_contraction_bound(d, traj.times, cert.rate, 1e-3)
    out.append(CheckResult("contraction_bound", ok, f"rate {cert.rate:.6g}, d(T)/d(0) = {d[-1] / d[0]:.3g}"))

    ok = lyapunov_decay_check(sys, eps, traj.member(0))
    out.append(CheckResult("lyapunov_decay", ok, "V strictly decreasing above 1e-14"))
    return out


def _disk_checks(disk: ChaplyginDisk, rng: np.random.Generator) -> list[CheckResult]:
    out = _mechanical_checks(disk.reduced(), rng)
    if not disk.b > 0:
        return out
    eps = 0.5 * epsilon_interval_mech(disk.reduced()).hi
    cert = certify_mech(disk.reduced(), eps)
    x0 = disk_state(disk, *(0.1 * rng.standard_normal(4)))
    traj = rk4_integrate(disk_flow(disk), x0, 1e-3, 1000)
    res = float(np.max(np.abs(disk_constraint_residual(disk, traj.states))))
    out.append(CheckResult("constraint_preservation", res < 1e-6, f"max residual {res:.3g}"))
    d = disk_distance_to_EP(traj.states, disk, eps)
    ok = verify_contraction_bound(d, traj.times, cert.rate, 1e-3)
    out.append(CheckResult("distance_to_EP_bound", ok, f"rate {cert.rate:.6g}"))
    return out


def _contact_checks(sys: ContactSystem, rng: np.random.Generator) -> list[CheckResult]:
    out: list[CheckResult] = []
    if not sys.b > 0:
        return [CheckResult("damping_positive", False, "b = 0: conservative system cannot contract")]
    mech = sys.mechanical_part()
    interval = epsilon_interval_mech(mech)
    eps = 0.5 * interval.hi
    n, dim = sys.n, sys.phase_dim
    radius = contact_radius(sys, eps)
    out.append(CheckResult("contact_radius", radius > 0, f"eps {eps:.6g}, radius {radius:.17g}"))

    states = rng.uniform(-0.5, 0.5, (100, dim)) * min(1.0, radius)
    dirs = rng.standard_normal((100, dim))
    out.append(
        _lie_derivative_check(
            lambda x: contact_field(sys, x),
            contact_metric(sys, eps),
            lambda s: contact_lie_matrix(sys, eps, s[:n], s[n : 2 * n]),
            states,
            dirs,
        )
    )

    try:
        for e in interval.grid(50):
            certify_mech(mech, e)
        out.append(CheckResult("schur_eigen_agreement", True, "50 eps values agree"))
    except RouteDisagreement as exc:
        out.append(CheckResult("schur_eigen_agreement", False, str(exc)))

    v = contact_lyapunov(sys, eps, states)
    split = lyapunov(mech, eps, states[:, : 2 * n]) + sys.b * contact_lagrangian(sys, states) ** 2
    err = float(np.max(np.abs(v - split) / np.maximum(1.0, np.abs(v))))
    out.append(CheckResult("lyapunov_block_form", err <= 1e-10, f"max rel. deviation {err:.3g}"))

    if n == 1 and sys.m == 1.0 and sys.K[0, 0] == 1.0:
        closed = contact_lyapunov_closed_form(sys.b, eps, states)
        err = float(np.max(np.abs(v - closed) / np.maximum(1.0, np.abs(v))))
        out.append(CheckResult("lyapunov_closed_form", err <= 1e-10, f"max rel. deviation {err:.3g}"))
        short = contact_lyapunov_short_form(sys.b, eps, states)
        err = float(np.max(np.abs(v - short)))
        out.append(
            CheckResult(
                "lyapunov_short_expansion",
                err <= 1e-10,
                f"max |V - short form| = {err:.3g} (short form omits |q + b qd|^2)",
                gating=False,
            )
        )

    inside = certify_contact(sys, eps, radius * (1 - 1e-6))
    outside = certify_contact(sys, eps, 10 * radius)
    out.append(
        CheckResult(
            "contact_region_scan",
            inside.feasible and not outside.feasible,
            f"feasible at r(1-1e-6): {inside.feasible}, at 10 r: {outside.feasible}",
        )
    )
    w = contact_extremal_direction(sys, eps)
    beyond = contact_lie_matrix(sys, eps, 1.1 * radius * w[:n], 1.1 * radius * w[n:])
    out.append(
        CheckResult(
            "contact_radius_tight",
            not is_negative_definite(beyond),
            "extremal direction at 1.1 r leaves the negative-definite set",
        )
    )

    x0 = np.zeros(dim)
    x0[: 2 * n] = 0.1 * radius * w
    traj = rk4_integrate(lambda x: contact_field(sys, x), x0, 1e-3, 10_000)
    ok = lyapunov_decay_check(sys, eps, traj)
    out.append(CheckResult("lyapunov_decay", ok, "V strictly decreasing above 1e-14 near the origin"))
    return out


def run_checks(system, seed: int = 42) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    try:
        if isinstance(system, ChaplyginDisk):
            return _disk_checks(system, rng)
        if isinstance(system, ContactSystem):
            return _contact_checks(system, rng)
        if isinstance(system, MechanicalSystem):
            return _mechanical_checks(system, rng)
    except ContractionLabError as exc:
        return [CheckResult("suite", False, f"{type(exc).__name__}: {exc}")]
    raise TypeError(f"unsupported system type {type(system).__name__}")
