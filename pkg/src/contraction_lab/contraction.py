"""Contraction certificates for the mechanical, contact and rolling-disk systems.

Convention: the matrix ``S`` returned by :func:`mech_lie_matrix` and
:func:`contact_lie_matrix` represents ``Gamma^c(L_G)``, the derivative of the
kinetic energy ``1/2 v.T G v`` along the complete lift. The Lie derivative of
the metric is therefore ``2 S``, which is what :func:`lie_derivative_fd`
measures. Certificates test ``S`` for strict negative definiteness and report
the rate ``lambda = -mu_max(S, G) / 2``, for which ``S + 2 lambda G`` is
negative semidefinite.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    ContractionLabError,
    NonFinite,
    NotCommuting,
    NotNegativeDefinite,
    NotPositiveDefinite,
    SingularBlock,
)
from .numerics import (
    DEFAULT_TOL,
    generalized_max_eigenvalue,
    is_negative_definite,
    is_positive_definite,
    min_pencil_eigenvalue,
    schur_negative_definite,
    sym,
)
from .systems import (
    ChaplyginDisk,
    ContactSystem,
    MechanicalSystem,
    contact_metric,
    mech_metric,
)


class SystemKind(str, enum.Enum):
    MECHANICAL = "mechanical"
    CONTACT = "contact"
    DISK = "disk"


class RouteDisagreement(ContractionLabError, RuntimeError):
    """The eigenvalue and Schur-complement definiteness tests disagree."""


@dataclass(frozen=True)
class Certificate:
    system_kind: SystemKind
    eps: float
    feasible: bool
    rate: float
    max_eigenvalue: float
    tol: float
    region: float | None = None

    def __post_init__(self):
        if self.feasible and not (self.max_eigenvalue < -self.tol and self.rate > 0):
            raise ValueError("a feasible certificate needs max_eigenvalue < -tol and rate > 0")

    def as_dict(self) -> dict:
        return {
            "system_kind": self.system_kind.value,
            "eps": self.eps,
            "feasible": self.feasible,
            "rate": self.rate,
            "max_eigenvalue": self.max_eigenvalue,
            "tol": self.tol,
            "region": self.region,
        }


@dataclass(frozen=True)
class EpsilonInterval:
    """Open interval ``(lo, hi)`` of admissible metric parameters."""

    lo: float
    hi: float
    open_lo: bool = True
    open_hi: bool = True

    def __post_init__(self):
        if not 0 <= self.lo < self.hi:
            raise ValueError(f"invalid interval ({self.lo}, {self.hi})")

    def __contains__(self, eps: float) -> bool:
        above = eps > self.lo if self.open_lo else eps >= self.lo
        below = eps < self.hi if self.open_hi else eps <= self.hi
        return above and below

    def grid(self, points: int) -> np.ndarray:
        """``points`` equally spaced values strictly inside the interval."""
        return np.linspace(self.lo, self.hi, points + 2)[1:-1]


def _require_commuting(sys: MechanicalSystem) -> None:
    if not sys.commutes:
        raise NotCommuting(
            f"K M^-1 - M^-1 K has max entry {sys.commutator_norm:.3g} > 1e-10"
        )


def mech_lie_matrix(sys: MechanicalSystem, eps: float) -> np.ndarray:
    """``[[-b eps K M^-1, -(b^2 eps / 2) M^-1], [., (b eps - b) I]]``."""
    _require_commuting(sys)
    b, n = sys.b, sys.n
    off = -0.5 * b**2 * eps * sys.M_inv
    return sym(
        np.block(
            [
                [-b * eps * sys.K @ sys.M_inv, off],
                [off, (b * eps - b) * np.eye(n)],
            ]
        )
    )


def contact_border_map(sys: ContactSystem) -> np.ndarray:
    """Linear map ``(q, qd) -> B`` with ``B = (-b K q / 2, b M qd / 2)``."""
    n = sys.n
    lmap = np.zeros((2 * n, 2 * n))
    lmap[:n, :n] = -0.5 * sys.b * sys.K
    lmap[n:, n:] = 0.5 * sys.b * sys.m * np.eye(n)
    return lmap


def contact_lie_matrix(sys: ContactSystem, eps: float, q, qd) -> np.ndarray:
    """Contact analogue of :func:`mech_lie_matrix`, which depends on ``(q, qd)``.

    ``q`` and ``qd`` may carry leading batch axes, in which case a stack of
    matrices is returned. The ``z`` corner is ``-b^2 / m``.
    """
    n = sys.n
    q = np.asarray(q, dtype=float)
    qd = np.asarray(qd, dtype=float)
    if q.shape[-1:] != (n,) or qd.shape != q.shape:
        raise ValueError(f"q and qd must both have trailing dimension {n}")
    a = mech_lie_matrix(sys.mechanical_part(), eps)
    border = np.concatenate([q, qd], axis=-1) @ contact_border_map(sys).T
    batch = border.shape[:-1]
    out = np.zeros(batch + (2 * n + 1, 2 * n + 1))
    out[..., : 2 * n, : 2 * n] = a
    out[..., : 2 * n, 2 * n] = border
    out[..., 2 * n, : 2 * n] = border
    out[..., 2 * n, 2 * n] = -sys.b**2 / sys.m
    return out


def lie_derivative_fd(
    field: Callable[[np.ndarray], np.ndarray],
    metric,
    s,
    v,
    h: float = 1e-5,
) -> float:
    """``(L_X g)(v, v) = 2 g(DX(s) v, v)`` with ``DX v`` by central differences."""
    if not h > 0:
        raise ValueError("step h must be > 0")
    g = sym(metric)
    s = np.asarray(s, dtype=float)
    v = np.asarray(v, dtype=float)
    jv = (np.asarray(field(s + h * v)) - np.asarray(field(s - h * v))) / (2 * h)
    value = 2.0 * float(v @ g @ jv)
    if not np.isfinite(value):
        raise NonFinite("finite-difference Lie derivative is not finite")
    return value


def epsilon_interval_mech(sys: MechanicalSystem) -> EpsilonInterval:
    """Open interval of ``eps`` for which :func:`mech_lie_matrix` is negative definite.

    The Schur complement with respect to the ``(b eps - b) I`` block is
    negative definite iff ``eps (K M^-1 + b^2/4 M^-2) - K M^-1`` is, which
    holds exactly for ``eps`` below the smallest eigenvalue of that pencil.
    The block itself needs ``eps < 1``. The result always lies inside the
    window where ``G_eps`` is positive definite.
    """
    if not sys.b > 0:
        raise ValueError("epsilon interval requires damping b > 0")
    _require_commuting(sys)
    km = sym(sys.K @ sys.M_inv)
    pencil_rhs = km + 0.25 * sys.b**2 * (sys.M_inv @ sys.M_inv)
    return EpsilonInterval(0.0, min(1.0, min_pencil_eigenvalue(km, pencil_rhs)))


def _schur_route(s: np.ndarray, n: int, tol: float) -> bool:
    try:
        return schur_negative_definite(s[:n, :n], s[:n, n:], s[n:, n:], tol)
    except SingularBlock:
        # a negative definite matrix has negative definite principal blocks
        return False


def certify_mech(
    sys: MechanicalSystem,
    eps: float,
    tol: float = DEFAULT_TOL,
    kind: SystemKind = SystemKind.MECHANICAL,
) -> Certificate:
    """Certify contraction of a damped mechanical system in ``G_eps``.

    Raises:
        NotPositiveDefinite: ``G_eps`` is not a metric.
        NotCommuting: ``K`` and ``M^-1`` do not commute.
        RouteDisagreement: the eigenvalue and Schur tests disagree.
    """
    g = mech_metric(sys, eps)
    if not is_positive_definite(g):
        raise NotPositiveDefinite(f"G_eps is not positive definite at eps={eps}")
    s = mech_lie_matrix(sys, eps)
    top = float(np.linalg.eigvalsh(s)[-1])
    feasible = is_negative_definite(s, tol)
    if feasible != _schur_route(s, sys.n, tol):
        raise RouteDisagreement(
            f"eigenvalue test says {feasible} but Schur test disagrees at eps={eps}"
        )
    rate = -0.5 * generalized_max_eigenvalue(s, g) if feasible else 0.0
    return Certificate(kind, float(eps), feasible, rate, top, tol)


def certify_disk(sys: ChaplyginDisk, eps: float, tol: float = DEFAULT_TOL) -> Certificate:
    return certify_mech(sys.reduced(), eps, tol, kind=SystemKind.DISK)


def contact_radius(sys: ContactSystem, eps: float) -> float:
    """Radius of the largest ``(q, qd)`` ball on which the contact matrix stays negative definite.

    With ``A`` the mechanical block and ``B = L (q, qd)`` the border, the
    matrix is negative definite iff ``-b^2/m - B.T A^-1 B < 0``. Since
    ``-L.T A^-1 L`` is positive definite, the bound is tight along its top
    eigenvector.
    """
    a = mech_lie_matrix(sys.mechanical_part(), eps)
    if not is_negative_definite(a):
        raise NotNegativeDefinite(f"mechanical block is not negative definite at eps={eps}")
    lmap = contact_border_map(sys)
    w = sym(-lmap.T @ np.linalg.solve(a, lmap))
    top = float(np.linalg.eigvalsh(w)[-1])
    return float(np.sqrt((sys.b**2 / sys.m) / top))


def contact_extremal_direction(sys: ContactSystem, eps: float) -> np.ndarray:
    """Unit ``(q, qd)`` direction along which :func:`contact_radius` is attained."""
    a = mech_lie_matrix(sys.mechanical_part(), eps)
    lmap = contact_border_map(sys)
    w = sym(-lmap.T @ np.linalg.solve(a, lmap))
    return np.linalg.eigh(w)[1][:, -1]


def ball_grid(dim: int, radius: float, grid: int, seed: int = 0) -> np.ndarray:
    """Deterministic radial-angular sample of the closed ball in ``R^dim``.

    Every pair of coordinate axes gets a polar grid of ``grid`` radii by
    ``2 * grid`` angles; for ``dim > 2`` this is topped up with ``grid**2``
    seeded random directions on the same radii.
    """
    radii = np.linspace(0.0, radius, grid)
    angles = np.linspace(0.0, 2 * np.pi, 2 * grid, endpoint=False)
    dirs = []
    for i in range(dim):
        for j in range(i + 1, dim):
            d = np.zeros((angles.size, dim))
            d[:, i] = np.cos(angles)
            d[:, j] = np.sin(angles)
            dirs.append(d)
    if dim == 1:
        dirs.append(np.array([[1.0], [-1.0]]))
    if dim > 2:
        extra = np.random.default_rng(seed).standard_normal((grid**2, dim))
        dirs.append(extra / np.linalg.norm(extra, axis=1, keepdims=True))
    dirs = np.concatenate(dirs)
    return (radii[:, None, None] * dirs[None, :, :]).reshape(-1, dim)


def contact_scan_max_eigenvalue(sys: ContactSystem, eps: float, points) -> np.ndarray:
    """Largest eigenvalue of the contact matrix at each ``(q, qd)`` row of ``points``."""
    n = sys.n
    points = np.atleast_2d(np.asarray(points, dtype=float))
    mats = contact_lie_matrix(sys, eps, points[:, :n], points[:, n:])
    return np.linalg.eigvalsh(mats)[:, -1]


def certify_contact(
    sys: ContactSystem,
    eps: float,
    radius: float,
    grid: int = 33,
    tol: float = DEFAULT_TOL,
    seed: int = 0,
) -> Certificate:
    """Certify contraction on the ball ``|(q, qd)| <= radius`` by grid scan.

    The action variable ``z`` does not enter the matrix, so the region is a
    cylinder over the ball. The reported rate is the local rate at the origin.
    """
    if not radius > 0:
        raise ValueError("radius must be > 0")
    g = contact_metric(sys, eps)
    if not is_positive_definite(g):
        raise NotPositiveDefinite(f"contact G_eps is not positive definite at eps={eps}")
    points = ball_grid(2 * sys.n, radius, grid, seed)
    top = float(np.max(contact_scan_max_eigenvalue(sys, eps, points)))
    feasible = top < -tol
    rate = 0.0
    if feasible:
        origin = contact_lie_matrix(sys, eps, np.zeros(sys.n), np.zeros(sys.n))
        rate = -0.5 * generalized_max_eigenvalue(origin, g)
    return Certificate(SystemKind.CONTACT, float(eps), feasible, rate, top, tol, float(radius))


def certify(system, eps: float, tol: float = DEFAULT_TOL, **contact_opts) -> Certificate:
    """Dispatch to the certifier matching ``system``'s type.

    Contact systems default to the closed-form radius shrunk by ``1e-6``.
    """
    if isinstance(system, MechanicalSystem):
        return certify_mech(system, eps, tol)
    if isinstance(system, ChaplyginDisk):
        return certify_disk(system, eps, tol)
    if isinstance(system, ContactSystem):
        radius = contact_opts.pop("radius", None)
        if radius is None:
            try:
                radius = contact_radius(system, eps) * (1 - 1e-6)
            except NotNegativeDefinite:
                radius = 1e-6
        return certify_contact(system, eps, radius, tol=tol, **contact_opts)
    raise TypeError(f"unsupported system type {type(system).__name__}")
