"""Dense symmetric-matrix primitives.

Everything here works on small dense ``float64`` arrays. Symmetric inputs are
normalised through :func:`sym`, which replaces ``A`` by ``(A + A.T) / 2`` so
that products like ``K @ inv(M)`` that are symmetric only up to rounding do not
leak asymmetry into the eigensolvers.
"""

from __future__ import annotations

import numpy as np

from .errors import NonFinite, NotPositiveDefinite, SingularBlock

DEFAULT_TOL = 1e-10
SPD_FLOOR = 1e-12


def sym(a) -> np.ndarray:
    """Return the symmetric part of a square matrix as a read-only array."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValueError(f"expected a non-empty square matrix, got shape {a.shape}")
    _check_finite(a)
    s = 0.5 * (a + a.T)
    s.setflags(write=False)
    return s


def _check_finite(a: np.ndarray) -> None:
    if not np.all(np.isfinite(a)):
        raise NonFinite("matrix contains NaN or Inf entries")


def eigenvalues_sym(s) -> np.ndarray:
    """Eigenvalues of a symmetric matrix, sorted ascending."""
    return np.linalg.eigvalsh(sym(s))


def max_eigenvalue(s) -> float:
    return float(eigenvalues_sym(s)[-1])


def is_negative_definite(s, tol: float = DEFAULT_TOL) -> bool:
    """Strict test: the largest eigenvalue must lie below ``-tol``."""
    if tol < 0:
        raise ValueError("tol must be >= 0")
    return max_eigenvalue(s) < -tol


def is_positive_definite(s, floor: float = SPD_FLOOR) -> bool:
    return float(eigenvalues_sym(s)[0]) > floor


def require_spd(g, name: str = "matrix") -> np.ndarray:
    g = sym(g)
    lo = float(np.linalg.eigvalsh(g)[0])
    if lo <= SPD_FLOOR:
        raise NotPositiveDefinite(f"{name} is not positive definite (min eigenvalue {lo:.6g})")
    return g


def assemble(a, b, c) -> np.ndarray:
    """Build the symmetric block matrix ``[[A, B], [B.T, C]]``."""
    a = sym(a)
    c = sym(c)
    b = np.asarray(b, dtype=float).reshape(a.shape[0], c.shape[0])
    _check_finite(b)
    return sym(np.block([[a, b], [b.T, c]]))


def schur_negative_definite(a, b, c, tol: float = DEFAULT_TOL) -> bool:
    """Negative definiteness of ``[[A, B], [B.T, C]]`` via the Schur complement.

    The block matrix is negative definite iff ``C`` and ``A - B C^-1 B.T`` both
    are. ``C`` must be safely invertible.

    Raises:
        SingularBlock: if the smallest ``|eigenvalue|`` of ``C`` is <= ``tol``.
    """
    a = sym(a)
    c = sym(c)
    b = np.asarray(b, dtype=float).reshape(a.shape[0], c.shape[0])
    _check_finite(b)
    c_eigs = np.linalg.eigvalsh(c)
    if np.min(np.abs(c_eigs)) <= tol:
        raise SingularBlock(f"C is not invertible at tolerance {tol:g}")
    if not c_eigs[-1] < -tol:
        return False
    complement = a - b @ np.linalg.solve(c, b.T)
    return is_negative_definite(complement, tol)


def _whiten(s: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Return ``L^-1 S L^-T`` where ``G = L L.T``."""
    chol = np.linalg.cholesky(g)
    half = np.linalg.solve(chol, s)
    return sym(np.linalg.solve(chol, half.T))


def pencil_eigenvalues(s, g) -> np.ndarray:
    """Ascending eigenvalues ``mu`` of ``S v = mu G v`` with ``G`` SPD."""
    s = sym(s)
    g = require_spd(g, "G")
    if s.shape != g.shape:
        raise ValueError(f"pencil shapes differ: {s.shape} vs {g.shape}")
    return np.linalg.eigvalsh(_whiten(s, g))


def generalized_max_eigenvalue(s, g) -> float:
    return float(pencil_eigenvalues(s, g)[-1])


def min_pencil_eigenvalue(q, p) -> float:
    return float(pencil_eigenvalues(q, p)[0])


def unit_sphere_samples(g, samples: int, seed: int) -> np.ndarray:
    """Random vectors with ``v.T @ g @ v == 1``, one per row."""
    g = require_spd(g, "g")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    u = rng.standard_normal((samples, g.shape[0]))
    norms = np.sqrt(np.einsum("ij,jk,ik->i", u, g, u))
    return u / norms[:, None]


def tensor_sup_norm(h, g, samples: int, seed: int) -> float:
    """Sampled estimate of ``sup |h(v, v)|`` over ``g``-unit vectors.

    Always a lower bound on the exact value, which is the largest-magnitude
    eigenvalue of the pencil ``(h, g)``. Deterministic for a fixed seed.
    """
    h = sym(h)
    v = unit_sphere_samples(g, samples, seed)
    return float(np.max(np.abs(np.einsum("ij,jk,ik->i", v, h, v))))


def exact_sup_norm(h, g) -> float:
    mu = pencil_eigenvalues(h, g)
    return float(max(abs(mu[0]), abs(mu[-1])))
