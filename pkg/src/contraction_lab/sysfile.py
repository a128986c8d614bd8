"""Reader for ``.sys`` system-definition files.

One ``key = value`` per line, ``#`` starts a comment. Matrices are written
row-major in brackets with ``;`` between rows::

    kind = mechanical
    n = 2
    M = [1, 0; 0, 2]
    K = [3, 0; 0, 3]
    b = 0.5

``contact`` files use ``n, m, K, b``; ``disk`` files use ``mass, I, J, R, b``.
An optional ``label`` is kept for reports.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

import numpy as np

from .errors import NotPositiveDefinite, ParseError, ValidationError
from .systems import ChaplyginDisk, ContactSystem, MechanicalSystem

REQUIRED = {
    "mechanical": ("n", "M", "K", "b"),
    "contact": ("n", "m", "K", "b"),
    "disk": ("mass", "I", "J", "R", "b"),
}
MATRIX_KEYS = {"M", "K"}


def bundled_path(name: str) -> Path:
    """Path of a system file shipped in ``contraction_lab/data``."""
    return Path(str(resources.files("contraction_lab") / "data" / name))


def _parse_matrix(text: str, key: str, line: int) -> np.ndarray:
    text = text.strip()
    if not (text.startswith("[") and text.endswith("]")):
        raise ParseError(f"{key} must be a bracketed matrix like [a, b; c, d]", line)
    rows = [r for r in text[1:-1].split(";")]
    try:
        values = [[float(x) for x in row.split(",")] for row in rows]
    except ValueError as exc:
        raise ParseError(f"{key}: {exc}", line) from None
    if len({len(r) for r in values}) != 1:
        raise ParseError(f"{key}: rows have different lengths", line)
    return np.array(values, dtype=float)


def _parse_real(text: str, key: str, line: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"{key} must be a real number, got {text!r}", line) from None
    if not np.isfinite(value):
        raise ParseError(f"{key} must be finite", line)
    return value


def parse_text(text: str):
    """Parse the contents of a system file; returns ``(system, label)``."""
    raw: dict[str, tuple[str, int]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {line!r}", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ParseError("missing key", lineno)
        if key in raw:
            raise ParseError(f"duplicate key {key!r}", lineno)
        raw[key] = (value, lineno)

    if "kind" not in raw:
        raise ParseError("missing 'kind'")
    kind, kind_line = raw.pop("kind")
    if kind not in REQUIRED:
        raise ParseError(f"unknown kind {kind!r}; expected one of {sorted(REQUIRED)}", kind_line)
    label = raw.pop("label", (None, None))[0]

    allowed = set(REQUIRED[kind])
    for key, (_, lineno) in raw.items():
        if key not in allowed:
            raise ParseError(f"unexpected key {key!r} for kind {kind}", lineno)
    missing = [k for k in REQUIRED[kind] if k not in raw]
    if missing:
        raise ParseError(f"missing keys for kind {kind}: {', '.join(missing)}")

    fields = {}
    for key, (value, lineno) in raw.items():
        if key in MATRIX_KEYS:
            fields[key] = _parse_matrix(value, key, lineno)
        elif key == "n":
            try:
                fields[key] = int(value)
            except ValueError:
                raise ParseError(f"n must be an integer, got {value!r}", lineno) from None
            if fields[key] < 1:
                raise ParseError("n must be >= 1", lineno)
        else:
            fields[key] = _parse_real(value, key, lineno)

    return _build(kind, fields), label


def _check_matrix(name: str, a: np.ndarray, n: int) -> None:
    if a.shape != (n, n):
        raise ValidationError(f"{name} must be {n}x{n}, got {a.shape[0]}x{a.shape[1]}")
    if not np.allclose(a, a.T, rtol=0, atol=1e-12):
        raise ValidationError(f"{name} is not symmetric")
    lo = float(np.linalg.eigvalsh(a)[0])
    if lo <= 1e-12:
        raise ValidationError(f"{name} is not positive definite: smallest eigenvalue {lo:.6g}")


def _build(kind: str, f: dict):
    if f.get("b", 0.0) < 0:
        raise ValidationError(f"b must be >= 0, got {f['b']}")
    try:
        if kind == "mechanical":
            _check_matrix("M", f["M"], f["n"])
            _check_matrix("K", f["K"], f["n"])
            sys = MechanicalSystem(M=f["M"], K=f["K"], b=f["b"])
            if not sys.commutes:
                raise ValidationError(
                    f"K and M^-1 do not commute (max entry {sys.commutator_norm:.3g})"
                )
            return sys
        if kind == "contact":
            _check_matrix("K", f["K"], f["n"])
            if not f["m"] > 0:
                raise ValidationError(f"m must be > 0, got {f['m']}")
            return ContactSystem(m=f["m"], K=f["K"], b=f["b"])
        for name in ("mass", "I", "J", "R"):
            if not f[name] > 0:
                raise ValidationError(f"{name} must be > 0, got {f[name]}")
        return ChaplyginDisk(mass=f["mass"], I=f["I"], J=f["J"], R=f["R"], b=f["b"])
    except (NotPositiveDefinite, ValueError) as exc:
        if isinstance(exc, (ValidationError, ParseError)):
            raise
        raise ValidationError(str(exc)) from exc


def parse_system(path):
    """Load and validate a system file.

    Raises:
        ParseError: malformed file (message carries the line number).
        ValidationError: parameters violate the model's invariants.
    """
    return load_with_label(path)[0]


def load_with_label(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from None
    except UnicodeDecodeError:
        raise ParseError(f"{path} is not valid UTF-8") from None
    system, label = parse_text(text)
    return system, label or path.stem
