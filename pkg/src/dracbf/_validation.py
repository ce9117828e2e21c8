"""Input validation helpers shared by the filter modules."""

from __future__ import annotations

import math

import numpy as np


def check_vector3(x, name: str = "vector") -> np.ndarray:
    """Return ``x`` as a finite float64 array of shape (3,)."""
    arr = np.asarray(x, dtype=np.float64).reshape(-1)
    if arr.shape != (3,):
        raise ValueError(f"{name} must have 3 components, got shape {arr.shape}")
    if not all(map(math.isfinite, arr.tolist())):
        raise ValueError(f"{name} must be finite, got {arr}")
    return arr


def check_covariance(cov, name: str = "covariance", tol: float = 1e-9) -> np.ndarray:
    """Return ``cov`` as a symmetric 3x3 PSD float64 matrix.

    ``None`` maps to the zero matrix. Symmetry is enforced by averaging with
    the transpose once the asymmetry is checked to be within ``tol``.
    """
    if cov is None:
        return np.zeros((3, 3))
    arr = np.asarray(cov, dtype=np.float64)
    if arr.shape != (3, 3):
        raise ValueError(f"{name} must be 3x3, got shape {arr.shape}")
    (a, b, c), (d, e, f), (g, h, i) = arr.tolist()
    if not all(map(math.isfinite, (a, b, c, d, e, f, g, h, i))):
        raise ValueError(f"{name} must be finite")
    scale = max(1.0, abs(a), abs(e), abs(i), abs(b), abs(c), abs(f))
    if max(abs(b - d), abs(c - g), abs(f - h)) > tol * scale:
        raise ValueError(f"{name} must be symmetric")
    b, c, f = 0.5 * (b + d), 0.5 * (c + g), 0.5 * (f + h)
    arr = np.array([[a, b, c], [b, e, f], [c, f, i]])
    # PSD iff every principal minor is non-negative
    minors = (a, e, i, a * e - b * b, a * i - c * c, e * i - f * f,
              a * (e * i - f * f) - b * (b * i - f * c) + c * (b * f - e * c))
    floors = (tol * scale,) * 3 + (tol * scale ** 2,) * 3 + (tol * scale ** 3,)
    if any(m < -fl for m, fl in zip(minors, floors)):
        raise ValueError(f"{name} must be positive semidefinite")
    return arr


def check_positive(value, name: str, allow_zero: bool = False) -> float:
    value = float(value)
    if not np.isfinite(value) or value < 0 or (value == 0 and not allow_zero):
        bound = ">= 0" if allow_zero else "> 0"
        raise ValueError(f"{name} must be finite and {bound}, got {value}")
    return value


def check_open_unit(value, name: str) -> float:
    value = float(value)
    if not 0.0 < value < 1.0:
        raise ValueError(f"{name} must lie in (0, 1), got {value}")
    return value


def norm3(v) -> float:
    """Euclidean norm of a short 1-D vector without the ``np.linalg.norm`` overhead."""
    v = np.asarray(v, dtype=np.float64)
    return math.sqrt(float(v @ v))
