"""Unit-hypersphere geometry: cosine similarity, angles, and spherical
linear interpolation between embedding vectors.

All arithmetic runs in float64 regardless of how vectors are stored on
disk; this keeps the tolerance budget of downstream checks simple.
"""
from __future__ import annotations

import numpy as np

from .errors import DegenerateGeometryError, DimensionMismatchError

# Below this angle the sin(theta) division is numerically unstable and we
# fall back to normalized linear interpolation (indistinguishable at this
# scale). Above pi - THETA_MIN the geodesic is ill-defined and we refuse.
THETA_MIN = 1e-4

UNIT_NORM_TOL = 1e-5


def _as_f64(v) -> np.ndarray:
    return np.asarray(v, dtype=np.float64)


def _check_same_dim(u: np.ndarray, v: np.ndarray) -> None:
    if u.shape != v.shape:
        raise DimensionMismatchError(
            f"vector dimension mismatch: {u.shape[0]} vs {v.shape[0]}"
        )


def normalize(v) -> np.ndarray:
    """Return v scaled to unit Euclidean norm (float64)."""
    v = _as_f64(v)
    n = np.linalg.norm(v)
    if n == 0.0:
        raise ValueError("cannot normalize a zero vector")
    return v / n


def cosine(u, v) -> float:
    """Cosine similarity of two unit vectors, clamped to [-1, 1]."""
    u, v = _as_f64(u), _as_f64(v)
    _check_same_dim(u, v)
    return float(np.clip(np.dot(u, v), -1.0, 1.0))


def angle_between(u, v) -> float:
    """Angle in radians between two unit vectors, in [0, pi].

    The dot product is clamped before arccos so that rounding can never
    produce a NaN.
    """
    return float(np.arccos(cosine(u, v)))


def slerp(f_text, f_image, lam: float) -> np.ndarray:
    """Spherical linear interpolation from f_image (lam=0) to f_text (lam=1).

    Follows the great-circle arc between the two unit vectors:

        m = f_text * sin(lam * theta) / sin(theta)
          + f_image * sin((1 - lam) * theta) / sin(theta)

    and renormalizes the result (a no-op up to rounding for exact unit
    inputs). Near-parallel endpoints (theta < THETA_MIN) fall back to
    normalized linear interpolation; near-antipodal endpoints raise
    DegenerateGeometryError because the great circle is not unique.
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"mix ratio must lie in [0, 1], got {lam}")
    f_text, f_image = _as_f64(f_text), _as_f64(f_image)
    _check_same_dim(f_text, f_image)

    theta = angle_between(f_text, f_image)
    if theta > np.pi - THETA_MIN:
        raise DegenerateGeometryError(theta)
    if theta < THETA_MIN:
        return normalize((1.0 - lam) * f_image + lam * f_text)

    s = np.sin(theta)
    out = f_text * (np.sin(lam * theta) / s) + f_image * (np.sin((1.0 - lam) * theta) / s)
    return normalize(out)
