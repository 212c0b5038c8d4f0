"""Input validation helpers used by the data model and featurizers."""

from __future__ import annotations

import numpy as np

from .errors import DegenerateFrameError, InvariantError

QUATERNION_TOL = 1e-6
AXES_TOL = 1e-6


def as_float_array(values, shape=None, name="array"):
    """Coerce to a float64 ndarray, checking finiteness and optional shape."""
    arr = np.asarray(values, dtype=np.float64)
    if shape is not None and arr.shape != shape:
        raise InvariantError(f"{name}: expected shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvariantError(f"{name}: contains non-finite values")
    return arr


def check_unit_quaternion(q, tol=QUATERNION_TOL, name="quaternion"):
    """Validate a (w, x, y, z) quaternion has unit norm within tol."""
    q = as_float_array(q, shape=(4,), name=name)
    norm = float(np.linalg.norm(q))
    if abs(norm - 1.0) > tol:
        raise InvariantError(f"{name}: norm {norm!r} not within {tol} of 1")
    return q


def normalize_quaternion(q, name="quaternion"):
    """Return q scaled to unit norm; rejects the zero quaternion."""
    q = as_float_array(q, shape=(4,), name=name)
    norm = float(np.linalg.norm(q))
    if norm == 0.0:
        raise InvariantError(f"{name}: zero quaternion cannot be normalized")
    return q / norm


def check_orthonormal_axes(axes, tol=AXES_TOL, name="axes"):
    """Validate a 3x3 matrix whose rows are orthonormal frame axes."""
    axes = as_float_array(axes, shape=(3, 3), name=name)
    err = float(np.abs(axes @ axes.T - np.eye(3)).max())
    if err > tol:
        raise DegenerateFrameError(
            f"{name}: rows not orthonormal (max deviation {err:.3e} > {tol})"
        )
    return axes
