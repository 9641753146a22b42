"""Input validation helpers shared by the functional API and the estimators."""

import numbers

import numpy as np

from .exceptions import ContractViolation


def check_plane(a, name="plane", min_size=1):
    """Return ``a`` as a C-contiguous float64 2-D array of finite values."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise ContractViolation(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < min_size or arr.shape[1] < min_size:
        raise ContractViolation(
            f"{name} is {arr.shape[0]}x{arr.shape[1]}, needs at least "
            f"{min_size}x{min_size}"
        )
    if not np.all(np.isfinite(arr)):
        raise ContractViolation(f"{name} contains NaN or Inf")
    return np.ascontiguousarray(arr)


def check_frames(X, min_size=1):
    """Validate a single frame (H, W) or a stack of frames (n, H, W).

    Returns ``(stack, was_2d)`` where ``stack`` is always 3-D float64.
    """
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim == 2:
        was_2d = True
        arr = arr[np.newaxis]
    elif arr.ndim == 3:
        was_2d = False
    else:
        raise ContractViolation(
            f"expected a frame (H, W) or a stack (n, H, W), got shape {arr.shape}"
        )
    if arr.shape[1] < min_size or arr.shape[2] < min_size:
        raise ContractViolation(
            f"frames are {arr.shape[1]}x{arr.shape[2]}, need at least "
            f"{min_size}x{min_size}"
        )
    if not np.all(np.isfinite(arr)):
        raise ContractViolation("frames contain NaN or Inf")
    return np.ascontiguousarray(arr), was_2d


def check_same_shape(a, b, what="inputs"):
    if np.shape(a) != np.shape(b):
        raise ContractViolation(
            f"{what} differ in shape: {np.shape(a)} vs {np.shape(b)}"
        )


def check_unit_interval(value, name):
    if not isinstance(value, numbers.Real) or not 0.0 <= float(value) <= 1.0:
        raise ContractViolation(f"{name} must be in [0, 1], got {value!r}")
    return float(value)
