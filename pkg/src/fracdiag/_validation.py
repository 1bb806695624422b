"""Input validation helpers used at the public API boundaries."""

import math
import numbers

import numpy as np

from .exceptions import ValidationError

S_MIN = 0.05
S_MAX = 0.95


def check_fractional_power(s):
    """Return ``s`` as float, rejecting values outside ``[S_MIN, S_MAX]``."""
    s = check_finite("s", s)
    if not S_MIN <= s <= S_MAX:
        raise ValidationError(f"s must lie in [{S_MIN}, {S_MAX}], got {s}")
    return s


def check_finite(name, value):
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise ValidationError(f"{name} must be a real number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ValidationError(f"{name} must be finite, got {value}")
    return value


def check_positive(name, value):
    value = check_finite(name, value)
    if value <= 0.0:
        raise ValidationError(f"{name} must be positive, got {value}")
    return value


def check_nonnegative(name, value):
    value = check_finite(name, value)
    if value < 0.0:
        raise ValidationError(f"{name} must be non-negative, got {value}")
    return value


def check_int(name, value, minimum=0):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise ValidationError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if value < minimum:
        raise ValidationError(f"{name} must be >= {minimum}, got {value}")
    return value


def check_rounding(rounding):
    if rounding not in ("floor", "ceil"):
        raise ValidationError(f"rounding must be 'floor' or 'ceil', got {rounding!r}")
    return rounding


def check_vector(name, x, size):
    """Coerce ``x`` to a 1-D float array of length ``size``."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != size:
        raise ValidationError(f"{name} must be a vector of length {size}, got shape {x.shape}")
    return x
