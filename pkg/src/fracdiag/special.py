"""Gamma function, Bessel functions of the first kind and their positive zeros.

Only real orders in ``[-0.95, 1.95]`` and real non-negative arguments are
supported; that covers the orders ``-s``, ``1 - s`` and ``1 - s + 1`` needed
by the quadrature rules for ``s`` in ``[0.05, 0.95]``.

Evaluation regimes for ``J_nu(z)``:

* ``z <= 2``: ascending power series (no cancellation to speak of).
* ``2 < z <= 20``: Miller backward recurrence normalised with the Neumann
  sum ``(z/2)**nu = sum_k (nu + 2k) Gamma(nu + k) / k! J_{nu+2k}(z)``.
* ``z > 20``: Hankel asymptotic expansion, truncated at its smallest term.
"""

from dataclasses import dataclass
import math

import numpy as np

from ._validation import check_finite, check_int
from .exceptions import BracketingError, DomainError, ValidationError

NU_MIN = -0.95
NU_MAX = 1.95

_SERIES_MAX = 2.0
_HANKEL_MIN = 20.0

# Lanczos approximation, g = 7, n = 9.
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def gamma(x):
    """Gamma function for real ``x > 0``.

    Parameters
    ----------
    x : float
        Positive, finite argument.

    Returns
    -------
    float

    Raises
    ------
    DomainError
        If ``x`` is non-positive or not finite.
    """
    try:
        x = float(x)
    except (TypeError, ValueError):
        raise DomainError(f"gamma needs a real argument, got {x!r}") from None
    if not math.isfinite(x) or x <= 0.0:
        raise DomainError(f"gamma is only provided for finite x > 0, got {x}")
    if x < 0.5:
        return math.pi / (math.sin(math.pi * x) * _lanczos(1.0 - x))
    return _lanczos(x)


def _lanczos(x):
    x -= 1.0
    acc = _LANCZOS_COEF[0]
    for i, c in enumerate(_LANCZOS_COEF[1:], start=1):
        acc += c / (x + i)
    t = x + _LANCZOS_G + 0.5
    # split the power to stay clear of overflow for the largest arguments
    half = t ** ((x + 0.5) / 2.0)
    return math.sqrt(2.0 * math.pi) * half * half * math.exp(-t) * acc


@dataclass(frozen=True)
class BesselOrder:
    """Real Bessel order restricted to ``[-0.95, 1.95]``."""

    nu: float

    def __post_init__(self):
        nu = check_finite("nu", self.nu)
        if not NU_MIN <= nu <= NU_MAX:
            raise ValidationError(f"Bessel order must lie in [{NU_MIN}, {NU_MAX}], got {nu}")
        object.__setattr__(self, "nu", nu)


def _as_order(order):
    if isinstance(order, BesselOrder):
        return order.nu
    return BesselOrder(order).nu


def bessel_j(order, z):
    """Bessel function of the first kind ``J_nu(z)`` for real ``z >= 0``.

    Parameters
    ----------
    order : BesselOrder or float
        Order ``nu`` in ``[-0.95, 1.95]``.
    z : float or array_like
        Non-negative argument(s).

    Returns
    -------
    float or ndarray
        Same shape as ``z``.

    Raises
    ------
    DomainError
        For negative or non-finite ``z``, or ``z == 0`` with ``nu < 0``
        (where ``J_nu`` is unbounded).
    """
    nu = _as_order(order)
    scalar = np.ndim(z) == 0
    z = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(z)):
        raise DomainError("bessel_j needs finite arguments")
    if np.any(z < 0.0):
        raise DomainError("bessel_j is only provided for z >= 0")
    if nu < 0.0 and np.any(z == 0.0):
        raise DomainError(f"J_{nu}(0) is unbounded for negative order")

    flat = z.ravel()
    out = np.empty_like(flat)
    small = flat <= _SERIES_MAX
    large = flat > _HANKEL_MIN
    mid = ~(small | large)
    if small.any():
        out[small] = _series(nu, flat[small])
    if mid.any():
        out[mid] = _miller(nu, flat[mid])
    if large.any():
        out[large] = _hankel(nu, flat[large])
    # exact limits (the series carries a rounded 1 / Gamma(nu + 1))
    out[flat == 0.0] = 1.0 if nu == 0.0 else 0.0
    out = out.reshape(z.shape)
    return float(out) if scalar else out


def _series(nu, z):
    h = 0.5 * z
    hh = h * h
    with np.errstate(divide="ignore"):
        term = np.where(z > 0.0, h ** nu, 1.0 if nu == 0.0 else 0.0) / gamma(nu + 1.0)
    total = term.copy()
    for k in range(1, 40):
        term = term * (-hh / (k * (k + nu)))
        total += term
        if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
            break
    return total


def _neumann_coefficients(nu, count):
    # c_0 = Gamma(nu + 1); c_k = (nu + 2k) Gamma(nu + k) / k!
    g0 = gamma(nu + 1.0)
    coef = [g0]
    g = g0  # Gamma(nu + k) / k! at k = 1
    for k in range(1, count + 1):
        if k > 1:
            g *= (nu + k - 1.0) / k
        coef.append((nu + 2.0 * k) * g)
    return coef


def _miller(nu, z):
    n_top = int(np.max(z)) + 40
    n_top += n_top % 2
    coef = _neumann_coefficients(nu, n_top // 2)
    j_next = np.zeros_like(z)
    j = np.full_like(z, 1e-300)
    norm = np.zeros_like(z)
    for m in range(n_top, 0, -1):
        if m % 2 == 0:
            norm += coef[m // 2] * j
        j_prev = (2.0 * (nu + m) / z) * j - j_next
        j_next, j = j, j_prev
        big = np.abs(j) > 1e250
        if big.any():
            f = np.where(big, 1e-250, 1.0)
            j *= f
            j_next *= f
            norm *= f
    norm += coef[0] * j
    return j * (0.5 * z) ** nu / norm


def _hankel(nu, z):
    mu = 4.0 * nu * nu
    p = np.ones_like(z)
    q = np.zeros_like(z)
    a = np.ones_like(z)
    prev = np.full_like(z, np.inf)
    active = np.ones(z.shape, dtype=bool)
    for k in range(1, 60):
        a = a * ((mu - (2 * k - 1) ** 2) / (8.0 * k * z))
        mag = np.abs(a)
        # stop each lane once terms start growing (asymptotic series)
        active &= mag < prev
        prev = np.where(active, mag, prev)
        sign = -1.0 if (k // 2) % 2 else 1.0
        if k % 2 == 0:
            p += np.where(active, sign * a, 0.0)
        else:
            q += np.where(active, sign * a, 0.0)
        active &= mag >= 1e-17
        if not active.any():
            break
    chi = z - (0.5 * nu + 0.25) * math.pi
    return np.sqrt(2.0 / (math.pi * z)) * (p * np.cos(chi) - q * np.sin(chi))


def bessel_j_derivative(order, z):
    """``d/dz J_nu(z) = (nu / z) J_nu(z) - J_{nu+1}(z)`` for ``z > 0``."""
    nu = _as_order(order)
    if nu + 1.0 > NU_MAX:
        raise ValidationError(f"derivative needs J_(nu+1); nu={nu} is too large")
    z = np.asarray(z, dtype=float)
    return (nu / z) * bessel_j(nu, z) - bessel_j(nu + 1.0, z)


@dataclass(frozen=True)
class ZeroTable:
    """First ``K`` positive zeros of ``J_nu``, strictly increasing."""

    nu: float
    zeros: np.ndarray

    def __post_init__(self):
        zeros = np.array(self.zeros, dtype=float)
        zeros.setflags(write=False)
        object.__setattr__(self, "zeros", zeros)

    def __len__(self):
        return self.zeros.shape[0]

    def __getitem__(self, idx):
        return self.zeros[idx]


_SCAN_STEP = math.pi / 8.0
_SCAN_START = 1e-3
_GLOBAL_SCAN_COUNT = 32


def mcmahon_guess(nu, k):
    """McMahon's large-``k`` approximation to the ``k``-th zero of ``J_nu``."""
    k = np.asarray(k, dtype=float)
    mu = 4.0 * nu * nu
    beta = (k + 0.5 * nu - 0.25) * math.pi
    eight_beta = 8.0 * beta
    return beta - (mu - 1.0) / eight_beta - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * eight_beta**3)


def bessel_zeros(order, count):
    """Return the first ``count`` positive zeros of ``J_nu``.

    The first zeros are bracketed by a sign-change scan with spacing
    ``pi/8`` from the origin (consecutive zeros are more than ``2`` apart
    for these orders). Later zeros are bracketed by ``pi/8`` steps on either
    side of McMahon's guess; if any of those brackets fails to change sign
    the global scan is used for every zero. A safeguarded Newton iteration
    then refines each bracket to ``1e-13`` in the argument, or to a few ulps
    where the zeros are large.

    Parameters
    ----------
    order : BesselOrder or float
        Order in ``[-0.95, 0.95]``.
    count : int
        Number of zeros, ``K >= 1``.

    Returns
    -------
    ZeroTable

    Raises
    ------
    BracketingError
        If fewer than ``count`` sign changes exist below ``10 * count * pi``.
    """
    nu = _as_order(order)
    count = check_int("count", count, minimum=1)
    if nu > NU_MAX - 1.0:
        raise ValidationError(f"zero finding supports nu <= {NU_MAX - 1.0}, got {nu}")

    head = min(count, _GLOBAL_SCAN_COUNT)
    lo, hi = _scan_brackets(nu, head)
    if count > head:
        k = np.arange(head + 1, count + 1)
        guess = mcmahon_guess(nu, k)
        a = guess - _SCAN_STEP
        b = guess + _SCAN_STEP
        fa = bessel_j(nu, a)
        fb = bessel_j(nu, b)
        local_ok = (
            np.all(np.signbit(fa) != np.signbit(fb))
            and a[0] > hi[-1]
            and np.all(a[1:] > b[:-1])
        )
        if local_ok:
            lo = np.concatenate([lo, a])
            hi = np.concatenate([hi, b])
        else:
            lo, hi = _scan_brackets(nu, count)

    zeros = _refine(nu, lo, hi)
    if np.any(np.diff(zeros) <= 0.0):
        raise BracketingError(f"zeros of J_{nu} are not strictly increasing")
    return ZeroTable(nu=nu, zeros=zeros)


def _scan_brackets(nu, count):
    # McMahon: eta_k ~ (k + nu/2 - 1/4) pi; scan a little beyond the last guess.
    z_hi = (count + 0.5 * nu + 1.0) * math.pi
    limit = 10.0 * count * math.pi
    while True:
        grid = _SCAN_START + _SCAN_STEP * np.arange(int(math.ceil(z_hi / _SCAN_STEP)) + 1)
        vals = bessel_j(nu, grid)
        change = np.nonzero(np.signbit(vals[:-1]) != np.signbit(vals[1:]))[0]
        if change.size >= count:
            return grid[change[:count]].copy(), grid[change[:count] + 1].copy()
        if z_hi >= limit:
            raise BracketingError(
                f"found only {change.size} of {count} zeros of J_{nu} below {z_hi:.6g}"
            )
        z_hi = min(2.0 * z_hi, limit)


def _refine(nu, a, b):
    fa = bessel_j(nu, a)
    x = 0.5 * (a + b)
    tol = np.maximum(1e-13, 4.0 * np.spacing(b))
    done = np.zeros(x.shape, dtype=bool)
    for _ in range(100):
        idx = np.nonzero(~done)[0]
        if idx.size == 0:
            break
        xi = x[idx]
        f = bessel_j(nu, xi)
        df = bessel_j_derivative(nu, xi)
        # shrink bracket using the sign of f
        same = np.signbit(f) == np.signbit(fa[idx])
        a[idx] = np.where(same, xi, a[idx])
        fa[idx] = np.where(same, f, fa[idx])
        b[idx] = np.where(same, b[idx], xi)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = f / df
        trial = xi - step
        ok = np.isfinite(trial) & (trial > a[idx]) & (trial < b[idx])
        # a step below tolerance means xi is already the root; near the root
        # the sign of f is noise and the trial may fall just outside [a, b]
        small = np.abs(step) <= tol[idx]
        new = np.where(ok, trial, 0.5 * (a[idx] + b[idx]))
        x[idx] = np.where(small & ~ok, xi, new)
        conv = small | (f == 0.0) | (b[idx] - a[idx] <= tol[idx])
        done[idx] = conv
    if not done.all():
        raise BracketingError(f"Newton refinement did not converge for {np.count_nonzero(~done)} zeros")
    return x
