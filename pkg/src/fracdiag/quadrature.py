"""Closed-form eigenpairs of the extended-variable problem, viewed as a quadrature rule.

For ``s = 1/2`` the eigenpairs are trigonometric; otherwise the nodes are
``t_k = eta_k / Y`` with ``eta_k`` the positive zeros of ``J_{-s}``. The same
numbers define a quadrature rule ``Q_s^K`` for the integral

    lambda**(-s) = (2 sin(pi s) / pi) * int_0^inf t**(1 - 2s) / (t**2 + lambda) dt

so that the discrete solution is ``sum_m f_m Q_s^K(F_lambda_m) Phi_m``.
"""

from dataclasses import dataclass, field
import math
import threading

import numpy as np

from ._validation import (
    check_fractional_power,
    check_int,
    check_positive,
    check_rounding,
)
from .exceptions import ValidationError
from .special import bessel_j, bessel_zeros, gamma


@dataclass(frozen=True)
class FractionalOrder:
    """Fractional power ``s`` with its derived constants.

    ``alpha = 1 - 2s`` is the weight exponent of the extension and
    ``d_s = 2**(1-2s) Gamma(1-s) / Gamma(s)`` the Neumann-data scaling.
    """

    s: float
    alpha: float
    d_s: float

    @property
    def is_half(self):
        return self.s == 0.5

    @property
    def balakrishnan_factor(self):
        """``2 sin(pi s) / pi``."""
        return 2.0 * math.sin(math.pi * self.s) / math.pi


def make_order(s):
    s = check_fractional_power(s)
    if s == 0.5:
        d_s = 1.0
    else:
        d_s = 2.0 ** (1.0 - 2.0 * s) * gamma(1.0 - s) / gamma(s)
    return FractionalOrder(s=s, alpha=1.0 - 2.0 * s, d_s=d_s)


def _coerce_order(order):
    if isinstance(order, FractionalOrder):
        return order
    return make_order(order)


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes, weights and eigenfunction traces for ``K`` eigenpairs.

    Attributes
    ----------
    order : FractionalOrder
    Y : float
        Truncation height of the cylinder.
    K : int
        Number of eigenpairs (nodes).
    nodes : ndarray
        ``t_k = sqrt(mu_k)``, strictly increasing.
    weights : ndarray
        ``omega_k``.
    trace_values : ndarray
        ``psi_k(0) > 0`` (eigenfunction sign fixed so the trace is positive).
    """

    order: FractionalOrder
    Y: float
    K: int
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    trace_values: np.ndarray = field(repr=False)

    def __post_init__(self):
        for name in ("nodes", "weights", "trace_values"):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.shape != (self.K,):
                raise ValidationError(f"{name} must have length K={self.K}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def s(self):
        return self.order.s

    @property
    def mu(self):
        """Extended-variable eigenvalues ``mu_k = t_k**2``."""
        return self.nodes * self.nodes

    def truncate(self, K):
        """The rule restricted to its first ``K`` nodes (``K = 0`` allowed)."""
        K = check_int("K", K, minimum=0)
        if K > self.K:
            raise ValidationError(f"cannot truncate a {self.K}-node rule to {K} nodes")
        return QuadratureRule(
            self.order, self.Y, K, self.nodes[:K], self.weights[:K], self.trace_values[:K]
        )

    def metadata(self, rounding=None):
        """JSON-compatible provenance record."""
        meta = {"s": self.s, "Y": self.Y, "K": self.K}
        if rounding is not None:
            meta["rounding"] = rounding
        return meta


def build_rule(order, Y, K):
    """Construct the ``K``-node rule for truncation height ``Y``.

    Parameters
    ----------
    order : FractionalOrder or float
    Y : float
        Positive truncation height.
    K : int
        Number of nodes, ``K >= 1``.

    Returns
    -------
    QuadratureRule
    """
    order = _coerce_order(order)
    Y = check_positive("Y", Y)
    K = check_int("K", K, minimum=1)
    s = order.s
    if order.is_half:
        nodes = (np.arange(1, K + 1) - 0.5) * (math.pi / Y)
        weights = np.full(K, math.pi / Y)
        traces = np.full(K, math.sqrt(2.0 / Y))
        return QuadratureRule(order, Y, K, nodes, weights, traces)

    eta = _zeros_of_j_minus_s(s, K)
    log_j = np.log(np.abs(bessel_j(1.0 - s, eta)))
    log_eta = np.log(eta)
    log_y = math.log(Y)
    # log space: J_{1-s}(eta_k)**2 ~ 2 / (pi eta_k) underflows nothing here,
    # but the products below span many decades for large K.
    log_w = math.log(2.0) - log_y - log_eta - 2.0 * log_j
    log_psi = (
        (s + 0.5) * math.log(2.0)
        - s * (log_eta - log_y)
        - log_y
        - log_j
        - math.log(gamma(1.0 - s))
    )
    return QuadratureRule(order, Y, K, eta / Y, np.exp(log_w), np.exp(log_psi))


_ZERO_CACHE = {}
_ZERO_LOCK = threading.Lock()


def _zeros_of_j_minus_s(s, K):
    # zeros are reused across rules with the same s; a longer table serves
    # every shorter request
    with _ZERO_LOCK:
        cached = _ZERO_CACHE.get(s)
        if cached is None or cached.shape[0] < K:
            cached = bessel_zeros(-s, K).zeros
            _ZERO_CACHE[s] = cached
    return cached[:K]


def f_lambda(order, lam, t):
    """Integrand ``F_lambda(t) = (2 sin(pi s)/pi) / (t**2 + lambda)``."""
    order = _coerce_order(order)
    lam = check_positive("lambda", lam)
    t = np.asarray(t, dtype=float)
    out = order.balakrishnan_factor / (t * t + lam)
    return float(out) if out.ndim == 0 else out


def exact_integral(order, lam):
    """``I_s(F_lambda) = lambda**(-s)``."""
    order = _coerce_order(order)
    lam = check_positive("lambda", lam)
    return lam ** (-order.s)


def _summands(rule, lam):
    t = rule.nodes
    return t ** rule.order.alpha * rule.weights * f_lambda(rule.order, lam, t)


def apply_rule(rule, lam):
    """``Q_s^K(F_lambda) = sum_k t_k**(1-2s) omega_k F_lambda(t_k)``.

    The sum is correctly rounded (``math.fsum``), so it is nondecreasing in
    ``K``. An empty rule gives ``0.0``.
    """
    lam = check_positive("lambda", lam)
    if rule.K == 0:
        return 0.0
    return math.fsum(_summands(rule, lam))


def tanh_closed_form(lam, Y):
    """Exact ``Q_{1/2}^infinity(F_lambda) = tanh(sqrt(lambda) Y) / sqrt(lambda)``."""
    lam = check_positive("lambda", lam)
    Y = check_positive("Y", Y)
    r = math.sqrt(lam)
    return math.tanh(r * Y) / r


def tail_estimate(order, Y, K, lam):
    """Asymptotic value of the discarded tail ``Q^inf - Q^K``.

    Beyond ``K`` the nodes are nearly equispaced with step ``pi/Y`` and the
    weights tend to ``pi/Y``, so the tail is the integral of the integrand
    from the midpoint after the last node. Relative accuracy is ``O(1/K**2)``.
    """
    order = _coerce_order(order)
    s = order.s
    # McMahon position of the half-node after the K-th one
    T = (K + 0.5 - 0.5 * s - 0.25) * math.pi / Y
    if T * T <= 4.0 * lam:
        raise ValidationError("tail_estimate needs K well beyond sqrt(lambda) Y / pi")
    # int_T^inf t^(1-2s)/(t^2+lam) dt = sum_j (-lam)^j T^(-2s-2j) / (2s+2j)
    x = lam / (T * T)
    total = 0.0
    term = T ** (-2.0 * s)
    for j in range(200):
        contrib = term / (2.0 * s + 2.0 * j)
        total += contrib
        if abs(contrib) < 1e-18 * abs(total):
            break
        term *= -x
    return order.balakrishnan_factor * total


def reference_q_infinity(order, Y, lam, K=None):
    """Reference value of ``Q_s^infinity(F_lambda)`` for tests and sweeps.

    Partial sum over ``K_ref = max(10**6, 100 K)`` nodes plus
    :func:`tail_estimate`; for ``s = 1/2`` use :func:`tanh_closed_form`.
    """
    order = _coerce_order(order)
    if order.is_half:
        return tanh_closed_form(lam, Y)
    k_ref = max(10**6, 100 * (K or 0))
    rule = build_rule(order, Y, k_ref)
    return apply_rule(rule, lam) + tail_estimate(order, Y, k_ref, lam)


def choose_parameters(h, order, rounding="ceil"):
    """Truncation height and node count from the mesh size.

    ``Y = 2 s |log h|`` and ``K = Y / h`` rounded with ``rounding``
    (``"ceil"`` by default, ``"floor"`` reproduces published tables).
    ``K`` is never below 1.
    """
    order = _coerce_order(order)
    h = check_positive("h", h)
    if h >= 1.0:
        raise ValidationError(f"h must lie in (0, 1), got {h}")
    rounding = check_rounding(rounding)
    Y = 2.0 * order.s * abs(math.log(h))
    ratio = Y / h
    K = math.floor(ratio) if rounding == "floor" else math.ceil(ratio)
    return Y, max(1, int(K))
