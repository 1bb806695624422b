"""Exact-diagonalization solver for ``(-Laplacian)^s u = f``.

The extended-variable eigenpairs ``(mu_k, psi_k)`` are known in closed form,
so the discrete solution is a sum of ``K`` independent reaction-diffusion
solves::

    (mu_k M + A) U_k = psi_k(0) d_s b,        u = sum_k psi_k(0) U_k

with ``b`` the load vector. The solves run concurrently. The sum is folded
in ascending ``k`` with compensated addition, so the result does not depend
on the number of workers.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import os
import time
from typing import NamedTuple, Optional

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import (
    check_fractional_power,
    check_int,
    check_positive,
    check_rounding,
)
from .exceptions import ConvergenceError, ValidationError
from .fem import FemSystem, Mesh, assemble, shifted_solve_many
from .quadrature import build_rule, choose_parameters, make_order

WORKERS_ENV = "FRACDIAG_WORKERS"
# entries per batched-CG work array; fixes the chunk size from n alone
_CHUNK_ENTRIES = 2**18
_MAX_CHUNK = 128


def default_workers():
    """Worker count from ``FRACDIAG_WORKERS``, or 1 if unset."""
    raw = os.environ.get(WORKERS_ENV)
    if raw is None or raw.strip() == "":
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise ValidationError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    return check_int(WORKERS_ENV, value, minimum=1)


@dataclass(frozen=True)
class SolverConfig:
    """Parameters of one solve.

    Leave ``Y`` and ``K`` unset to take them from the mesh size
    (``Y = 2 s |log h|``, ``K = Y / h`` rounded by ``rounding``), or give both.
    """

    s: float
    Y: Optional[float] = None
    K: Optional[int] = None
    rounding: str = "ceil"
    cg_tol: float = 1e-12
    workers: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "s", check_fractional_power(self.s))
        if (self.Y is None) != (self.K is None):
            raise ValidationError("give both Y and K, or neither")
        if self.Y is not None:
            object.__setattr__(self, "Y", check_positive("Y", self.Y))
            object.__setattr__(self, "K", check_int("K", self.K, minimum=1))
        check_rounding(self.rounding)
        tol = check_positive("cg_tol", self.cg_tol)
        if tol > 1e-6:
            raise ValidationError(f"cg_tol must lie in (0, 1e-6], got {tol}")
        workers = default_workers() if self.workers is None else self.workers
        object.__setattr__(self, "workers", check_int("workers", workers, minimum=1))

    @property
    def explicit(self):
        return self.Y is not None

    def rule_for(self, h):
        """Quadrature rule for mesh size ``h``."""
        order = make_order(self.s)
        if self.explicit:
            return build_rule(order, self.Y, self.K)
        Y, K = choose_parameters(h, order, self.rounding)
        return build_rule(order, Y, K)


class KSolve(NamedTuple):
    """Diagnostics of the ``k``-th shifted solve (``k`` is 1-based)."""

    k: int
    mu: float
    iterations: int
    residual: float


@dataclass
class SolveResult:
    """Solution on the interior dofs with provenance and timings."""

    u: np.ndarray = field(repr=False)
    rule: object
    per_k: list = field(repr=False)
    timings: dict
    system: FemSystem = field(repr=False)

    @property
    def u_full(self):
        """Nodal values on every vertex (zero on the boundary)."""
        return self.system.extend(self.u)

    @property
    def total_iterations(self):
        return sum(r.iterations for r in self.per_k)


def chunk_size(n_dofs):
    """Shifts per batched CG call; depends on the system size only."""
    return max(1, min(_MAX_CHUNK, _CHUNK_ENTRIES // max(1, n_dofs)))


def _neumaier_add(total, comp, term):
    # in place: total += term, with the lost low-order part kept in comp
    t = total + term
    big = np.abs(total) >= np.abs(term)
    comp += np.where(big, (total - t) + term, (term - t) + total)
    total[...] = t


def solve(mesh, f, config):
    """Approximate ``(-Laplacian)^s u = f`` on ``mesh``.

    Parameters
    ----------
    mesh : Mesh or FemSystem
        A mesh is assembled first; an assembled system is reused.
    f : callable or ndarray
        Vectorised load field, or a precomputed load vector
        ``int f phi_i`` on the interior dofs.
    config : SolverConfig

    Returns
    -------
    SolveResult

    Raises
    ------
    ConvergenceError
        If any shifted solve misses its tolerance; ``failed_k`` lists them.
    """
    if not isinstance(config, SolverConfig):
        raise ValidationError("config must be a SolverConfig")
    timings = {}
    t_start = time.perf_counter()

    t0 = time.perf_counter()
    if isinstance(mesh, FemSystem):
        system = mesh
    elif isinstance(mesh, Mesh):
        system = assemble(mesh)
    else:
        raise ValidationError("mesh must be a Mesh or a FemSystem")
    timings["assemble"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    rule = config.rule_for(system.h)
    timings["rule"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    d_s = rule.order.d_s
    if callable(f):
        b = system.load(f, scale=d_s)
    else:
        b = np.asarray(f, dtype=float)
        if b.shape != (system.n_dofs,):
            raise ValidationError(f"load vector must have length {system.n_dofs}")
        b = d_s * b
    timings["load"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    u, per_k = _solve_and_reduce(system, rule, b, config)
    timings["solve"] = time.perf_counter() - t0
    timings["total"] = time.perf_counter() - t_start
    return SolveResult(u, rule, per_k, timings, system)


def _solve_and_reduce(system, rule, b, config):
    n = system.n_dofs
    psi = np.asarray(rule.trace_values)
    mu = np.asarray(rule.mu)
    size = chunk_size(n)
    starts = list(range(0, rule.K, size))

    def work(start):
        stop = min(start + size, rule.K)
        rhs = psi[start:stop, None] * b[None, :]
        return shifted_solve_many(system, mu[start:stop], rhs, config.cg_tol)

    total = np.zeros(n)
    comp = np.zeros(n)
    per_k = []
    failed = []

    def fold(start, out):
        X, diag = out
        for j in range(X.shape[0]):
            k = start + j
            _neumaier_add(total, comp, psi[k] * X[j])
            per_k.append(KSolve(k + 1, float(mu[k]), int(diag.iterations[j]),
                                float(diag.residuals[j])))
            if not diag.converged[j]:
                failed.append(k + 1)

    if config.workers == 1:
        for start in starts:
            fold(start, work(start))
    else:
        # bounded window of chunks in flight; results are folded in k order
        window = 2 * config.workers
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            pending = []
            for start in starts:
                pending.append((start, pool.submit(work, start)))
                if len(pending) >= window:
                    s0, fut = pending.pop(0)
                    fold(s0, fut.result())
            for s0, fut in pending:
                fold(s0, fut.result())

    if failed:
        worst = max(per_k[k - 1].residual for k in failed)
        raise ConvergenceError(
            f"{len(failed)} shifted solves missed tol={config.cg_tol:g} "
            f"(k = {failed[:10]}{'...' if len(failed) > 10 else ''}, worst residual {worst:.3e})",
            failed_k=failed,
        )
    return total + comp, per_k


def trace_coefficient_check(rule):
    """Largest relative gap between the two forms of each quadrature term.

    Returns ``max_k |d_s psi_k(0)**2 - (2 sin(pi s)/pi) t_k**(1-2s) omega_k|``
    divided by ``d_s psi_k(0)**2``; 0 for an empty rule.
    """
    if rule.K == 0:
        return 0.0
    order = rule.order
    lhs = order.d_s * rule.trace_values**2
    rhs = order.balakrishnan_factor * rule.nodes**order.alpha * rule.weights
    return float(np.max(np.abs(lhs - rhs) / lhs))


class FractionalLaplacianSolver(BaseEstimator):
    """Estimator wrapper: ``fit`` prepares a mesh, ``predict`` solves for a load.

    Parameters
    ----------
    s : float, default=0.5
        Fractional power in ``[0.05, 0.95]``.
    Y, K : float and int, optional
        Truncation height and number of eigenpairs; chosen from the mesh
        size when both are omitted.
    rounding : {"ceil", "floor"}, default="ceil"
        Rounding of ``K = Y / h`` in automatic mode.
    cg_tol : float, default=1e-12
        Relative residual target of each shifted solve.
    workers : int, optional
        Thread count; ``FRACDIAG_WORKERS`` or 1 when omitted.

    Attributes
    ----------
    system_ : FemSystem
    rule_ : QuadratureRule
    result_ : SolveResult
        Set by the latest :meth:`predict`.

    Examples
    --------
    >>> import numpy as np
    >>> from fracdiag.fem import build_mesh
    >>> est = FractionalLaplacianSolver(s=0.5).fit(build_mesh("interval", 4))
    >>> u = est.predict(lambda x: np.pi * np.sin(np.pi * x))
    >>> bool(abs(u.max() - 1.0) < 0.05)
    True
    """

    def __init__(self, s=0.5, Y=None, K=None, rounding="ceil", cg_tol=1e-12, workers=None):
        self.s = s
        self.Y = Y
        self.K = K
        self.rounding = rounding
        self.cg_tol = cg_tol
        self.workers = workers

    def _config(self):
        return SolverConfig(s=self.s, Y=self.Y, K=self.K, rounding=self.rounding,
                            cg_tol=self.cg_tol, workers=self.workers)

    def fit(self, X, y=None):
        """Assemble the system for mesh ``X`` and build the quadrature rule."""
        config = self._config()
        if isinstance(X, FemSystem):
            self.system_ = X
        elif isinstance(X, Mesh):
            self.system_ = assemble(X)
        else:
            raise ValidationError("fit expects a Mesh or a FemSystem")
        self.config_ = config
        self.rule_ = config.rule_for(self.system_.h)
        return self

    def predict(self, X):
        """Nodal solution on every mesh vertex for load ``X``.

        ``X`` is a vectorised field or a load vector on the interior dofs.
        """
        check_is_fitted(self, "rule_")
        # the rule is fixed at fit time, so pass it through explicitly
        config = SolverConfig(s=self.config_.s, Y=self.rule_.Y, K=self.rule_.K,
                              cg_tol=self.config_.cg_tol, workers=self.config_.workers)
        self.result_ = solve(self.system_, X, config)
        return self.result_.u_full

    def fit_predict(self, X, f):
        return self.fit(X).predict(f)

    @property
    def Y_(self):
        check_is_fitted(self, "rule_")
        return self.rule_.Y

    @property
    def K_(self):
        check_is_fitted(self, "rule_")
        return self.rule_.K
