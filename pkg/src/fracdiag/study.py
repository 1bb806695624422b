"""Convergence tables, scalar quadrature sweeps and scaling benchmarks.

Each experiment returns a :class:`StudyReport`, whose rows are written as CSV
with a JSON sidecar holding the configuration, a build id and a timestamp.
Only wall-time columns and the sidecar vary between identical runs.
"""

import csv
from dataclasses import asdict, dataclass, field
import datetime as _dt
import hashlib
import io
import json
import math
from pathlib import Path
import subprocess
from typing import Optional

import numpy as np

from . import __version__
from ._validation import (
    check_fractional_power,
    check_int,
    check_positive,
    check_rounding,
)
from .exceptions import ConvergenceError, ValidationError
from .fem import DOMAINS, assemble, build_mesh, get_domain, l2_error, project_load
from .oracles import SineSeries, lshape_solution
from .quadrature import (
    apply_rule,
    build_rule,
    choose_parameters,
    exact_integral,
    make_order,
    tanh_closed_form,
)
from .solver import SolverConfig, solve

EXPERIMENTS = ("convergence", "quadrature_sweep", "scaling_strong", "scaling_weak")


@dataclass
class StudyConfig:
    """Settings shared by all experiments; each uses the fields it needs.

    ``quad_points`` is the Gauss rule (points per direction) for both the load
    vector and the error; 2 reproduces the published L-shape table.
    """

    experiment: str = "convergence"
    domain: str = "l_shape"
    s: tuple = (0.25, 0.75)
    levels: tuple = (2, 3, 4, 5, 6)
    rounding: str = "ceil"
    cg_tol: float = 1e-12
    quad_points: int = 3
    workers: tuple = (1,)
    repetitions: int = 1
    out: Optional[str] = None
    # quadrature sweep
    lambdas: Optional[tuple] = None
    Y_values: tuple = (1.0, 2.0, 4.0, 8.0)
    K_values: tuple = (10, 100, 1000, 10000)
    # scaling
    level: int = 4
    K: int = 4000

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValidationError(f"experiment must be one of {EXPERIMENTS}, got {self.experiment!r}")
        get_domain(self.domain)
        self.s = tuple(check_fractional_power(v) for v in _as_tuple(self.s))
        self.levels = tuple(check_int("level", v, minimum=0) for v in _as_tuple(self.levels))
        if not self.levels or any(a >= b for a, b in zip(self.levels, self.levels[1:])):
            raise ValidationError(f"levels must be strictly ascending, got {self.levels}")
        check_rounding(self.rounding)
        check_positive("cg_tol", self.cg_tol)
        self.quad_points = check_int("quad_points", self.quad_points, minimum=1)
        self.workers = tuple(check_int("workers", v, minimum=1) for v in _as_tuple(self.workers))
        self.repetitions = check_int("repetitions", self.repetitions, minimum=1)
        if self.lambdas is not None:
            self.lambdas = tuple(check_positive("lambda", v) for v in _as_tuple(self.lambdas))
        self.Y_values = tuple(check_positive("Y", v) for v in _as_tuple(self.Y_values))
        self.K_values = tuple(check_int("K", v, minimum=1) for v in _as_tuple(self.K_values))
        self.level = check_int("level", self.level, minimum=0)
        self.K = check_int("K", self.K, minimum=1)


def _as_tuple(v):
    if isinstance(v, (list, tuple, np.ndarray)):
        return tuple(v)
    return (v,)


@dataclass
class StudyReport:
    """Tabular result of one experiment."""

    columns: list
    rows: list = field(repr=False)
    metadata: dict = field(default_factory=dict)

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_format(row.get(c)) for c in self.columns])
        return buf.getvalue()

    def write(self, path):
        """Write the CSV to ``path`` and the metadata to ``path + '.meta.json'``."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_csv())
        meta = Path(str(path) + ".meta.json")
        meta.write_text(json.dumps(self.metadata, indent=2, sort_keys=True) + "\n")
        return path

    def summary(self):
        """Fixed-width text table for terminals."""
        cells = [self.columns] + [[_format(r.get(c)) for c in self.columns] for r in self.rows]
        widths = [max(len(row[i]) for row in cells) for i in range(len(self.columns))]
        lines = ["  ".join(v.rjust(w) for v, w in zip(row, widths)) for row in cells]
        return "\n".join(lines)

    def column(self, name):
        return [r.get(name) for r in self.rows]


def _format(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return f"{float(v):.5e}"


def build_id():
    """Short git revision when available, else a hash of the package source."""
    here = Path(__file__).resolve().parent
    try:
        out = subprocess.run(
            ["git", "rev-parse", "--short", "HEAD"], cwd=here, capture_output=True,
            text=True, timeout=5, check=True,
        )
        rev = out.stdout.strip()
        if rev:
            return rev
    except (OSError, subprocess.SubprocessError):
        pass
    digest = hashlib.sha1()
    for src in sorted(here.glob("*.py")):
        digest.update(src.read_bytes())
    return "src-" + digest.hexdigest()[:10]


def _metadata(config, **extra):
    meta = {
        "config": {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(config).items()},
        "build_id": build_id(),
        "version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }
    meta.update(extra)
    return meta


def exact_solution(domain):
    """Smooth sine-series solution used for each domain's convergence study."""
    kind = get_domain(domain).kind
    if kind == "l_shape":
        return lshape_solution()
    if kind == "unit_square":
        return SineSeries({(1, 1): 1.0})
    return SineSeries({(1,): 1.0})


def observed_rates(h, errors):
    """``log(e_{i-1}/e_i) / log(h_{i-1}/h_i)``; the first entry is ``None``."""
    rates = [None]
    for i in range(1, len(errors)):
        rates.append(math.log(errors[i - 1] / errors[i]) / math.log(h[i - 1] / h[i]))
    return rates


def fitted_rate(h, errors):
    """Least-squares slope of ``log(error)`` against ``log(h)``."""
    return float(np.polyfit(np.log(h), np.log(errors), 1)[0])


def run_convergence(config):
    """Solve on each level, measure the L2 error against the exact solution.

    Columns: ``s, level, n_elements, n_vertices, n_dofs, h, Y, K, l2_error,
    rate, wall_time``. ``wall_time`` covers the shifted solves only.
    """
    u = exact_solution(config.domain)
    rows, rules = [], []
    for s in config.s:
        f = u.scaled(s)
        errors, hs = [], []
        for level in config.levels:
            mesh = build_mesh(config.domain, level)
            system = assemble(mesh)
            b = project_load(mesh, f, npts=config.quad_points)[system.dof_map]
            solver_config = SolverConfig(s=s, rounding=config.rounding,
                                         cg_tol=config.cg_tol, workers=config.workers[0])
            try:
                result = solve(system, b, solver_config)
            except ConvergenceError as exc:
                raise ConvergenceError(f"s={s} level {level}: {exc}", failed_k=exc.failed_k) from exc
            err = l2_error(mesh, result.u_full, u, npts=config.quad_points)
            rules.append(result.rule.metadata(config.rounding))
            errors.append(err)
            hs.append(mesh.h)
            rows.append({
                "s": s, "level": level, "n_elements": mesh.n_elements,
                "n_vertices": mesh.n_vertices, "n_dofs": system.n_dofs, "h": mesh.h,
                "Y": result.rule.Y, "K": result.rule.K, "l2_error": err,
                "wall_time": result.timings["solve"],
            })
        for row, rate in zip(rows[-len(errors):], observed_rates(hs, errors)):
            row["rate"] = rate
    columns = ["s", "level", "n_elements", "n_vertices", "n_dofs", "h", "Y", "K",
               "l2_error", "rate", "wall_time"]
    return StudyReport(columns, rows, _metadata(config, rules=rules))


def default_lambdas(domain, count=9):
    """Geometric grid from the domain's ``lambda_min`` to ``1e8``."""
    lo = get_domain(domain).lambda_min
    return tuple(float(v) for v in np.geomspace(lo, 1e8, count))


def run_quadrature_sweep(config):
    """Tabulate ``lambda**(-s)`` against ``Q_s^K(F_lambda)`` over grids.

    Columns: ``s, lambda, Y, K, exact, approx, abs_error, tanh_ref``; the last
    is ``Q_{1/2}^infinity`` in closed form and is blank for ``s != 1/2``.
    """
    lambdas = config.lambdas or default_lambdas(config.domain)
    k_max = max(config.K_values)
    rows = []
    for s in config.s:
        order = make_order(s)
        for Y in config.Y_values:
            full = build_rule(order, Y, k_max)
            for K in config.K_values:
                rule = full.truncate(K)
                for lam in lambdas:
                    exact = exact_integral(order, lam)
                    approx = apply_rule(rule, lam)
                    rows.append({
                        "s": s, "lambda": lam, "Y": Y, "K": K, "exact": exact,
                        "approx": approx, "abs_error": abs(exact - approx),
                        "tanh_ref": tanh_closed_form(lam, Y) if order.is_half else None,
                    })
    columns = ["s", "lambda", "Y", "K", "exact", "approx", "abs_error", "tanh_ref"]
    return StudyReport(columns, rows, _metadata(config, lambdas=list(lambdas)))


def fit_exponential_slope(Y, errors):
    """Slope of ``log(error)`` against ``Y``."""
    return float(np.polyfit(np.asarray(Y, float), np.log(np.asarray(errors, float)), 1)[0])


def fit_algebraic_slope(K, errors):
    """Slope of ``log(error)`` against ``log(K)``."""
    return float(np.polyfit(np.log(np.asarray(K, float)), np.log(np.asarray(errors, float)), 1)[0])


def run_scaling(config, mode=None):
    """Strong or weak scaling of the shifted solves over worker counts.

    Strong mode keeps ``K`` fixed; weak mode uses ``K * workers``. Times are
    means over ``repetitions`` runs of the solve phase. ``speedup`` is
    ``t_1 / t_N`` (scaled by ``N`` in weak mode) and ``efficiency`` is
    ``speedup / N``. ``identical`` flags a solution bit-equal to the
    one-worker solution (strong mode only).
    """
    mode = mode or ("weak" if config.experiment == "scaling_weak" else "strong")
    if mode not in ("strong", "weak"):
        raise ValidationError(f"mode must be 'strong' or 'weak', got {mode!r}")
    s = config.s[0]
    mesh = build_mesh(config.domain, config.level)
    system = assemble(mesh)
    u = exact_solution(config.domain)
    b = project_load(mesh, u.scaled(s), npts=config.quad_points)[system.dof_map]
    Y, _ = choose_parameters(mesh.h, make_order(s), config.rounding)
    workers = tuple(sorted(set((1,) + config.workers)))

    rows = []
    base_time = None
    base_u = None
    for n in workers:
        K = config.K * n if mode == "weak" else config.K
        cfg = SolverConfig(s=s, Y=Y, K=K, cg_tol=config.cg_tol, workers=n)
        times = []
        for _ in range(config.repetitions):
            result = solve(system, b, cfg)
            times.append(result.timings["solve"])
        t = float(np.mean(times))
        if n == 1:
            base_time, base_u = t, result.u
        speedup = base_time / t * (n if mode == "weak" else 1)
        rows.append({
            "mode": mode, "workers": n, "K": K, "n_dofs": system.n_dofs,
            "wall_time": t, "speedup": speedup, "efficiency": speedup / n,
            "identical": result.u.tobytes() == base_u.tobytes() if mode == "strong" else None,
        })
    columns = ["mode", "workers", "K", "n_dofs", "wall_time", "speedup", "efficiency", "identical"]
    return StudyReport(columns, rows, _metadata(config, Y=Y))


def run(config):
    """Dispatch on ``config.experiment``."""
    if config.experiment == "convergence":
        return run_convergence(config)
    if config.experiment == "quadrature_sweep":
        return run_quadrature_sweep(config)
    return run_scaling(config)


__all__ = [
    "DOMAINS", "EXPERIMENTS", "StudyConfig", "StudyReport", "build_id", "default_lambdas",
    "exact_solution", "fit_algebraic_slope", "fit_exponential_slope", "fitted_rate",
    "observed_rates", "run", "run_convergence", "run_quadrature_sweep", "run_scaling",
]
