"""Command-line entry point: ``fracdiag <experiment> [flags]``.

Settings come from an optional ``key = value`` file (``--config``) and are
overridden by flags. Exit status is 0 on success, 2 for invalid input and 3
when a solve fails.
"""

import argparse
import sys

from .exceptions import (
    BracketingError,
    ConvergenceError,
    DataError,
    ResourceError,
    ValidationError,
)
from .study import EXPERIMENTS, StudyConfig, run

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_SOLVER = 3

_LIST_KEYS = {"s": float, "levels": int, "workers": int, "lambdas": float,
              "Y_values": float, "K_values": int}
_SCALAR_KEYS = {"experiment": str, "domain": str, "rounding": str, "cg_tol": float,
                "quad_points": int, "repetitions": int, "out": str, "level": int, "K": int}
_ALIASES = {"round": "rounding", "y_values": "Y_values", "k_values": "K_values", "k": "K"}


def parse_list(text, kind):
    """``"2-6"`` or ``"2,3,4"`` for integers; comma lists for floats."""
    text = text.strip()
    if kind is int and "-" in text and "," not in text:
        lo, hi = (int(p) for p in text.split("-", 1))
        return tuple(range(lo, hi + 1))
    return tuple(kind(p) for p in text.split(",") if p.strip())


def read_config_file(path):
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValidationError(f"{path}:{lineno}: expected key = value")
            key, value = (p.strip() for p in line.split("=", 1))
            values[_ALIASES.get(key, key)] = value
    return values


def _coerce(values):
    out = {}
    for key, value in values.items():
        if key in _LIST_KEYS:
            out[key] = parse_list(value, _LIST_KEYS[key]) if isinstance(value, str) else value
        elif key in _SCALAR_KEYS:
            out[key] = _SCALAR_KEYS[key](value)
        else:
            raise ValidationError(f"unknown setting {key!r}")
    return out


def build_parser():
    p = argparse.ArgumentParser(
        prog="fracdiag",
        description="Convergence, quadrature and scaling studies for the fractional Laplacian.",
    )
    p.add_argument("experiment", choices=EXPERIMENTS)
    p.add_argument("--config", help="key = value settings file")
    p.add_argument("--domain", choices=["interval", "unit_square", "l_shape"])
    p.add_argument("--s", help="fractional powers, e.g. 0.25,0.75")
    p.add_argument("--levels", help="refinement levels, e.g. 2-6 or 2,4,6")
    p.add_argument("--round", dest="rounding", choices=["floor", "ceil"])
    p.add_argument("--workers", help="worker counts, e.g. 1,2,4")
    p.add_argument("--out", help="CSV output path")
    p.add_argument("--cg-tol", dest="cg_tol")
    p.add_argument("--quad-points", dest="quad_points", help="Gauss points per direction")
    p.add_argument("--repetitions")
    p.add_argument("--level", help="mesh level for scaling runs")
    p.add_argument("--K", dest="K", help="eigenpairs for scaling runs (per worker if weak)")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        values = read_config_file(args.config) if args.config else {}
        for key, value in vars(args).items():
            if key not in ("config", "experiment") and value is not None:
                values[key] = value
        values["experiment"] = args.experiment
        config = StudyConfig(**_coerce(values))
        report = run(config)
        print(report.summary())
        if config.out:
            path = report.write(config.out)
            print(f"wrote {path}")
    except (ValidationError, DataError, ResourceError, ValueError, OSError) as exc:
        print(f"fracdiag: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ConvergenceError, BracketingError) as exc:
        print(f"fracdiag: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
