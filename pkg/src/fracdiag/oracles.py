"""Reference solutions used to verify the solver.

Products of sines ``sin(m pi x) sin(n pi y)`` are Dirichlet eigenfunctions
of the unit square with ``lambda = pi**2 (m**2 + n**2)``. They also vanish
on every line ``x, y in Z``, so they are eigenfunctions on the L-shape too.
A finite sine series therefore has an exact spectral fractional power. On
small meshes the discrete fractional power is computed densely.
"""

from dataclasses import dataclass
import math

import numpy as np
import scipy.sparse.linalg as spla

from ._validation import check_finite
from .exceptions import ValidationError
from .fem import dense_generalized_eigs


@dataclass(frozen=True)
class SineSeries:
    """Finite series ``sum_modes c * prod_i sin(m_i pi x_i)``.

    Parameters
    ----------
    modes : dict
        Maps an integer tuple ``(m,)`` or ``(m, n)`` to its coefficient.

    Examples
    --------
    >>> u = SineSeries({(1, 1): 1.0})
    >>> round(u(0.5, 0.5), 12)
    1.0
    """

    modes: dict

    def __post_init__(self):
        if not self.modes:
            raise ValidationError("a sine series needs at least one mode")
        dims = {len(k) for k in self.modes}
        if len(dims) != 1 or dims.pop() not in (1, 2):
            raise ValidationError("modes must all be 1-tuples or all be 2-tuples")
        for key, c in self.modes.items():
            if any(not isinstance(m, (int, np.integer)) or m < 1 for m in key):
                raise ValidationError(f"mode indices must be positive integers, got {key}")
            check_finite("coefficient", c)
        object.__setattr__(self, "modes", {tuple(int(m) for m in k): float(c)
                                           for k, c in self.modes.items()})

    @property
    def dim(self):
        return len(next(iter(self.modes)))

    @staticmethod
    def eigenvalue(mode):
        return math.pi**2 * sum(m * m for m in mode)

    def scaled(self, power):
        """Series with each coefficient multiplied by ``lambda**power``."""
        return SineSeries({k: c * self.eigenvalue(k) ** power for k, c in self.modes.items()})

    def __call__(self, *coords):
        if len(coords) != self.dim:
            raise ValidationError(f"expected {self.dim} coordinates, got {len(coords)}")
        coords = [np.asarray(x, dtype=float) for x in coords]
        out = 0.0
        for key, c in self.modes.items():
            term = c
            for m, x in zip(key, coords):
                term = term * np.sin(m * math.pi * x)
            out = out + term
        return out


def apply_fractional_laplacian(series, s):
    """``(-Laplacian)^s`` of a sine series, itself a sine series."""
    return series.scaled(check_finite("s", s))


def spectral_solution(series, s):
    """Solution ``u = sum lambda**(-s) f_m phi_m`` for the load ``series``."""
    return series.scaled(-check_finite("s", s))


def lshape_solution():
    """Smooth test solution on the L-shape (three sine modes)."""
    return SineSeries({(1, 1): 1.0, (3, 2): 1.0, (5, 4): 1.0})


def lshape_load(s):
    """Load ``f = (-Laplacian)^s u`` for :func:`lshape_solution`."""
    return apply_fractional_laplacian(lshape_solution(), s)


def _oracle_power(s):
    s = check_finite("s", s)
    if not 0.0 <= s <= 1.0:
        raise ValidationError(f"oracle power must lie in [0, 1], got {s}")
    return s


def discrete_fractional_oracle(system, f, s, eigs=None):
    """Dense ``(-Laplacian_h)^{-s} P_h f`` on the interior dofs.

    ``P_h f`` is the mass-matrix projection of the load. It is expanded in
    the ``M``-orthonormal discrete eigenvectors, each coefficient is scaled by
    ``lambda_{h,m}**(-s)`` and the result reassembled.

    Parameters
    ----------
    system : FemSystem
        At most 2000 interior dofs.
    f : callable or ndarray
        Vectorised field, or the load vector ``int f phi_i`` on interior dofs.
    s : float
        Power in ``[0, 1]``; ``0`` returns ``P_h f``, ``1`` the Poisson solve.
    eigs : tuple, optional
        Precomputed ``dense_generalized_eigs(system)``.
    """
    s = _oracle_power(s)
    lam, phi = dense_generalized_eigs(system) if eigs is None else eigs
    b = system.load(f) if callable(f) else np.asarray(f, dtype=float)
    if b.shape != (system.n_dofs,):
        raise ValidationError(f"load vector must have length {system.n_dofs}")
    # Phi^T M (M^{-1} b) = Phi^T b
    coeff = phi.T @ b
    return phi @ (lam ** (-s) * coeff)


def l2_projection(system, f):
    """Nodal coefficients of ``P_h f`` on the interior dofs."""
    b = system.load(f) if callable(f) else np.asarray(f, dtype=float)
    return spla.spsolve(system.mass.tocsc(), b)


def apply_discrete_power(system, v, s, eigs=None):
    """``(-Laplacian_h)^{-s} v`` for a discrete function ``v`` (interior dofs)."""
    s = _oracle_power(s)
    lam, phi = dense_generalized_eigs(system) if eigs is None else eigs
    coeff = phi.T @ (system.mass @ np.asarray(v, dtype=float))
    return phi @ (lam ** (-s) * coeff)


def m_norm(system, v):
    """Discrete ``L2`` norm ``sqrt(v^T M v)`` on the interior dofs."""
    v = np.asarray(v, dtype=float)
    return math.sqrt(max(0.0, float(v @ (system.mass @ v))))
