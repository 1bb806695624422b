"""Structured meshes and lowest-order finite elements with Dirichlet conditions.

Three domains are supported: the unit interval, the unit square and the
L-shaped domain ``[-1, 1]**2`` minus the quadrant ``(0, 1) x (-1, 0)``.
Meshes are uniform (segments in 1-D, axis-aligned squares in 2-D), so every
element matrix has a closed form and the global matrices share one sparsity
pattern. That makes the shifted matrix ``mu M + A`` a single vector update.
"""

from dataclasses import dataclass, field
import math

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from ._validation import check_int, check_nonnegative, check_positive, check_vector
from .exceptions import ConvergenceError, DataError, ResourceError, ValidationError

MAX_LEVEL = 12
MAX_DENSE_DOFS = 2000


@dataclass(frozen=True)
class Domain:
    """A supported domain with a lower bound on its first Dirichlet eigenvalue.

    ``lambda_min`` is exact for the interval and the square. The L-shape uses
    the value of its bounding square ``[-1, 1]**2``, which bounds it from below.
    """

    kind: str
    lambda_min: float
    area: float
    dim: int


DOMAINS = {
    "interval": Domain("interval", math.pi**2, 1.0, 1),
    "unit_square": Domain("unit_square", 2.0 * math.pi**2, 1.0, 2),
    "l_shape": Domain("l_shape", 0.5 * math.pi**2, 3.0, 2),
}


def get_domain(kind):
    if isinstance(kind, Domain):
        return kind
    try:
        return DOMAINS[kind]
    except KeyError:
        raise ValidationError(
            f"unknown domain {kind!r}; expected one of {sorted(DOMAINS)}"
        ) from None


def _frozen(a, dtype):
    a = np.ascontiguousarray(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Mesh:
    """Uniform conforming mesh.

    Attributes
    ----------
    domain : Domain
    level : int
    vertices : ndarray, shape (n_vertices, dim)
        Lexicographic order (``x`` fastest, then ``y``).
    elements : ndarray, shape (n_elements, 2 or 4)
        Segment endpoints, or quad corners counter-clockwise from lower left.
    boundary_mask : ndarray of bool
    h : float
        Element side length; halves with each level.
    """

    domain: Domain
    level: int
    vertices: np.ndarray = field(repr=False)
    elements: np.ndarray = field(repr=False)
    boundary_mask: np.ndarray = field(repr=False)
    h: float

    @property
    def dim(self):
        return self.domain.dim

    @property
    def n_vertices(self):
        return self.vertices.shape[0]

    @property
    def n_elements(self):
        return self.elements.shape[0]

    @property
    def interior(self):
        """Indices of the interior (free) vertices, ascending."""
        return np.flatnonzero(~self.boundary_mask)

    def to_text(self):
        """Plain-text listing of vertices and elements for debugging."""
        lines = [
            f"# domain {self.domain.kind} level {self.level} h {self.h!r}",
            f"vertices {self.n_vertices}",
        ]
        for i, (xy, b) in enumerate(zip(self.vertices, self.boundary_mask)):
            coords = " ".join(repr(float(c)) for c in xy)
            lines.append(f"{i} {coords} {int(b)}")
        lines.append(f"elements {self.n_elements}")
        for e, conn in enumerate(self.elements):
            lines.append(f"{e} " + " ".join(str(int(v)) for v in conn))
        return "\n".join(lines) + "\n"


def build_mesh(domain, level):
    """Uniformly refined mesh of ``domain``.

    The interval and the square start from two cells per unit length, the
    L-shape from its three unit squares; each level halves ``h``.

    Parameters
    ----------
    domain : Domain or str
        ``"interval"``, ``"unit_square"`` or ``"l_shape"``.
    level : int
        Refinement level, ``0 <= level <= 12``.

    Returns
    -------
    Mesh

    Examples
    --------
    >>> m = build_mesh("unit_square", 0)
    >>> m.n_elements, m.n_vertices, len(m.interior)
    (4, 9, 1)
    """
    domain = get_domain(domain)
    level = check_int("level", level, minimum=0)
    if level > MAX_LEVEL:
        raise ResourceError(f"level {level} exceeds the memory guard of {MAX_LEVEL}")

    if domain.kind == "interval":
        n = 2 ** (level + 1)
        h = 1.0 / n
        vertices = (np.arange(n + 1) * h)[:, None]
        elements = np.column_stack([np.arange(n), np.arange(1, n + 1)])
        boundary = np.zeros(n + 1, dtype=bool)
        boundary[[0, n]] = True
        return Mesh(domain, level, _frozen(vertices, float), _frozen(elements, np.int64),
                    _frozen(boundary, bool), h)

    if domain.kind == "unit_square":
        n = 2 ** (level + 1)
        h = 1.0 / n
        origin = (0.0, 0.0)
        keep = np.ones((n, n), dtype=bool)
    else:
        n = 2 ** level  # cells per unit length
        h = 1.0 / n
        origin = (-1.0, -1.0)
        keep = np.ones((2 * n, 2 * n), dtype=bool)
        keep[:n, n:] = False  # cells with y < 0 < x; indexed [j, i]
    return _grid_mesh(domain, level, h, origin, keep)


def _grid_mesh(domain, level, h, origin, keep):
    # a grid point is used if any adjacent cell is kept; interior if all four are
    padded = np.pad(keep, 1)
    adjacent = np.stack([padded[:-1, :-1], padded[:-1, 1:], padded[1:, :-1], padded[1:, 1:]])
    used = adjacent.any(axis=0)
    interior = adjacent.all(axis=0)

    index = np.full(used.shape, -1, dtype=np.int64)
    index[used] = np.arange(np.count_nonzero(used))
    jj, ii = np.nonzero(used)  # row-major, so x varies fastest
    vertices = np.column_stack([origin[0] + h * ii, origin[1] + h * jj])

    cj, ci = np.nonzero(keep)
    elements = np.column_stack([
        index[cj, ci], index[cj, ci + 1], index[cj + 1, ci + 1], index[cj + 1, ci],
    ])
    boundary = ~interior[used]
    return Mesh(domain, level, _frozen(vertices, float), _frozen(elements, np.int64),
                _frozen(boundary, bool), h)


def _element_matrices(dim, h):
    if dim == 1:
        ke = np.array([[1.0, -1.0], [-1.0, 1.0]]) / h
        me = np.array([[2.0, 1.0], [1.0, 2.0]]) * (h / 6.0)
        return ke, me
    # Q1 on a square: the stiffness matrix does not depend on h
    ke = np.array([
        [4.0, -1.0, -2.0, -1.0],
        [-1.0, 4.0, -1.0, -2.0],
        [-2.0, -1.0, 4.0, -1.0],
        [-1.0, -2.0, -1.0, 4.0],
    ]) / 6.0
    me = np.array([
        [4.0, 2.0, 1.0, 2.0],
        [2.0, 4.0, 2.0, 1.0],
        [1.0, 2.0, 4.0, 2.0],
        [2.0, 1.0, 2.0, 4.0],
    ]) * (h * h / 36.0)
    return ke, me


@dataclass(frozen=True)
class FemSystem:
    """Stiffness and mass matrices restricted to the interior vertices.

    ``stiffness`` and ``mass`` are CSR matrices with identical ``indptr`` and
    ``indices``; ``full_mass`` keeps the boundary rows for diagnostics.
    """

    mesh: Mesh = field(repr=False)
    stiffness: sp.csr_matrix = field(repr=False)
    mass: sp.csr_matrix = field(repr=False)
    full_mass: sp.csr_matrix = field(repr=False)
    dof_map: np.ndarray = field(repr=False)
    h: float

    @property
    def n_dofs(self):
        return self.dof_map.shape[0]

    def restrict(self, full):
        """Interior entries of a full-vertex vector."""
        full = check_vector("vector", full, self.mesh.n_vertices)
        return full[self.dof_map]

    def extend(self, u):
        """Full-vertex vector with zero boundary values."""
        u = check_vector("u", u, self.n_dofs)
        out = np.zeros(self.mesh.n_vertices)
        out[self.dof_map] = u
        return out

    def shifted_matrix(self, mu):
        """``mu M + A`` on the shared sparsity pattern."""
        A = self.stiffness
        return sp.csr_matrix((A.data + mu * self.mass.data, A.indices, A.indptr), shape=A.shape)

    def load(self, f, scale=1.0):
        """Interior part of :func:`project_load`."""
        return project_load(self.mesh, f, scale)[self.dof_map]


def assemble(mesh):
    """Assemble the Dirichlet stiffness and mass matrices of ``mesh``.

    Boundary vertices are eliminated, not penalised, so both matrices are
    symmetric positive definite on the interior dofs.

    Returns
    -------
    FemSystem
    """
    ke, me = _element_matrices(mesh.dim, mesh.h)
    conn = mesh.elements
    nloc = conn.shape[1]
    rows = np.repeat(conn, nloc, axis=1).ravel()
    cols = np.tile(conn, (1, nloc)).ravel()
    n = mesh.n_vertices
    n_el = conn.shape[0]
    A_full = sp.coo_matrix((np.tile(ke.ravel(), n_el), (rows, cols)), shape=(n, n)).tocsr()
    M_full = sp.coo_matrix((np.tile(me.ravel(), n_el), (rows, cols)), shape=(n, n)).tocsr()

    dofs = mesh.interior
    A = A_full[dofs][:, dofs].tocsr()
    M = M_full[dofs][:, dofs].tocsr()
    for mat in (A, M):
        mat.sort_indices()
    if not (np.array_equal(A.indptr, M.indptr) and np.array_equal(A.indices, M.indices)):
        raise RuntimeError("stiffness and mass sparsity patterns differ")
    return FemSystem(mesh, A, M, M_full, _frozen(dofs, np.int64), mesh.h)


_GAUSS_CACHE = {}


def _gauss_01(npts):
    """Gauss-Legendre points and weights mapped to ``[0, 1]``."""
    if npts not in _GAUSS_CACHE:
        x, w = np.polynomial.legendre.leggauss(npts)
        _GAUSS_CACHE[npts] = (0.5 * (x + 1.0), 0.5 * w)
    return _GAUSS_CACHE[npts]


def _reference_rule(dim, npts):
    """Tensor Gauss rule on the reference cell with shape-function values.

    Returns ``(xi, w, N)`` with ``xi`` of shape (q, dim), ``w`` of shape (q,)
    and ``N`` of shape (q, nloc) in the local vertex order of :func:`build_mesh`.
    """
    g, gw = _gauss_01(npts)
    if dim == 1:
        xi = g[:, None]
        N = np.column_stack([1.0 - g, g])
        return xi, gw, N
    eta, xi1 = np.meshgrid(g, g, indexing="ij")
    xi = np.column_stack([xi1.ravel(), eta.ravel()])
    w = np.outer(gw, gw).ravel()
    a, b = xi[:, 0], xi[:, 1]
    N = np.column_stack([(1 - a) * (1 - b), a * (1 - b), a * b, (1 - a) * b])
    return xi, w, N


def _quadrature_points(mesh, xi):
    # element lower-left corners plus h * reference points; shape (E, q, dim)
    corner = mesh.vertices[mesh.elements[:, 0]]
    return corner[:, None, :] + mesh.h * xi[None, :, :]


def _evaluate(f, pts):
    coords = [pts[..., d] for d in range(pts.shape[-1])]
    values = np.asarray(f(*coords), dtype=float)
    return np.broadcast_to(values, pts.shape[:-1])


def project_load(mesh, f, scale=1.0, npts=3):
    """Load vector ``b_i = scale * int f phi_i dx`` over all vertices.

    Parameters
    ----------
    mesh : Mesh
    f : callable
        Vectorised field, called as ``f(x)`` or ``f(x, y)`` with arrays.
    scale : float
    npts : int
        Gauss points per direction (3 by default).

    Raises
    ------
    DataError
        If ``f`` is not finite at a quadrature point.
    """
    xi, w, N = _reference_rule(mesh.dim, npts)
    pts = _quadrature_points(mesh, xi)
    fq = _evaluate(f, pts)
    bad = ~np.isfinite(fq)
    if bad.any():
        e, q = np.argwhere(bad)[0]
        raise DataError(f"load function is not finite at {tuple(pts[e, q])}")
    jac = mesh.h**mesh.dim
    local = (fq * w) @ N * (scale * jac)  # (E, nloc)
    return np.bincount(mesh.elements.ravel(), weights=local.ravel(), minlength=mesh.n_vertices)


def l2_error(mesh, u_h, u_exact, npts=3):
    """``||u_h - u_exact||_{L2}`` by element-wise tensor Gauss quadrature.

    ``u_h`` holds nodal values on all vertices or on the interior vertices
    only (boundary values zero).
    """
    u_h = np.asarray(u_h, dtype=float)
    if u_h.shape == (mesh.n_vertices,):
        full = u_h
    else:
        interior = mesh.interior
        check_vector("u_h", u_h, interior.shape[0])
        full = np.zeros(mesh.n_vertices)
        full[interior] = u_h
    xi, w, N = _reference_rule(mesh.dim, npts)
    pts = _quadrature_points(mesh, xi)
    uh_q = full[mesh.elements] @ N.T  # (E, q)
    diff = uh_q - _evaluate(u_exact, pts)
    return math.sqrt(float(np.sum((diff * diff) @ w)) * mesh.h**mesh.dim)


@dataclass
class SolveDiagnostics:
    """Outcome of one shifted solve."""

    iterations: int
    residual: float
    converged: bool = True


@dataclass
class BatchDiagnostics:
    """Per-row outcome of :func:`shifted_solve_many`."""

    iterations: np.ndarray
    residuals: np.ndarray
    converged: np.ndarray
    history: list = field(default_factory=list, repr=False)

    def row(self, i):
        return SolveDiagnostics(int(self.iterations[i]), float(self.residuals[i]),
                                bool(self.converged[i]))


def shifted_solve(system, mu, rhs, tol=1e-12, maxiter=None):
    """Solve ``(mu M + A) x = rhs`` by Jacobi-preconditioned CG.

    Parameters
    ----------
    system : FemSystem
    mu : float
        Non-negative shift.
    rhs : array_like
        Right-hand side on the interior dofs.
    tol : float
        Target for ``||(mu M + A) x - rhs|| / ||rhs||``.
    maxiter : int, optional
        Iteration cap, ``10 n`` by default.

    Returns
    -------
    x : ndarray
    diagnostics : SolveDiagnostics
        Iteration count and the final relative residual.

    Raises
    ------
    ConvergenceError
        If the cap is reached; ``residual_history`` holds the relative
        residual of every iterate.
    """
    mu = check_nonnegative("mu", mu)
    rhs = check_vector("rhs", rhs, system.n_dofs)
    X, diag = shifted_solve_many(system, [mu], rhs[None, :], tol, maxiter)
    if not diag.converged[0]:
        raise ConvergenceError(
            f"CG did not reach tol={tol:g} (mu={mu:g}, residual={diag.residuals[0]:.3e})",
            residual_history=diag.history[0],
        )
    return X[0], diag.row(0)


def shifted_solve_many(system, mus, rhs, tol=1e-12, maxiter=None):
    """Solve ``(mu_j M + A) x_j = rhs_j`` for a batch of shifts.

    Each row runs its own Jacobi-preconditioned CG; rows never interact,
    so a row's iterates do not depend on what else is in the batch.
    Converged rows are dropped from the working set.

    Parameters
    ----------
    system : FemSystem
    mus : array_like, shape (B,)
    rhs : array_like, shape (B, n)
    tol : float
    maxiter : int, optional
        Per-row cap, ``10 n`` by default.

    Returns
    -------
    X : ndarray, shape (B, n)
    diagnostics : BatchDiagnostics
        Non-converged rows are flagged rather than raised; ``history`` holds
        their residual sequences.
    """
    tol = check_positive("tol", tol)
    n = system.n_dofs
    mus = np.asarray(mus, dtype=float)
    if mus.ndim != 1 or np.any(~np.isfinite(mus)) or np.any(mus < 0.0):
        raise ValidationError("mus must be a vector of finite non-negative shifts")
    B = np.ascontiguousarray(rhs, dtype=float)
    if B.shape != (mus.shape[0], n):
        raise ValidationError(f"rhs must have shape {(mus.shape[0], n)}, got {B.shape}")
    maxiter = 10 * n if maxiter is None else check_int("maxiter", maxiter, minimum=1)

    A, M = system.stiffness, system.mass
    nb = mus.shape[0]
    X = np.zeros((nb, n))
    iterations = np.zeros(nb, dtype=np.int64)
    bnorm = np.sqrt((B * B).sum(axis=1))
    residuals = np.zeros(nb)
    history = [[] for _ in range(nb)]
    todo = np.flatnonzero(bnorm > 0.0)

    # the recursive residual can drift from the true one; restart if it does
    for _ in range(3):
        if todo.size == 0:
            break
        _pcg_rows(A, M, mus, B, X, bnorm, todo, tol, maxiter, iterations, history)
        R = B[todo] - _apply(A, M, mus[todo], X[todo])
        residuals[todo] = np.sqrt((R * R).sum(axis=1)) / bnorm[todo]
        todo = todo[(residuals[todo] > tol) & (iterations[todo] < maxiter)]

    converged = residuals <= tol
    return X, BatchDiagnostics(iterations, residuals, converged,
                               [h if not c else [] for h, c in zip(history, converged)])


def _apply(A, M, mus, X):
    # rows of X are vectors; (A X^T)^T + mu * (M X^T)^T
    return (A @ X.T).T + mus[:, None] * (M @ X.T).T


def _pcg_rows(A, M, mus, B, X, bnorm, rows, tol, maxiter, iterations, history):
    dA, dM = A.diagonal(), M.diagonal()
    x = X[rows]
    r = B[rows] - _apply(A, M, mus[rows], x)
    mu = mus[rows]
    inv_d = 1.0 / (dA[None, :] + mu[:, None] * dM[None, :])
    z = r * inv_d
    p = z.copy()
    rz = (r * z).sum(axis=1)
    target = tol * bnorm[rows]
    idx = rows.copy()  # global row of each working row
    while idx.size:
        q = _apply(A, M, mu, p)
        pq = (p * q).sum(axis=1)
        # pq <= 0 only once the residual is exactly zero; retire such rows
        stalled = ~(pq > 0.0)
        alpha = np.divide(rz, pq, out=np.zeros_like(rz), where=~stalled)
        x += alpha[:, None] * p
        r -= alpha[:, None] * q
        rnorm = np.sqrt((r * r).sum(axis=1))
        iterations[idx] += 1
        for g, v in zip(idx, rnorm / bnorm[idx]):
            history[g].append(float(v))
        done = (rnorm <= target) | (iterations[idx] >= maxiter) | stalled
        if done.any():
            X[idx[done]] = x[done]
            keep = ~done
            idx, x, r, p, rz, mu, inv_d, target = (
                idx[keep], x[keep], r[keep], p[keep], rz[keep], mu[keep], inv_d[keep], target[keep]
            )
            if not idx.size:
                break
        z = r * inv_d
        rz_new = (r * z).sum(axis=1)
        p = z + (rz_new / rz)[:, None] * p
        rz = rz_new


def dense_generalized_eigs(system, max_dofs=MAX_DENSE_DOFS):
    """All eigenpairs of ``A phi = lambda M phi`` by a dense symmetric solver.

    Returns
    -------
    eigenvalues : ndarray
        Ascending.
    eigenvectors : ndarray, shape (n, n)
        Columns are ``M``-orthonormal.
    """
    n = system.n_dofs
    if n > max_dofs:
        raise ResourceError(f"{n} dofs exceed the dense eigensolver cap of {max_dofs}")
    if n == 0:
        return np.zeros(0), np.zeros((0, 0))
    return scipy.linalg.eigh(system.stiffness.toarray(), system.mass.toarray())
