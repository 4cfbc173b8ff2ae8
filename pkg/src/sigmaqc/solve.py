"""Assembly and solution of div(sigma grad u) = 0 on structured grids.

The bilinear form is sum over cells of |cell| * sigma grad(u) . grad(phi)
with cell-center gradients (one-point quadrature of bilinear elements). The
true non-symmetric flux is used, with no symmetrization.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .coeff import SigmaField
from .mesh import Grid, MatrixField, ScalarField, VectorField, gradient

log = logging.getLogger(__name__)

RTOL = 1e-10
DIRECT_LIMIT = 257 * 257 + 8


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class MapField:
    """A planar map U = (u1, u2) on a grid.

    ``du`` optionally holds exact per-cell Jacobians (analytic cases); it then
    takes precedence over gradients of the nodal samples.
    """

    u1: ScalarField
    u2: ScalarField
    du: MatrixField | None = None
    sense_preserving: bool = True

    def __post_init__(self):
        if self.u1.grid != self.u2.grid:
            raise ValueError("map components live on different grids")
        if self.du is not None and self.du.grid != self.u1.grid:
            raise ValueError("Jacobian field lives on a different grid")

    @property
    def grid(self) -> Grid:
        return self.u1.grid

    def jacobian(self) -> np.ndarray:
        if self.du is not None:
            return self.du.values
        return np.stack([gradient(self.u1).values, gradient(self.u2).values], axis=-2)


def _cellwise(sigma: SigmaField) -> np.ndarray:
    return sigma.values.reshape(-1, 2, 2)


def stiffness_matrix(sigma: SigmaField) -> sp.csr_matrix:
    g = sigma.grid
    gx, gy = g.gradient_operators
    s = _cellwise(sigma) * g.cell_area
    d = sp.diags
    a = (gx.T @ d(s[:, 0, 0]) @ gx + gx.T @ d(s[:, 0, 1]) @ gy
         + gy.T @ d(s[:, 1, 0]) @ gx + gy.T @ d(s[:, 1, 1]) @ gy)
    return a.tocsr()


def flux(sigma: SigmaField, u: ScalarField) -> np.ndarray:
    """Per-cell sigma grad u, shape (nx, ny, 2)."""
    return np.einsum("...ij,...j->...i", sigma.values, gradient(u).values)


def linear_solve(a: sp.spmatrix, b: np.ndarray, rtol: float = RTOL) -> np.ndarray:
    """Direct factorization for moderate sizes, restarted GMRES beyond."""
    a = a.tocsc()
    n = a.shape[0]
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        return np.zeros(n)
    if n <= DIRECT_LIMIT:
        try:
            x = spla.spsolve(a, b)
        except RuntimeError as exc:
            raise SolverError(f"sparse factorization failed: {exc}") from exc
        if not np.all(np.isfinite(x)):
            raise SolverError("sparse factorization produced non-finite values (singular system?)")
        iters = 1
    else:
        diag = a.diagonal()
        diag[diag == 0] = 1.0
        m = sp.diags(1.0 / diag)
        count = [0]

        def cb(_):
            count[0] += 1

        x, info = spla.gmres(a, b, M=m, rtol=rtol, restart=200, maxiter=50,
                             callback=cb, callback_type="pr_norm")
        iters = count[0]
        if info != 0:
            res = np.linalg.norm(a @ x - b) / bnorm
            raise SolverError(f"GMRES did not converge: {iters} iterations, relative residual {res:.3e}")
    res = np.linalg.norm(a @ x - b) / bnorm
    if res > max(rtol, 1e3 * np.finfo(float).eps * np.sqrt(n)):
        raise SolverError(f"solve stalled: {iters} iterations, relative residual {res:.3e}")
    return x


def _mean_functional(grid: Grid) -> np.ndarray:
    """Weights w with w . values = mean over the domain of the bilinear interpolant."""
    return np.asarray(grid.average_operator.sum(axis=0)).ravel() / grid.n_cells


def _edge_differences(v: np.ndarray, periodic: bool) -> np.ndarray:
    if periodic:
        dx = np.roll(v, -1, 0) - v
        dy = np.roll(v, -1, 1) - v
    else:
        dx = np.diff(v, axis=0)
        dy = np.diff(v, axis=1)
    return np.concatenate([dx.ravel(), dy.ravel()])


def fix_gauge(v: np.ndarray, grid: Grid) -> np.ndarray:
    """Choose the representative of v modulo the gradient kernel.

    The checkerboard amplitude is the one minimizing the squared edge
    differences (the smoothest representative); the mean is set to zero.
    """
    v = np.array(v, dtype=float).reshape(grid.node_shape)
    modes = grid.kernel_modes()
    if len(modes) > 1:
        cb = modes[1]
        dcb = _edge_differences(cb, grid.periodic)
        v = v - (_edge_differences(v, grid.periodic) @ dcb) / (dcb @ dcb) * cb
    return v - _mean_functional(grid) @ v.ravel()


def solve_with_kernel(a: sp.spmatrix, rhs: np.ndarray, grid: Grid) -> np.ndarray:
    """Solve a singular nodal system whose kernel is spanned by the grid's kernel modes."""
    modes = grid.kernel_modes()
    cons = [_mean_functional(grid)] + [m.ravel() / m.size for m in modes[1:]]
    c = sp.csr_matrix(np.stack(cons, axis=1))
    k = c.shape[1]
    big = sp.bmat([[a, c], [c.T, None]], format="csc")
    sol = linear_solve(big, np.concatenate([rhs, np.zeros(k)]))
    return fix_gauge(sol[:-k], grid)


def solve_dirichlet(sigma: SigmaField, g) -> ScalarField:
    """Discrete weak solution with nodal Dirichlet data.

    ``g`` is a callable g(x, y) or an array / nodal field whose boundary
    entries are used.
    """
    grid = sigma.grid
    if grid.periodic:
        raise ValueError("solve_dirichlet needs a dirichlet grid")
    x, y = grid.node_coords()
    if callable(g):
        gv = np.broadcast_to(np.asarray(g(x, y), dtype=float), x.shape)
    elif isinstance(g, ScalarField):
        gv = g.node_values()
    else:
        gv = np.asarray(g, dtype=float).reshape(grid.node_shape)
    bnd = grid.boundary_mask().ravel()
    inner = ~bnd
    a = stiffness_matrix(sigma)
    gb = gv.ravel()[bnd]
    u = np.array(gv, dtype=float).ravel()
    rhs = -(a[inner][:, bnd] @ gb)
    u[inner] = linear_solve(a[inner][:, inner], rhs)
    lo, hi = gb.min(), gb.max()
    slack = 1e-8 * max(1.0, hi - lo)
    if u.min() < lo - slack or u.max() > hi + slack:
        log.warning("discrete maximum principle violated: range [%g, %g] vs data [%g, %g]",
                    u.min(), u.max(), lo, hi)
    return ScalarField(grid, u.reshape(grid.node_shape), "node")


def solve_cell_problem(sigma: SigmaField) -> MapField:
    """U = x + corrector, corrector periodic with zero mean, div(sigma grad u^i) = 0."""
    grid = sigma.grid
    if not grid.periodic:
        raise ValueError("solve_cell_problem needs a periodic grid")
    a = stiffness_matrix(sigma)
    gx, gy = grid.gradient_operators
    s = _cellwise(sigma) * grid.cell_area
    comps = []
    for i in range(2):
        rhs = -(gx.T @ s[:, 0, i] + gy.T @ s[:, 1, i])
        chi = solve_with_kernel(a, rhs, grid)
        slope = (1.0, 0.0) if i == 0 else (0.0, 1.0)
        comps.append(ScalarField(grid, chi, "node", slope))
    return MapField(*comps)


def interior_nodes(grid: Grid) -> np.ndarray:
    return ~grid.boundary_mask().ravel()


def _residual_vector(sigma: SigmaField, w: ScalarField, B: VectorField | None):
    """Nodal residual a(w, phi_n) of div(sigma grad w + w B) and the norm ||grad w|| + ||w||."""
    grid = sigma.grid
    if w.at != "node":
        w = w.to_nodes()
    gx, gy = grid.gradient_operators
    area = grid.cell_area
    gw = gradient(w).values.reshape(-1, 2)
    q = np.einsum("kij,kj->ki", _cellwise(sigma), gw)
    wc = w.cell_values().ravel()
    if B is not None:
        if w.has_slope:
            raise ValueError("drift term needs a periodic w without linear part")
        q = q + wc[:, None] * B.values.reshape(-1, 2)
    r = area * (gx.T @ q[:, 0] + gy.T @ q[:, 1])
    scale = np.sqrt(area * np.sum(gw * gw)) + np.sqrt(area * np.sum(wc * wc))
    return r, scale


def weak_residual(sigma: SigmaField, w: ScalarField, B: VectorField | None = None) -> float:
    """Normalized residual of div(sigma grad w + w B) = 0 against interior hat functions.

    Returns max over interior nodes of |a(w, phi)| / ||grad phi||, divided by
    ||grad w|| + ||w|| (L2 norms over the grid).
    """
    grid = sigma.grid
    r, scale = _residual_vector(sigma, w, B)
    gx, gy = grid.gradient_operators
    phi_norm = np.sqrt(grid.cell_area * (np.asarray(gx.multiply(gx).sum(axis=0)).ravel()
                                         + np.asarray(gy.multiply(gy).sum(axis=0)).ravel()))
    inner = interior_nodes(grid)
    num = np.max(np.abs(r[inner]) / phi_norm[inner]) if np.any(inner) else 0.0
    if scale == 0:
        return 0.0 if num == 0 else np.inf
    return float(num / scale)


def dual_residual(sigma: SigmaField, w: ScalarField, B: VectorField | None = None) -> float:
    """Residual of the same weak form in the dual norm of H^1_0 (H^1_per on periodic grids).

    sup over all discrete test functions phi of |a(w, phi)| / ||grad phi||,
    divided by ||grad w|| + ||w||. Unlike ``weak_residual`` this stays O(1)
    when w is not an approximate solution.
    """
    grid = sigma.grid
    r, scale = _residual_vector(sigma, w, B)
    gx, gy = grid.gradient_operators
    lap = (grid.cell_area * (gx.T @ gx + gy.T @ gy)).tocsr()
    if grid.periodic:
        z = solve_with_kernel(lap, r, grid).ravel()
        val = float(r @ z)
    else:
        inner = interior_nodes(grid)
        ri = r[inner]
        val = float(ri @ linear_solve(lap[inner][:, inner], ri)) if np.any(ri) else 0.0
    num = np.sqrt(max(val, 0.0))
    if scale == 0:
        return 0.0 if num == 0 else np.inf
    return float(num / scale)
