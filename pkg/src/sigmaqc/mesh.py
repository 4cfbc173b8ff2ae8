"""Structured 2D grids, discrete fields, per-cell gradients and dyadic squares.

Scalar fields live on nodes (bilinear interpolation inside each cell) or on
cells (piecewise constant). Gradients of nodal fields are evaluated at cell
centers, so every cell carries one constant gradient and integrals use the
midpoint rule.

Node arrays have shape ``(nx + 1, ny + 1)`` on dirichlet grids and
``(nx, ny)`` on periodic grids, where opposite edges are identified. Index
``[i, j]`` runs along x then y.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

DIRICHLET = "dirichlet"
PERIODIC = "periodic"
UNIT_CELL = (0.0, 1.0, 0.0, 1.0)


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    nx: int
    ny: int
    domain: tuple[float, float, float, float] = UNIT_CELL
    topology: str = DIRICHLET

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2:
            raise GridError(f"degenerate grid: nx={self.nx}, ny={self.ny} (need >= 2)")
        if self.topology not in (DIRICHLET, PERIODIC):
            raise GridError(f"unknown topology {self.topology!r}")
        x0, x1, y0, y1 = (float(v) for v in self.domain)
        object.__setattr__(self, "domain", (x0, x1, y0, y1))
        if not (x1 > x0 and y1 > y0):
            raise GridError(f"domain {self.domain} has no area")
        if self.periodic and self.domain != UNIT_CELL:
            raise GridError("periodic topology requires the unit cell [0,1]^2")

    @property
    def periodic(self) -> bool:
        return self.topology == PERIODIC

    @property
    def hx(self) -> float:
        return (self.domain[1] - self.domain[0]) / self.nx

    @property
    def hy(self) -> float:
        return (self.domain[3] - self.domain[2]) / self.ny

    @property
    def cell_area(self) -> float:
        return self.hx * self.hy

    @property
    def area(self) -> float:
        return (self.domain[1] - self.domain[0]) * (self.domain[3] - self.domain[2])

    @property
    def node_shape(self) -> tuple[int, int]:
        if self.periodic:
            return (self.nx, self.ny)
        return (self.nx + 1, self.ny + 1)

    @property
    def cell_shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def n_nodes(self) -> int:
        return self.node_shape[0] * self.node_shape[1]

    @property
    def n_cells(self) -> int:
        return self.nx * self.ny

    def node_coords(self) -> tuple[np.ndarray, np.ndarray]:
        mx, my = self.node_shape
        x = self.domain[0] + self.hx * np.arange(mx)
        y = self.domain[2] + self.hy * np.arange(my)
        return np.meshgrid(x, y, indexing="ij")

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        x = self.domain[0] + self.hx * (np.arange(self.nx) + 0.5)
        y = self.domain[2] + self.hy * (np.arange(self.ny) + 0.5)
        return np.meshgrid(x, y, indexing="ij")

    def boundary_mask(self) -> np.ndarray:
        """Nodes carrying Dirichlet data; empty on periodic grids."""
        mask = np.zeros(self.node_shape, dtype=bool)
        if not self.periodic:
            mask[0, :] = mask[-1, :] = True
            mask[:, 0] = mask[:, -1] = True
        return mask

    @cached_property
    def corners(self) -> np.ndarray:
        """Flat node ids of the corners (00, 10, 01, 11) of every cell, shape (nx, ny, 4)."""
        mx, my = self.node_shape
        i, j = np.meshgrid(np.arange(self.nx), np.arange(self.ny), indexing="ij")
        ip, jp = (i + 1) % mx, (j + 1) % my
        return np.stack([i * my + j, ip * my + j, i * my + jp, ip * my + jp], axis=-1)

    @cached_property
    def gradient_operators(self) -> tuple[sp.csr_matrix, sp.csr_matrix]:
        """Sparse maps from nodal values to cell-center partial derivatives."""
        rows = np.repeat(np.arange(self.n_cells), 4)
        cols = self.corners.reshape(-1)
        wx = np.tile([-1.0, 1.0, -1.0, 1.0], self.n_cells) / (2 * self.hx)
        wy = np.tile([-1.0, -1.0, 1.0, 1.0], self.n_cells) / (2 * self.hy)
        shape = (self.n_cells, self.n_nodes)
        gx = sp.csr_matrix((wx, (rows, cols)), shape=shape)
        gy = sp.csr_matrix((wy, (rows, cols)), shape=shape)
        return gx, gy

    @cached_property
    def average_operator(self) -> sp.csr_matrix:
        """Nodal values to cell-center values of the bilinear interpolant."""
        rows = np.repeat(np.arange(self.n_cells), 4)
        vals = np.full(rows.size, 0.25)
        return sp.csr_matrix((vals, (rows, self.corners.reshape(-1))),
                             shape=(self.n_cells, self.n_nodes))

    @cached_property
    def node_average_operator(self) -> sp.csr_matrix:
        """Cell values to nodal values, averaging the cells that touch each node."""
        m = self.average_operator.T.tocsr()
        counts = np.asarray(m.sum(axis=1)).ravel()
        return sp.diags(1.0 / counts) @ m

    def kernel_modes(self) -> list[np.ndarray]:
        """Nodal fields whose cell-center gradients vanish identically."""
        modes = [np.ones(self.node_shape)]
        mx, my = self.node_shape
        if not self.periodic or (mx % 2 == 0 and my % 2 == 0):
            i, j = np.meshgrid(np.arange(mx), np.arange(my), indexing="ij")
            modes.append(np.where((i + j) % 2 == 0, 1.0, -1.0))
        return modes

    def contains(self, region) -> bool:
        x0, x1, y0, y1 = region
        tol = 1e-12 * max(1.0, *map(abs, self.domain))
        d = self.domain
        return x0 >= d[0] - tol and x1 <= d[1] + tol and y0 >= d[2] - tol and y1 <= d[3] + tol

    def overlap_weights(self, region) -> np.ndarray:
        """Area of the intersection of each cell with an axis-aligned rectangle."""
        x0, x1, y0, y1 = region
        xe = self.domain[0] + self.hx * np.arange(self.nx + 1)
        ye = self.domain[2] + self.hy * np.arange(self.ny + 1)
        lx = np.clip(np.minimum(xe[1:], x1) - np.maximum(xe[:-1], x0), 0.0, None)
        ly = np.clip(np.minimum(ye[1:], y1) - np.maximum(ye[:-1], y0), 0.0, None)
        return np.outer(lx, ly)


def build_grid(nx: int, ny: int, domain=UNIT_CELL, topology: str = DIRICHLET) -> Grid:
    return Grid(int(nx), int(ny), tuple(domain), topology)


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Nodal or per-cell scalar values on a grid.

    On periodic grids a nodal field may carry a linear part ``slope . x`` on
    top of its periodic values, which is how maps with ``U - x`` periodic are
    stored.
    """

    grid: Grid
    values: np.ndarray
    at: str = "node"
    slope: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.at not in ("node", "cell"):
            raise ValueError(f"field location must be 'node' or 'cell', got {self.at!r}")
        shape = self.grid.node_shape if self.at == "node" else self.grid.cell_shape
        vals = np.asarray(self.values, dtype=float)
        if vals.size != shape[0] * shape[1]:
            raise ValueError(f"expected {shape} values, got {vals.shape}")
        vals = vals.reshape(shape)
        if not np.all(np.isfinite(vals)):
            raise ValueError("field contains non-finite values")
        slope = (float(self.slope[0]), float(self.slope[1]))
        if slope != (0.0, 0.0) and not (self.grid.periodic and self.at == "node"):
            raise ValueError("a linear part is only meaningful for nodal fields on periodic grids")
        object.__setattr__(self, "values", _readonly(vals))
        object.__setattr__(self, "slope", slope)

    @property
    def has_slope(self) -> bool:
        return self.slope != (0.0, 0.0)

    def cell_values(self) -> np.ndarray:
        if self.at == "cell":
            return self.values
        out = (self.grid.average_operator @ self.values.ravel()).reshape(self.grid.cell_shape)
        if self.has_slope:
            cx, cy = self.grid.cell_centers()
            out = out + self.slope[0] * cx + self.slope[1] * cy
        return out

    def node_values(self) -> np.ndarray:
        """Nodal values including the linear part.

        Cell fields are averaged to nodes; on dirichlet grids the boundary
        nodes are then filled by quadratic extrapolation from the interior,
        since one-sided averages there are only first-order accurate.
        """
        if self.at == "cell":
            v = (self.grid.node_average_operator @ self.values.ravel()).reshape(self.grid.node_shape)
            if not self.grid.periodic and min(self.grid.nx, self.grid.ny) >= 4:
                v = _extrapolate_boundary(v)
            return v
        if not self.has_slope:
            return self.values
        x, y = self.grid.node_coords()
        return self.values + self.slope[0] * x + self.slope[1] * y

    def to_nodes(self) -> "ScalarField":
        if self.at == "node":
            return self
        return ScalarField(self.grid, self.node_values(), "node")


def _extrapolate_boundary(v: np.ndarray) -> np.ndarray:
    v = v.copy()
    v[0, 1:-1] = 3 * v[1, 1:-1] - 3 * v[2, 1:-1] + v[3, 1:-1]
    v[-1, 1:-1] = 3 * v[-2, 1:-1] - 3 * v[-3, 1:-1] + v[-4, 1:-1]
    v[:, 0] = 3 * v[:, 1] - 3 * v[:, 2] + v[:, 3]
    v[:, -1] = 3 * v[:, -2] - 3 * v[:, -3] + v[:, -4]
    return v


@dataclass(frozen=True, eq=False)
class VectorField:
    grid: Grid
    values: np.ndarray  # (nx, ny, 2)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).reshape(*self.grid.cell_shape, 2)
        if not np.all(np.isfinite(vals)):
            raise ValueError("field contains non-finite values")
        object.__setattr__(self, "values", _readonly(vals))

    def norm(self) -> np.ndarray:
        return np.hypot(self.values[..., 0], self.values[..., 1])


@dataclass(frozen=True, eq=False)
class MatrixField:
    grid: Grid
    values: np.ndarray  # (nx, ny, 2, 2)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape == (2, 2):
            vals = np.broadcast_to(vals, (*self.grid.cell_shape, 2, 2))
        vals = vals.reshape(*self.grid.cell_shape, 2, 2)
        if not np.all(np.isfinite(vals)):
            raise ValueError("field contains non-finite values")
        object.__setattr__(self, "values", _readonly(vals))


def node_field(grid: Grid, fn) -> ScalarField:
    x, y = grid.node_coords()
    return ScalarField(grid, np.broadcast_to(fn(x, y), x.shape), "node")


def cell_field(grid: Grid, fn) -> ScalarField:
    x, y = grid.cell_centers()
    return ScalarField(grid, np.broadcast_to(fn(x, y), x.shape), "cell")


def gradient(u: ScalarField) -> VectorField:
    """Cell-center gradient of the bilinear interpolant; exact for affine data."""
    if u.at != "node":
        raise ValueError("gradient needs a nodal field")
    gx, gy = u.grid.gradient_operators
    v = u.values.ravel()
    g = np.stack([gx @ v + u.slope[0], gy @ v + u.slope[1]], axis=-1)
    return VectorField(u.grid, g.reshape(*u.grid.cell_shape, 2))


@dataclass(frozen=True)
class Square:
    center: tuple[float, float]
    side: float
    level: int = 0

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        cx, cy = self.center
        r = 0.5 * self.side
        return (cx - r, cx + r, cy - r, cy + r)

    @classmethod
    def from_bounds(cls, region, level: int = 0) -> "Square":
        x0, x1, y0, y1 = region
        side = x1 - x0
        if not np.isclose(side, y1 - y0, rtol=1e-12, atol=0.0):
            raise ValueError(f"region {region} is not a square")
        return cls((0.5 * (x0 + x1), 0.5 * (y0 + y1)), side, level)


def _weights(grid: Grid, region) -> np.ndarray:
    if not grid.contains(region):
        raise ValueError(f"square {tuple(region)} extends outside the domain {grid.domain}")
    return grid.overlap_weights(region)


def integrate_mean(f: ScalarField, q) -> float:
    """(1/|Q|) times the integral of f over Q, cell-wise midpoint quadrature.

    ``q`` is a Square or a bounds tuple. Cells cut by Q contribute in
    proportion to their overlap, so cell-wise constant data is integrated
    exactly.
    """
    bounds = q.bounds if isinstance(q, Square) else tuple(q)
    w = _weights(f.grid, bounds)
    return float(np.sum(w * f.cell_values()) / np.sum(w))


def dyadic_squares(region, max_level: int, grid: Grid | None = None) -> list[Square]:
    """All dyadic subsquares of a square region down to ``max_level``.

    With a grid, levels whose squares are smaller than one cell are rejected.
    """
    if max_level < 0:
        raise ValueError("max_level must be >= 0")
    top = Square.from_bounds(region)
    if grid is not None:
        finest = top.side * 2.0 ** (-max_level)
        if finest < max(grid.hx, grid.hy) * (1 - 1e-9):
            raise ValueError(
                f"resolution exceeded: level {max_level} squares have side {finest:g} "
                f"below the cell size {max(grid.hx, grid.hy):g}")
    x0, _, y0, _ = top.bounds
    out = []
    for level in range(max_level + 1):
        k = 2 ** level
        side = top.side / k
        for a in range(k):
            for b in range(k):
                out.append(Square((x0 + (a + 0.5) * side, y0 + (b + 0.5) * side), side, level))
    return out


def l2_error(u: ScalarField, exact, order: int = 3) -> float:
    """L2 norm of (bilinear interpolant of u) - exact over the domain.

    Gauss quadrature with ``order`` points per axis in every cell, so the
    interpolation error of the nodal field is seen, not only its nodal error.
    """
    if u.at != "node":
        raise ValueError("l2_error needs a nodal field")
    g = u.grid
    pts, wts = np.polynomial.legendre.leggauss(order)
    s = 0.5 * (pts + 1.0)
    nv = u.values.ravel()
    c = g.corners
    v00, v10, v01, v11 = (nv[c[..., k]] for k in range(4))
    x0 = g.domain[0] + g.hx * np.arange(g.nx)[:, None]
    y0 = g.domain[2] + g.hy * np.arange(g.ny)[None, :]
    total = 0.0
    for sa, wa in zip(s, wts):
        for sb, wb in zip(s, wts):
            vh = (v00 * (1 - sa) * (1 - sb) + v10 * sa * (1 - sb)
                  + v01 * (1 - sa) * sb + v11 * sa * sb)
            xq, yq = x0 + sa * g.hx, y0 + sb * g.hy
            e = vh + u.slope[0] * xq + u.slope[1] * yq - exact(xq, yq)
            total += 0.25 * wa * wb * np.sum(e * e)
    return float(np.sqrt(total * g.cell_area))
