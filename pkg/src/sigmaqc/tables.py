"""Plain-text field tables: comma separated, header row, row-major, '.17g' numbers."""

from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from .mesh import Grid, MatrixField, ScalarField

FMT = ".17g"


def _fmt(v: float) -> str:
    return format(float(v), FMT)


def _write(rows, header, path=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def node_table(f: ScalarField, path=None) -> str:
    """Columns x,y,value over the nodes."""
    x, y = f.grid.node_coords()
    v = f.node_values()
    return _write(zip(x.ravel(), y.ravel(), v.ravel()), ["x", "y", "value"], path)


def cell_table(grid: Grid, columns: dict, path=None) -> str:
    """Columns cx,cy followed by one column per entry of ``columns`` (cell arrays)."""
    cx, cy = grid.cell_centers()
    data = [cx.ravel(), cy.ravel()] + [np.asarray(v, dtype=float).reshape(grid.cell_shape).ravel()
                                       for v in columns.values()]
    return _write(zip(*data), ["cx", "cy", *columns], path)


def cell_scalar_table(f: ScalarField, name: str = "value", path=None) -> str:
    return cell_table(f.grid, {name: f.cell_values()}, path)


def beltrami_table(grid: Grid, mu: np.ndarray, nu: np.ndarray, path=None) -> str:
    return cell_table(grid, {"mu_re": mu.real, "mu_im": mu.imag, "nu_re": nu.real, "nu_im": nu.imag},
                      path)


def sigma_table(grid: Grid, s: np.ndarray, path=None) -> str:
    return cell_table(grid, {"s11": s[..., 0, 0], "s12": s[..., 0, 1],
                             "s21": s[..., 1, 0], "s22": s[..., 1, 1]}, path)


def read_sigma_table(source, grid: Grid) -> MatrixField:
    """Per-cell sigma from a ``cx,cy,s11,s12,s21,s22`` table matching ``grid``'s cell centers.

    ``source`` is a path or the table text. Rows may come in any order.
    """
    text = source if isinstance(source, str) and "\n" in source else Path(source).read_text()
    rows = list(csv.reader(io.StringIO(text)))
    header = [h.strip() for h in rows[0]]
    need = ["cx", "cy", "s11", "s12", "s21", "s22"]
    if header != need:
        raise ValueError(f"sigma table header must be {','.join(need)}, got {','.join(header)}")
    data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
    if data.shape[0] != grid.n_cells:
        raise ValueError(f"sigma table has {data.shape[0]} rows, grid has {grid.n_cells} cells")
    i = np.rint((data[:, 0] - grid.domain[0]) / grid.hx - 0.5).astype(int)
    j = np.rint((data[:, 1] - grid.domain[2]) / grid.hy - 0.5).astype(int)
    if (i.min() < 0 or j.min() < 0 or i.max() >= grid.nx or j.max() >= grid.ny):
        raise ValueError("sigma table cell centers fall outside the grid")
    out = np.full((*grid.cell_shape, 2, 2), np.nan)
    out[i, j] = data[:, 2:].reshape(-1, 2, 2)
    if np.isnan(out).any():
        raise ValueError("sigma table does not cover every cell exactly once")
    return MatrixField(grid, out)
