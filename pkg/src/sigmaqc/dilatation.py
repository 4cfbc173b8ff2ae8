"""Jacobians, distortion functions, the fields w^i and the drift fields B^i.

The algebraic helpers work on stacked arrays (``du`` of shape (..., 2, 2),
rows grad u1 and grad u2) so analytic and discrete data share one code path.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .coeff import SigmaField, det2
from .mesh import Grid, ScalarField, VectorField
from .solve import MapField

J = np.array([[0.0, -1.0], [1.0, 0.0]])
DEGENERATE_FRACTION = 0.10


def _quad(s: np.ndarray, v: np.ndarray) -> np.ndarray:
    """s v . v over the leading axes."""
    return np.einsum("...i,...ij,...j->...", v, s, v)


def hs_norm_sq(du: np.ndarray) -> np.ndarray:
    return np.sum(du * du, axis=(-2, -1))


def distortion(du: np.ndarray) -> np.ndarray:
    """|DU|^2 / (2 det DU) with the Hilbert-Schmidt norm."""
    return hs_norm_sq(du) / (2.0 * det2(du))


def sigma_energy_density(du: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Trace(DU s DU^T) = sum_i s grad u^i . grad u^i."""
    return _quad(s, du[..., 0, :]) + _quad(s, du[..., 1, :])


def sigma_distortion(du: np.ndarray, s: np.ndarray) -> np.ndarray:
    return sigma_energy_density(du, s) / (2.0 * det2(du))


def w_fields(du: np.ndarray, s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    det = det2(du)
    return det / _quad(s, du[..., 0, :]), det / _quad(s, du[..., 1, :])


def drift(grad_u: np.ndarray, s: np.ndarray, grad_b: np.ndarray, grad_c: np.ndarray,
          eps: float = 0.0) -> np.ndarray:
    """Drift vector [(J gu . gc) J gu + (J gu . gb) s gu] / (s gu . gu).

    With this B, w = det DU / (s gu . gu) solves div(s grad w + w B) = 0.
    The c-term points along +J gu: for s = diag(p(x1), q(x1)) and
    U = (int 1/p, x2), w2 = 1/(pq) and the x1-flux -p c'/c^2 + w B_1 vanishes
    only for B_1 = +c'/q. Zero where |grad u|^2 <= eps.
    """
    jg = grad_u @ J.T
    sg = np.einsum("...ij,...j->...i", s, grad_u)
    den = np.einsum("...i,...i->...", sg, grad_u)
    num = (np.einsum("...i,...i->...", jg, grad_c)[..., None] * jg
           + np.einsum("...i,...i->...", jg, grad_b)[..., None] * sg)
    small = np.sum(grad_u * grad_u, axis=-1) <= eps
    safe = np.where(small, 1.0, den)
    out = num / safe[..., None]
    out[small] = 0.0
    return out


def drift_constant(alpha: float, beta: float) -> float:
    """C0 in |B^i| <= C0 E, from Cauchy-Schwarz and |s xi| <= beta |xi|."""
    return (1.0 + beta) / alpha


@dataclass(frozen=True, eq=False)
class DifferentialField:
    du: np.ndarray                 # (nx, ny, 2, 2)
    det: np.ndarray                # (nx, ny)
    degenerate: np.ndarray         # (nx, ny) bool
    eps_deg: float

    @property
    def degenerate_cells(self) -> list[tuple[int, int]]:
        return [(int(i), int(j)) for i, j in zip(*np.nonzero(self.degenerate))]


def _thresholds(du: np.ndarray, rel: float = 1e-12) -> float:
    scale = float(np.max(np.abs(du))) if du.size else 0.0
    return rel * max(scale, 1e-300) ** 2


def map_differential(U: MapField, rel_eps: float = 1e-12) -> DifferentialField:
    """Per-cell DU and det DU; cells with det DU <= eps or a vanishing row are flagged."""
    du = U.jacobian()
    det = det2(du)
    eps = _thresholds(du, rel_eps)
    g1 = np.sum(du[..., 0, :] ** 2, axis=-1)
    g2 = np.sum(du[..., 1, :] ** 2, axis=-1)
    degenerate = (det <= eps) | (g1 <= eps) | (g2 <= eps)
    return DifferentialField(du, det, degenerate, eps)


def _region_mask(grid: Grid, region) -> np.ndarray:
    """Cells whose centers lie in ``region`` (bounds tuple, boolean mask or None)."""
    if region is None:
        return np.ones(grid.cell_shape, dtype=bool)
    if isinstance(region, np.ndarray):
        return region.astype(bool)
    x0, x1, y0, y1 = region
    cx, cy = grid.cell_centers()
    return (cx >= x0) & (cx <= x1) & (cy >= y0) & (cy <= y1)


def centered_half(domain) -> tuple[float, float, float, float]:
    x0, x1, y0, y1 = domain
    qx, qy = 0.25 * (x1 - x0), 0.25 * (y1 - y0)
    return (x0 + qx, x1 - qx, y0 + qy, y1 - qy)


@dataclass(frozen=True, eq=False)
class DilatationReport:
    d: ScalarField
    d_sigma: ScalarField
    w1: ScalarField
    w2: ScalarField
    B1: VectorField
    B2: VectorField
    valid: np.ndarray
    subregion: tuple | None
    sup_d_sigma: float
    inf_d_sigma: float
    harnack_H: float
    identity_residual: float
    degenerate_fraction: float
    notes: list = field(default_factory=list)

    @property
    def degenerate_dominated(self) -> bool:
        return self.degenerate_fraction > DEGENERATE_FRACTION

    def summary(self) -> dict:
        return {
            "sup_d_sigma": self.sup_d_sigma,
            "inf_d_sigma": self.inf_d_sigma,
            "harnack_H": self.harnack_H,
            "identity_residual": self.identity_residual,
            "degenerate_fraction": self.degenerate_fraction,
            "degenerate_dominated": self.degenerate_dominated,
        }


def drift_fields(U: MapField, sigma: SigmaField, diff: DifferentialField | None = None
                 ) -> tuple[VectorField, VectorField]:
    diff = diff or map_differential(U)
    gb, gc = sigma.gradients()
    s = sigma.values
    return tuple(VectorField(U.grid, drift(diff.du[..., i, :], s, gb, gc, diff.eps_deg))
                 for i in range(2))


def dilatation_fields(U: MapField, sigma: SigmaField, subregion=None) -> DilatationReport:
    """All distortion quantities of U; degenerate cells are excluded from sup/inf and checks.

    ``subregion`` (bounds or cell mask) defaults to the centered half-side square.
    """
    grid = U.grid
    if sigma.grid != grid:
        raise ValueError("map and coefficient field live on different grids")
    diff = map_differential(U)
    ok = ~diff.degenerate
    s = sigma.values
    safe_du = np.where(ok[..., None, None], diff.du, np.eye(2))
    d = np.where(ok, distortion(safe_du), 0.0)
    ds = np.where(ok, sigma_distortion(safe_du, s), 0.0)
    w1, w2 = w_fields(safe_du, s)
    w1, w2 = np.where(ok, w1, 0.0), np.where(ok, w2, 0.0)
    B1, B2 = drift_fields(U, sigma, diff)

    identity = 0.0
    if ok.any():
        identity = float(np.max(np.abs(ds - 0.5 * (1.0 / np.where(ok, w1, 1.0)
                                                    + 1.0 / np.where(ok, w2, 1.0)))[ok]))
    if subregion is None:
        subregion = centered_half(grid.domain)
    mask = _region_mask(grid, subregion) & ok
    notes = []
    frac = float(diff.degenerate.mean())
    if frac > DEGENERATE_FRACTION:
        notes.append("degenerate-dominated")
    if mask.any():
        sup, inf = float(ds[mask].max()), float(ds[mask].min())
        H = sup / inf if inf > 0 else np.inf
    else:
        sup = inf = H = np.nan
        notes.append("subregion has no non-degenerate cells")
    return DilatationReport(
        d=ScalarField(grid, d, "cell"), d_sigma=ScalarField(grid, ds, "cell"),
        w1=ScalarField(grid, w1, "cell"), w2=ScalarField(grid, w2, "cell"),
        B1=B1, B2=B2, valid=ok,
        subregion=None if isinstance(subregion, np.ndarray) else tuple(subregion),
        sup_d_sigma=sup, inf_d_sigma=inf, harnack_H=H,
        identity_residual=identity, degenerate_fraction=frac, notes=notes)
