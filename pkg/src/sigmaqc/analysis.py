"""Estimators over dyadic square families: BMO, Muckenhoupt A_p, Harnack ratios
and the global bound chain for periodic solutions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .coeff import SigmaField
from .dilatation import (_region_mask, centered_half, dilatation_fields, map_differential,
                         sigma_energy_density)
from .mesh import Grid, ScalarField, dyadic_squares
from .solve import MapField

DEFAULT_P_SCAN = (1.5, 2.0, 3.0)


def _cell_data(f) -> tuple[Grid, np.ndarray]:
    if isinstance(f, ScalarField):
        return f.grid, f.cell_values()
    raise TypeError("expected a ScalarField")


def _square_weights(grid: Grid, region, max_level: int):
    region = tuple(region) if region is not None else grid.domain
    if not grid.contains(region):
        raise ValueError(f"region {region} exceeds the field domain {grid.domain}")
    for q in dyadic_squares(region, max_level, grid):
        w = grid.overlap_weights(q.bounds)
        yield q, w / w.sum()


def bmo_norm(phi: ScalarField, region=None, max_level: int = 4) -> float:
    """Largest mean oscillation (1/|Q|) int_Q |phi - phi_Q| over dyadic squares of ``region``."""
    grid, v = _cell_data(phi)
    best = 0.0
    for _, w in _square_weights(grid, region, max_level):
        m = np.sum(w * v)
        best = max(best, float(np.sum(w * np.abs(v - m))))
    return best


def muckenhoupt_constant(weight: ScalarField, p: float = 2.0, region=None,
                         max_level: int = 4) -> float:
    """max over dyadic squares of mean(w) * mean(w^(-1/(p-1)))^(p-1).

    Returns ``math.inf`` if the weight is not positive on some cell of a square.
    """
    if not p > 1:
        raise ValueError("p must be > 1")
    grid, v = _cell_data(weight)
    best = 1.0
    e = -1.0 / (p - 1.0)
    for _, w in _square_weights(grid, region, max_level):
        inside = w > 0
        if np.any(v[inside] <= 0):
            return math.inf
        a = np.sum(w[inside] * v[inside])
        b = np.sum(w[inside] * v[inside] ** e) ** (p - 1.0)
        best = max(best, float(a * b))
    return best


def harnack_ratio(d_sigma: ScalarField, subregion=None, valid: np.ndarray | None = None) -> float:
    """max / min of the cell values inside ``subregion`` (bounds or cell mask).

    Cells outside ``valid`` are excluded. Raises ValueError when the minimum
    is not positive (ratio undefined).
    """
    grid, v = _cell_data(d_sigma)
    mask = _region_mask(grid, subregion)
    if valid is not None:
        mask = mask & valid
    if not mask.any():
        raise ValueError("Harnack ratio undefined: no cells in subregion")
    lo, hi = float(v[mask].min()), float(v[mask].max())
    if not lo > 0:
        raise ValueError(f"Harnack ratio undefined: minimum {lo:g} is not positive")
    return hi / lo


@dataclass(frozen=True)
class CorollaryCheck:
    lhs: float
    rhs: float
    delta: float
    H: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs * (1 + 1e-12)


def corollary_bound(d_sigma: ScalarField, delta: float, H: float, region=None,
                    valid: np.ndarray | None = None) -> CorollaryCheck:
    """sup_A d <= H * ((1/|A|) int_A d^delta)^(1/delta) on the cells of A."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    grid, v = _cell_data(d_sigma)
    mask = _region_mask(grid, region)
    if valid is not None:
        mask = mask & valid
    vals = v[mask]
    mean = float(np.mean(vals ** delta)) ** (1.0 / delta)
    return CorollaryCheck(float(vals.max()), H * mean, delta, H)


def default_delta(p: float) -> float:
    return min(0.5, 1.0 / (2.0 * (p - 1.0)))


def log_det(U: MapField) -> ScalarField:
    """log det DU per cell, clamped below at the degeneracy threshold."""
    diff = map_differential(U)
    return ScalarField(U.grid, np.log(np.maximum(diff.det, diff.eps_deg)), "cell")


@dataclass(frozen=True)
class AnalysisReport:
    bmo_norm: float
    ap_constant: float
    p: float
    ap_scan: dict
    harnack_H: float
    harnack_H_domain: float
    delta: float
    corollary_lhs: float
    corollary_rhs: float
    energy_sigma: float
    trace_integral: float
    area_integral: float
    K: float
    sup_d_sigma: float
    C: float
    bound_M: float
    checks: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    def summary(self) -> dict:
        out = {k: getattr(self, k) for k in (
            "bmo_norm", "ap_constant", "p", "harnack_H", "harnack_H_domain", "delta", "corollary_lhs",
            "corollary_rhs", "energy_sigma", "trace_integral", "area_integral", "K",
            "sup_d_sigma", "C", "bound_M")}
        for p, c in self.ap_scan.items():
            out[f"ap_constant_p{p:g}"] = c
        for name, ok in self.checks.items():
            out[f"check.{name}"] = "pass" if ok else "fail"
        return out


def global_checks(U: MapField, sigma: SigmaField, p: float = 2.0, delta: float | None = None,
                  max_level: int = 4, subregion=None, tol: float = 1e-6,
                  p_scan=DEFAULT_P_SCAN) -> AnalysisReport:
    """Energy, area and distortion bound chain for a map on its grid.

    On periodic grids the energy bound and the area identity are checked;
    the chain sup d_sigma <= C H K is assembled from the measured A_p
    constant C of det DU and the Harnack ratio H over the whole domain.
    """
    grid = U.grid
    s = sigma.values
    diff = map_differential(U)
    area = grid.cell_area
    energy = float(area * np.sum(sigma_energy_density(diff.du, s)))
    trace = float(area * np.sum(s[..., 0, 0] + s[..., 1, 1]))
    area_int = float(area * np.sum(diff.det))
    if delta is None:
        delta = default_delta(p)

    rep = dilatation_fields(U, sigma, subregion=subregion)
    ok = rep.valid
    det_field = ScalarField(grid, diff.det, "cell")
    scan = {float(q): muckenhoupt_constant(det_field, q, None, max_level) for q in p_scan}
    C = scan[float(p)] if float(p) in scan else muckenhoupt_constant(det_field, p, None, max_level)
    bmo = bmo_norm(log_det(U), None, max_level)

    H_global = harnack_ratio(rep.d_sigma, None, ok)
    sub = subregion if subregion is not None else centered_half(grid.domain)
    try:
        H_sub = harnack_ratio(rep.d_sigma, sub, ok)
        cor = corollary_bound(rep.d_sigma, delta, H_sub, sub, ok)
        cor_l, cor_r = cor.lhs, cor.rhs
    except ValueError:
        H_sub, cor_l, cor_r = math.nan, math.nan, math.nan
    sup_ds = float(rep.d_sigma.values[ok].max())
    K = sigma.K
    M = C * H_global * K

    checks = {"corollary": bool(cor_l <= cor_r * (1 + 1e-12)),
              "bound_chain": bool(sup_ds <= M * (1 + 1e-12))}
    if grid.periodic:
        checks["area_identity"] = abs(area_int - 1.0) <= tol
        checks["energy_bound"] = energy <= trace + tol
        checks["trace_bound"] = trace <= 2 * K * grid.area + tol
    failures = [k for k, v in checks.items() if not v]
    return AnalysisReport(
        bmo_norm=bmo, ap_constant=C, p=float(p), ap_scan=scan, harnack_H=H_sub,
        harnack_H_domain=H_global, delta=delta,
        corollary_lhs=cor_l, corollary_rhs=cor_r, energy_sigma=energy, trace_integral=trace,
        area_integral=area_int, K=K, sup_d_sigma=sup_ds, C=C, bound_M=M,
        checks=checks, failures=failures)
