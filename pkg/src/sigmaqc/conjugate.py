"""Stream functions, complex dilatations and the first-order Beltrami system."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .coeff import SigmaField, det2
from .mesh import ScalarField, gradient
from .solve import flux, solve_with_kernel, weak_residual

log = logging.getLogger(__name__)

J = np.array([[0.0, -1.0], [1.0, 0.0]])


@dataclass(frozen=True, eq=False)
class ConjugatePair:
    u: ScalarField
    u_tilde: ScalarField
    mismatch: float        # relative L2 misfit of grad u_tilde against J sigma grad u
    compatibility: float   # weak residual of u, the obstruction to an exact fit

    def jacobian(self) -> np.ndarray:
        """Per-cell DF with rows grad u and grad u_tilde."""
        return np.stack([gradient(self.u).values, gradient(self.u_tilde).values], axis=-2)


def stream_function(sigma: SigmaField, u: ScalarField, tol: float = 1e-8) -> ConjugatePair:
    """Least-squares u_tilde with grad u_tilde ~ J sigma grad u, normalized to mean zero.

    The fit is exact (per cell) when u is an exact discrete solution on a
    dirichlet grid. On periodic grids the mean of J sigma grad u becomes the
    linear part of u_tilde.
    """
    grid = sigma.grid
    compat = weak_residual(sigma, u)
    if compat > tol:
        log.warning("stream function: u is not a solution (weak residual %.3e > %.1e)", compat, tol)
    target = flux(sigma, u) @ J.T
    slope = (0.0, 0.0)
    if grid.periodic:
        mean = target.reshape(-1, 2).mean(axis=0)
        slope = (float(mean[0]), float(mean[1]))
        target = target - mean
    gx, gy = grid.gradient_operators
    a = grid.cell_area
    lap = (a * (gx.T @ gx + gy.T @ gy)).tocsr()
    t = target.reshape(-1, 2)
    rhs = a * (gx.T @ t[:, 0] + gy.T @ t[:, 1])
    ut = ScalarField(grid, solve_with_kernel(lap, rhs, grid), "node", slope)
    full_target = flux(sigma, u) @ J.T
    err = gradient(ut).values - full_target
    scale = np.sqrt(np.sum(full_target ** 2))
    mismatch = float(np.sqrt(np.sum(err ** 2)) / scale) if scale > 0 else float(np.sqrt(np.sum(err ** 2)))
    return ConjugatePair(u, ut, mismatch, compat)


def complex_dilatations(s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """mu and nu of a stack of 2x2 matrices."""
    s11, s12, s21, s22 = s[..., 0, 0], s[..., 0, 1], s[..., 1, 0], s[..., 1, 1]
    det = det2(s)
    den = 1.0 + s11 + s22 + det
    mu = (s22 - s11 - 1j * (s12 + s21)) / den
    nu = (1.0 - det + 1j * (s12 - s21)) / den
    return mu, nu


@dataclass(frozen=True, eq=False)
class BeltramiPair:
    mu: np.ndarray
    nu: np.ndarray
    k_ess: float
    K_belt: float


def beltrami_coefficients(sigma: SigmaField) -> BeltramiPair:
    mu, nu = complex_dilatations(sigma.values)
    k = float(np.max(np.abs(mu) + np.abs(nu)))
    return BeltramiPair(mu, nu, k, (1.0 + k) / (1.0 - k))


def qc_bound_K(alpha: float, beta: float) -> float:
    """Distortion K(alpha, beta) with |mu| + |nu| <= (K - 1)/(K + 1) on M(alpha, beta).

    K + 1/K = 1/alpha + beta: for F = u + i u_tilde with grad u = xi one has
    |DF|^2 / det DF = (|xi|^2 + |s xi|^2) / (s xi . xi), and the two
    ellipticity inequalities bound this by 1/alpha + beta. The bound is
    attained by s = I + J.
    """
    t = 1.0 / alpha + beta
    return 0.5 * (t + np.sqrt(max(t * t - 4.0, 0.0)))


def wirtinger(df: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """F_z and F_zbar from the real Jacobian (rows grad Re F, grad Im F)."""
    d1 = df[..., 0, 0] + 1j * df[..., 1, 0]
    d2 = df[..., 0, 1] + 1j * df[..., 1, 1]
    return 0.5 * (d1 - 1j * d2), 0.5 * (d1 + 1j * d2)


def beltrami_residual(pair: ConjugatePair, belt: BeltramiPair) -> float:
    """||F_zbar - mu F_z - nu conj(F_z)|| / || |F_z| + |F_zbar| || over the grid."""
    fz, fzb = wirtinger(pair.jacobian())
    r = fzb - belt.mu * fz - belt.nu * np.conj(fz)
    den = np.sqrt(np.sum((np.abs(fz) + np.abs(fzb)) ** 2))
    num = np.sqrt(np.sum(np.abs(r) ** 2))
    return float(num / den) if den > 0 else float(num)
