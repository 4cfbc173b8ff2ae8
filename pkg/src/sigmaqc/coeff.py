"""Coefficient matrices in the class M(alpha, beta): validation and derived scalars."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mesh import Grid, MatrixField, ScalarField, VectorField

# Relative slack when comparing measured ellipticity against requested constants.
_REL_TOL = 1e-12


class EllipticityError(ValueError):
    def __init__(self, report: "EllipticityReport"):
        self.report = report
        super().__init__(report.describe())


def sym(s: np.ndarray) -> np.ndarray:
    return 0.5 * (s + np.swapaxes(s, -1, -2))


def det2(s: np.ndarray) -> np.ndarray:
    return s[..., 0, 0] * s[..., 1, 1] - s[..., 0, 1] * s[..., 1, 0]


def lower_constants(s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-cell sharp ellipticity constants.

    Returns (smallest eigenvalue of sym(s), smallest eigenvalue of sym(s^-1)).
    The second is -inf where s is singular.
    """
    a = np.linalg.eigvalsh(sym(s))[..., 0]
    d = det2(s)
    inv_low = np.full(d.shape, -np.inf)
    ok = d != 0
    if np.any(ok):
        inv_low[ok] = np.linalg.eigvalsh(sym(np.linalg.inv(s[ok])))[..., 0]
    return a, inv_low


@dataclass(frozen=True)
class EllipticityReport:
    passed: bool
    first_ok: bool
    second_ok: bool
    alpha: float
    beta: float
    K: float
    alpha_measured: float
    beta_measured: float
    worst_cell_first: tuple[int, int]
    worst_cell_second: tuple[int, int]
    violations: list = field(default_factory=list)

    def describe(self) -> str:
        if self.passed:
            return f"ellipticity ok: alpha={self.alpha:g}, beta={self.beta:g}, K={self.K:g}"
        parts = []
        if not self.first_ok:
            parts.append(f"sigma xi.xi >= alpha|xi|^2 fails (alpha={self.alpha:g}, "
                         f"measured {self.alpha_measured:g} at cell {self.worst_cell_first})")
        if not self.second_ok:
            parts.append(f"sigma^-1 xi.xi >= |xi|^2/beta fails (beta={self.beta:g}, "
                         f"measured {self.beta_measured:g} at cell {self.worst_cell_second})")
        shown = ", ".join(f"{c}:{w}" for c, w in self.violations[:8])
        more = "" if len(self.violations) <= 8 else f" (+{len(self.violations) - 8} more)"
        return "; ".join(parts) + f"; violating cells [{shown}]{more}"


def validate_sigma(sigma: MatrixField, alpha: float | None = None,
                   beta: float | None = None) -> EllipticityReport:
    """Check both inequalities of the class M(alpha, beta) in every cell.

    Missing constants are replaced by the sharp values measured on the field.
    """
    if alpha is not None and alpha <= 0 or beta is not None and beta <= 0:
        raise ValueError("alpha and beta must be positive")
    a_cell, inv_cell = lower_constants(sigma.values)
    alpha_m = float(a_cell.min())
    inv_min = float(inv_cell.min())
    beta_m = 1.0 / inv_min if inv_min > 0 else np.inf
    alpha_used = alpha_m if alpha is None else float(alpha)
    beta_used = beta_m if beta is None else float(beta)

    if alpha is None:
        bad1 = ~(a_cell > 0)
    else:
        bad1 = a_cell < alpha_used * (1 - _REL_TOL)
    if beta is None:
        bad2 = ~(inv_cell > 0)
    else:
        bad2 = inv_cell < (1 - _REL_TOL) / beta_used

    violations = [((int(i), int(j)), "first") for i, j in zip(*np.nonzero(bad1))]
    violations += [((int(i), int(j)), "second") for i, j in zip(*np.nonzero(bad2))]
    w1 = np.unravel_index(np.argmin(a_cell), a_cell.shape)
    w2 = np.unravel_index(np.argmin(inv_cell), inv_cell.shape)
    first_ok, second_ok = not bad1.any(), not bad2.any()
    passed = first_ok and second_ok
    K = max(1.0 / alpha_used, beta_used) if passed else np.inf
    return EllipticityReport(
        passed=passed, first_ok=first_ok, second_ok=second_ok,
        alpha=alpha_used, beta=beta_used, K=K,
        alpha_measured=alpha_m, beta_measured=beta_m,
        worst_cell_first=(int(w1[0]), int(w1[1])),
        worst_cell_second=(int(w2[0]), int(w2[1])),
        violations=violations)


def cell_gradient(f: np.ndarray, grid: Grid) -> np.ndarray:
    """Gradient of cell-centered data: central differences, one-sided at dirichlet edges."""
    out = np.empty((*f.shape, 2))
    for axis, h in ((0, grid.hx), (1, grid.hy)):
        if grid.periodic:
            d = (np.roll(f, -1, axis) - np.roll(f, 1, axis)) / (2 * h)
        else:
            d = np.gradient(f, h, axis=axis, edge_order=1)
        out[..., axis] = d
    return out


@dataclass(frozen=True, eq=False)
class SigmaField:
    """A validated coefficient field with its ellipticity constants.

    ``grad_b`` and ``grad_c`` override the difference-quotient gradients of
    b = s12 - s21 and c = det s when exact values are known.
    """

    sigma: MatrixField
    alpha: float
    beta: float
    grad_b: VectorField | None = None
    grad_c: VectorField | None = None

    @property
    def grid(self) -> Grid:
        return self.sigma.grid

    @property
    def values(self) -> np.ndarray:
        return self.sigma.values

    @property
    def K(self) -> float:
        return max(1.0 / self.alpha, self.beta)

    @property
    def b(self) -> ScalarField:
        s = self.values
        return ScalarField(self.grid, s[..., 0, 1] - s[..., 1, 0], "cell")

    @property
    def c(self) -> ScalarField:
        return ScalarField(self.grid, det2(self.values), "cell")

    @property
    def symmetric(self) -> bool:
        s = self.values
        return bool(np.all(s[..., 0, 1] == s[..., 1, 0]))

    def gradients(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-cell gradients of b and c, shape (nx, ny, 2) each."""
        gb = self.grad_b.values if self.grad_b is not None else cell_gradient(self.b.values, self.grid)
        gc = self.grad_c.values if self.grad_c is not None else cell_gradient(self.c.values, self.grid)
        return gb, gc

    @property
    def E(self) -> float:
        gb, gc = self.gradients()
        return float(np.hypot(gc[..., 0], gc[..., 1]).max() + np.hypot(gb[..., 0], gb[..., 1]).max())

    @property
    def E_exact(self) -> bool:
        return self.grad_b is not None and self.grad_c is not None


def make_sigma_field(sigma: MatrixField, alpha: float | None = None, beta: float | None = None,
                     *, grad_b: VectorField | None = None, grad_c: VectorField | None = None,
                     convention: bool = False) -> SigmaField:
    """Validate ``sigma`` and wrap it.

    With ``convention=True`` the constants are replaced by 1/alpha = beta = K.
    """
    report = validate_sigma(sigma, alpha, beta)
    if not report.passed:
        raise EllipticityError(report)
    a, b = report.alpha, report.beta
    if convention:
        a, b = 1.0 / report.K, report.K
    return SigmaField(sigma, a, b, grad_b, grad_c)


def derived_scalars(sigma: SigmaField) -> tuple[ScalarField, ScalarField, float]:
    """(b, c, E) with b = s12 - s21, c = det s and E = sup|grad c| + sup|grad b|."""
    return sigma.b, sigma.c, sigma.E
