"""Built-in scenarios: coefficient fields, boundary data, exact maps and oracle values."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .coeff import SigmaField, make_sigma_field
from .dilatation import sigma_distortion
from .mesh import (DIRICHLET, PERIODIC, UNIT_CELL, Grid, MatrixField, ScalarField, VectorField,
                   build_grid)
from .solve import MapField, solve_cell_problem, solve_dirichlet

PROBE_N = 16

Fn = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class CaseBundle:
    name: str
    params: dict
    topology: str
    domain: tuple
    sigma_fn: Fn                       # (x, y) -> (..., 2, 2)
    grad_b_fn: Fn | None = None        # (x, y) -> (..., 2), exact gradients if known
    grad_c_fn: Fn | None = None
    boundary_fn: Callable | None = None     # (x, y) -> (u1, u2) on dirichlet boundaries
    exact_fn: Callable | None = None        # (x, y) -> (u1, u2)
    exact_du_fn: Fn | None = None           # (x, y) -> (..., 2, 2), rows grad u1, grad u2
    d_sigma_fn: Fn | None = None            # closed form of d_sigma when known
    analytic: bool = False                  # sample exact_fn instead of solving
    oracle: dict = field(default_factory=dict)
    tol_base: float = 1e-10
    description: str = ""

    def grid(self, n: int) -> Grid:
        return build_grid(n, n, self.domain, self.topology)

    def sigma_field(self, grid: Grid, **kw) -> SigmaField:
        x, y = grid.cell_centers()
        s = np.broadcast_to(self.sigma_fn(x, y), (*x.shape, 2, 2))
        gb = VectorField(grid, np.broadcast_to(self.grad_b_fn(x, y), (*x.shape, 2))) if self.grad_b_fn else None
        gc = VectorField(grid, np.broadcast_to(self.grad_c_fn(x, y), (*x.shape, 2))) if self.grad_c_fn else None
        return make_sigma_field(MatrixField(grid, s), grad_b=gb, grad_c=gc, **kw)

    def map_field(self, grid: Grid, sigma: SigmaField | None = None) -> MapField:
        """The map U on ``grid``: sampled when analytic, otherwise solved."""
        if self.analytic:
            x, y = grid.node_coords()
            u1, u2 = self.exact_fn(x, y)
            cx, cy = grid.cell_centers()
            du = MatrixField(grid, self.exact_du_fn(cx, cy))
            return MapField(ScalarField(grid, u1), ScalarField(grid, u2), du)
        sigma = sigma if sigma is not None else self.sigma_field(grid)
        if grid.periodic:
            return solve_cell_problem(sigma)
        u1 = solve_dirichlet(sigma, lambda x, y: self.boundary_fn(x, y)[0])
        u2 = solve_dirichlet(sigma, lambda x, y: self.boundary_fn(x, y)[1])
        return MapField(u1, u2)

    def tolerance(self, n: int) -> float:
        """Tolerance schedule for oracle comparisons on an n x n grid."""
        return self.tol_base * (32.0 / n) ** 2 if self.tol_base > 1e-9 else self.tol_base

    def self_check(self, n_points: int = 100, seed: int = 0) -> float:
        """Max deviation of d_sigma from oracle DU and sigma against its closed form."""
        if self.exact_du_fn is None or self.d_sigma_fn is None:
            return 0.0
        rng = np.random.default_rng(seed)
        x0, x1, y0, y1 = self.domain
        x = rng.uniform(x0, x1, n_points)
        y = rng.uniform(y0, y1, n_points)
        s = np.broadcast_to(self.sigma_fn(x, y), (n_points, 2, 2))
        du = np.broadcast_to(self.exact_du_fn(x, y), (n_points, 2, 2))
        return float(np.max(np.abs(sigma_distortion(du, s) - self.d_sigma_fn(x, y))))


def _const(m) -> Fn:
    m = np.asarray(m, dtype=float)
    return lambda x, y: np.broadcast_to(m, (*np.shape(x), *m.shape))


def _zero_vec(x, y):
    return np.zeros((*np.shape(x), 2))


def _identity_map(x, y):
    return x, y


def _identity_du(x, y):
    return np.broadcast_to(np.eye(2), (*np.shape(x), 2, 2))


def identity(topology: str = PERIODIC) -> CaseBundle:
    return CaseBundle(
        "identity", {"topology": topology}, topology, UNIT_CELL, _const(np.eye(2)),
        grad_b_fn=_zero_vec, grad_c_fn=_zero_vec, boundary_fn=_identity_map,
        exact_fn=_identity_map, exact_du_fn=_identity_du,
        d_sigma_fn=lambda x, y: np.ones(np.shape(x)),
        oracle={"d_sigma": 1.0, "w1": 1.0, "w2": 1.0, "det": 1.0, "energy": 2.0, "area": 1.0},
        description="sigma = I, U = x")


def hypocycloid(half_width: float = 0.7) -> CaseBundle:
    hw = float(half_width)
    if not 0 < hw < 1 / np.sqrt(2):
        raise ValueError("half_width must lie in (0, 1/sqrt(2)) so the square stays inside the unit disk")

    def exact(x, y):
        return x + 0.5 * (x * x - y * y), y - x * y

    def du(x, y):
        x, y = np.asarray(x, float), np.asarray(y, float)
        return np.stack([np.stack([1 + x, -y], -1), np.stack([-y, 1 - x], -1)], -2)

    def dist(x, y):
        r2 = x * x + y * y
        return (1 + r2) / (1 - r2)

    return CaseBundle(
        "hypocycloid", {"half_width": hw}, DIRICHLET, (-hw, hw, -hw, hw), _const(np.eye(2)),
        grad_b_fn=_zero_vec, grad_c_fn=_zero_vec, boundary_fn=exact, exact_fn=exact,
        exact_du_fn=du, d_sigma_fn=dist, analytic=True,
        oracle={"det_fn": lambda x, y: 1 - x * x - y * y, "d_sigma_at_half": 5.0 / 3.0},
        description="harmonic map z + conj(z)^2 / 2, Jacobian 1 - |z|^2")


def laminate(a1: float = 2.0, a2: float = 0.5) -> CaseBundle:
    a1, a2 = float(a1), float(a2)
    if a1 <= 0 or a2 <= 0:
        raise ValueError("laminate phases must be positive")
    inv_mean = 0.5 / a1 + 0.5 / a2
    H = 1.0 / inv_mean

    def a(x):
        return np.where(np.mod(x, 1.0) < 0.5, a1, a2)

    def sigma(x, y):
        av = np.broadcast_to(a(x), np.shape(x)).astype(float)
        s = np.zeros((*np.shape(x), 2, 2))
        s[..., 0, 0], s[..., 1, 1] = av, 1.0 / av
        return s

    def primitive(x):
        # int_0^x 1/a over one period, extended so U - x is periodic
        xm = np.mod(x, 1.0)
        base = np.floor(x) * inv_mean
        return base + np.where(xm < 0.5, xm / a1, 0.5 / a1 + (xm - 0.5) / a2)

    def exact(x, y):
        return H * primitive(x), y

    def du(x, y):
        out = np.zeros((*np.shape(x), 2, 2))
        out[..., 0, 0] = H / a(x)
        out[..., 1, 1] = 1.0
        return out

    d_sigma = (H * H + 1) / (2 * H)
    return CaseBundle(
        "laminate", {"a1": a1, "a2": a2}, PERIODIC, UNIT_CELL, sigma,
        grad_b_fn=_zero_vec, grad_c_fn=_zero_vec, exact_fn=exact, exact_du_fn=du,
        d_sigma_fn=lambda x, y: np.full(np.shape(x), d_sigma),
        oracle={"H": H, "d_sigma": d_sigma, "w1": 1.0 / H, "w2": H,
                "energy": (H * H + 1) * inv_mean, "area": 1.0,
                "ap_p2": 0.5 * (a1 + a2) / H, "det_values": (H / a1, H / a2)},
        description="layers diag(a, 1/a) with a in {a1, a2} on half cells")


def constant_nonsymmetric(t: float = 1.0, eps: float = 0.2, topology: str = DIRICHLET) -> CaseBundle:
    t, eps = float(t), float(eps)
    s = np.array([[1.0, -t], [t, 1.0]])
    if topology == PERIODIC:
        return CaseBundle(
            "constant_nonsymmetric", {"t": t, "topology": topology}, PERIODIC, UNIT_CELL,
            _const(s), grad_b_fn=_zero_vec, grad_c_fn=_zero_vec, exact_fn=_identity_map,
            exact_du_fn=_identity_du,
            d_sigma_fn=lambda x, y: np.ones(np.shape(x)),
            oracle={"d_sigma": 1.0, "w1": 1.0, "w2": 1.0, "energy": 2.0, "area": 1.0},
            description="sigma = I + tJ on the unit cell, U = x")
    if not 2 * abs(eps) * np.sqrt(0.5) < 1:
        raise ValueError("eps too large: the boundary map is not sense preserving")

    # z + eps conj(z)^2 is harmonic; the constant antisymmetric part drops out of div.
    def exact(x, y):
        return x + eps * (x * x - y * y), y - 2 * eps * x * y

    def du(x, y):
        x, y = np.asarray(x, float), np.asarray(y, float)
        return np.stack([np.stack([1 + 2 * eps * x, -2 * eps * y], -1),
                         np.stack([-2 * eps * y, 1 - 2 * eps * x], -1)], -2)

    def dist(x, y):
        q = 4 * eps * eps * (x * x + y * y)
        return (1 + q) / (1 - q)

    return CaseBundle(
        "constant_nonsymmetric", {"t": t, "eps": eps, "topology": topology}, DIRICHLET,
        (-0.5, 0.5, -0.5, 0.5), _const(s), grad_b_fn=_zero_vec, grad_c_fn=_zero_vec,
        boundary_fn=exact, exact_fn=exact, exact_du_fn=du, d_sigma_fn=dist,
        oracle={"b": -2 * t, "c": 1 + t * t, "E": 0.0},
        description="sigma = I + tJ, Dirichlet data of z + eps conj(z)^2")


def smooth_detvarying(lam: float = 0.3, kappa: float = 1.5, theta: float = 0.3) -> CaseBundle:
    lam, kappa, theta = float(lam), float(kappa), float(theta)
    if not abs(lam) < 1:
        raise ValueError("|lam| must be < 1 so that det sigma stays positive")
    rot = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    s0 = rot @ np.diag([kappa, 1.0 / kappa]) @ rot.T
    tp = 2 * np.pi

    def c(x, y):
        return 1 + lam * np.sin(tp * x) * np.sin(tp * y)

    def sigma(x, y):
        return np.sqrt(c(x, y))[..., None, None] * s0

    def grad_c(x, y):
        return np.stack([tp * lam * np.cos(tp * x) * np.sin(tp * y),
                         tp * lam * np.sin(tp * x) * np.cos(tp * y)], -1)

    return CaseBundle(
        "smooth_detvarying", {"lam": lam, "kappa": kappa, "theta": theta}, PERIODIC, UNIT_CELL,
        sigma, grad_b_fn=_zero_vec, grad_c_fn=grad_c,
        oracle={"E": tp * abs(lam), "area": 1.0},
        description="symmetric sigma = sqrt(c) R diag(kappa, 1/kappa) R^T, det = c")


def kneser_rado_convex(shear: float = 0.0, amp: float = 0.3, skew: float = 0.4) -> CaseBundle:
    shear, amp, skew = float(shear), float(amp), float(skew)
    pi = np.pi

    def b(x, y):
        return skew * np.sin(pi * x) * np.sin(pi * y)

    def sigma(x, y):
        bv = b(x, y)
        s = np.zeros((*np.shape(bv), 2, 2))
        s[..., 0, 0] = 1 + amp * x
        s[..., 1, 1] = 1 + amp * y
        s[..., 0, 1] = 0.5 * bv
        s[..., 1, 0] = -0.5 * bv
        return s

    def grad_b(x, y):
        return np.stack([skew * pi * np.cos(pi * x) * np.sin(pi * y),
                         skew * pi * np.sin(pi * x) * np.cos(pi * y)], -1)

    def grad_c(x, y):
        # c = (1 + amp x)(1 + amp y) + b^2 / 4
        gb = grad_b(x, y)
        bv = b(x, y)[..., None]
        return np.stack([amp * (1 + amp * y), amp * (1 + amp * x)], -1) + 0.5 * bv * gb

    def boundary(x, y):
        return x + shear * y, y

    return CaseBundle(
        "kneser_rado_convex", {"shear": shear, "amp": amp, "skew": skew}, DIRICHLET, UNIT_CELL,
        sigma, grad_b_fn=grad_b, grad_c_fn=grad_c, boundary_fn=boundary,
        description="non-symmetric variable sigma, boundary data of an affine map onto a convex set")


CASES = {
    "identity": identity,
    "hypocycloid": hypocycloid,
    "laminate": laminate,
    "constant_nonsymmetric": constant_nonsymmetric,
    "smooth_detvarying": smooth_detvarying,
    "kneser_rado_convex": kneser_rado_convex,
}


def make_case(name: str, params: dict | None = None, **kw) -> CaseBundle:
    if name not in CASES:
        raise ValueError(f"unknown case {name!r}; known: {', '.join(CASES)}")
    params = {**(params or {}), **kw}
    try:
        case = CASES[name](**params)
    except TypeError as exc:
        raise ValueError(f"bad parameters for case {name!r}: {exc}") from exc
    case.sigma_field(case.grid(PROBE_N))  # raises EllipticityError on bad parameters
    return case
