"""Acceptance criteria, one check per criterion.

Each check prints a single PASS/FAIL line with the measured numbers.
Run standalone with ``python3 tests/test_acceptance.py`` or through pytest.
"""

import math
import sys

import numpy as np
import pytest

from sigmaqc.analysis import bmo_norm, global_checks, harnack_ratio, log_det, muckenhoupt_constant
from sigmaqc.cases import CASES, make_case
from sigmaqc.coeff import make_sigma_field
from sigmaqc.conjugate import J, beltrami_coefficients, complex_dilatations, stream_function
from sigmaqc.dilatation import centered_half, dilatation_fields, map_differential, sigma_distortion
from sigmaqc.mesh import MatrixField, ScalarField, build_grid, cell_field, l2_error
from sigmaqc.solve import solve_dirichlet, weak_residual

SIZES = (32, 64, 128)
PERIODIC_CASES = [("identity", {}), ("laminate", {}), ("smooth_detvarying", {}),
                  ("constant_nonsymmetric", {"topology": "periodic"})]


def _orders(errors):
    return [math.log2(a / b) for a, b in zip(errors, errors[1:])]


def _solved(name, n, **params):
    case = make_case(name, params)
    g = case.grid(n)
    sf = case.sigma_field(g)
    return case, g, sf, case.map_field(g, sf)


def criterion_1():
    case = make_case("hypocycloid")
    g = case.grid(128)
    U = case.map_field(g)
    det = map_differential(U).det
    cx, cy = g.cell_centers()
    exact = 1 - cx ** 2 - cy ** 2
    det_err = float(np.max(np.abs(det - exact) / np.abs(exact)))
    ang = np.linspace(0, 2 * np.pi, 17)
    px, py = 0.5 * np.cos(ang), 0.5 * np.sin(ang)
    d_half = sigma_distortion(case.exact_du_fn(px, py), np.eye(2))
    half_err = float(np.max(np.abs(d_half - 5 / 3)))
    r = np.linspace(0, 0.7, 200)
    monotone = True
    for a in ang:
        d = sigma_distortion(case.exact_du_fn(r * np.cos(a), r * np.sin(a)), np.eye(2))
        monotone &= bool(np.all(np.diff(d) > 0))
    rep = dilatation_fields(U, case.sigma_field(g))
    order = np.argsort((cx ** 2 + cy ** 2).ravel(), kind="stable")
    monotone &= bool(np.all(np.diff(rep.d_sigma.values.ravel()[order]) >= -1e-12))
    ok = det_err <= 1e-10 and half_err <= 1e-10 and monotone
    return ok, (f"hypocycloid: det rel err {det_err:.2e}, |d(r=1/2) - 5/3| {half_err:.2e}, "
                f"radially increasing {monotone}")


def criterion_2():
    case, g, sf, U = _solved("laminate", 128)
    rep = dilatation_fields(U, sf)
    ds = rep.d_sigma.values
    spread = float((ds.max() - ds.min()) / ds.mean())
    w1, w2 = float(rep.w1.values.mean()), float(rep.w2.values.mean())
    H = harnack_ratio(rep.d_sigma, centered_half(g.domain))
    ok = (spread <= 0.02 and abs(ds.mean() - 1.025) <= 0.02 and abs(w1 - 1.25) <= 0.02
          and abs(w2 - 0.8) <= 0.02 and H <= 1.05)
    return ok, (f"laminate 128^2: d_sigma {ds.mean():.6f} (spread {spread:.1e}), w1 {w1:.6f}, "
                f"w2 {w2:.6f}, H {H:.6f}")


def criterion_3():
    parts, ok = [], True
    for name, params in PERIODIC_CASES:
        _, g, sf, U = _solved(name, 64, **params)
        rep = global_checks(U, sf)
        area_dev = abs(rep.area_integral - 1.0)
        slack = rep.trace_integral + 1e-6 - rep.energy_sigma
        this = area_dev <= 1e-6 and slack >= 0
        if name == "laminate":
            this &= abs(rep.energy_sigma - 2.05) <= 0.02 and rep.energy_sigma <= 2 * sf.K
        ok &= this
        parts.append(f"{name} area dev {area_dev:.1e} energy {rep.energy_sigma:.4f} "
                     f"<= trace {rep.trace_integral:.4f}")
    return ok, "periodic chain: " + "; ".join(parts)


def criterion_4():
    mu, nu = complex_dilatations(np.diag([2.0, 0.5]))
    g = build_grid(8, 8)
    lam = beltrami_coefficients(make_sigma_field(MatrixField(g, np.diag([2.0, 0.5]))))
    ok = abs(mu + 1 / 3) <= 1e-15 and abs(nu) <= 1e-15
    ok &= abs(lam.k_ess - 1 / 3) <= 1e-15 and abs(lam.k_ess - (2 - 1) / (2 + 1)) <= 1e-15
    failing = []
    for name in CASES:
        case = make_case(name)
        sf = case.sigma_field(case.grid(32))
        k = beltrami_coefficients(sf).k_ess
        bound = (sf.K - 1) / (sf.K + 1)
        if not k <= bound + 1e-12:
            failing.append(f"{name} k_ess {k:.4f} > {bound:.4f} (K={sf.K:g})")
    ok &= not failing
    detail = f"diag(2,1/2): mu {mu.real:+.16f}, |nu| {abs(nu):.1e}, k_ess {lam.k_ess:.16f}"
    return ok, detail + ("; all cases within bound" if not failing else "; " + "; ".join(failing))


def criterion_5():
    errs = []
    for n in SIZES:
        g = build_grid(n, n)
        sf = make_sigma_field(MatrixField(g, np.eye(2)))
        pair = stream_function(sf, solve_dirichlet(sf, lambda x, y: x * x - y * y))
        # stream function is normalized to zero mean; 2 x1 x2 has mean 1/2 on the unit square
        errs.append(l2_error(pair.u_tilde, lambda x, y: 2 * x * y - 0.5))
    orders = _orders(errs)
    # 2 x1 x2 is bilinear and is reproduced exactly; then no rate is measurable
    converged = all(o >= 1.9 for o in orders) or max(errs) <= 1e-10

    g = build_grid(128, 128)
    x, y = g.cell_centers()
    th = 0.7 * np.sin(2 * np.pi * x) * np.cos(np.pi * y)
    k = 1.5 + 0.5 * x
    c, s = np.cos(th), np.sin(th)
    R = np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)
    D = np.zeros_like(R)
    D[..., 0, 0], D[..., 1, 1] = k, 1 / k
    sf = make_sigma_field(MatrixField(g, R @ D @ np.swapaxes(R, -1, -2)))
    pair = stream_function(sf, solve_dirichlet(sf, lambda x, y: x + 0.3 * y * y))
    res = weak_residual(sf, pair.u_tilde)
    ok = converged and res <= 1e-8
    return ok, (f"stream function L2 errors {', '.join(f'{e:.1e}' for e in errs)} "
                f"(orders {', '.join(f'{o:.2f}' for o in orders)}); "
                f"det-1 symmetric sigma weak_residual(u_tilde) {res:.1e}")


def criterion_6():
    res = []
    for n in SIZES:
        _, g, sf, U = _solved("smooth_detvarying", n, lam=0.3)
        rep = dilatation_fields(U, sf)
        res.append(max(weak_residual(sf, rep.w1.to_nodes(), rep.B1),
                       weak_residual(sf, rep.w2.to_nodes(), rep.B2)))
    monotone = all(a > b for a, b in zip(res, res[1:]))
    _, g, sf, U = _solved("constant_nonsymmetric", 128, t=1.0)
    rep = dilatation_fields(U, sf)
    cn = max(weak_residual(sf, rep.w1.to_nodes()), weak_residual(sf, rep.w2.to_nodes()))
    zero = bool(np.all(rep.B1.values == 0) and np.all(rep.B2.values == 0))
    ok = monotone and cn <= 1e-6 and zero
    return ok, (f"smooth_detvarying residuals {', '.join(f'{r:.1e}' for r in res)}; "
                f"constant_nonsymmetric residual {cn:.1e}, B identically zero {zero}")


def criterion_7():
    worst = {}
    for name in CASES:
        _, g, sf, U = _solved(name, 64)
        worst[name] = dilatation_fields(U, sf).identity_residual
    m = max(worst.values())
    return m <= 1e-12, f"decomposition identity max residual {m:.1e} over {len(worst)} cases"


def criterion_8():
    parts, ok = [], True
    for name in CASES:
        _, g, sf, U = _solved(name, 64)
        if not sf.E > 0:
            continue
        rep = dilatation_fields(U, sf)
        bound = (1 + sf.beta) * sf.E / sf.alpha
        bmax = max(rep.B1.norm().max(), rep.B2.norm().max())
        ok &= bool(bmax <= bound + 1e-12)
        parts.append(f"{name} max|B| {bmax:.3f} <= {bound:.3f}")
    return ok and bool(parts), "drift bound: " + "; ".join(parts)


def criterion_9():
    b = bmo_norm(cell_field(build_grid(64, 64), lambda x, y: x))
    _, g, sf, U = _solved("laminate", 128)
    ap = muckenhoupt_constant(ScalarField(g, map_differential(U).det, "cell"), 2)
    case = make_case("hypocycloid")
    vals = [bmo_norm(log_det(case.map_field(case.grid(n))), (-0.5, 0.5, -0.5, 0.5)) for n in (64, 128, 256)]
    drift = [abs(b2 - b1) / b1 for b1, b2 in zip(vals, vals[1:])]
    ok = abs(b - 0.25) <= 1e-6 and abs(ap - 1.5625) <= 0.02 * 1.5625 and max(drift) <= 0.05
    return ok, (f"bmo(x1) {b:.8f}; laminate A_2 {ap:.6f}; hypocycloid bmo(log det) "
                f"{', '.join(f'{v:.5f}' for v in vals)} (rel changes {', '.join(f'{d:.1e}' for d in drift)})")


def criterion_10():
    errs = []
    for n in SIZES:
        g = build_grid(n, n)
        u = solve_dirichlet(make_sigma_field(MatrixField(g, np.eye(2))), lambda x, y: x * x - y * y)
        errs.append(l2_error(u, lambda x, y: x * x - y * y))
    orders = _orders(errs)
    g = build_grid(64, 64)
    sf = make_sigma_field(MatrixField(g, np.eye(2) + J))
    x, y = g.node_coords()
    aff = lambda x, y: 0.3 + 1.7 * x - 0.9 * y
    dev = float(np.max(np.abs(solve_dirichlet(sf, aff).values - aff(x, y))))
    ok = all(abs(o - 2.0) <= 0.2 for o in orders) and dev <= 1e-12
    return ok, (f"Laplace L2 errors {', '.join(f'{e:.2e}' for e in errs)} "
                f"(orders {', '.join(f'{o:.3f}' for o in orders)}); affine data under I+J max dev {dev:.1e}")


CRITERIA = {
    1: ("hypocycloid oracle", criterion_1),
    2: ("laminate cell problem", criterion_2),
    3: ("periodic area and energy chain", criterion_3),
    4: ("Beltrami coefficients", criterion_4),
    5: ("conjugacy", criterion_5),
    6: ("drift equation for w", criterion_6),
    7: ("decomposition identity", criterion_7),
    8: ("drift bound", criterion_8),
    9: ("analysis estimators", criterion_9),
    10: ("solver convergence", criterion_10),
}


def line(num: int) -> tuple[bool, str]:
    title, fn = CRITERIA[num]
    ok, detail = fn()
    return ok, f"criterion {num:2d} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"


@pytest.mark.parametrize("num", sorted(CRITERIA))
def test_criterion(num, capsys):
    ok, text = line(num)
    with capsys.disabled():
        print("\n" + text)
    assert ok, text


if __name__ == "__main__":
    results = [line(n) for n in sorted(CRITERIA)]
    for _, text in results:
        print(text)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
