import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from sigmaqc.analysis import (bmo_norm, corollary_bound, default_delta, global_checks, harnack_ratio,
                              log_det, muckenhoupt_constant)
from sigmaqc.cases import make_case
from sigmaqc.mesh import ScalarField, build_grid, cell_field

GRID = build_grid(16, 16)
cells = arrays(np.float64, (16, 16), elements=st.floats(-5, 5))
weights = arrays(np.float64, (16, 16), elements=st.floats(0.01, 100))


def test_bmo_of_x1():
    assert bmo_norm(cell_field(build_grid(64, 64), lambda x, y: x)) == pytest.approx(0.25, abs=1e-12)


@given(cells, st.floats(-10, 10))
def test_bmo_shift_invariant(v, c):
    f = ScalarField(GRID, v, "cell")
    g = ScalarField(GRID, v + c, "cell")
    assert bmo_norm(g) == pytest.approx(bmo_norm(f), abs=1e-9)


@given(cells, st.floats(0.1, 10))
def test_bmo_homogeneous(v, s):
    assert bmo_norm(ScalarField(GRID, s * v, "cell")) == pytest.approx(s * bmo_norm(ScalarField(GRID, v, "cell")),
                                                                     rel=1e-9, abs=1e-12)


@given(weights, st.sampled_from([1.5, 2.0, 3.0]))
def test_ap_at_least_one(v, p):
    assert muckenhoupt_constant(ScalarField(GRID, v, "cell"), p) >= 1.0 - 1e-12


def test_ap_constant_weight_and_nonpositive():
    assert muckenhoupt_constant(cell_field(GRID, lambda x, y: 3.0 + 0 * x)) == pytest.approx(1.0)
    w = cell_field(GRID, lambda x, y: x - 0.5)
    assert muckenhoupt_constant(w) == math.inf
    with pytest.raises(ValueError):
        muckenhoupt_constant(cell_field(GRID, lambda x, y: 1 + x), p=1.0)


def test_ap_step_weight():
    # two-valued weight split at x = 1/2: the top square gives mean(w) mean(1/w)
    w = cell_field(GRID, lambda x, y: np.where(x < 0.5, 1.25, 0.8))
    assert muckenhoupt_constant(w, 2) == pytest.approx(0.5 * (1.25 + 0.8) * 0.5 * (0.8 + 1.25))


def test_region_must_fit():
    with pytest.raises(ValueError):
        bmo_norm(cell_field(GRID, lambda x, y: x), region=(0.5, 1.5, 0, 1))
    with pytest.raises(ValueError, match="resolution"):
        bmo_norm(cell_field(GRID, lambda x, y: x), max_level=6)


def test_harnack_ratio():
    f = cell_field(GRID, lambda x, y: 1 + x)
    assert harnack_ratio(f, (0.0, 1.0, 0.0, 1.0)) == pytest.approx((1 + 31 / 32) / (1 + 1 / 32))
    with pytest.raises(ValueError, match="undefined"):
        harnack_ratio(cell_field(GRID, lambda x, y: x - 0.5))


def test_corollary_bound():
    f = cell_field(GRID, lambda x, y: 1 + x)
    H = harnack_ratio(f)
    assert corollary_bound(f, 0.5, H).holds
    with pytest.raises(ValueError, match="delta must be positive"):
        corollary_bound(f, 0.0, H)
    assert default_delta(2) == 0.5 and default_delta(3) == 0.25


def test_global_checks_laminate():
    case = make_case("laminate")
    g = case.grid(64)
    sf = case.sigma_field(g)
    rep = global_checks(case.map_field(g, sf), sf)
    assert not rep.failures
    assert rep.area_integral == pytest.approx(1.0, abs=1e-12)
    assert rep.energy_sigma == pytest.approx(2.05, abs=1e-12)
    assert rep.ap_constant == pytest.approx(1.5625, rel=1e-12)
    assert rep.sup_d_sigma <= rep.bound_M
    assert set(rep.ap_scan) == {1.5, 2.0, 3.0}


def test_log_det_hypocycloid():
    case = make_case("hypocycloid")
    g = case.grid(32)
    ld = log_det(case.map_field(g))
    cx, cy = g.cell_centers()
    assert np.allclose(ld.values, np.log(1 - cx ** 2 - cy ** 2), atol=1e-12)
