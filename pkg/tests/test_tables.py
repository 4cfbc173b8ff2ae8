import numpy as np
import pytest

from sigmaqc import tables
from sigmaqc.cases import make_case
from sigmaqc.mesh import build_grid, node_field


def test_node_table_format():
    g = build_grid(2, 2)
    text = tables.node_table(node_field(g, lambda x, y: x + 0.1))
    lines = text.splitlines()
    assert lines[0] == "x,y,value" and len(lines) == 10
    assert lines[1] == "0,0,0.10000000000000001"


def test_sigma_table_round_trip(tmp_path):
    case = make_case("kneser_rado_convex")
    g = case.grid(8)
    s = case.sigma_field(g).values
    path = tmp_path / "s.csv"
    tables.sigma_table(g, s, path)
    back = tables.read_sigma_table(path, g)
    assert np.array_equal(back.values, s)


def test_sigma_table_shuffled_rows():
    g = build_grid(3, 3)
    s = np.random.default_rng(1).normal(size=(3, 3, 2, 2))
    lines = tables.sigma_table(g, s).splitlines()
    text = "\n".join([lines[0]] + lines[1:][::-1]) + "\n"
    assert np.array_equal(tables.read_sigma_table(text, g).values, s)


def test_sigma_table_errors():
    g = build_grid(3, 3)
    with pytest.raises(ValueError, match="header"):
        tables.read_sigma_table("a,b\n1,2\n", g)
    s = np.zeros((3, 3, 2, 2))
    text = tables.sigma_table(g, s)
    with pytest.raises(ValueError, match="rows"):
        tables.read_sigma_table(text, build_grid(4, 4))
    dup = text.splitlines()
    dup[2] = dup[1]
    with pytest.raises(ValueError, match="exactly once"):
        tables.read_sigma_table("\n".join(dup) + "\n", g)


def test_beltrami_table_header():
    g = build_grid(2, 2)
    text = tables.beltrami_table(g, np.zeros((2, 2), complex), np.zeros((2, 2), complex))
    assert text.splitlines()[0] == "cx,cy,mu_re,mu_im,nu_re,nu_im"
