import numpy as np
import pytest
import scipy.sparse as sp
from scipy.optimize import linprog

from curvcomplex.cell_complex import build_complex
from curvcomplex.energy import EnergyParams, data_cost_unsupervised
from curvcomplex.model import EQ, GE, LE, LinearModel, add_crossing_rows, build_curvature_model, \
    relevant_crossings
from curvcomplex.mps import MPSError, format_number, mps_names, read_mps, write_mps
from curvcomplex.simplex import solve


def curvature_model(n=5, seed=0, crossings=40):
    rng = np.random.default_rng(seed)
    img = rng.integers(0, 256, (n, n)).astype(float)
    cc = build_complex(n, n, 8)
    m, vm = build_curvature_model(cc, data_cost_unsupervised(img, cc), EnergyParams(10, 1000, 2))
    add_crossing_rows(m, vm, relevant_crossings(cc, vm)[:crossings])
    return m


def highs_value(m):
    A = sp.csr_matrix(m.A)
    le = np.flatnonzero(m.sense == LE)
    ge = np.flatnonzero(m.sense == GE)
    eq = np.flatnonzero(m.sense == EQ)
    A_ub = sp.vstack([A[le], -A[ge]])
    b_ub = np.concatenate([m.rhs[le], -m.rhs[ge]])
    r = linprog(m.objective, A_ub=A_ub, b_ub=b_ub, A_eq=A[eq], b_eq=m.rhs[eq],
                bounds=list(zip(m.lower, m.upper)), method="highs")
    assert r.status == 0
    return r.fun


def test_round_trip_preserves_the_model(tmp_path):
    m = curvature_model()
    path = tmp_path / "m.mps"
    write_mps(m, path)
    back = read_mps(path)
    cols, rows = mps_names(m)
    assert back.var_names == cols and back.row_names == rows
    assert np.array_equal(back.sense, m.sense)
    assert np.array_equal(back.integer, m.integer)
    assert np.array_equal(back.lower, m.lower) and np.array_equal(back.upper, m.upper)
    assert np.allclose(back.objective, m.objective, rtol=1e-10, atol=0)
    assert abs(sp.csr_matrix(back.A) - sp.csr_matrix(m.A)).max() <= 1e-10
    assert np.array_equal(back.rhs, m.rhs)
    a, b = solve(m).objective, solve(back).objective
    assert abs(a - b) <= 1e-9 * max(1.0, abs(a))


def test_names_and_markers():
    m = curvature_model(3, crossings=5)
    text = write_mps(m)
    cols, rows = mps_names(m)
    assert all(len(c) <= 8 for c in cols + rows)
    assert len(set(cols)) == len(cols) and len(set(rows)) == len(rows)
    markers = [l for l in text.splitlines() if "'MARKER'" in l]
    assert markers[0].split()[0] == "M0000000" and "'INTORG'" in markers[0]
    assert "'INTEND'" in markers[-1]
    assert len(markers) % 2 == 0
    for line in text.splitlines():
        assert len(line) <= 61
    # the integer region columns carry explicit bounds
    bounds = text.split("BOUNDS\n")[1]
    for j in np.flatnonzero(m.integer):
        assert f" {cols[j]} " in bounds


def test_long_names_become_positional():
    m = LinearModel(np.array([1.0, -2.0]), sp.csr_matrix([[1.0, 1.0]]), np.array([LE]),
                    np.array([4.0]), np.zeros(2), np.array([3.0, np.inf]),
                    np.array([True, False]), ["a_long_column", "y"], ["r"])
    cols, rows = mps_names(m)
    assert cols == ["C0000000", "C0000001"] and rows == ["r"]
    back = read_mps(write_mps(m))
    assert back.upper[1] == np.inf and back.upper[0] == 3.0
    assert solve(back).objective == pytest.approx(-8.0)


def test_format_number():
    assert format_number(3.0) == "3"
    assert format_number(-0.5) == "-0.5"
    for v in (1 / 3, -2 * np.pi * 1000, 1e-17, 123456.7891234):
        s = format_number(v)
        assert len(s) <= 12
        assert float(s) == pytest.approx(v, rel=1e-8)
    with pytest.raises(MPSError):
        format_number(np.inf)


def test_bad_input():
    with pytest.raises(MPSError):
        read_mps("NAME x\nROWS\n N OBJ\n Q R1\nENDATA\n")
    with pytest.raises(MPSError):
        read_mps("NAME x\nRANGES\nENDATA\n")


def test_relaxation_matches_highs(tmp_path):
    m = curvature_model(6, seed=3, crossings=60)
    assert solve(read_mps(write_mps(m))).objective == pytest.approx(highs_value(m), rel=1e-9,
                                                                   abs=1e-7)


def test_external_reader_agrees(tmp_path):
    highspy = pytest.importorskip("highspy")
    m = curvature_model(5, seed=1)
    path = tmp_path / "m.mps"
    write_mps(m, path)
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("solve_relaxation", True)
    h.readModel(str(path))
    lp = h.getLp()
    assert (lp.num_col_, lp.num_row_) == (m.num_vars, m.num_rows)
    h.run()
    value = h.getInfo().objective_function_value
    assert value == pytest.approx(solve(m).objective, rel=1e-9, abs=1e-7)
