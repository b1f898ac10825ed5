import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from curvcomplex.cell_complex import build_complex
from curvcomplex.energy import DataCost, EnergyParams
from curvcomplex.model import LE, build_curvature_model
from curvcomplex.simplex import (DEFAULT_ITER_CAP, DualSimplex, Status, iteration_cap,
                                 resolve_with_bounds, solve)
from instances import beale, make_model, random_lp
from oracles import lp_vertex_optimum


def test_random_lps_match_vertex_enumeration():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for k in range(20):
        n = 2 + k % 9          # 2 to 10 variables
        data = random_lp(rng, n, feasible=k % 7 != 3)
        c, A_eq, b_eq, A_ub, b_ub, lo, up = data
        ge = [0] if k % 2 else []
        sol = solve(make_model(c, A_eq, b_eq, A_ub, b_ub, lo, up, ge_rows=ge))
        ref = lp_vertex_optimum(c, A_eq, b_eq, A_ub, b_ub, lo, up)
        if ref is None:
            assert sol.status == Status.INFEASIBLE
            continue
        assert sol.status == Status.OPTIMAL
        worst = max(worst, abs(sol.objective - ref))
        assert sol.max_row_violation <= 1e-9 and sol.max_bound_violation <= 1e-9
    assert worst <= 1e-8


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 31 - 1))
def test_random_lps_match_highs(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 15))
    c, A_eq, b_eq, A_ub, b_ub, lo, up = random_lp(rng, n, feasible=rng.random() < 0.85)
    # some free and half-bounded columns
    lo[rng.random(n) < 0.2] = -np.inf
    up[rng.random(n) < 0.2] = np.inf
    ref = linprog(c, A_ub, b_ub, A_eq if len(A_eq) else None, b_eq if len(A_eq) else None,
                  bounds=list(zip(lo, up)), method="highs")
    sol = solve(make_model(c, A_eq, b_eq, A_ub, b_ub, lo, up))
    if ref.status == 2:
        assert sol.status == Status.INFEASIBLE
    elif ref.status == 3:
        assert sol.status == Status.UNBOUNDED
    else:
        assert sol.status == Status.OPTIMAL
        assert sol.objective == pytest.approx(ref.fun, abs=1e-7, rel=1e-9)


def test_beale_terminates():
    c, A_ub, b_ub = beale()
    ref = linprog(c, A_ub, b_ub, method="highs")
    for perturb in (True, False):
        sol = solve(make_model(c, A_ub=A_ub, b_ub=b_ub), perturb=perturb)
        assert sol.status == Status.OPTIMAL
        assert sol.objective == pytest.approx(ref.fun, abs=1e-9)
        assert sol.iterations < 100


def test_trivial_cases():
    box = make_model([1.0], lower=[0], upper=[1])
    assert solve(box).objective == 0
    infeasible = make_model([1.0, 1.0], A_eq=[[0, 0]], b_eq=[1], lower=[0, 0], upper=[1, 1])
    assert solve(infeasible).status == Status.INFEASIBLE
    unbounded = make_model([-1.0, 0], A_ub=[[1, -1]], b_ub=[0])
    assert solve(unbounded).status == Status.UNBOUNDED
    free = make_model([1.0, -1.0], A_eq=[[1, 1]], b_eq=[2], lower=[-np.inf, -np.inf],
                      upper=[np.inf, 3])
    sol = solve(free)
    assert sol.status == Status.OPTIMAL and sol.objective == pytest.approx(-4)


def test_iteration_cap(monkeypatch):
    assert iteration_cap() == DEFAULT_ITER_CAP
    monkeypatch.setenv("CURVCOMPLEX_ITER_CAP", "1")
    assert iteration_cap() == 1
    cc = build_complex(2, 2, 8)
    rng = np.random.default_rng(0)
    m, _ = build_curvature_model(cc, DataCost(rng.normal(size=16)), EnergyParams(0.2, 1))
    assert solve(m).status == Status.ITERATION_LIMIT


def curvature_instance(seed=0):
    cc = build_complex(2, 2, 8)
    rng = np.random.default_rng(seed)
    m, vm = build_curvature_model(cc, DataCost(rng.normal(-0.3, 2, 16)), EnergyParams(0.3, 1.2))
    return cc, m, vm


def test_resolve_without_changes():
    _, m, _ = curvature_instance()
    first = solve(m)
    again = resolve_with_bounds(m, first)
    assert again.objective == pytest.approx(first.objective, abs=1e-12)
    assert again.iterations == 0


def test_resolve_after_harmless_tightening():
    _, m, _ = curvature_instance(1)
    first = solve(m)
    x = first.primal
    at_lower = np.flatnonzero((x == m.lower) & (m.upper > m.lower + 0.5))
    j = int(at_lower[0])
    again = resolve_with_bounds(m, first, [(j, m.lower[j], m.lower[j] + 0.5)])
    assert again.objective == pytest.approx(first.objective, abs=1e-12)


@pytest.mark.parametrize("seed", range(3))
def test_fixing_regions_does_not_lower_objective(seed):
    _, m, vm = curvature_instance(seed)
    relaxed = solve(m)
    labels = (relaxed.primal[vm.region_vars] >= 0.5).astype(float)
    fixed = [(int(v), lab, lab) for v, lab in zip(vm.region_vars, labels)]
    sol = resolve_with_bounds(m, relaxed, fixed)
    assert sol.status == Status.OPTIMAL
    assert sol.objective >= relaxed.objective - 1e-9
    cold = solve(m)
    assert cold.objective == pytest.approx(sol.objective, abs=1e-9)


def test_appended_rows_warm_start():
    c, A_eq, b_eq, A_ub, b_ub, lo, up = random_lp(np.random.default_rng(5), 6)
    m = make_model(c, A_eq, b_eq, A_ub, b_ub, lo, up)
    first = solve(m)
    row = np.ones(6)
    m.add_rows(sp.csr_matrix(row), LE, [float(row @ first.primal) - 0.5], ["cut"])
    warm = resolve_with_bounds(m, first)
    cold = solve(m)
    assert warm.status == cold.status
    if cold.status == Status.OPTIMAL:
        assert warm.objective == pytest.approx(cold.objective, abs=1e-9)
        assert warm.objective >= first.objective - 1e-9


def test_deterministic():
    _, m, _ = curvature_instance(4)
    a, b = solve(m), solve(m)
    assert a.iterations == b.iterations
    assert np.array_equal(a.primal, b.primal)
    assert np.array_equal(a.basis.head, b.basis.head)


def test_solver_object_reuse():
    _, m, _ = curvature_instance(2)
    s = DualSimplex(m)
    first = s.solve()
    assert first.optimal
    assert DualSimplex(m).solve(first.basis).iterations == 0
