import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pkanrelax.errors import Infeasible
from pkanrelax.gam import gam_relaxation_min, random_mpgam, to_pkan
from pkanrelax.oracles import multistart_min
from pkanrelax.pkan import PKAN, build_relaxation, generate_random
from pkanrelax.poly import Interval, X
from pkanrelax.solver import LinearProgram, SolveReport, lp_solve, relative_gap, solve_relaxation

from lp_oracle import vertex_min


def random_lp(rng, n_max=8, m_max=12, feasible=True):
    n = int(rng.integers(1, n_max + 1))
    m = int(rng.integers(0, m_max + 1))
    lb = rng.uniform(-2, 0, n)
    ub = lb + rng.uniform(0, 3, n)
    A = rng.normal(size=(m, n))
    if feasible:
        x0 = lb + (ub - lb) * rng.random(n)
        b = A @ x0 + rng.uniform(0, 1, m)
    else:
        b = rng.normal(size=m)
    return LinearProgram(rng.normal(size=n), lb, ub, A, b)


class TestLinearProgram:
    def test_single_bound(self):
        r = lp_solve(LinearProgram([1.0], [0.0], [10.0], [[-1.0]], [-3.0]))
        assert r.value == pytest.approx(3.0) and r.x[0] == pytest.approx(3.0)

    def test_two_vars(self):
        r = lp_solve(LinearProgram([1.0, 1.0], [0, 0], [1, 1], [[-1.0, -1.0]], [-1.5]))
        assert r.value == pytest.approx(1.5)

    def test_no_rows(self):
        r = lp_solve(LinearProgram([1.0, -2.0], [0, -1], [1, 3], np.zeros((0, 2)), []))
        assert r.value == pytest.approx(-6.0)

    def test_infeasible(self):
        with pytest.raises(Infeasible):
            lp_solve(LinearProgram([1.0], [0.0], [1.0], [[1.0]], [-1.0]))

    def test_bounds_validated(self):
        with pytest.raises(ValueError):
            LinearProgram([1.0], [0.0], [math.inf], [[1.0]], [1.0])
        with pytest.raises(ValueError):
            LinearProgram([1.0], [1.0], [0.0], [[1.0]], [1.0])

    def test_degenerate_cycling_candidate(self):
        # classic degenerate instance; Bland fallback must terminate
        c = [-0.75, 150, -0.02, 6]
        A = [[0.25, -60, -0.04, 9], [0.5, -90, -0.02, 3], [0, 0, 1, 0]]
        b = [0, 0, 1]
        r = lp_solve(LinearProgram(c, [0] * 4, [100] * 4, A, b))
        assert r.value == pytest.approx(vertex_min(c, [0] * 4, [100] * 4, A, b), abs=1e-9)

    def test_random_against_vertices(self):
        rng = np.random.default_rng(101)
        for _ in range(40):
            lp = random_lp(rng, n_max=5, m_max=7, feasible=bool(rng.integers(0, 2)))
            ref = vertex_min(lp.c, lp.lb, lp.ub, lp.A, lp.b)
            if ref is None:
                with pytest.raises(Infeasible):
                    lp_solve(lp)
            else:
                r = lp_solve(lp)
                assert r.value == pytest.approx(ref, abs=1e-7)
                assert np.all(lp.A @ r.x <= lp.b + 1e-7)

    @given(st.integers(0, 10**6))
    def test_property_feasible_optimal(self, seed):
        rng = np.random.default_rng(seed)
        lp = random_lp(rng, n_max=4, m_max=5)
        r = lp_solve(lp)
        assert np.all(r.x >= lp.lb) and np.all(r.x <= lp.ub)
        assert np.all(lp.A @ r.x <= lp.b + 1e-7)
        assert r.value == pytest.approx(vertex_min(lp.c, lp.lb, lp.ub, lp.A, lp.b), abs=1e-7)


class TestRelativeGap:
    def test_equal(self):
        assert relative_gap(5.0, 5.0) == 0.0

    def test_zero_vs_one(self):
        assert relative_gap(0.0, 1.0) == pytest.approx(100.0)

    def test_ten_percent(self):
        assert relative_gap(-1.1, -1.0) == pytest.approx(10.0)

    def test_zero_reference_is_finite(self):
        assert math.isfinite(relative_gap(1e-3, 0.0))


def chain(polys, box=(-1.0, 1.0)):
    return PKAN((1,) * (len(polys) + 1), tuple(((p,),) for p in polys), (Interval(*box),))


class TestSolveRelaxation:
    def test_square_chain(self):
        rep = solve_relaxation(build_relaxation(chain([X**2])))
        assert rep.status == "optimal"
        assert abs(rep.lower_bound) <= 1e-5

    def test_convex_increasing_chain_matches_grid(self):
        net = chain([X**2 + X, X + 0.5 * X**2], box=(-1.0, 1.0))
        rep = solve_relaxation(build_relaxation(net), feas_tol=1e-8)
        xs = np.linspace(-1, 1, 200001)
        assert rep.lower_bound == pytest.approx(net(xs[:, None]).min(), abs=1e-6)

    def test_arguments_validated(self):
        rp = build_relaxation(chain([X]))
        with pytest.raises(ValueError):
            solve_relaxation(rp, feas_tol=0.0)
        with pytest.raises(ValueError):
            solve_relaxation(rp, max_iters=0)

    def test_iteration_limit_still_valid(self):
        net = generate_random(4, 4, 4, 4, seed=2)
        full = solve_relaxation(build_relaxation(net))
        short = solve_relaxation(build_relaxation(net), max_iters=3)
        assert short.status == "iteration_limit" and short.iterations == 3
        assert short.lower_bound <= full.lower_bound + 1e-9

    def test_monotone_history_and_cut_validity(self):
        rng = np.random.default_rng(5)
        for seed in range(3):
            net = generate_random(4, 4, 4, 4, seed)
            rp = build_relaxation(net)
            rep = solve_relaxation(rp, keep_cuts=True)
            h = np.array(rep.history)
            assert np.all(np.diff(h) >= -1e-9)
            V = rp.assignment(net.activations(rng.uniform(-1.5, 1.5, (2000, 4))))
            for a, rhs in rep.cuts:
                assert np.all(V @ a <= rhs + 1e-8 * (1 + abs(rhs)))

    def test_validity_against_samples_and_multistart(self):
        rng = np.random.default_rng(6)
        for seed in range(3):
            net = generate_random(4, 5, 4, 5, seed)
            rep = solve_relaxation(build_relaxation(net))
            assert rep.status == "optimal"
            assert rep.lower_bound <= net(rng.uniform(-1.5, 1.5, (10000, 4))).min()
            assert rep.lower_bound <= multistart_min(net, 500, seed)[0] + 1e-6

    def test_point_satisfies_relaxation(self):
        rp = build_relaxation(generate_random(4, 4, 4, 4, 1))
        rep = solve_relaxation(rp)
        assert rp.max_violation(rep.point) <= 1e-6
        assert rep.max_violation <= 1e-6

    def test_gam_shaped_agreement(self):
        rng = np.random.default_rng(12)
        for _ in range(5):
            g = random_mpgam(rng, int(rng.integers(1, 5)), int(rng.integers(2, 7)))
            rep = solve_relaxation(build_relaxation(to_pkan(g)))
            assert rep.lower_bound == pytest.approx(gam_relaxation_min(g)[0], abs=1e-5)

    def test_report_json_shape(self):
        rp = build_relaxation(chain([X**2]))
        d = solve_relaxation(rp).to_dict()
        assert list(d) == ["lower_bound", "iterations", "max_violation", "status", "point"]
        assert list(d["point"]) == ["t", "z[0,0]", "z[1,0]"]
        assert isinstance(solve_relaxation(rp), SolveReport)


def test_bland_rule_alone_solves(monkeypatch):
    import pkanrelax.solver as solver

    monkeypatch.setattr(solver, "BLAND_AFTER", 0)
    rng = np.random.default_rng(77)
    for _ in range(20):
        lp = random_lp(rng, n_max=5, m_max=6)
        assert lp_solve(lp).value == pytest.approx(vertex_min(lp.c, lp.lb, lp.ub, lp.A, lp.b), abs=1e-7)


def test_bland_rule_alone_solves_master(monkeypatch):
    import pkanrelax.solver as solver

    rp = build_relaxation(generate_random(2, 3, 2, 3, 5))
    ref = solve_relaxation(rp, 1e-6)
    monkeypatch.setattr(solver, "BLAND_AFTER", 0)
    rep = solve_relaxation(rp, 1e-6)
    assert rep.status == "optimal"
    assert rep.lower_bound == pytest.approx(ref.lower_bound, abs=1e-6)


def test_dual_degenerate_cycling_instance_terminates():
    # this instance cycled in the warm-started master before the anti-cycling rule
    rep = solve_relaxation(build_relaxation(generate_random(4, 5, 4, 5, 32)), 1e-6)
    assert rep.status == "optimal"
    assert np.isfinite(rep.lower_bound)
