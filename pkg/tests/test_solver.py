"""Barrier-solver checks: toy optima, feasibility search, invariants."""

import numpy as np
import pytest

from wpcmaxmin import backend
from wpcmaxmin.canonical import SubproblemBuilder, with_slack_variable
from wpcmaxmin.solver import (
    DEFAULT_TOL,
    SolverReport,
    phase1_feasible,
    solve_barrier,
)

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def golden_toy():
    """maximize alpha s.t. alpha <= x, alpha <= 1 - x^2."""
    b = SubproblemBuilder()
    b.add_real_block("alpha", 1)
    b.add_real_block("x", 1)
    b.maximize("alpha")
    b.add_constraint("below_line", lin={"alpha": [1.0], "x": [-1.0]})
    b.add_constraint("below_parabola", const=-1.0, lin={"alpha": [1.0]},
                     quads=[("x", np.array([[1.0]]), None)])
    b.set_start("alpha", np.array([-1.0]))
    b.set_start("x", np.array([0.5]))
    return b.build()


def log_box_toy():
    """maximize alpha s.t. alpha <= log2(1+p), 0 <= p <= 3."""
    b = SubproblemBuilder()
    b.add_real_block("alpha", 1)
    b.add_real_block("p", 1)
    b.maximize("alpha")
    b.add_constraint("below_log", lin={"alpha": [1.0]},
                     logs=[(np.log2(np.e), "p", [1.0], 1.0)])
    b.add_constraint("p_nonneg", lin={"p": [-1.0]})
    b.add_constraint("p_cap", const=-3.0, lin={"p": [1.0]})
    b.set_start("alpha", np.array([-0.5]))
    b.set_start("p", np.array([1.0]))
    return b.build()


class TestToyProblems:
    def test_golden_ratio_optimum(self):
        report = solve_barrier(golden_toy())
        assert report.status == "optimal"
        assert report.objective == pytest.approx(GOLDEN, abs=1e-6)
        assert report.x[1] == pytest.approx(GOLDEN, abs=1e-4)

    def test_log_box_optimum(self):
        report = solve_barrier(log_box_toy())
        assert report.status == "optimal"
        assert report.objective == pytest.approx(2.0, abs=1e-6)
        assert report.x[1] == pytest.approx(3.0, abs=1e-4)

    def test_feasible_point_respects_constraints(self):
        report = solve_barrier(golden_toy())
        assert report.max_violation <= 1e-8
        assert np.all(report.slacks >= -1e-8)

    def test_gap_reported(self):
        report = solve_barrier(golden_toy())
        assert 0.0 < report.gap <= DEFAULT_TOL


class TestPhase1:
    def test_box_interior_point(self):
        b = SubproblemBuilder()
        b.add_real_block("x", 1)
        b.maximize("x", [0.0])
        b.add_constraint("upper", const=-1.0, lin={"x": [1.0]})
        b.add_constraint("lower", lin={"x": [-1.0]})
        b.set_start("x", np.array([5.0]))
        x, _, _ = phase1_feasible(b.build())
        assert x is not None
        assert 0.0 < x[0] < 1.0

    def test_empty_box_detected(self):
        b = SubproblemBuilder()
        b.add_real_block("x", 1)
        b.maximize("x", [0.0])
        b.add_constraint("upper", const=1.0, lin={"x": [1.0]})    # x <= -1
        b.add_constraint("lower", const=1.0, lin={"x": [-1.0]})   # x >= 1
        b.set_start("x", np.array([0.0]))
        x, _, _ = phase1_feasible(b.build())
        assert x is None

    def test_feasible_start_accepted_without_search(self):
        pp = golden_toy()
        x, rounds, steps = phase1_feasible(pp)
        assert rounds == 0 and steps == 0
        np.testing.assert_array_equal(x, pp.start)

    def test_solver_recovers_from_infeasible_start(self):
        pp = golden_toy()
        bad = pp.start.copy()
        bad[0] = 5.0  # alpha far above both caps
        report = solve_barrier(pp, start=bad)
        assert report.status == "optimal"
        assert report.phase1_used
        assert report.objective == pytest.approx(GOLDEN, abs=1e-6)

    def test_infeasible_problem_reported(self):
        b = SubproblemBuilder()
        b.add_real_block("alpha", 1)
        b.add_real_block("x", 1)
        b.maximize("alpha")
        b.add_constraint("below_line", lin={"alpha": [1.0], "x": [-1.0]})
        b.add_constraint("below_parabola", const=-1.0, lin={"alpha": [1.0]},
                         quads=[("x", np.array([[1.0]]), None)])
        b.add_constraint("alpha_floor", const=2.0, lin={"alpha": [-1.0]})
        b.set_start("alpha", np.array([0.0]))
        b.set_start("x", np.array([0.5]))
        report = solve_barrier(b.build())
        assert report.status == "infeasible"


class TestInvariants:
    def test_ascent_from_feasible_start(self):
        pp = golden_toy()
        start = pp.start.copy()
        start[0], start[1] = 0.55, 0.6  # feasible, close to the optimum
        report = solve_barrier(pp, start=start)
        assert report.objective >= 0.55 - 1e-9

    def test_start_kept_when_it_outscores_barrier_point(self):
        # A start on the central path closer to the optimum than the gap
        # tolerance can beat the returned point; the report must never
        # regress below it.
        pp = golden_toy()
        first = solve_barrier(pp)
        again = solve_barrier(pp, start=first.x)
        assert again.objective >= first.objective - 1e-12

    def test_determinism(self):
        r1 = solve_barrier(golden_toy())
        r2 = solve_barrier(golden_toy())
        np.testing.assert_array_equal(r1.x, r2.x)
        assert r1.objective == r2.objective
        assert r1.newton_steps == r2.newton_steps

    def test_complex_block_quadratic(self):
        # maximize alpha s.t. alpha <= 4 - ||z||^2 with z complex: alpha* = 4
        # at z = 0; also check a centered quad pins the optimum at its center.
        b = SubproblemBuilder()
        b.add_real_block("alpha", 1)
        b.add_complex_block("z", 2)
        b.maximize("alpha")
        b.add_constraint("ball", const=-4.0, lin={"alpha": [1.0]},
                         quads=[("z", np.eye(2, dtype=complex),
                                 np.array([1.0 + 1.0j, 0.0]))])
        b.set_start("alpha", np.array([0.0]))
        b.set_start("z", np.array([1.0 + 1.0j, 0.1 + 0.0j]))
        report = solve_barrier(b.build())
        assert report.objective == pytest.approx(4.0, abs=1e-6)
        z = report.x[1:].view(np.float64)
        assert z[0] == pytest.approx(1.0, abs=1e-3)
        assert z[1] == pytest.approx(1.0, abs=1e-3)

    def test_midpoint_convexity_of_packed_constraints(self):
        rng = np.random.default_rng(5)
        pp = log_box_toy()
        for _ in range(200):
            x = rng.uniform([-3.0, 0.1], [1.9, 2.9])
            y = rng.uniform([-3.0, 0.1], [1.9, 2.9])
            mid = 0.5 * (x + y)
            vx = backend.constraint_values(x, pp)
            vy = backend.constraint_values(y, pp)
            vm = backend.constraint_values(mid, pp)
            assert np.all(vm <= 0.5 * (vx + vy) + 1e-10)

    def test_trace_dump(self, tmp_path):
        path = tmp_path / "trace.csv"
        report = solve_barrier(golden_toy(), trace_path=str(path))
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "stage,t,newton,objective,phi,decrement,step"
        assert len(lines) > 2
        assert report.status == "optimal"

    def test_slack_extension_preserves_atoms(self):
        pp = golden_toy()
        ext = with_slack_variable(pp)
        assert ext.dim == pp.dim + 1
        x = np.array([0.1, 0.4])
        s = 7.0
        vals = backend.constraint_values(np.concatenate([x, [s]]), ext)
        np.testing.assert_allclose(
            vals, backend.constraint_values(x, pp) - s, atol=1e-12)
