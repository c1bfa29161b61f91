"""Log-barrier interior-point solver for the packed convex subproblems.

Path following with multiplier ``mu = 10`` starting at ``t = 1`` (so the
first barrier gap equals the constraint count), damped Newton centering with
Armijo backtracking (slope factor 0.01, shrink 0.5), and Hessian
regularization escalating from 1e-10 to 1e-4 on factorization failure.
Feasibility search runs the same machinery on a max-violation slack
reformulation.  Everything is deterministic: fixed schedules, no randomized
pivoting.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import backend
from .canonical import PackedProblem, with_slack_variable

#: Barrier schedule and tolerances (see module docstring).
BARRIER_MU = 10.0
T_INIT = 1.0
DEFAULT_TOL = 1e-7
TOL_FEAS = 1e-8
ARMIJO_SLOPE = 0.01
ARMIJO_SHRINK = 0.5
#: Centering stops when decrement^2 / 2 <= NEWTON_TOL * max(1, |phi|); the
#: relative form keeps the criterion attainable at large barrier t, where phi
#: grows like t and float64 can no longer resolve absolute changes of 1e-9.
NEWTON_TOL = 1e-9
MAX_NEWTON = 80
MAX_BARRIER_ROUNDS = 40
REG_INIT = 1e-10
REG_MAX = 1e-4
MIN_STEP = 1e-14

#: Margin (in constraint value) required to call a start strictly feasible.
STRICT_MARGIN = 1e-12


@dataclass
class SolverReport:
    """Outcome of one subproblem solve."""

    status: str                    # "optimal" | "infeasible" | "max-iter"
    x: np.ndarray
    objective: float
    barrier_rounds: int
    newton_steps: int
    gap: float                     # m / t at exit
    slacks: np.ndarray             # -g_i(x) per constraint
    labels: tuple
    phase1_used: bool = False
    kept_start: bool = False       # start returned because it scored higher
    trace: list = field(default_factory=list)

    @property
    def max_violation(self) -> float:
        return float(max(0.0, -np.min(self.slacks))) if len(self.slacks) else 0.0


class SolverFailure(RuntimeError):
    """Newton centering could not make progress (diagnostics in args)."""


def _newton_center(x, t, pp, trace, stage, stop_cb=None):
    """Minimize the barrier at fixed t.  Returns (x, steps, converged)."""
    steps = 0
    for _ in range(MAX_NEWTON):
        phi, grad, hess, ok = backend.barrier_system(x, t, pp)
        if not ok:
            raise SolverFailure(f"{stage}: barrier evaluated outside its domain")
        reg = REG_INIT
        # Near-boundary barrier Hessians reach huge scales whose rounding
        # noise (~eps * ||H||) can exceed any fixed shift, so the escalation
        # cap tracks the Hessian's own magnitude.
        reg_cap = max(REG_MAX, 1e-8 * float(np.max(np.abs(np.diag(hess)))))
        step_dir = None
        while True:
            try:
                cho = scipy.linalg.cho_factor(
                    hess + reg * np.eye(pp.dim), lower=True, check_finite=False)
                step_dir = scipy.linalg.cho_solve(cho, -grad, check_finite=False)
                break
            except np.linalg.LinAlgError:
                reg *= 10.0
                if reg > reg_cap:
                    break
        if step_dir is None:
            return x, steps, False
        decrement = float(-grad @ step_dir)
        if decrement < 0.0:
            # Regularized direction lost descent; fall back to gradient.
            step_dir = -grad
            decrement = float(grad @ grad)
        if 0.5 * decrement <= NEWTON_TOL * max(1.0, abs(phi)):
            return x, steps, True
        size = 1.0
        slope = -ARMIJO_SLOPE * decrement
        while size >= MIN_STEP:
            trial = x + size * step_dir
            if backend.barrier_value(trial, t, pp) <= phi + size * slope:
                break
            size *= ARMIJO_SHRINK
        else:
            return x, steps, False
        x = trial
        steps += 1
        if trace is not None:
            trace.append({
                "stage": stage, "t": t, "newton": steps,
                "objective": float(pp.objective @ x),
                "phi": backend.barrier_value(x, t, pp),
                "decrement": 0.5 * decrement, "step": size,
            })
        if stop_cb is not None and stop_cb(x):
            return x, steps, True
    return x, steps, False


def _path_follow(pp, start, tol, trace, stage, stop_cb=None):
    """Full barrier path from a strictly feasible start."""
    x = start.copy()
    t = T_INIT
    rounds = 0
    newton_total = 0
    m = pp.n_constraints
    converged_last = True
    while True:
        x, steps, converged_last = _newton_center(x, t, pp, trace, stage, stop_cb)
        newton_total += steps
        rounds += 1
        if stop_cb is not None and stop_cb(x):
            return x, rounds, newton_total, m / t, True
        if m / t <= tol:
            break
        if rounds >= MAX_BARRIER_ROUNDS:
            break
        t *= BARRIER_MU
    return x, rounds, newton_total, m / t, converged_last


def phase1_feasible(pp: PackedProblem, start: np.ndarray = None):
    """Strictly feasible point for ``pp``, or None if infeasible.

    Minimizes the max violation ``s`` over ``g_i(x) <= s``; accepts as soon
    as the slack drops safely below zero.  The supplied start must respect
    every log-atom domain (callers pass the previous iterate, which does).
    Returns ``(x, rounds, newton_steps)`` with x None on infeasibility.
    """
    x0 = pp.start if start is None else np.asarray(start, dtype=float)
    vals = backend.constraint_values(x0, pp)
    if not np.all(np.isfinite(vals)):
        raise ValueError("feasibility search start violates a log domain")
    if np.max(vals) < -STRICT_MARGIN:
        return x0.copy(), 0, 0
    ext = with_slack_variable(pp)
    ext_start = np.concatenate([x0, [float(np.max(vals)) + 1.0]])
    target = 100.0 * TOL_FEAS

    def interior_found(y):
        return y[-1] < -target and np.max(
            backend.constraint_values(y[:-1], pp)) < -target

    y, rounds, steps, _, _ = _path_follow(
        ext, ext_start, DEFAULT_TOL, None, "phase1", stop_cb=interior_found)
    if interior_found(y):
        return y[:-1].copy(), rounds, steps
    if y[-1] >= -TOL_FEAS:
        return None, rounds, steps
    return y[:-1].copy(), rounds, steps


def solve_barrier(pp: PackedProblem, start: np.ndarray = None,
                  tol: float = DEFAULT_TOL, trace_path: str = None,
                  keep_trace: bool = False) -> SolverReport:
    """Maximize the packed objective; see module docstring for the method.

    ``start`` defaults to the problem's stored warm start; a start that is
    not strictly feasible triggers the feasibility search first.  When the
    start was strictly feasible and outscores the barrier point (possible
    only within the gap tolerance), the start is returned instead, so the
    objective never regresses below its value at the expansion point.
    """
    x0 = pp.start if start is None else np.asarray(start, dtype=float)
    trace = [] if (trace_path or keep_trace) else None
    phase1_used = False
    rounds0 = steps0 = 0
    vals0 = backend.constraint_values(x0, pp)
    start_feasible = bool(np.all(np.isfinite(vals0)) and
                          np.max(vals0) < -STRICT_MARGIN)
    if not start_feasible:
        feasible, rounds0, steps0 = phase1_feasible(pp, x0)
        phase1_used = True
        if feasible is None:
            report = SolverReport(
                status="infeasible", x=x0.copy(), objective=float("-inf"),
                barrier_rounds=rounds0, newton_steps=steps0, gap=float("inf"),
                slacks=-vals0, labels=pp.labels, phase1_used=True,
                trace=trace or [])
            _maybe_dump(trace, trace_path)
            return report
        x0_run = feasible
    else:
        x0_run = x0

    x, rounds, steps, gap, clean = _path_follow(pp, x0_run, tol, trace, "main")
    objective = float(pp.objective @ x)
    kept_start = False
    if start_feasible:
        start_obj = float(pp.objective @ x0)
        if start_obj > objective:
            x, objective, kept_start = x0.copy(), start_obj, True
    vals = backend.constraint_values(x, pp)
    status = "optimal" if (clean and gap <= tol) or kept_start else "max-iter"
    if np.max(vals) > TOL_FEAS:
        status = "max-iter"
    report = SolverReport(
        status=status, x=x, objective=objective,
        barrier_rounds=rounds0 + rounds, newton_steps=steps0 + steps,
        gap=gap, slacks=-vals, labels=pp.labels,
        phase1_used=phase1_used, kept_start=kept_start, trace=trace or [])
    _maybe_dump(trace, trace_path)
    return report


def _maybe_dump(trace, trace_path):
    if not trace_path or trace is None:
        return
    fields = ["stage", "t", "newton", "objective", "phi", "decrement", "step"]
    with open(trace_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for row in trace:
            writer.writerow(row)
