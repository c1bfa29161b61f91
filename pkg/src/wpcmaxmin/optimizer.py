"""Alternating max-min rate optimization driver.

Outer rounds alternate three blocks: the front-end stage (relay matrices or
surface amplitude vectors), the transmit stage (energy waveforms plus
information powers), and the slot split.  The first two blocks maximize a
touching concave minorizer of the worst pair rate, so the objective never
decreases between accepted iterates; the slot split reduces to a one-variable
linear program solved exactly.

Each block subproblem also carries a minorizer of the harvested energy, so a
solution of any block keeps every original constraint satisfied.  The one
deliberate exception is the very first rounds of a run: the deterministic
initial point spends the budgets on rate only, so its harvested energy may
sit below the floor until the transmit stage and the slot split lift it.
Once an iterate is feasible, all later accepted iterates stay feasible.

A stage that starts at a point violating an energy floor first runs a repair
phase: the same block subproblem with the rate floor swapped for the worst
normalized energy slack, ascended until every floor holds with headroom.
When a block subproblem still reports infeasibility from a point whose floor
is tight or violated, the driver skips that block for the round and lets the
other blocks recover - the certified energy curvature bounds the one-step
gain of a single block, so a skip there is conservatism, not an error.  An
infeasibility report from a strictly feasible point can only mean a broken
surrogate and raises immediately.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .channels import ChannelSet
from .config import SystemConfig
from .model import (Design, assemble_quadratic_forms, eh_curve,
                    feasibility_report, harvested_energy,
                    harvester_input_power, min_rate, node_energy_terms)
from .solver import DEFAULT_TOL, solve_barrier
from .subproblems import (build_irs_subproblem, build_relay_matrix_subproblem,
                          build_waveform_subproblem, decode_front_solution,
                          decode_waveform_solution, front_fixed_quantities,
                          tied_slot_ball)
from .surrogates import (EnergyTargetInfeasible, build_front_surrogates,
                         build_waveform_surrogates)

VARIANTS = ("full", "t_static", "t_f_static", "baseline1", "baseline2")

#: Smallest slot fraction handed to the block subproblems.  When the optimal
#: split is degenerate (no energy floor), this keeps both slots strictly
#: positive so the builders stay well posed; the rate cost is O(1e-9).
TAU_FLOOR = 1e-9

#: Relative tolerance for the accepted-iterate non-regression check.
RATE_SLIP = 1e-9

#: Relative slack treated as "the energy floor is tight" when deciding
#: whether a block infeasibility is honest conservatism or a broken bound.
TIGHT_REL = 1e-6


class InfeasibleRun(RuntimeError):
    """No feasible operating point was reached for this instance."""

    def __init__(self, message: str, stage: str, trace: "RunTrace" = None,
                 design: Design = None):
        super().__init__(message)
        self.stage = stage
        self.trace = trace
        self.design = design


class TauInfeasible(RuntimeError):
    """The slot-split program has no feasible point at the current design.

    ``conditions`` lists the violated feasibility conditions by number:

    1. every energy lower bound fits inside the block length,
    2. every transmit budget admits some split (no negative budget residue),
    3. every node budget admits some split,
    4. the transmit upper bounds clear every energy lower bound,
    5. the node upper bounds clear every energy lower bound.
    """

    def __init__(self, conditions, detail: str = ""):
        self.conditions = tuple(sorted(set(int(c) for c in conditions)))
        msg = ("slot-split program infeasible; failed condition(s) "
               + ", ".join(str(c) for c in self.conditions))
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


@dataclass(frozen=True)
class OptimizerSettings:
    """Tolerances, iteration caps, and the structural variant of a run."""

    eps_inner: float = 1e-4
    eps_outer: float = 1e-4
    max_inner: int = 30
    max_outer: int = 50
    variant: str = "full"
    solver_tol: float = DEFAULT_TOL

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; "
                             f"expected one of {VARIANTS}")
        if not (self.eps_inner > 0 and self.eps_outer > 0):
            raise ValueError("convergence tolerances must be positive")
        if self.max_inner < 1 or self.max_outer < 1:
            raise ValueError("iteration caps must be at least 1")


@dataclass
class OuterRecord:
    """State after one outer round, for the run trace."""

    index: int
    min_rate: float
    tau: float
    energy: list
    feasible: bool
    alphas_front: list
    alphas_wave: list
    inner_front: int
    inner_wave: int
    front_skipped: bool
    wave_skipped: bool
    repair_steps: int
    newton_steps: int
    wall_ms: float

    def as_dict(self) -> dict:
        return {
            "index": self.index,
            "min_rate": self.min_rate,
            "tau": self.tau,
            "energy": list(self.energy),
            "feasible": self.feasible,
            "alphas_front": list(self.alphas_front),
            "alphas_wave": list(self.alphas_wave),
            "inner_front": self.inner_front,
            "inner_wave": self.inner_wave,
            "front_skipped": self.front_skipped,
            "wave_skipped": self.wave_skipped,
            "repair_steps": self.repair_steps,
            "newton_steps": self.newton_steps,
            "wall_ms": self.wall_ms,
        }


@dataclass
class RunTrace:
    """JSON-serializable record of one optimization run."""

    mode: str
    variant: str
    status: str = "running"
    rows: list = field(default_factory=list)
    total_ms: float = 0.0

    @property
    def outer_iterations(self) -> int:
        return len(self.rows)

    @property
    def min_rates(self) -> list:
        return [row.min_rate for row in self.rows]

    def as_dict(self) -> dict:
        return {
            "mode": self.mode,
            "variant": self.variant,
            "status": self.status,
            "outer_iterations": self.outer_iterations,
            "total_ms": self.total_ms,
            "rows": [row.as_dict() for row in self.rows],
        }

    def to_json(self, indent: int = None) -> str:
        return json.dumps(self.as_dict(), indent=indent)


# ---------------------------------------------------------------------------
# Slot split: exact one-variable linear program
# ---------------------------------------------------------------------------


def tau_closed_form(design: Design, channels: ChannelSet, cfg: SystemConfig,
                    aggregate: bool = False) -> float:
    """Smallest feasible slot split at fixed waveforms, powers and front-end.

    Every constraint is affine in the split, so the program reduces to
    interval intersection: energy floors give lower bounds, budgets give
    upper bounds (or, for budget rows whose coefficient is negative, further
    lower bounds).  With ``aggregate`` the transmit rows are summed over
    pairs and the node rows over subbands before solving - a relaxation that
    matches the per-constraint program whenever every summed budget residue
    is nonnegative, which is the regime the feasibility conditions certify.

    Raises :class:`TauInfeasible` naming the violated conditions when the
    interval is empty.
    """
    t_len, rho = cfg.block_length, cfg.rho
    # Transmit rows, shape (N, K): v * tau <= vt.
    v_tx = (np.abs(design.s_e) ** 2 - design.p_i) / (2 * rho)
    vt_tx = t_len * (cfg.p_rf_tx.T - design.p_i / (2 * rho))
    # Node rows, shape (N,): v1 * tau <= v2.
    e_slot, i_slot = node_energy_terms(design, channels, cfg)
    v1_node = (e_slot - i_slot) / (2 * rho)
    v2_node = t_len * (cfg.p_rf_node - i_slot / (2 * rho))
    # Energy floors: tau >= vbar_k.
    p_e = harvester_input_power(design, channels)
    curve = np.asarray(eh_curve(p_e, cfg))
    vbar = np.zeros(cfg.n_pairs)
    for k in range(cfg.n_pairs):
        if cfg.e_min[k] > 0.0:
            vbar[k] = (np.inf if curve[k] <= 0.0
                       else rho * cfg.e_min[k] / curve[k])
    vbar_max = float(np.max(vbar)) if cfg.n_pairs else 0.0

    if aggregate:
        v_tx_rows = v_tx.sum(axis=0)
        vt_tx_rows = vt_tx.sum(axis=0)
        v_node_rows = np.array([v1_node.sum()])
        v2_node_rows = np.array([v2_node.sum()])
    else:
        v_tx_rows, vt_tx_rows = v_tx.ravel(), vt_tx.ravel()
        v_node_rows, v2_node_rows = v1_node, v2_node

    violated = []
    if vbar_max > t_len:
        violated.append(1)
    if np.any(vt_tx_rows[v_tx_rows == 0.0] < 0.0):
        violated.append(2)
    if np.any(v2_node_rows[v_node_rows == 0.0] < 0.0):
        violated.append(3)

    def bounds(coef, resid):
        pos = coef > 0.0
        neg = coef < 0.0
        hi = float(np.min(resid[pos] / coef[pos])) if np.any(pos) else np.inf
        lo = float(np.max(resid[neg] / coef[neg])) if np.any(neg) else 0.0
        return lo, hi

    lo_tx, hi_tx = bounds(v_tx_rows, vt_tx_rows)
    lo_node, hi_node = bounds(v_node_rows, v2_node_rows)
    if hi_tx < vbar_max:
        violated.append(4)
    if hi_node < vbar_max:
        violated.append(5)

    lo = max(0.0, vbar_max, lo_tx, lo_node)
    hi = min(t_len, hi_tx, hi_node)
    if lo > hi:
        if not violated:
            # The clash involves a negative-coefficient budget row; name the
            # family of the binding upper bound.
            if hi == hi_tx:
                violated.append(4)
            elif hi == hi_node:
                violated.append(5)
            else:
                violated.append(1)
        raise TauInfeasible(violated, detail=f"lower {lo:.6g} > upper {hi:.6g}")
    if violated:
        raise TauInfeasible(violated)
    return float(lo)


# ---------------------------------------------------------------------------
# Deterministic initialization
# ---------------------------------------------------------------------------


def _reachability_split(cfg: SystemConfig) -> float:
    """Smallest slot split that could meet the energy floors at peak harvest."""
    if not np.any(cfg.e_min > 0.0):
        return 0.0
    peak_input = float(np.exp(-cfg.eh_b / (2.0 * cfg.eh_a)))
    peak = float(eh_curve(peak_input, cfg))
    return cfg.rho * float(np.max(cfg.e_min)) / peak


def initialize_design(channels: ChannelSet, cfg: SystemConfig,
                      settings: OptimizerSettings = None) -> Design:
    """Deterministic starting point: budget-equality waveforms, scaled
    identity (or unit-modulus) front-end, and a guarded slot split.

    Transmit budgets are split 0.9/0.1 between the energy waveform and the
    information power on every (pair, subband).  The relay starts at the
    largest per-subband scaled identity meeting the node budget with a small
    headroom factor; the surface starts at the largest uniform amplitude
    meeting the node budget on every subband, floored at unit modulus - a
    bare all-ones start can sit so far below the energy floor that no single
    certified-curvature step could bridge the gap.  The slot split starts at
    half the block, raised when the energy floors need a longer harvest slot
    even at the curve's peak.
    """
    settings = settings or OptimizerSettings()
    t_len, rho = cfg.block_length, cfg.rho
    n_sub, n_pairs, m = cfg.n_subbands, cfg.n_pairs, cfg.n_elements

    tau_req = _reachability_split(cfg)
    if tau_req > t_len:
        raise InfeasibleRun(
            "energy floor exceeds the harvester peak over a full block",
            stage="init")
    tau0 = max(0.5 * t_len, min(0.95 * t_len, 1.25 * tau_req))
    if tau_req >= 0.95 * t_len:
        tau0 = 0.5 * (tau_req + t_len)

    shave = 1.0 - 1e-9
    budget = cfg.p_rf_tx.T * t_len              # (N, K)
    s_e = np.sqrt(0.9 * 2 * rho * budget / tau0 * shave).astype(complex)
    p_i = 0.1 * 2 * rho * budget / (t_len - tau0) * shave

    if cfg.mode == "relay":
        ident = np.eye(m, dtype=complex)
        e1 = np.empty(n_sub)
        i1 = np.empty(n_sub)
        for n in range(n_sub):
            e1[n] = float(np.linalg.norm(channels.h[n] @ s_e[n]) ** 2
                          + cfg.sigma2_node[n] * m)
            col = np.linalg.norm(channels.h[n], axis=0) ** 2
            i1[n] = float(col @ p_i[n] + cfg.sigma2_node[n] * m)
        load = (tau0 / (2 * rho)) * e1 + ((t_len - tau0) / (2 * rho)) * i1
        c = 0.95 * np.sqrt(t_len * cfg.p_rf_node / load)
        if settings.variant == "t_f_static":
            c = np.full(n_sub, float(np.min(c)))
        u = np.stack([c[n] * ident for n in range(n_sub)])
        return Design(mode="relay", tau=tau0, s_e=s_e, p_i=p_i,
                      u_e=u.copy(), u_i=u.copy())
    e1 = np.empty(n_sub)
    i1 = np.empty(n_sub)
    for n in range(n_sub):
        e1[n] = float(np.linalg.norm(channels.h[n] @ s_e[n]) ** 2
                      + cfg.sigma2_node[n] * m)
        col = np.linalg.norm(channels.h[n], axis=0) ** 2
        i1[n] = float(col @ p_i[n] + cfg.sigma2_node[n] * m)
    load = (tau0 / (2 * rho)) * e1 + ((t_len - tau0) / (2 * rho)) * i1
    amp = max(1.0, 0.95 * float(np.min(np.sqrt(t_len * cfg.p_rf_node / load))))
    theta = amp * np.ones(m, dtype=complex)
    return Design(mode="irs", tau=tau0, s_e=s_e, p_i=p_i,
                  theta_e=theta.copy(), theta_i=theta.copy())


# ---------------------------------------------------------------------------
# Inner loops
# ---------------------------------------------------------------------------


def _floor_tight_or_violated(design: Design, channels: ChannelSet,
                             cfg: SystemConfig) -> bool:
    energy = np.asarray(harvested_energy(design, channels, cfg))
    return bool(np.any(energy <= cfg.e_min * (1.0 + TIGHT_REL)))


def _floor_violated(design: Design, channels: ChannelSet,
                    cfg: SystemConfig) -> bool:
    energy = np.asarray(harvested_energy(design, channels, cfg))
    return bool(np.any(energy < cfg.e_min * (1.0 - 1e-9)))


def _repair_energy_floors(design: Design, channels: ChannelSet,
                          cfg: SystemConfig, settings: OptimizerSettings,
                          stage: str):
    """Lift violated energy floors by MM ascent on the worst normalized slack.

    Runs the enclosing stage's block subproblem with the rate floor replaced
    by the worst energy-slack objective.  The slack minorizer touches at the
    expansion point, so every accepted step strictly raises the worst true
    slack measured in that step's scales; the phase stops once every floor
    holds with a little headroom, on a stall, or at the inner cap.

    Returns ``(design, steps, newton_steps)``.
    """
    cur = design
    steps = 0
    newton = 0
    active = cfg.e_min > 0.0
    if not np.any(active):
        return cur, steps, newton
    tie_slots = settings.variant in ("t_static", "t_f_static")
    tie_subbands = settings.variant == "t_f_static"
    for _ in range(settings.max_inner):
        energy = np.asarray(harvested_energy(cur, channels, cfg))
        if np.all(energy >= cfg.e_min * (1.0 + TIGHT_REL)):
            break
        scale = np.maximum(cfg.e_min, energy)
        z_cur = float(np.min((energy[active] - cfg.e_min[active])
                             / scale[active]))
        forms = assemble_quadratic_forms(cur, channels, cfg)
        if stage == "front":
            q_mats = p_vals = None
            if tie_slots:
                q_mats, p_vals = tied_slot_ball(cfg, forms, cur.tau)
            pack = build_front_surrogates(channels, forms, cfg, cur,
                                          q_matrices=q_mats, p_values=p_vals)
            if cur.mode == "relay":
                pp = build_relay_matrix_subproblem(
                    pack, forms, cfg, cur.tau, tie_slots=tie_slots,
                    tie_subbands=tie_subbands, objective="energy")
            else:
                pp = build_irs_subproblem(pack, forms, cfg, cur.tau,
                                          tie_slots=tie_slots,
                                          objective="energy")
            decode = decode_front_solution
        else:
            fixed = front_fixed_quantities(cur, channels, cfg)
            pack = build_waveform_surrogates(channels, cfg, cur, forms=forms)
            pp = build_waveform_subproblem(pack, cfg, cur.tau, fixed,
                                           objective="energy")
            decode = decode_waveform_solution
        rep = solve_barrier(pp, tol=settings.solver_tol)
        newton += rep.newton_steps
        if rep.status == "infeasible":
            break
        cand = decode(pp, rep.x, cfg, cur)
        energy_new = np.asarray(harvested_energy(cand, channels, cfg))
        z_new = float(np.min((energy_new[active] - cfg.e_min[active])
                             / scale[active]))
        if z_new <= z_cur + 1e-9:
            break
        cur = cand
        steps += 1
    return cur, steps, newton


def _identity_front(design: Design, channels: ChannelSet,
                    cfg: SystemConfig) -> Design:
    """Scaled-identity front-end spending half the node budget per slot.

    One node budget constrains two slot scales, so this reference design
    assigns each slot half the budget and sizes its scale at equality.  The
    surface shares one amplitude across subbands (clamped to the unit-modulus
    floor), with the binding subband at equality.
    """
    t_len, rho, tau = cfg.block_length, cfg.rho, design.tau
    n_sub, m = cfg.n_subbands, cfg.n_elements
    e1 = np.empty(n_sub)
    i1 = np.empty(n_sub)
    for n in range(n_sub):
        e1[n] = float(np.linalg.norm(channels.h[n] @ design.s_e[n]) ** 2
                      + cfg.sigma2_node[n] * m)
        col = np.linalg.norm(channels.h[n], axis=0) ** 2
        i1[n] = float(col @ design.p_i[n] + cfg.sigma2_node[n] * m)
    shave = 1.0 - 1e-9
    half = 0.5 * t_len * cfg.p_rf_node * shave
    a_e = np.sqrt(half / ((tau / (2 * rho)) * e1))
    a_i = np.sqrt(half / (((t_len - tau) / (2 * rho)) * i1))
    if design.mode == "relay":
        ident = np.eye(m, dtype=complex)
        u_e = np.stack([a_e[n] * ident for n in range(n_sub)])
        u_i = np.stack([a_i[n] * ident for n in range(n_sub)])
        return design.replace(u_e=u_e, u_i=u_i)
    scale_e = max(1.0, float(np.min(a_e)))
    scale_i = max(1.0, float(np.min(a_i)))
    return design.replace(theta_e=scale_e * np.ones(m, dtype=complex),
                          theta_i=scale_i * np.ones(m, dtype=complex))


def inner_loop_matrices(design: Design, channels: ChannelSet,
                        cfg: SystemConfig,
                        settings: OptimizerSettings = None):
    """Front-end stage: repeat the front-end block until its floor stalls.

    Returns ``(design, info)`` where ``info`` carries the floor value after
    each accepted solve (non-decreasing up to solver tolerance), the
    iteration count, and whether the stage was skipped as conservatism.
    """
    settings = settings or OptimizerSettings()
    if settings.variant == "baseline2":
        return (_identity_front(design, channels, cfg),
                {"alphas": [], "iterations": 0, "skipped": False,
                 "newton_steps": 0, "repair_steps": 0, "closed_form": True})
    tie_slots = settings.variant in ("t_static", "t_f_static")
    tie_subbands = settings.variant == "t_f_static"
    if tie_subbands and cfg.mode != "relay":
        raise ValueError("subband-static variant needs per-subband front-end "
                         "matrices; the surface design has none")

    cur = design
    alphas = []
    newton = 0
    skipped = False
    repair_steps = 0
    if _floor_violated(cur, channels, cfg):
        cur, repair_steps, repair_newton = _repair_energy_floors(
            cur, channels, cfg, settings, stage="front")
        newton += repair_newton
    for _ in range(settings.max_inner):
        forms = assemble_quadratic_forms(cur, channels, cfg)
        q_mats = p_vals = None
        if tie_slots:
            q_mats, p_vals = tied_slot_ball(cfg, forms, cur.tau)
        pack = build_front_surrogates(channels, forms, cfg, cur,
                                      q_matrices=q_mats, p_values=p_vals)
        if cur.mode == "relay":
            pp = build_relay_matrix_subproblem(
                pack, forms, cfg, cur.tau,
                tie_slots=tie_slots, tie_subbands=tie_subbands)
        else:
            pp = build_irs_subproblem(pack, forms, cfg, cur.tau,
                                      tie_slots=tie_slots)
        rep = solve_barrier(pp, tol=settings.solver_tol)
        newton += rep.newton_steps
        if rep.status == "infeasible":
            if not _floor_tight_or_violated(cur, channels, cfg):
                raise RuntimeError(
                    "front-end stage reported infeasible from a point with "
                    "energy slack; surrogate construction is unsound")
            skipped = True
            break
        cand = decode_front_solution(pp, rep.x, cfg, cur)
        rate_cur = min_rate(cur, channels, cfg)
        rate_new = min_rate(cand, channels, cfg)
        ok_cur = feasibility_report(cur, channels, cfg).ok
        if ok_cur and rate_new < rate_cur - RATE_SLIP * max(1.0, abs(rate_cur)):
            break
        cur = cand
        alphas.append(float(rep.objective))
        if len(alphas) >= 2 and abs(alphas[-1] - alphas[-2]) < settings.eps_inner:
            break
    return cur, {"alphas": alphas, "iterations": len(alphas),
                 "skipped": skipped, "newton_steps": newton,
                 "repair_steps": repair_steps, "closed_form": False}


def inner_loop_waveforms(design: Design, channels: ChannelSet,
                         cfg: SystemConfig,
                         settings: OptimizerSettings = None):
    """Transmit stage: repeat the waveform/power block until its floor stalls.

    Requires an interior slot split (0 < tau < T); the degenerate split has
    no information slot to optimize.
    """
    settings = settings or OptimizerSettings()
    if not 0.0 < design.tau < cfg.block_length:
        raise ValueError("transmit stage requires 0 < tau < T")
    fix_s = settings.variant == "baseline1"

    cur = design
    alphas = []
    newton = 0
    skipped = False
    repair_steps = 0
    if not fix_s and _floor_violated(cur, channels, cfg):
        cur, repair_steps, repair_newton = _repair_energy_floors(
            cur, channels, cfg, settings, stage="wave")
        newton += repair_newton
    fixed = front_fixed_quantities(cur, channels, cfg)
    for _ in range(settings.max_inner):
        forms = assemble_quadratic_forms(cur, channels, cfg)
        pack = build_waveform_surrogates(channels, cfg, cur, forms=forms)
        try:
            pp = build_waveform_subproblem(pack, cfg, cur.tau, fixed,
                                           fix_s=fix_s)
        except ValueError as exc:
            if fix_s and "energy floor" in str(exc):
                # Fixed waveforms cannot lift the floor; the slot split can.
                skipped = True
                break
            raise
        rep = solve_barrier(pp, tol=settings.solver_tol)
        newton += rep.newton_steps
        if rep.status == "infeasible":
            if not _floor_tight_or_violated(cur, channels, cfg):
                raise RuntimeError(
                    "transmit stage reported infeasible from a point with "
                    "energy slack; surrogate construction is unsound")
            skipped = True
            break
        cand = decode_waveform_solution(pp, rep.x, cfg, cur)
        rate_cur = min_rate(cur, channels, cfg)
        rate_new = min_rate(cand, channels, cfg)
        ok_cur = feasibility_report(cur, channels, cfg).ok
        if ok_cur and rate_new < rate_cur - RATE_SLIP * max(1.0, abs(rate_cur)):
            break
        cur = cand
        alphas.append(float(rep.objective))
        if len(alphas) >= 2 and abs(alphas[-1] - alphas[-2]) < settings.eps_inner:
            break
    return cur, {"alphas": alphas, "iterations": len(alphas),
                 "skipped": skipped, "newton_steps": newton,
                 "repair_steps": repair_steps, "closed_form": False}


# ---------------------------------------------------------------------------
# Outer driver
# ---------------------------------------------------------------------------


def _used_tau(tau_opt: float, cfg: SystemConfig) -> float:
    """Clamp the exact split into the open interval the builders need."""
    t_len = cfg.block_length
    return float(min(max(tau_opt, TAU_FLOOR * t_len),
                     (1.0 - TAU_FLOOR) * t_len))


def algorithm1(channels: ChannelSet, cfg: SystemConfig,
               settings: OptimizerSettings = None,
               design0: Design = None):
    """Full alternating optimization; returns ``(design, trace)``.

    The returned design satisfies every constraint (checked at the shared
    feasibility tolerance) and the trace's min-rate column is non-decreasing
    across feasible rows.
    """
    settings = settings or OptimizerSettings()
    if settings.variant == "t_f_static" and cfg.mode != "relay":
        raise ValueError("subband-static variant needs per-subband front-end "
                         "matrices; the surface design has none")
    design = design0 if design0 is not None else \
        initialize_design(channels, cfg, settings)
    trace = RunTrace(mode=cfg.mode, variant=settings.variant)
    clock0 = time.perf_counter()
    prev_rate = min_rate(design, channels, cfg)
    status = "max-outer"
    for index in range(settings.max_outer):
        round0 = time.perf_counter()
        tau_before = design.tau
        try:
            design, front_info = inner_loop_matrices(design, channels, cfg,
                                                     settings)
            design, wave_info = inner_loop_waveforms(design, channels, cfg,
                                                     settings)
        except InfeasibleRun as exc:
            trace.status = "infeasible"
            trace.total_ms = 1e3 * (time.perf_counter() - clock0)
            raise InfeasibleRun(str(exc), stage=exc.stage, trace=trace,
                                design=design) from None
        except EnergyTargetInfeasible as exc:
            trace.status = "infeasible"
            trace.total_ms = 1e3 * (time.perf_counter() - clock0)
            raise InfeasibleRun(str(exc), stage="energy-target", trace=trace,
                                design=design) from None
        try:
            tau_opt = tau_closed_form(design, channels, cfg)
        except TauInfeasible as exc:
            if front_info["repair_steps"] or wave_info["repair_steps"]:
                # The repair phase is still lifting the floors; keep the
                # current split and give the alternation another round.
                tau_opt = design.tau
            else:
                trace.status = "infeasible"
                trace.total_ms = 1e3 * (time.perf_counter() - clock0)
                raise InfeasibleRun(str(exc), stage="slot-split", trace=trace,
                                    design=design) from None
        design = design.replace(tau=_used_tau(tau_opt, cfg))

        report = feasibility_report(design, channels, cfg)
        rate_now = min_rate(design, channels, cfg)
        energy = np.asarray(harvested_energy(design, channels, cfg))
        trace.rows.append(OuterRecord(
            index=index,
            min_rate=float(rate_now),
            tau=float(design.tau),
            energy=[float(e) for e in energy],
            feasible=bool(report.ok),
            alphas_front=[float(a) for a in front_info["alphas"]],
            alphas_wave=[float(a) for a in wave_info["alphas"]],
            inner_front=front_info["iterations"],
            inner_wave=wave_info["iterations"],
            front_skipped=front_info["skipped"],
            wave_skipped=wave_info["skipped"],
            repair_steps=(front_info["repair_steps"]
                          + wave_info["repair_steps"]),
            newton_steps=(front_info["newton_steps"]
                          + wave_info["newton_steps"]),
            wall_ms=1e3 * (time.perf_counter() - round0),
        ))
        if (not report.ok and front_info["skipped"] and wave_info["skipped"]
                and front_info["repair_steps"] == 0
                and wave_info["repair_steps"] == 0
                and abs(design.tau - tau_before) <= 1e-15 * cfg.block_length):
            trace.status = "infeasible"
            trace.total_ms = 1e3 * (time.perf_counter() - clock0)
            label, violation = report.worst()
            raise InfeasibleRun(
                "no stage can improve an infeasible iterate (worst violation "
                f"{violation:.3g} at {label})", stage="stalled", trace=trace,
                design=design)
        if report.ok and abs(rate_now - prev_rate) < settings.eps_outer:
            status = "converged"
            break
        prev_rate = rate_now

    trace.total_ms = 1e3 * (time.perf_counter() - clock0)
    final_report = feasibility_report(design, channels, cfg)
    if not final_report.ok:
        trace.status = "infeasible"
        label, violation = final_report.worst()
        raise InfeasibleRun(
            f"no feasible iterate reached within {settings.max_outer} outer "
            f"rounds (worst violation {violation:.3g} at {label})",
            stage="outer", trace=trace, design=design)
    trace.status = status
    return design, trace


def run_variant(channels: ChannelSet, cfg: SystemConfig,
                settings: OptimizerSettings = None,
                design0: Design = None):
    """Variant-aware entry point; validates the variant/mode pairing."""
    settings = settings or OptimizerSettings()
    return algorithm1(channels, cfg, settings, design0=design0)
