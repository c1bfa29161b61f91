"""Assembly of the convex subproblem families from surrogate packs.

Front-end subproblems (relay matrices or surface coefficient vectors)
maximize the rate floor alpha subject to the node-energy budget, the
harvested-energy minorizer, and the per-pair rate minorizer; the surface
variant adds linear modulus cuts.  The waveform subproblem optimizes energy
waveforms and information powers under the transmitter and node budgets with
log-affine rate terms.

Tied-slot and tied-subband variants reuse the same assembly with aliased
variable blocks: stacking the separable surrogate's atoms onto one shared
slice is exactly its restriction to the shared subspace, so minorization and
curvature certificates carry over unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .canonical import PackedProblem, SubproblemBuilder
from .channels import ChannelSet
from .config import SystemConfig
from .linalg import unvec
from .model import Design, v_forms
from .surrogates import LOG2E, SurrogatePack

#: Relative margin used to place the alpha start strictly inside its caps.
ALPHA_MARGIN = 1e-9


def _alpha_start(caps: list[float]) -> float:
    floor = min(caps)
    return floor - ALPHA_MARGIN * max(1.0, abs(floor))


def _check_tied(prev: Design, tie_slots: bool, tie_subbands: bool) -> None:
    """Aliased blocks need an iterate that already lives in the shared set."""
    if tie_slots:
        if prev.mode == "relay":
            same = np.allclose(prev.u_e, prev.u_i, rtol=1e-9, atol=0.0)
        else:
            same = np.allclose(prev.theta_e, prev.theta_i, rtol=1e-9, atol=0.0)
        if not same:
            raise ValueError("tied-slot subproblem needs matching slot designs")
    if tie_subbands:
        if not np.allclose(prev.u_e, prev.u_e[:1], rtol=1e-9, atol=0.0) or \
                not np.allclose(prev.u_i, prev.u_i[:1], rtol=1e-9, atol=0.0):
            raise ValueError(
                "tied-subband subproblem needs one shared matrix across subbands")


def _add_energy_rows(b: SubproblemBuilder, pack: SurrogatePack,
                     cfg: SystemConfig, block_names: list[str],
                     slack_name: str = None) -> None:
    """Harvested-energy rows ``E_min_k - minorizer_k <= 0`` (skipped at 0).

    The centered beta/2 quadratic keeps the large curvature piece exact;
    only the modest gradient terms are folded into linear/constant parts.
    Rows are normalized so that typical slacks are order one.  With
    ``slack_name`` each row gains ``+ z`` for that scalar block, turning the
    rows into ``z <= (minorizer_k - E_min_k) / scale_k``; maximizing ``z``
    then lifts the worst normalized energy slack.
    """
    energy = pack.energy
    for k in range(cfg.n_pairs):
        e_min = cfg.e_min[k]
        if e_min <= 0:
            continue
        scale = max(e_min, energy.energy_at_x0[k])
        const = (e_min - energy.energy_at_x0[k]) / scale
        lin = {}
        quads = []
        for name, grad, x0 in zip(block_names, energy.grad_rows[k],
                                  energy.x0_blocks):
            const += float(np.real(grad @ x0)) / scale
            lin[name] = lin.get(name, 0) - grad / scale
            if energy.beta[k] > 0:
                half = 0.5 * energy.beta[k] / scale
                quads.append((name, half * np.eye(len(x0), dtype=complex), x0))
        if slack_name is not None:
            lin[slack_name] = np.array([1.0])
        b.add_constraint(f"c4_energy_k{k}", const=const, lin=lin, quads=quads)


def _energy_slack_start(pack: SurrogatePack, cfg: SystemConfig) -> float:
    """Strictly feasible start for the worst-slack variable ``z``."""
    vals = []
    for k in range(cfg.n_pairs):
        e_min = cfg.e_min[k]
        if e_min <= 0:
            continue
        scale = max(e_min, pack.energy.energy_at_x0[k])
        vals.append((pack.energy.energy_at_x0[k] - e_min) / scale)
    if not vals:
        raise ValueError("energy objective needs at least one active "
                         "energy floor")
    z = min(vals)
    return z - 1e-9 * max(1.0, abs(z))


def _declare_front_blocks(b: SubproblemBuilder, mode: str, n_sub: int,
                          dim: int, tie_slots: bool, tie_subbands: bool) -> None:
    """Blocks uE0..uE{N-1}, uI0..uI{N-1}; shared structure via aliases."""
    if mode == "irs" or tie_subbands:
        e_ref = b.add_complex_block("uE0", dim)
        for n in range(1, n_sub):
            b.alias_block(f"uE{n}", e_ref)
        if tie_slots:
            for n in range(n_sub):
                b.alias_block(f"uI{n}", e_ref)
        else:
            i_ref = b.add_complex_block("uI0", dim)
            for n in range(1, n_sub):
                b.alias_block(f"uI{n}", i_ref)
    else:
        e_refs = [b.add_complex_block(f"uE{n}", dim) for n in range(n_sub)]
        if tie_slots:
            for n in range(n_sub):
                b.alias_block(f"uI{n}", e_refs[n])
        else:
            for n in range(n_sub):
                b.add_complex_block(f"uI{n}", dim)


def _build_front(pack: SurrogatePack, forms, cfg: SystemConfig, tau: float,
                 tie_slots: bool, tie_subbands: bool,
                 objective: str = "rate") -> PackedProblem:
    if pack.target != "matrices":
        raise ValueError("front-end builder needs a matrices-target pack")
    if objective not in ("rate", "energy"):
        raise ValueError("objective must be 'rate' or 'energy'")
    t, rho = cfg.block_length, cfg.rho
    if not 0.0 < tau < t:
        raise ValueError("front-end subproblem requires 0 < tau < T")
    n_sub, dim = cfg.n_subbands, forms.dim
    prev = pack.expansion
    _check_tied(prev, tie_slots, tie_subbands and forms.mode == "relay")

    b = SubproblemBuilder()
    if objective == "rate":
        b.add_real_block("alpha", 1)
    else:
        b.add_real_block("eslack", 1)
    _declare_front_blocks(b, forms.mode, n_sub, dim, tie_slots, tie_subbands)
    b.maximize("alpha" if objective == "rate" else "eslack")

    u0_e = prev.front_vectors("E")
    u0_i = prev.front_vectors("I")
    if forms.mode == "irs" or tie_subbands:
        b.set_start("uE0", u0_e[0])
        if not tie_slots:
            b.set_start("uI0", u0_i[0])
    else:
        for n in range(n_sub):
            b.set_start(f"uE{n}", u0_e[n])
        if not tie_slots:
            for n in range(n_sub):
                b.set_start(f"uI{n}", u0_i[n])

    # Node energy budget, one row per subband, normalized by its cap.
    for n in range(n_sub):
        budget = t * cfg.p_rf_node[n]
        b.add_constraint(
            f"c3_node_n{n}", const=-1.0,
            quads=[(f"uE{n}", (tau / (2 * rho)) / budget * forms.a_tilde_e[n], None),
                   (f"uI{n}", ((t - tau) / (2 * rho)) / budget * forms.a_tilde_i[n],
                    None)])

    # Harvested-energy minorizer over the energy-slot blocks.
    energy_names = ["uE0"] if forms.mode == "irs" \
        else [f"uE{n}" for n in range(n_sub)]
    _add_energy_rows(b, pack, cfg, energy_names,
                     slack_name=None if objective == "rate" else "eslack")

    # Rate floor: alpha below each pair's rate-sum minorizer.
    rate = pack.rate
    if objective == "rate":
        for k in range(cfg.n_pairs):
            const = 0.0
            lin = {"alpha": np.array([1.0])}
            quads = []
            for n in range(n_sub):
                name = f"uI{n}"
                c_n = rate.center[n]
                const += rate.const_c[n, k] \
                    - float(np.real(np.conj(rate.lin_c[n, k]) @ c_n))
                lin[name] = lin.get(name, 0) + np.conj(rate.lin_c[n, k])
                quads.append((name, rate.f_quad[n, k], c_n))
            b.add_constraint(f"c5_rate_k{k}", const=const, lin=lin, quads=quads)

    # Surface modulus cuts: Re{anchor_m^* theta_m} / |anchor_m| >= 1.
    if forms.mode == "irs":
        slots = [("E", pack.anchors_e, "uE0")]
        if not tie_slots:
            slots.append(("I", pack.anchors_i, "uI0"))
        for slot, anchors, name in slots:
            for m in range(dim):
                mag = abs(anchors[m])
                if mag == 0:
                    raise ValueError("modulus cut needs a nonzero anchor")
                row = np.zeros(dim, dtype=complex)
                row[m] = np.conj(anchors[m]) / mag
                b.add_constraint(f"cmod_{slot}_m{m}", const=1.0,
                                 lin={name: -row})

    if objective == "rate":
        caps = [-float(np.sum(rate.const_c[:, k])) for k in range(cfg.n_pairs)]
        b.set_start("alpha", np.array([_alpha_start(caps)]))
    else:
        b.set_start("eslack", np.array([_energy_slack_start(pack, cfg)]))
    return b.build()


def tied_slot_ball(cfg: SystemConfig, forms, tau: float):
    """Rate-surrogate trust ball when both slots share one front-end.

    The shared vector u satisfies, per subband, ``u^H Q_n u <= p_rf_node[n]``
    with ``Q_n`` the slot-weighted node-energy form; that set equals the
    shared-slot node budget exactly, so the per-subband majorizer balls each
    contain the tied feasible set.
    """
    t, rho = cfg.block_length, cfg.rho
    q = np.stack([(tau / (2 * rho * t)) * forms.a_tilde_e[n]
                  + ((t - tau) / (2 * rho * t)) * forms.a_tilde_i[n]
                  for n in range(cfg.n_subbands)])
    return q, cfg.p_rf_node.copy()


def build_relay_matrix_subproblem(pack: SurrogatePack, forms,
                                  cfg: SystemConfig, tau: float,
                                  tie_slots: bool = False,
                                  tie_subbands: bool = False,
                                  objective: str = "rate") -> PackedProblem:
    """Front-end subproblem over per-subband relay matrices.

    ``objective="energy"`` swaps the rate floor for the worst normalized
    energy slack - the recovery problem used when the floors are violated.
    """
    if forms.mode != "relay":
        raise ValueError("relay builder requires relay-mode forms")
    return _build_front(pack, forms, cfg, tau, tie_slots, tie_subbands,
                        objective=objective)


def build_irs_subproblem(pack: SurrogatePack, forms, cfg: SystemConfig,
                         tau: float, tie_slots: bool = False,
                         objective: str = "rate") -> PackedProblem:
    """Front-end subproblem over the surface's two coefficient vectors."""
    if forms.mode != "irs":
        raise ValueError("surface builder requires surface-mode forms")
    return _build_front(pack, forms, cfg, tau, tie_slots, tie_subbands=False,
                        objective=objective)


@dataclass(frozen=True)
class FrontFixed:
    """Front-end-dependent constants consumed by the waveform subproblem."""

    v_e: np.ndarray    # (N, K, K) Hermitian PSD
    v_i: np.ndarray    # (N, K, K)
    fro_e: np.ndarray  # (N,) squared Frobenius norm, energy slot
    fro_i: np.ndarray  # (N,)


def front_fixed_quantities(design: Design, channels: ChannelSet,
                           cfg: SystemConfig) -> FrontFixed:
    mats_e = design.slot_matrices("E")
    mats_i = design.slot_matrices("I")
    return FrontFixed(
        v_e=v_forms(channels, mats_e), v_i=v_forms(channels, mats_i),
        fro_e=np.array([float(np.sum(np.abs(m) ** 2)) for m in mats_e]),
        fro_i=np.array([float(np.sum(np.abs(m) ** 2)) for m in mats_i]))


def build_waveform_subproblem(pack: SurrogatePack, cfg: SystemConfig,
                              tau: float, fixed: FrontFixed,
                              fix_s: bool = False,
                              objective: str = "rate") -> PackedProblem:
    """Waveform/power subproblem at a fixed front-end and slot split.

    With ``fix_s`` the energy waveforms stay at the expansion point and only
    the information powers move; their fixed contributions fold into the
    constraint constants, and the energy floor must already hold at the
    expansion point since nothing left in the problem can raise it.
    ``objective="energy"`` swaps the rate floor for the worst normalized
    energy slack (incompatible with ``fix_s``: fixed waveforms leave nothing
    that could move the harvested energy).
    """
    if pack.target != "waveforms":
        raise ValueError("waveform builder needs a waveforms-target pack")
    if objective not in ("rate", "energy"):
        raise ValueError("objective must be 'rate' or 'energy'")
    if fix_s and objective == "energy":
        raise ValueError("energy objective needs movable energy waveforms")
    t, rho = cfg.block_length, cfg.rho
    if not 0.0 < tau < t:
        raise ValueError("waveform subproblem requires 0 < tau < T")
    n_sub, n_pairs = cfg.n_subbands, cfg.n_pairs
    prev = pack.expansion
    rate = pack.rate
    b = SubproblemBuilder()
    if objective == "rate":
        b.add_real_block("alpha", 1)
    else:
        b.add_real_block("eslack", 1)
    for n in range(n_sub):
        if not fix_s:
            b.add_complex_block(f"s{n}", n_pairs)
            b.set_start(f"s{n}", prev.s_e[n])
        b.add_real_block(f"p{n}", n_pairs)
        b.set_start(f"p{n}", prev.p_i[n])
    b.maximize("alpha" if objective == "rate" else "eslack")

    # Per-transmitter budget on each subband, normalized by its cap.
    for n in range(n_sub):
        for k in range(n_pairs):
            budget = t * cfg.p_rf_tx[k, n]
            row = np.zeros(n_pairs)
            row[k] = ((t - tau) / (2 * rho)) / budget
            if fix_s:
                used = (tau / (2 * rho)) * abs(prev.s_e[n, k]) ** 2
                b.add_constraint(f"c2_tx_k{k}_n{n}",
                                 const=used / budget - 1.0, lin={f"p{n}": row})
            else:
                sel = np.zeros((n_pairs, n_pairs), dtype=complex)
                sel[k, k] = (tau / (2 * rho)) / budget
                b.add_constraint(f"c2_tx_k{k}_n{n}", const=-1.0,
                                 lin={f"p{n}": row},
                                 quads=[(f"s{n}", sel, None)])

    # Node energy budget: quadratic in s, linear in p, plus fixed noise terms.
    for n in range(n_sub):
        budget = t * cfg.p_rf_node[n]
        noise = cfg.sigma2_node[n] * ((tau / (2 * rho)) * fixed.fro_e[n]
                                      + ((t - tau) / (2 * rho)) * fixed.fro_i[n])
        row = ((t - tau) / (2 * rho)) * np.real(np.diagonal(fixed.v_i[n])) / budget
        if fix_s:
            used = (tau / (2 * rho)) * float(
                np.real(np.vdot(prev.s_e[n], fixed.v_e[n] @ prev.s_e[n])))
            b.add_constraint(f"c3_node_n{n}",
                             const=(noise + used) / budget - 1.0,
                             lin={f"p{n}": row})
        else:
            b.add_constraint(
                f"c3_node_n{n}", const=noise / budget - 1.0,
                lin={f"p{n}": row},
                quads=[(f"s{n}", (tau / (2 * rho)) / budget * fixed.v_e[n], None)])

    # Information powers stay nonnegative.
    for n in range(n_sub):
        for k in range(n_pairs):
            row = np.zeros(n_pairs)
            row[k] = -1.0
            b.add_constraint(f"c_psign_k{k}_n{n}", lin={f"p{n}": row})

    # Harvested-energy minorizer over the energy-waveform blocks.
    if fix_s:
        short = [k for k in range(n_pairs)
                 if cfg.e_min[k] > pack.energy.energy_at_x0[k] * (1 + 1e-9)
                 and cfg.e_min[k] > 0.0]
        if short:
            raise ValueError(
                "fixed energy waveforms miss the energy floor for pairs "
                f"{short}")
    else:
        _add_energy_rows(b, pack, cfg, [f"s{n}" for n in range(n_sub)],
                         slack_name=None if objective == "rate" else "eslack")

    # Rate floor: alpha below each pair's log-affine rate minorizer.
    if objective == "rate":
        for k in range(n_pairs):
            const = 0.0
            lin = {"alpha": np.array([1.0])}
            logs = []
            for n in range(n_sub):
                const += rate.lin_const[n, k]
                lin[f"p{n}"] = lin.get(f"p{n}", 0) + rate.lin[n, k]
                logs.append((LOG2E, f"p{n}", rate.q[n, k], rate.zeta_b[n, k]))
            b.add_constraint(f"c5_rate_k{k}", const=const, lin=lin, logs=logs)

        caps = []
        for k in range(n_pairs):
            total = 0.0
            for n in range(n_sub):
                total += float(np.log2(float(rate.q[n, k] @ prev.p_i[n])
                                       + rate.zeta_b[n, k]))
                total -= rate.lin_const[n, k] \
                    + float(rate.lin[n, k] @ prev.p_i[n])
            caps.append(total)
        b.set_start("alpha", np.array([_alpha_start(caps)]))
    else:
        b.set_start("eslack", np.array([_energy_slack_start(pack, cfg)]))
    return b.build()


# ---------------------------------------------------------------------------
# Decoding solver points back into designs
# ---------------------------------------------------------------------------


def decode_front_solution(pp: PackedProblem, x: np.ndarray, cfg: SystemConfig,
                          prev: Design) -> Design:
    """Design with the front-end replaced by the solver point."""
    n_sub, m = cfg.n_subbands, cfg.n_elements
    if prev.mode == "relay":
        u_e = np.stack([unvec(pp.get_complex(x, f"uE{n}"), m, m)
                        for n in range(n_sub)])
        u_i = np.stack([unvec(pp.get_complex(x, f"uI{n}"), m, m)
                        for n in range(n_sub)])
        return prev.replace(u_e=u_e, u_i=u_i)
    return prev.replace(theta_e=pp.get_complex(x, "uE0"),
                        theta_i=pp.get_complex(x, "uI0"))


def decode_waveform_solution(pp: PackedProblem, x: np.ndarray,
                             cfg: SystemConfig, prev: Design) -> Design:
    """Design with waveforms and information powers replaced."""
    n_sub, n_pairs = cfg.n_subbands, cfg.n_pairs
    if "s0" in pp.blocks:
        s_e = np.stack([pp.get_complex(x, f"s{n}") for n in range(n_sub)])
    else:
        s_e = prev.s_e.copy()
    p_i = np.empty((n_sub, n_pairs))
    for n in range(n_sub):
        ref = pp.block(f"p{n}")
        p_i[n] = x[ref.start:ref.start + ref.size]
    return prev.replace(s_e=s_e, p_i=np.maximum(p_i, 0.0))
