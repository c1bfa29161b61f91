"""Minorizers and majorizers used by the alternating convex-subproblem scheme.

Four families:

* the tangent-line bound of log2 (turns rate denominators into affine terms),
* a quadratic majorizer of ``-log2(x^H T x + nu)`` valid on a power ball,
* a concave-quadratic minorizer of the nonlinear harvested-energy constraint,
  driven by a certified curvature bound ``beta`` (convex-minus-convex split),
* a linear minorizer of ``|theta|`` for the surface's modulus constraint.

Every surrogate touches its target at the expansion point; dominance holds on
the declared feasible region, which the test-suite samples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import ChannelSet
from .config import SystemConfig
from .linalg import hermitize, principal_eigenpair, realify, to_real
from .model import Design, QuadraticForms, eh_curve, zeta_a_table

LOG2E = float(np.log2(np.e))

#: Safety factor applied on top of the analytic curvature bound.
BETA_SAFETY = 1.1

#: Log-spaced evaluation points used to maximize the scalar curvature factors.
BETA_GRID_POINTS = 4096
BETA_GRID_DECADES = 12.0


class EnergyTargetInfeasible(RuntimeError):
    """The minimum-energy target exceeds what the harvester curve can deliver."""


# ---------------------------------------------------------------------------
# Elementary bounds
# ---------------------------------------------------------------------------


def log_affine_minorizer(x: float, x0: float) -> float:
    """Tangent bound of log2 at ``x0``: log2(x0) + log2(e)*(x-x0)/x0 >= log2(x)."""
    if x0 <= 0:
        raise ValueError("expansion point of the log bound must be positive")
    return float(np.log2(x0) + LOG2E * (x - x0) / x0)


def unit_modulus_minorizer(theta: complex, theta0: complex) -> float:
    """Linear lower bound of |theta| touching at theta0: Re{theta* theta0/|theta0|}."""
    mag = abs(theta0)
    if mag == 0:
        raise ValueError("modulus minorizer needs a nonzero expansion point")
    return float(np.real(np.conj(theta) * theta0 / mag))


def lemma1_majorizer(tm: np.ndarray, nu: float, q: np.ndarray, p: float,
                     x0: np.ndarray) -> tuple[np.ndarray, float]:
    """Quadratic majorizer of ``s(x) = -log2(x^H Tm x + nu)`` on a power ball.

    Returns ``(b, d_coef)`` such that on ``{x : x^H Q x <= P}``::

        s(x) <= s(x0) + Re{b^H (x - x0)} + d_coef * ||x - x0||^2

    with ``b = -2 log2(e) Tm x0 / (x0^H Tm x0 + nu)`` and
    ``d_coef = 4P / (w1^H Q w1)`` where ``w1`` is the principal eigenvector
    of ``Tm``.
    """
    tm = hermitize(tm)
    q = hermitize(q)
    den = float(np.real(x0.conj() @ tm @ x0)) + nu
    if den <= 0:
        raise ValueError("x0^H Tm x0 + nu must be positive")
    b = -2.0 * LOG2E * (tm @ x0) / den
    w1 = principal_eigenpair(tm).vector
    curvature_den = float(np.real(w1.conj() @ q @ w1))
    if curvature_den <= 0:
        raise ValueError("degenerate power ball: w1^H Q w1 = 0; regularize Q")
    d_coef = 4.0 * p / curvature_den
    return b, d_coef


# ---------------------------------------------------------------------------
# Rate-constraint surrogate for the front-end subproblem
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class C5MatrixPack:
    """Per-(n, k) quadratic surrogate pieces of the rate constraint.

    The constraint reads ``-sum_n {u_n^H F[n,k] u_n + Re{f[n,k]^H u_n} +
    d[n,k]} >= alpha`` for each pair k, with ``u_n`` the information-slot
    front-end vector consumed by subband n.

    The centered fields restate each term around the expansion point,
    ``(u-u0)^H F (u-u0) + Re{lin_c^H (u-u0)} + const_c``; they are exactly
    equal in exact arithmetic but avoid the cancellation of the large
    isotropic-curvature constant, so downstream evaluation uses them.
    """

    f_quad: np.ndarray   # (N, K, D, D) complex Hermitian
    f_lin: np.ndarray    # (N, K, D) complex
    d_const: np.ndarray  # (N, K) real
    d_coef: np.ndarray   # (N, K) real: the isotropic curvature of each term
    center: np.ndarray   # (N, D) complex: expansion point u0
    lin_c: np.ndarray    # (N, K, D) complex: centered linear coefficient
    const_c: np.ndarray  # (N, K) real: centered constant


def c5_surrogate(forms: QuadraticForms, prev: Design, cfg: SystemConfig,
                 q_matrices: np.ndarray = None,
                 p_values: np.ndarray = None) -> C5MatrixPack:
    """Build the quadratic minorizer of every per-pair rate sum.

    ``q_matrices``/``p_values`` override the power ball used for the
    curvature constant (defaults: the information-slot node-energy form and
    ``2 rho T p_rf_node / (T - tau)``); tied-slot variants pass their own.
    """
    t, rho, tau = cfg.block_length, cfg.rho, prev.tau
    if tau >= t:
        raise ValueError("rate surrogate requires tau < T")
    n_sub, n_pairs, dim = forms.a.shape[0], forms.a.shape[1], forms.dim
    zeta = zeta_a_table(cfg)
    u0 = prev.front_vectors("I")

    f_quad = np.empty((n_sub, n_pairs, dim, dim), dtype=complex)
    f_lin = np.empty((n_sub, n_pairs, dim), dtype=complex)
    d_const = np.empty((n_sub, n_pairs))
    d_coef = np.empty((n_sub, n_pairs))
    lin_c = np.empty((n_sub, n_pairs, dim), dtype=complex)
    const_c = np.empty((n_sub, n_pairs))
    for n in range(n_sub):
        if q_matrices is None:
            q_n = forms.a_tilde_i[n]
            p_n = 2.0 * rho * t * cfg.p_rf_node[n] / (t - tau)
        else:
            q_n = q_matrices[n]
            p_n = p_values[n]
        for k in range(n_pairs):
            a_hat = hermitize(forms.a_hat[n, k])
            big_b = hermitize(forms.b[n, k])
            x0 = u0[n]
            b_vec, dc = lemma1_majorizer(big_b, zeta[n, k], q_n, p_n, x0)
            den_hat = float(np.real(x0.conj() @ a_hat @ x0)) + zeta[n, k]
            den_b = float(np.real(x0.conj() @ big_b @ x0)) + zeta[n, k]
            f_quad[n, k] = LOG2E * a_hat / den_hat + dc * np.eye(dim)
            f_lin[n, k] = b_vec - 2.0 * dc * x0
            d_const[n, k] = (
                np.log2(den_hat / den_b)
                - float(np.real(b_vec.conj() @ x0))
                + dc * float(np.real(x0.conj() @ x0))
                - LOG2E * (den_hat - zeta[n, k]) / den_hat
            )
            d_coef[n, k] = dc
            # Centered restatement: the dc x0 pieces cancel in closed form.
            lin_c[n, k] = 2.0 * LOG2E * (a_hat @ x0) / den_hat + b_vec
            const_c[n, k] = np.log2(den_hat / den_b)
    return C5MatrixPack(f_quad=f_quad, f_lin=f_lin, d_const=d_const, d_coef=d_coef,
                        center=np.array(u0), lin_c=lin_c, const_c=const_c)


def c5_surrogate_value(pack: C5MatrixPack, u: np.ndarray, k: int) -> float:
    """Value of the rate-sum minorizer for pair ``k`` at front-end rows ``u``."""
    total = 0.0
    for n in range(pack.f_quad.shape[0]):
        diff = u[n] - pack.center[n]
        total += float(np.real(diff.conj() @ pack.f_quad[n, k] @ diff))
        total += float(np.real(pack.lin_c[n, k].conj() @ diff))
        total += pack.const_c[n, k]
    return -total


# ---------------------------------------------------------------------------
# Curvature bound for the harvested-energy constraint
# ---------------------------------------------------------------------------


def _neg_part_factors(log_p: np.ndarray, cfg: SystemConfig) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise negative parts of the harvest curve's first two derivatives.

    For ``G(p) = exp(a ln^2 p + b ln p + c)`` the derivatives factor as
    ``G' = e^{a ln^2 p} p^{b-1} (2a ln p + b) e^c`` and
    ``G'' = e^{a ln^2 p} p^{b-2} (4a^2 ln^2 p + (4ab-2a) ln p + b^2-b+2a) e^c``
    (the constant ``e^c`` is applied by the caller).  Returned are
    ``h1 = max(0, -G'/e^c)`` and ``h2 = max(0, -G''/e^c)``.
    """
    a, b = cfg.eh_a, cfg.eh_b
    envelope = np.exp(a * log_p**2)
    poly1 = 2.0 * a * log_p + b
    poly2 = 4.0 * a * a * log_p**2 + (4.0 * a * b - 2.0 * a) * log_p + b * b - b + 2.0 * a
    h1 = np.maximum(0.0, -poly1) * envelope * np.exp((b - 1.0) * log_p)
    h2 = np.maximum(0.0, -poly2) * envelope * np.exp((b - 2.0) * log_p)
    return h1, h2


def _energy_blocks(forms: QuadraticForms, cfg: SystemConfig, tau: float, which: str):
    """Variable-block structure of the harvested-energy function.

    Returns ``(matrices[k][block], norm_bounds[block])``: per pair k a list
    of Hermitian forms (one per variable block) with ``p_k = 1/2 sum_b
    x_b^H A_b x_b``, plus a sup of ``||x_b||^2`` over the power-feasible set.
    """
    t, rho = cfg.block_length, cfg.rho
    n_sub, n_pairs = forms.a_bar.shape[0], forms.a_bar.shape[1]
    if which == "waveforms":
        mats = [[hermitize(forms.xi[n, k]) for n in range(n_sub)] for k in range(n_pairs)]
        bounds = [2.0 * rho * t * float(np.sum(cfg.p_rf_tx[:, n])) / tau for n in range(n_sub)]
        return mats, bounds
    if which != "matrices":
        raise ValueError("which must be 'matrices' or 'waveforms'")
    if forms.mode == "relay":
        mats = [[hermitize(forms.a_bar[n, k]) for n in range(n_sub)] for k in range(n_pairs)]
        bounds = [2.0 * rho * t * cfg.p_rf_node[n] / (tau * cfg.sigma2_node[n])
                  for n in range(n_sub)]
        return mats, bounds
    # Surface: one shared coefficient block across subbands.
    mats = [[hermitize(np.sum(forms.a_bar[:, k], axis=0))] for k in range(n_pairs)]
    bounds = [float(np.min(2.0 * rho * t * cfg.p_rf_node / (tau * cfg.sigma2_node)))]
    return mats, bounds


def check_energy_target_reachable(cfg: SystemConfig, tau: float) -> np.ndarray:
    """Root of the harvest curve's level-set quadratic for each pair's target.

    Solving ``E(p) = E_min`` in ``ln p`` gives discriminant
    ``b^2 + 4a ln(rho E_min / (tau e^c))``; a negative value means the target
    exceeds the curve's peak at this ``tau`` and raises
    :class:`EnergyTargetInfeasible`.  Returns the smallest admissible input
    power per pair (``inf`` where ``E_min = 0``).
    """
    a, b, c = cfg.eh_a, cfg.eh_b, cfg.eh_c
    rho = cfg.rho
    out = np.full(cfg.n_pairs, np.inf)
    for k in range(cfg.n_pairs):
        e_min = cfg.e_min[k]
        if e_min <= 0:
            continue
        if tau <= 0:
            raise EnergyTargetInfeasible(
                f"pair {k}: positive energy target with no energy slot")
        disc = b * b + 4.0 * a * np.log(rho * e_min / (tau * np.exp(c)))
        if disc < 0:
            peak = (tau / rho) * np.exp(c) * np.exp(b * b / (-4.0 * a))
            raise EnergyTargetInfeasible(
                f"pair {k}: target {e_min:.3e} J exceeds the curve peak "
                f"{peak:.3e} J at tau={tau:.4f}")
        out[k] = float(np.exp((-b + np.sqrt(disc)) / (2.0 * a)))
    return out


def beta_bound(channels: ChannelSet, forms: QuadraticForms, cfg: SystemConfig,
               prev: Design, which: str) -> np.ndarray:
    """Certified curvature constants for the energy-constraint split, (K, N).

    Guarantees ``hessian(E_k) + beta I >= 0`` over the power-feasible set:
    with ``E = kappa G(p(x))`` and ``p = 1/2 sum_b x_b^H A_b x_b``, the
    Hessian is ``kappa [G' blockdiag(A_b) + G'' grad_p grad_p^T]`` whose
    negative part is dominated by ``kappa L [h1(p) + 2 p h2(p)]`` where
    ``L = max_b lambda_max(A_b)`` (using ``||grad p||^2 <= 2 p L``).  The
    scalar factor is maximized over the reachable interval ``(0, p_ub]`` on a
    dense log grid and padded by a safety factor.
    """
    tau = prev.tau
    if tau <= 0:
        raise ValueError("curvature bound needs tau > 0")
    if np.any(cfg.e_min > 0):
        check_energy_target_reachable(cfg, tau)
    kappa = (tau / cfg.rho) * np.exp(cfg.eh_c)
    mats, bounds = _energy_blocks(forms, cfg, tau, which)
    n_pairs, n_sub = cfg.n_pairs, cfg.n_subbands
    out = np.zeros((n_pairs, n_sub))
    for k in range(n_pairs):
        lam = np.array([max(np.linalg.eigvalsh(m)[-1], 0.0) for m in mats[k]])
        lam_top = float(lam.max())
        p_ub = 0.5 * float(lam @ np.asarray(bounds))
        if lam_top <= 0 or p_ub <= 0:
            continue
        log_hi = np.log(p_ub)
        log_grid = np.linspace(log_hi - BETA_GRID_DECADES * np.log(10.0), log_hi,
                               BETA_GRID_POINTS)
        h1, h2 = _neg_part_factors(log_grid, cfg)
        factor = float(np.max(h1 + 2.0 * np.exp(log_grid) * h2))
        out[k, :] = BETA_SAFETY * kappa * lam_top * factor
    return out


def energy_hessian(forms: QuadraticForms, cfg: SystemConfig, tau: float,
                   which: str, blocks: list[np.ndarray], k: int) -> np.ndarray:
    """Exact real-composite Hessian of E_k at the given variable blocks.

    Diagnostic companion of :func:`beta_bound` (sampled-curvature
    cross-checks); not used by production runs.
    """
    mats, _ = _energy_blocks(forms, cfg, tau, which)
    kappa = (tau / cfg.rho) * np.exp(cfg.eh_c)
    a, b = cfg.eh_a, cfg.eh_b
    s_blocks = [realify(m) for m in mats[k]]
    z_blocks = [to_real(x) for x in blocks]
    p = 0.5 * sum(float(z @ s @ z) for s, z in zip(s_blocks, z_blocks))
    sizes = [len(z) for z in z_blocks]
    total = sum(sizes)
    if p <= 0:
        return np.zeros((total, total))
    lp = np.log(p)
    g_val = np.exp(a * lp**2 + b * lp)
    g1 = g_val / p * (2 * a * lp + b)
    g2 = g_val / p**2 * (4 * a * a * lp**2 + (4 * a * b - 2 * a) * lp + b * b - b + 2 * a)
    grad = np.concatenate([s @ z for s, z in zip(s_blocks, z_blocks)])
    hess = kappa * g2 * np.outer(grad, grad)
    offset = 0
    for s, size in zip(s_blocks, sizes):
        hess[offset:offset + size, offset:offset + size] += kappa * g1 * s
        offset += size
    return hess


def beta_bound_sampled(channels: ChannelSet, forms: QuadraticForms, cfg: SystemConfig,
                       prev: Design, which: str, samples: int = 200,
                       seed: int = 0) -> np.ndarray:
    """Diagnostic curvature bound from sampled exact Hessians, (K, N).

    Draws random points in the power-feasible ball, evaluates the exact
    Hessian of each E_k, and returns the padded worst negative eigenvalue.
    Production runs use :func:`beta_bound`; this exists to cross-check it.
    """
    rng = np.random.default_rng(seed)
    mats, bounds = _energy_blocks(forms, cfg, prev.tau, which)
    n_pairs, n_sub = cfg.n_pairs, cfg.n_subbands
    out = np.zeros((n_pairs, n_sub))
    for k in range(n_pairs):
        dims = [m.shape[0] for m in mats[k]]
        worst = 0.0
        for _ in range(samples):
            blocks = []
            for dim, cap in zip(dims, bounds):
                x = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
                radius = np.sqrt(cap * rng.uniform() ** (1.0 / dim))
                blocks.append(x / np.linalg.norm(x) * radius)
            hess = energy_hessian(forms, cfg, prev.tau, which, blocks, k)
            lo = float(np.linalg.eigvalsh(hess)[0]) if hess.size else 0.0
            worst = min(worst, lo)
        out[k, :] = BETA_SAFETY * max(0.0, -worst)
    return out


# ---------------------------------------------------------------------------
# Energy-constraint surrogate
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class C4Pack:
    """Concave-quadratic minorizer of each pair's harvested energy.

    For pair k the bound reads::

        E_k(x) >= const[k] + sum_b Re{vartheta[k][b] x_b} - beta[k]/2 * sum_b ||x_b||^2

    where blocks follow the owning subproblem's variable layout (per-subband
    for relay matrices and waveforms; a single block for the surface).
    ``omega[k]`` is the harvester input power at the expansion point and
    ``active[k]`` marks a zero-power expansion (degenerate gradient).
    """

    which: str
    beta: np.ndarray          # (K,)
    omega: np.ndarray         # (K,)
    energy_at_x0: np.ndarray  # (K,)
    vartheta: list            # [k][block] complex rows
    const: np.ndarray         # (K,)
    x0_blocks: list           # [block] complex vectors (expansion point)
    active: np.ndarray        # (K,) bool
    #: Centered restatement ``E(x0) + sum_b Re{grad_rows[k][b] (x_b - x0_b)}
    #: - beta/2 sum_b ||x_b - x0_b||^2`` -- same bound, no large-constant
    #: cancellation; downstream evaluation uses it.
    grad_rows: list = None    # [k][block] complex rows


def c4_surrogate(channels: ChannelSet, prev: Design, beta: np.ndarray,
                 cfg: SystemConfig, which: str,
                 forms: QuadraticForms = None) -> C4Pack:
    """Minorize every harvested-energy constraint at the previous iterate.

    ``beta`` is the (K, N) output of :func:`beta_bound` (constant across n);
    the linear coefficient combines ``beta x0^H`` with the energy gradient
    ``(tau/rho) e^c G'(omega) x0^H A_b`` exactly as the split prescribes.
    """
    from .model import assemble_quadratic_forms  # local to avoid cycle at import

    if forms is None:
        forms = assemble_quadratic_forms(prev, channels, cfg)
    tau, rho = prev.tau, cfg.rho
    mats, _ = _energy_blocks(forms, cfg, max(tau, np.finfo(float).tiny), which)
    if which == "waveforms":
        x0_blocks = [prev.s_e[n] for n in range(cfg.n_subbands)]
    elif forms.mode == "relay":
        u0 = prev.front_vectors("E")
        x0_blocks = [u0[n] for n in range(cfg.n_subbands)]
    else:
        x0_blocks = [prev.theta_e]

    a, b, c = cfg.eh_a, cfg.eh_b, cfg.eh_c
    kappa = (tau / rho) * np.exp(c)
    n_pairs = cfg.n_pairs
    beta_k = np.asarray(beta)[:, 0] if np.ndim(beta) == 2 else np.asarray(beta)
    omega = np.empty(n_pairs)
    e_at = np.empty(n_pairs)
    const = np.empty(n_pairs)
    active = np.zeros(n_pairs, dtype=bool)
    vartheta = []
    grad_rows = []
    norm0 = sum(float(np.real(x.conj() @ x)) for x in x0_blocks)
    for k in range(n_pairs):
        w = 0.5 * sum(float(np.real(x.conj() @ m @ x))
                      for m, x in zip(mats[k], x0_blocks))
        omega[k] = w
        if w > 0:
            lw = np.log(w)
            e_at[k] = kappa * np.exp(a * lw**2 + b * lw)
            slope = kappa * np.exp(a * lw**2) * w ** (b - 1.0) * (2.0 * a * lw + b)
        else:
            e_at[k] = 0.0
            slope = 0.0
            active[k] = True
        grads = [slope * (x.conj() @ m) for m, x in zip(mats[k], x0_blocks)]
        rows = [beta_k[k] * x.conj() + g for g, x in zip(grads, x0_blocks)]
        vartheta.append(rows)
        grad_rows.append(grads)
        lin_at_x0 = sum(float(np.real(row @ x)) for row, x in zip(rows, x0_blocks))
        const[k] = e_at[k] + 0.5 * beta_k[k] * norm0 - lin_at_x0
    return C4Pack(which=which, beta=beta_k, omega=omega, energy_at_x0=e_at,
                  vartheta=vartheta, const=const, x0_blocks=x0_blocks, active=active,
                  grad_rows=grad_rows)


def c4_surrogate_value(pack: C4Pack, blocks: list[np.ndarray], k: int) -> float:
    """Value of the energy minorizer for pair ``k`` at the given blocks."""
    total = pack.energy_at_x0[k]
    for grad, x, x0 in zip(pack.grad_rows[k], blocks, pack.x0_blocks):
        diff = x - x0
        total += float(np.real(grad @ diff))
        total -= 0.5 * pack.beta[k] * float(np.real(diff.conj() @ diff))
    return total


# ---------------------------------------------------------------------------
# Rate surrogate for the waveform/power subproblem
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PowerRatePack:
    """Per-(n, k) pieces of the power-domain rate minorizer.

    The constraint reads, for each pair k::

        sum_n { log2(q[n,k]^T p_n + zeta[n,k]) - lin_const[n,k]
                - lin[n,k]^T p_n } >= alpha

    with ``q = a + b`` (signal plus interference direction) and the affine
    pieces the tangent of the interference log at the previous powers.
    """

    q: np.ndarray          # (N, K, K)
    b: np.ndarray          # (N, K, K)
    zeta_b: np.ndarray     # (N, K)
    lin: np.ndarray        # (N, K, K)
    lin_const: np.ndarray  # (N, K)


def c5_power_surrogate(psi: np.ndarray, psi_tilde: np.ndarray, prev_p: np.ndarray,
                       cfg: SystemConfig) -> PowerRatePack:
    """Minorize each rate sum in the information powers at ``prev_p``.

    ``psi``/``psi_tilde`` are the gain tables of the fixed information-slot
    front-end; ``zeta_b`` folds the node-noise term sigma2_n psi~ together
    with the receiver-side constants.
    """
    if np.any(prev_p < 0):
        raise ValueError("previous powers must be nonnegative")
    n_sub, n_pairs = psi.shape[0], psi.shape[1]
    zeta_rx = zeta_a_table(cfg)
    q = np.empty((n_sub, n_pairs, n_pairs))
    b_dir = np.empty((n_sub, n_pairs, n_pairs))
    zeta_b = np.empty((n_sub, n_pairs))
    lin = np.empty((n_sub, n_pairs, n_pairs))
    lin_const = np.empty((n_sub, n_pairs))
    for n in range(n_sub):
        for k in range(n_pairs):
            row = psi[n, k].copy()
            signal = np.zeros(n_pairs)
            signal[k] = row[k]
            interference = row
            interference = interference.copy()
            interference[k] = 0.0
            b_dir[n, k] = interference
            q[n, k] = signal + interference
            zeta_b[n, k] = cfg.sigma2_node[n] * psi_tilde[n, k] + zeta_rx[n, k]
            den = float(interference @ prev_p[n]) + zeta_b[n, k]
            lin[n, k] = LOG2E * interference / den
            lin_const[n, k] = np.log2(den) - LOG2E * float(interference @ prev_p[n]) / den
    return PowerRatePack(q=q, b=b_dir, zeta_b=zeta_b, lin=lin, lin_const=lin_const)


def c5_power_surrogate_value(pack: PowerRatePack, p: np.ndarray, k: int) -> float:
    """Value of the power-domain rate minorizer for pair ``k`` at powers ``p``."""
    total = 0.0
    for n in range(pack.q.shape[0]):
        total += float(np.log2(float(pack.q[n, k] @ p[n]) + pack.zeta_b[n, k]))
        total -= pack.lin_const[n, k]
        total -= float(pack.lin[n, k] @ p[n])
    return total


# ---------------------------------------------------------------------------
# One-iteration aggregate
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SurrogatePack:
    """Everything one inner iteration's convex subproblem needs.

    ``target`` says which variable family the pack expands in: the front-end
    ("matrices") or the energy waveforms and information powers
    ("waveforms").  ``rate`` is a :class:`C5MatrixPack` or
    :class:`PowerRatePack` accordingly; ``energy`` the matching
    :class:`C4Pack`; ``beta`` the (K, N) curvature constants; ``expansion``
    a copy of the iterate the pack was built at.  ``anchors_e/i`` hold the
    surface's modulus-cut anchors (None for the relay).
    """

    target: str
    rate: object
    energy: C4Pack
    beta: np.ndarray
    expansion: Design
    anchors_e: np.ndarray = None
    anchors_i: np.ndarray = None

    @property
    def f_quad(self):
        return self.rate.f_quad

    @property
    def f_lin(self):
        return self.rate.f_lin

    @property
    def d_const(self):
        return self.rate.d_const

    @property
    def vartheta(self):
        return self.energy.vartheta

    @property
    def omega(self):
        return self.energy.omega


def build_front_surrogates(channels: ChannelSet, forms: QuadraticForms,
                           cfg: SystemConfig, prev: Design,
                           q_matrices: np.ndarray = None,
                           p_values: np.ndarray = None) -> SurrogatePack:
    """Assemble the front-end-iteration pack at the previous iterate."""
    rate = c5_surrogate(forms, prev, cfg, q_matrices=q_matrices, p_values=p_values)
    beta = beta_bound(channels, forms, cfg, prev, "matrices")
    energy = c4_surrogate(channels, prev, beta, cfg, "matrices", forms=forms)
    anchors_e = anchors_i = None
    if prev.mode == "irs":
        anchors_e = prev.theta_e.copy()
        anchors_i = prev.theta_i.copy()
    return SurrogatePack(target="matrices", rate=rate, energy=energy, beta=beta,
                         expansion=prev, anchors_e=anchors_e, anchors_i=anchors_i)


def build_waveform_surrogates(channels: ChannelSet, cfg: SystemConfig,
                              prev: Design,
                              forms: QuadraticForms = None) -> SurrogatePack:
    """Assemble the waveform/power-iteration pack at the previous iterate."""
    from .model import assemble_quadratic_forms, psi_tables

    if forms is None:
        forms = assemble_quadratic_forms(prev, channels, cfg)
    psi, psi_tilde = psi_tables(prev, channels)
    rate = c5_power_surrogate(psi, psi_tilde, prev.p_i, cfg)
    beta = beta_bound(channels, forms, cfg, prev, "waveforms")
    energy = c4_surrogate(channels, prev, beta, cfg, "waveforms", forms=forms)
    return SurrogatePack(target="waveforms", rate=rate, energy=energy, beta=beta,
                         expansion=prev)
