"""Physical-layer model: transmit/node energy accounting, SINR and rates,
the nonlinear harvester, and the unified quadratic-form assembly.

Most quantities have two independent computation routes: a "physical" route
following the signal-chain definitions, and a "vectorized" route through the
quadratic forms consumed by the solver.  The two must agree to 1e-10, which
the test-suite asserts on random instances.

Conventions
-----------
* Design arrays are subband-major: ``s_e[n, k]``, ``p_i[n, k]``.  Config
  budget/noise grids are pair-major (``p_rf_tx[k, n]``) and transposed at use.
* The harvester curve uses natural logarithms: the harvest rate at input
  power ``p`` is ``exp(a*ln(p)^2) * p**b * exp(c)`` with the fitted constants
  ``a < 0``, ``b < 0``; harvested energy multiplies by ``tau/rho``.  There is
  deliberately no base-switch option.
* ``vec`` of the front-end matrix uses column stacking, so the relay's
  vectorized variable is ``vec(U)`` of length ``M**2``; the surface's is the
  length-``M`` coefficient vector theta shared by all subbands.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .channels import ChannelSet
from .config import SystemConfig
from .linalg import hermitize, kron, vec

#: Relative tolerance of the overall feasibility verdict.
FEASIBILITY_RTOL = 1e-8


# ---------------------------------------------------------------------------
# Design container
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Design:
    """One candidate operating point of the system.

    ``s_e``/``p_i`` have shape (N, K).  In relay mode ``u_e``/``u_i`` have
    shape (N, M, M); in surface mode ``theta_e``/``theta_i`` have shape (M,)
    and apply to every subband.
    """

    mode: str
    tau: float
    s_e: np.ndarray
    p_i: np.ndarray
    u_e: np.ndarray = None  # type: ignore[assignment]
    u_i: np.ndarray = None  # type: ignore[assignment]
    theta_e: np.ndarray = None  # type: ignore[assignment]
    theta_i: np.ndarray = None  # type: ignore[assignment]

    def __post_init__(self):
        s_e = np.asarray(self.s_e, dtype=complex)
        p_i = np.asarray(self.p_i, dtype=float)
        if s_e.ndim != 2 or p_i.shape != s_e.shape:
            raise ValueError("s_e and p_i must both have shape (N, K)")
        object.__setattr__(self, "s_e", s_e)
        object.__setattr__(self, "p_i", p_i)
        if self.mode == "relay":
            if self.u_e is None or self.u_i is None:
                raise ValueError("relay design requires u_e and u_i")
            for name in ("u_e", "u_i"):
                arr = np.asarray(getattr(self, name), dtype=complex)
                if arr.ndim != 3 or arr.shape[0] != s_e.shape[0] or arr.shape[1] != arr.shape[2]:
                    raise ValueError(f"{name} must have shape (N, M, M)")
                object.__setattr__(self, name, arr)
        elif self.mode == "irs":
            if self.theta_e is None or self.theta_i is None:
                raise ValueError("surface design requires theta_e and theta_i")
            for name in ("theta_e", "theta_i"):
                arr = np.asarray(getattr(self, name), dtype=complex)
                if arr.ndim != 1:
                    raise ValueError(f"{name} must be a vector")
                object.__setattr__(self, name, arr)
        else:
            raise ValueError(f"unknown mode {self.mode!r}")

    @property
    def n_subbands(self) -> int:
        return self.s_e.shape[0]

    @property
    def n_pairs(self) -> int:
        return self.s_e.shape[1]

    @property
    def n_elements(self) -> int:
        return self.u_e.shape[1] if self.mode == "relay" else self.theta_e.shape[0]

    def slot_matrices(self, slot: str) -> np.ndarray:
        """Front-end matrices per subband, shape (N, M, M), for slot E or I."""
        if slot not in ("E", "I"):
            raise ValueError("slot must be 'E' or 'I'")
        if self.mode == "relay":
            return self.u_e if slot == "E" else self.u_i
        theta = self.theta_e if slot == "E" else self.theta_i
        diag = np.diag(theta)
        return np.broadcast_to(diag, (self.n_subbands,) + diag.shape)

    def front_vectors(self, slot: str) -> np.ndarray:
        """Solver-facing vectorized front-end variable per subband.

        Relay: rows ``vec(U_n)`` of length M²; surface: theta broadcast per
        subband (all rows identical).
        """
        if self.mode == "relay":
            mats = self.slot_matrices(slot)
            return np.stack([vec(m) for m in mats])
        theta = self.theta_e if slot == "E" else self.theta_i
        return np.broadcast_to(theta, (self.n_subbands, theta.shape[0]))

    def replace(self, **kwargs) -> "Design":
        fields = dict(mode=self.mode, tau=self.tau, s_e=self.s_e, p_i=self.p_i,
                      u_e=self.u_e, u_i=self.u_i,
                      theta_e=self.theta_e, theta_i=self.theta_i)
        fields.update(kwargs)
        return Design(**fields)


def design_to_json(design: Design) -> str:
    """Serialize a design; complex entries become [re, im] pairs."""

    def pairs(a):
        a = np.asarray(a, dtype=complex)
        return np.stack([a.real, a.imag], axis=-1).tolist()

    payload = {"mode": design.mode, "tau": design.tau,
               "s_e": pairs(design.s_e), "p_i": design.p_i.tolist()}
    if design.mode == "relay":
        payload["u_e"] = pairs(design.u_e)
        payload["u_i"] = pairs(design.u_i)
    else:
        payload["theta_e"] = pairs(design.theta_e)
        payload["theta_i"] = pairs(design.theta_i)
    return json.dumps(payload)


def design_from_json(text: str) -> Design:
    payload = json.loads(text)

    def unpairs(data):
        arr = np.asarray(data, dtype=float)
        return arr[..., 0] + 1j * arr[..., 1]

    kwargs = dict(mode=payload["mode"], tau=payload["tau"],
                  s_e=unpairs(payload["s_e"]),
                  p_i=np.asarray(payload["p_i"], dtype=float))
    if payload["mode"] == "relay":
        kwargs["u_e"] = unpairs(payload["u_e"])
        kwargs["u_i"] = unpairs(payload["u_i"])
    else:
        kwargs["theta_e"] = unpairs(payload["theta_e"])
        kwargs["theta_i"] = unpairs(payload["theta_i"])
    return Design(**kwargs)


# ---------------------------------------------------------------------------
# Physical-route quantities
# ---------------------------------------------------------------------------


def v_forms(channels: ChannelSet, mats: np.ndarray) -> np.ndarray:
    """Per-subband forms V_n = H_n^H U_n^H U_n H_n, shape (N, K, K)."""
    out = np.empty((channels.n_subbands, channels.n_pairs, channels.n_pairs), dtype=complex)
    for n in range(channels.n_subbands):
        uh = mats[n] @ channels.h[n]
        out[n] = uh.conj().T @ uh
    return out


def psi_tables(design: Design, channels: ChannelSet) -> tuple[np.ndarray, np.ndarray]:
    """Effective gains: psi[n, k, j] = |g_k^T U_I h_j|², psi_tilde[n, k] = ||g_k^T U_I||²."""
    mats = design.slot_matrices("I")
    n_sub, n_pairs = channels.n_subbands, channels.n_pairs
    psi = np.empty((n_sub, n_pairs, n_pairs))
    psi_tilde = np.empty((n_sub, n_pairs))
    for n in range(n_sub):
        gu = channels.g[n] @ mats[n]          # row k: g_k^T U_I
        psi[n] = np.abs(gu @ channels.h[n]) ** 2
        psi_tilde[n] = np.sum(np.abs(gu) ** 2, axis=1)
    return psi, psi_tilde


def psi_coefficient(design: Design, channels: ChannelSet, k: int, j: int, n: int) -> float:
    """Single cross-gain psi_{k,j,n}."""
    mats = design.slot_matrices("I")
    return float(np.abs(channels.rx_column(k, n) @ mats[n] @ channels.tx_column(j, n)) ** 2)


def psi_tilde_coefficient(design: Design, channels: ChannelSet, k: int, n: int) -> float:
    """Single node-noise gain psi~_{k,n}."""
    mats = design.slot_matrices("I")
    return float(np.sum(np.abs(channels.rx_column(k, n) @ mats[n]) ** 2))


def zeta_a_table(cfg: SystemConfig) -> np.ndarray:
    """Receiver-side constant sigma2_rx + delta2 as an (N, K) table."""
    return (cfg.sigma2_rx + cfg.delta2).T


def sinr_table(design: Design, channels: ChannelSet, cfg: SystemConfig) -> np.ndarray:
    """SINR of every (subband, pair) through the gain-table route, shape (N, K)."""
    psi, psi_tilde = psi_tables(design, channels)
    n_sub, n_pairs = psi.shape[0], psi.shape[1]
    out = np.empty((n_sub, n_pairs))
    zeta = zeta_a_table(cfg)
    for n in range(n_sub):
        for k in range(n_pairs):
            signal = design.p_i[n, k] * psi[n, k, k]
            interference = float(psi[n, k] @ design.p_i[n]) - signal
            noise = cfg.sigma2_node[n] * psi_tilde[n, k] + zeta[n, k]
            out[n, k] = signal / (interference + noise)
    return out


def sinr(design: Design, channels: ChannelSet, cfg: SystemConfig, k: int, n: int) -> float:
    """SINR of pair ``k`` on subband ``n``."""
    return float(sinr_table(design, channels, cfg)[n, k])


def rates(design: Design, channels: ChannelSet, cfg: SystemConfig) -> np.ndarray:
    """Per-pair rate: ((T-tau)/(rho*T)) * sum_n log2(1+SINR), shape (K,)."""
    gamma = sinr_table(design, channels, cfg)
    prefactor = (cfg.block_length - design.tau) / (cfg.rho * cfg.block_length)
    return prefactor * np.sum(np.log2(1.0 + gamma), axis=0)


def pair_rate(design: Design, channels: ChannelSet, cfg: SystemConfig, k: int) -> float:
    return float(rates(design, channels, cfg)[k])


def min_rate(design: Design, channels: ChannelSet, cfg: SystemConfig) -> float:
    return float(rates(design, channels, cfg).min())


def xi_matrices(design: Design, channels: ChannelSet) -> np.ndarray:
    """Energy-path forms Xi[n, k] = (g_k^T U_E H_n)^H (g_k^T U_E H_n), shape (N, K, K, K)."""
    mats = design.slot_matrices("E")
    n_sub, n_pairs = channels.n_subbands, channels.n_pairs
    out = np.empty((n_sub, n_pairs, n_pairs, n_pairs), dtype=complex)
    for n in range(n_sub):
        gu_h = channels.g[n] @ mats[n] @ channels.h[n]  # row k: g_k^T U_E H_n
        for k in range(n_pairs):
            row = gu_h[k]
            out[n, k] = np.outer(row.conj(), row)
    return out


def harvester_input_power(design: Design, channels: ChannelSet, k: int = None) -> np.ndarray | float:
    """Average harvester input power p_E per pair (all pairs, or one)."""
    mats = design.slot_matrices("E")
    n_pairs = channels.n_pairs
    p = np.zeros(n_pairs)
    for n in range(channels.n_subbands):
        gu_hs = channels.g[n] @ mats[n] @ (channels.h[n] @ design.s_e[n])
        p += 0.5 * np.abs(gu_hs) ** 2
    return p if k is None else float(p[k])


def eh_curve(p: np.ndarray | float, cfg: SystemConfig) -> np.ndarray | float:
    """Harvest rate [W] at input power ``p``: exp(a*ln(p)^2) * p**b * exp(c).

    Extended continuously with value 0 at p = 0.
    """
    p_arr = np.asarray(p, dtype=float)
    if np.any(p_arr < 0):
        raise ValueError("harvester input power cannot be negative")
    out = np.zeros_like(p_arr)
    pos = p_arr > 0
    lp = np.log(p_arr[pos])
    out[pos] = np.exp(cfg.eh_a * lp**2 + cfg.eh_b * lp + cfg.eh_c)
    if np.isscalar(p) or p_arr.ndim == 0:
        return float(out)
    return out


def harvested_energy(design: Design, channels: ChannelSet, cfg: SystemConfig,
                     k: int = None) -> np.ndarray | float:
    """Harvested energy E_k = (tau/rho) * eh_curve(p_E,k) [J]."""
    p = harvester_input_power(design, channels)
    e = (design.tau / cfg.rho) * np.asarray(eh_curve(p, cfg))
    return e if k is None else float(e[k])


def tx_energy_slack(design: Design, cfg: SystemConfig) -> np.ndarray:
    """Per-(subband, pair) slack of the transmit-energy constraint, shape (N, K)."""
    t, rho, tau = cfg.block_length, cfg.rho, design.tau
    lhs = (tau / (2 * rho)) * np.abs(design.s_e) ** 2 + ((t - tau) / (2 * rho)) * design.p_i
    return t * cfg.p_rf_tx.T - lhs


def tx_energy_check(design: Design, cfg: SystemConfig, k: int, n: int) -> float:
    """Slack of transmitter ``k``'s energy constraint on subband ``n`` [J]."""
    return float(tx_energy_slack(design, cfg)[n, k])


def node_energy_terms(design: Design, channels: ChannelSet, cfg: SystemConfig) -> tuple[np.ndarray, np.ndarray]:
    """Per-subband forwarded-power terms of the node-energy constraint.

    Returns ``(energy_slot, info_slot)`` where each has shape (N,):
    ``energy_slot[n] = s^H V_E s + sigma2 tr(U_E U_E^H)`` and
    ``info_slot[n] = tr(Q_I V_I) + sigma2 tr(U_I U_I^H)``.
    """
    mats_e = design.slot_matrices("E")
    mats_i = design.slot_matrices("I")
    v_e = v_forms(channels, mats_e)
    v_i = v_forms(channels, mats_i)
    n_sub = channels.n_subbands
    energy_slot = np.empty(n_sub)
    info_slot = np.empty(n_sub)
    for n in range(n_sub):
        s = design.s_e[n]
        energy_slot[n] = float(np.real(s.conj() @ v_e[n] @ s)) \
            + cfg.sigma2_node[n] * float(np.sum(np.abs(mats_e[n]) ** 2))
        info_slot[n] = float(np.real(np.sum(design.p_i[n] * np.diag(v_i[n]).real))) \
            + cfg.sigma2_node[n] * float(np.sum(np.abs(mats_i[n]) ** 2))
    return energy_slot, info_slot


def node_energy_slack(design: Design, channels: ChannelSet, cfg: SystemConfig) -> np.ndarray:
    """Per-subband slack of the node-energy constraint [J], shape (N,)."""
    energy_slot, info_slot = node_energy_terms(design, channels, cfg)
    t, rho, tau = cfg.block_length, cfg.rho, design.tau
    lhs = (tau / (2 * rho)) * energy_slot + ((t - tau) / (2 * rho)) * info_slot
    return t * cfg.p_rf_node - lhs


def node_energy_check(design: Design, channels: ChannelSet, cfg: SystemConfig, n: int) -> float:
    """Slack of the node-energy constraint on subband ``n`` [J]."""
    return float(node_energy_slack(design, channels, cfg)[n])


# ---------------------------------------------------------------------------
# Unified quadratic-form assembly (Kronecker for relay, Hadamard for surface)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadraticForms:
    """Solver-facing Hermitian forms; dimension D = M² (relay) or M (surface).

    ``a_tilde_e``/``a_tilde_i`` have shape (N, D, D); ``a``, ``a_hat``,
    ``a_bar``, and ``b`` have shape (N, K, D, D); ``xi`` has shape
    (N, K, K, K) and acts on the waveform variable instead.
    """

    mode: str
    a_tilde_e: np.ndarray
    a_tilde_i: np.ndarray
    a: np.ndarray
    a_hat: np.ndarray
    a_bar: np.ndarray
    b: np.ndarray
    xi: np.ndarray

    @property
    def dim(self) -> int:
        return self.a_tilde_e.shape[1]


def diagonal_restriction_indices(m: int) -> np.ndarray:
    """Indices of vec(Diag(theta)) that carry theta: positions i*(m+1)."""
    return np.arange(m) * (m + 1)


def restrict_to_diagonal(a: np.ndarray, m: int) -> np.ndarray:
    """Restrict an (M², M²) relay-structured form to the surface's index set."""
    idx = diagonal_restriction_indices(m)
    return a[np.ix_(idx, idx)]


def assemble_quadratic_forms(design: Design, channels: ChannelSet, cfg: SystemConfig) -> QuadraticForms:
    """Build every solver-facing form for the design's waveform/power state.

    The relay and surface branches share one code path: the relay uses the
    Kronecker product on M²-dimensional forms, the surface the elementwise
    product on M-dimensional forms — the only structural difference.
    """
    n_sub, n_pairs, m = channels.n_subbands, channels.n_pairs, channels.n_elements
    relay = design.mode == "relay"
    if relay:
        product = kron
        dim = m * m
    else:
        product = lambda x, y: x * y  # noqa: E731 - elementwise on equal shapes
        dim = m
    eye_small = np.eye(m, dtype=complex)
    eye_big = np.eye(dim, dtype=complex)

    a_tilde_e = np.empty((n_sub, dim, dim), dtype=complex)
    a_tilde_i = np.empty((n_sub, dim, dim), dtype=complex)
    a = np.empty((n_sub, n_pairs, dim, dim), dtype=complex)
    a_hat = np.empty((n_sub, n_pairs, dim, dim), dtype=complex)
    a_bar = np.empty((n_sub, n_pairs, dim, dim), dtype=complex)

    for n in range(n_sub):
        h = channels.h[n]
        hs = h @ design.s_e[n]
        outer_e = np.outer(hs, hs.conj()).T
        outer_i = (h * design.p_i[n][np.newaxis, :]) @ h.conj().T
        a_tilde_e[n] = product(outer_e, eye_small) + cfg.sigma2_node[n] * eye_big
        a_tilde_i[n] = product(outer_i.T, eye_small) + cfg.sigma2_node[n] * eye_big
        for k in range(n_pairs):
            g = channels.rx_column(k, n)
            gk = np.outer(g.conj(), g)
            cross = np.zeros((dim, dim), dtype=complex)
            for j in range(n_pairs):
                if j == k:
                    continue
                hj = channels.tx_column(j, n)
                cross += design.p_i[n, j] * product(np.outer(hj, hj.conj()).T, gk)
            hk = channels.tx_column(k, n)
            a[n, k] = design.p_i[n, k] * product(np.outer(hk, hk.conj()).T, gk)
            a_hat[n, k] = cross + cfg.sigma2_node[n] * product(eye_small, gk)
            a_bar[n, k] = product(outer_e, gk)

    forms = QuadraticForms(
        mode=design.mode,
        a_tilde_e=a_tilde_e,
        a_tilde_i=a_tilde_i,
        a=a,
        a_hat=a_hat,
        a_bar=a_bar,
        b=a_hat + a,
        xi=xi_matrices(design, channels),
    )
    return forms


# ---------------------------------------------------------------------------
# Vectorized-route quantities (must agree with the physical route)
# ---------------------------------------------------------------------------


def _quad(u: np.ndarray, a: np.ndarray) -> float:
    return float(np.real(u.conj() @ hermitize(a) @ u))


def sinr_quadratic(design: Design, forms: QuadraticForms, cfg: SystemConfig) -> np.ndarray:
    """SINR via the vectorized forms, shape (N, K)."""
    u_i = design.front_vectors("I")
    zeta = zeta_a_table(cfg)
    n_sub, n_pairs = forms.a.shape[0], forms.a.shape[1]
    out = np.empty((n_sub, n_pairs))
    for n in range(n_sub):
        for k in range(n_pairs):
            out[n, k] = _quad(u_i[n], forms.a[n, k]) / (
                _quad(u_i[n], forms.a_hat[n, k]) + zeta[n, k])
    return out


def harvester_input_power_quadratic(design: Design, forms: QuadraticForms) -> np.ndarray:
    """Harvester input power via the vectorized energy forms, shape (K,)."""
    u_e = design.front_vectors("E")
    n_sub, n_pairs = forms.a_bar.shape[0], forms.a_bar.shape[1]
    p = np.zeros(n_pairs)
    for n in range(n_sub):
        for k in range(n_pairs):
            p[k] += 0.5 * _quad(u_e[n], forms.a_bar[n, k])
    return p


def node_energy_slack_quadratic(design: Design, forms: QuadraticForms, cfg: SystemConfig) -> np.ndarray:
    """Node-energy slack via the vectorized forms, shape (N,)."""
    u_e = design.front_vectors("E")
    u_i = design.front_vectors("I")
    t, rho, tau = cfg.block_length, cfg.rho, design.tau
    n_sub = forms.a_tilde_e.shape[0]
    out = np.empty(n_sub)
    for n in range(n_sub):
        lhs = (tau / (2 * rho)) * _quad(u_e[n], forms.a_tilde_e[n]) \
            + ((t - tau) / (2 * rho)) * _quad(u_i[n], forms.a_tilde_i[n])
        out[n] = t * cfg.p_rf_node[n] - lhs
    return out


# ---------------------------------------------------------------------------
# Feasibility
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FeasibilityReport:
    """Worst normalized violation per constraint family (0 when satisfied)."""

    ok: bool
    violations: dict
    e_k: np.ndarray
    min_rate: float
    tol: float

    def worst(self) -> tuple[str, float]:
        name = max(self.violations, key=lambda key: self.violations[key])
        return name, self.violations[name]


def feasibility_report(design: Design, channels: ChannelSet, cfg: SystemConfig,
                       tol: float = FEASIBILITY_RTOL) -> FeasibilityReport:
    """Check the design against every original (non-surrogate) constraint.

    Violations are normalized by their constraint's own scale, so ``tol`` is
    relative; a constraint family reports 0 when satisfied.
    """
    t = cfg.block_length
    violations = {}

    violations["c1_time"] = max(-design.tau, design.tau - t, 0.0) / t

    slack2 = tx_energy_slack(design, cfg)
    violations["c2_tx_energy"] = float(np.max(-slack2 / (t * cfg.p_rf_tx.T)))

    slack3 = node_energy_slack(design, channels, cfg)
    violations["c3_node_energy"] = float(np.max(-slack3 / (t * cfg.p_rf_node)))

    e_k = np.asarray(harvested_energy(design, channels, cfg))
    scale4 = np.maximum(cfg.e_min, np.finfo(float).tiny)
    violations["c4_energy"] = float(np.max((cfg.e_min - e_k) / scale4))

    violations["c5_power_sign"] = float(np.max(-design.p_i, initial=0.0)) / max(
        1.0, float(np.max(design.p_i, initial=0.0)))

    if design.mode == "irs":
        moduli = np.concatenate([np.abs(design.theta_e), np.abs(design.theta_i)])
        violations["c_mod_surface"] = float(np.max(1.0 - moduli))

    violations = {key: max(0.0, value) for key, value in violations.items()}
    ok = all(value <= tol for value in violations.values())
    return FeasibilityReport(ok=ok, violations=violations, e_k=e_k,
                             min_rate=min_rate(design, channels, cfg), tol=tol)
