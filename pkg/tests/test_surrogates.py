"""Touching, dominance, and gradient checks for every surrogate family."""

import numpy as np
import pytest

from wpcmaxmin.config import desk_config
from wpcmaxmin.channels import generate_channels
from wpcmaxmin.linalg import hermitize
from wpcmaxmin.model import (
    assemble_quadratic_forms,
    eh_curve,
    harvested_energy,
    harvester_input_power,
    psi_tables,
    rates,
    sinr_table,
    zeta_a_table,
)
from wpcmaxmin.surrogates import (
    BETA_SAFETY,
    C4Pack,
    EnergyTargetInfeasible,
    beta_bound,
    beta_bound_sampled,
    c4_surrogate,
    c4_surrogate_value,
    c5_power_surrogate,
    c5_power_surrogate_value,
    c5_surrogate,
    c5_surrogate_value,
    check_energy_target_reachable,
    energy_hessian,
    lemma1_majorizer,
    log_affine_minorizer,
    unit_modulus_minorizer,
)
from wpcmaxmin.surrogates import _energy_blocks

from util import random_design

LOG2E = np.log2(np.e)


def small_setup(mode, seed=0, n_pairs=2, n_subbands=2, n_elements=3):
    cfg = desk_config(mode).with_updates(
        n_pairs=n_pairs, n_subbands=n_subbands, n_elements=n_elements)
    chans = generate_channels(cfg, seed=seed)
    rng = np.random.default_rng(seed + 1000)
    design = random_design(cfg, rng)
    forms = assemble_quadratic_forms(design, chans, cfg)
    return cfg, chans, design, forms


def ball_sample(rng, dim, q, p):
    x = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    scale = np.sqrt(p * rng.uniform() / float(np.real(x.conj() @ q @ x)))
    return x * scale


# ---------------------------------------------------------------------------
# log tangent
# ---------------------------------------------------------------------------


class TestLogAffine:
    def test_touching(self):
        assert log_affine_minorizer(3.7, 3.7) == pytest.approx(np.log2(3.7), rel=1e-12)

    def test_dominance(self):
        rng = np.random.default_rng(1)
        for _ in range(500):
            x = rng.uniform(1e-6, 1e3)
            x0 = rng.uniform(1e-6, 1e3)
            assert log_affine_minorizer(x, x0) >= np.log2(x) - 1e-9

    def test_rejects_nonpositive_anchor(self):
        with pytest.raises(ValueError):
            log_affine_minorizer(1.0, 0.0)


# ---------------------------------------------------------------------------
# modulus tangent
# ---------------------------------------------------------------------------


class TestUnitModulus:
    def test_touching(self):
        theta0 = 1.3 * np.exp(1j * 0.7)
        assert unit_modulus_minorizer(theta0, theta0) == pytest.approx(1.3, rel=1e-12)

    def test_dominance(self):
        rng = np.random.default_rng(2)
        for _ in range(500):
            theta = (rng.standard_normal() + 1j * rng.standard_normal())
            theta0 = (rng.standard_normal() + 1j * rng.standard_normal())
            if abs(theta0) < 1e-12:
                continue
            assert unit_modulus_minorizer(theta, theta0) <= abs(theta) + 1e-12

    def test_rejects_zero_anchor(self):
        with pytest.raises(ValueError):
            unit_modulus_minorizer(1.0 + 0j, 0.0 + 0j)


# ---------------------------------------------------------------------------
# quadratic majorizer of -log2(x^H T x + nu)
# ---------------------------------------------------------------------------


class TestLemma1:
    def make(self, rng, dim=4):
        raw = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        tm = hermitize(raw @ raw.conj().T)
        q = hermitize(np.eye(dim) + 0.1 * (raw + raw.conj().T))
        q = q @ q.conj().T + np.eye(dim)
        return tm, q

    def test_touching_and_dominance(self):
        rng = np.random.default_rng(3)
        tm, q = self.make(rng)
        nu, p = 0.5, 4.0
        x0 = ball_sample(rng, 4, q, p)
        b, dc = lemma1_majorizer(tm, nu, q, p, x0)
        s0 = -np.log2(float(np.real(x0.conj() @ tm @ x0)) + nu)

        def surrogate(x):
            diff = x - x0
            return (s0 + float(np.real(b.conj() @ diff))
                    + dc * float(np.real(diff.conj() @ diff)))

        assert surrogate(x0) == pytest.approx(s0, rel=1e-12)
        for _ in range(500):
            x = ball_sample(rng, 4, q, p)
            s = -np.log2(float(np.real(x.conj() @ tm @ x)) + nu)
            assert surrogate(x) >= s - 1e-9

    def test_gradient_matches_finite_difference(self):
        rng = np.random.default_rng(4)
        tm, q = self.make(rng)
        nu, p = 0.3, 2.0
        x0 = ball_sample(rng, 4, q, p)
        b, _ = lemma1_majorizer(tm, nu, q, p, x0)
        # Gradient of s at x0 in the real composite equals that of the
        # surrogate; compare b against central differences of s.
        step = 1e-6
        for i in range(4):
            for comp in (1.0, 1j):
                e = np.zeros(4, dtype=complex)
                e[i] = comp * step
                sp = -np.log2(float(np.real((x0 + e).conj() @ tm @ (x0 + e))) + nu)
                sm = -np.log2(float(np.real((x0 - e).conj() @ tm @ (x0 - e))) + nu)
                fd = (sp - sm) / (2 * step)
                analytic = float(np.real(b.conj() @ (e / step)))
                assert analytic == pytest.approx(fd, rel=1e-4, abs=1e-10)

    def test_rejects_degenerate_ball(self):
        rng = np.random.default_rng(5)
        tm, _ = self.make(rng)
        x0 = np.ones(4, dtype=complex)
        with pytest.raises(ValueError):
            lemma1_majorizer(tm, 0.1, np.zeros((4, 4)), 1.0, x0)


# ---------------------------------------------------------------------------
# front-end rate surrogate
# ---------------------------------------------------------------------------


def front_rate_sum(forms, cfg, u, k):
    """Plain rate sum of pair k at information front-end rows u (no prefactor)."""
    zeta = zeta_a_table(cfg)
    total = 0.0
    for n in range(cfg.n_subbands):
        num = float(np.real(u[n].conj() @ hermitize(forms.b[n, k]) @ u[n])) + zeta[n, k]
        den = float(np.real(u[n].conj() @ hermitize(forms.a_hat[n, k]) @ u[n])) + zeta[n, k]
        total += np.log2(num / den)
    return total


class TestC5Surrogate:
    @pytest.mark.parametrize("mode", ["relay", "irs"])
    def test_touching(self, mode):
        cfg, chans, design, forms = small_setup(mode)
        pack = c5_surrogate(forms, design, cfg)
        u0 = design.front_vectors("I")
        gamma = sinr_table(design, chans, cfg)
        for k in range(cfg.n_pairs):
            expected = float(np.sum(np.log2(1.0 + gamma[:, k])))
            assert c5_surrogate_value(pack, u0, k) == pytest.approx(expected, rel=1e-9)
            assert front_rate_sum(forms, cfg, u0, k) == pytest.approx(expected, rel=1e-9)

    @pytest.mark.parametrize("mode", ["relay", "irs"])
    def test_dominance_on_power_ball(self, mode):
        cfg, chans, design, forms = small_setup(mode, seed=7)
        pack = c5_surrogate(forms, design, cfg)
        rng = np.random.default_rng(8)
        t, rho, tau = cfg.block_length, cfg.rho, design.tau
        dim = forms.dim
        for trial in range(500):
            k = trial % cfg.n_pairs
            u = []
            for n in range(cfg.n_subbands):
                q = hermitize(forms.a_tilde_i[n])
                cap = 2.0 * rho * t * cfg.p_rf_node[n] / (t - tau)
                u.append(ball_sample(rng, dim, q, cap))
            assert c5_surrogate_value(pack, u, k) <= front_rate_sum(forms, cfg, u, k) + 1e-9

    @pytest.mark.parametrize("mode", ["relay", "irs"])
    def test_expanded_and_centered_forms_agree(self, mode):
        cfg, chans, design, forms = small_setup(mode, seed=41)
        pack = c5_surrogate(forms, design, cfg)
        rng = np.random.default_rng(42)
        dim = forms.dim
        for trial in range(50):
            k = trial % cfg.n_pairs
            u = [rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
                 for _ in range(cfg.n_subbands)]
            expanded = 0.0
            scale = 0.0
            for n in range(cfg.n_subbands):
                q_term = float(np.real(u[n].conj() @ pack.f_quad[n, k] @ u[n]))
                l_term = float(np.real(pack.f_lin[n, k].conj() @ u[n]))
                expanded -= q_term + l_term + pack.d_const[n, k]
                scale += abs(q_term) + abs(l_term) + abs(pack.d_const[n, k])
            centered = c5_surrogate_value(pack, u, k)
            assert centered == pytest.approx(expanded, abs=1e-12 * max(scale, 1.0))

    def test_zero_expansion_is_bookkept(self):
        cfg, chans, design, forms = small_setup("relay", seed=9)
        zero = design.replace(u_i=np.zeros_like(design.u_i))
        forms0 = assemble_quadratic_forms(zero, chans, cfg)
        pack = c5_surrogate(forms0, zero, cfg)
        u0 = zero.front_vectors("I")
        for k in range(cfg.n_pairs):
            val = c5_surrogate_value(pack, u0, k)
            assert np.isfinite(val)
            assert val == pytest.approx(0.0, abs=1e-12)


# ---------------------------------------------------------------------------
# curvature bound
# ---------------------------------------------------------------------------


class TestBetaBound:
    @pytest.mark.parametrize("mode,which", [
        ("relay", "matrices"), ("relay", "waveforms"),
        ("irs", "matrices"), ("irs", "waveforms"),
    ])
    def test_certifies_sampled_hessians(self, mode, which):
        cfg, chans, design, forms = small_setup(mode, seed=11)
        beta = beta_bound(chans, forms, cfg, design, which)
        mats, bounds = _energy_blocks(forms, cfg, design.tau, which)
        rng = np.random.default_rng(12)
        for k in range(cfg.n_pairs):
            dims = [m.shape[0] for m in mats[k]]
            for _ in range(200 // cfg.n_pairs):
                blocks = []
                for dim, cap in zip(dims, bounds):
                    x = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
                    blocks.append(x / np.linalg.norm(x) * np.sqrt(cap * rng.uniform()))
                hess = energy_hessian(forms, cfg, design.tau, which, blocks, k)
                lam_min = float(np.linalg.eigvalsh(hess)[0])
                assert lam_min + beta[k, 0] >= -1e-8 * max(beta[k, 0], 1.0)

    def test_dominates_sampled_diagnostic(self):
        cfg, chans, design, forms = small_setup("relay", seed=13)
        beta = beta_bound(chans, forms, cfg, design, "waveforms")
        sampled = beta_bound_sampled(chans, forms, cfg, design, "waveforms",
                                     samples=100, seed=14)
        # The sampled diagnostic carries eigensolver noise around zero, hence
        # the absolute floor.
        assert np.all(beta >= sampled / BETA_SAFETY * (1.0 - 1e-9) - 1e-12)

    def test_zero_coupling_gives_zero(self):
        cfg, chans, design, forms = small_setup("relay", seed=15)
        zero = design.replace(u_e=np.zeros_like(design.u_e))
        forms0 = assemble_quadratic_forms(zero, chans, cfg)
        beta = beta_bound(chans, forms0, cfg, design, "waveforms")
        assert np.all(beta == 0.0)

    def test_monotone_in_coupling_scale(self):
        cfg, chans, design, forms = small_setup("relay", seed=16)
        beta1 = beta_bound(chans, forms, cfg, design, "waveforms")
        import dataclasses
        forms2 = dataclasses.replace(forms, xi=2.0 * forms.xi)
        beta2 = beta_bound(chans, forms2, cfg, design, "waveforms")
        assert np.all(beta2 >= 2.0 * beta1 * (1.0 - 1e-9))

    def test_shape_and_replication(self):
        cfg, chans, design, forms = small_setup("irs", seed=17)
        beta = beta_bound(chans, forms, cfg, design, "matrices")
        assert beta.shape == (cfg.n_pairs, cfg.n_subbands)
        assert np.all(beta == beta[:, :1])

    def test_unreachable_target_raises(self):
        cfg, chans, design, forms = small_setup("relay", seed=18)
        greedy = cfg.with_updates(e_min=np.full(cfg.n_pairs, 1.0))
        with pytest.raises(EnergyTargetInfeasible):
            beta_bound(chans, forms, greedy, design, "waveforms")

    def test_reachability_threshold_matches_curve_peak(self):
        cfg = desk_config("relay")
        tau = 0.5 * cfg.block_length
        peak = (tau / cfg.rho) * np.exp(cfg.eh_c) * np.exp(
            cfg.eh_b**2 / (-4.0 * cfg.eh_a))
        ok = cfg.with_updates(e_min=np.full(cfg.n_pairs, peak * 0.999))
        roots = check_energy_target_reachable(ok, tau)
        assert np.all(np.isfinite(roots)) and np.all(roots > 0)
        bad = cfg.with_updates(e_min=np.full(cfg.n_pairs, peak * 1.001))
        with pytest.raises(EnergyTargetInfeasible):
            check_energy_target_reachable(bad, tau)


# ---------------------------------------------------------------------------
# energy-constraint surrogate
# ---------------------------------------------------------------------------


def exact_energy(forms, cfg, tau, which, blocks, k):
    mats, _ = _energy_blocks(forms, cfg, tau, which)
    p = 0.5 * sum(float(np.real(x.conj() @ m @ x)) for m, x in zip(mats[k], blocks))
    return (tau / cfg.rho) * eh_curve(np.array(p), cfg)


class TestC4Surrogate:
    @pytest.mark.parametrize("mode,which", [
        ("relay", "matrices"), ("relay", "waveforms"),
        ("irs", "matrices"), ("irs", "waveforms"),
    ])
    def test_touching(self, mode, which):
        cfg, chans, design, forms = small_setup(mode, seed=21)
        beta = beta_bound(chans, forms, cfg, design, which)
        pack = c4_surrogate(chans, design, beta, cfg, which, forms=forms)
        val0 = c4_surrogate_value(pack, pack.x0_blocks, 0)
        e0 = exact_energy(forms, cfg, design.tau, which, pack.x0_blocks, 0)
        assert val0 == pytest.approx(float(e0), rel=1e-9)
        ek = harvested_energy(design, chans, cfg)
        if which == "waveforms":
            assert float(e0) == pytest.approx(float(ek[0]), rel=1e-9)

    @pytest.mark.parametrize("mode,which", [
        ("relay", "matrices"), ("relay", "waveforms"),
        ("irs", "matrices"), ("irs", "waveforms"),
    ])
    def test_dominance_on_feasible_ball(self, mode, which):
        cfg, chans, design, forms = small_setup(mode, seed=22)
        beta = beta_bound(chans, forms, cfg, design, which)
        pack = c4_surrogate(chans, design, beta, cfg, which, forms=forms)
        mats, bounds = _energy_blocks(forms, cfg, design.tau, which)
        rng = np.random.default_rng(23)
        for trial in range(500):
            k = trial % cfg.n_pairs
            blocks = []
            for m, cap in zip(mats[k], bounds):
                x = rng.standard_normal(m.shape[0]) + 1j * rng.standard_normal(m.shape[0])
                blocks.append(x / np.linalg.norm(x) * np.sqrt(cap * rng.uniform()))
            actual = float(exact_energy(forms, cfg, design.tau, which, blocks, k))
            bound = c4_surrogate_value(pack, blocks, k)
            assert bound <= actual + 1e-9 * max(1.0, abs(actual))

    def test_expanded_and_centered_forms_agree(self):
        cfg, chans, design, forms = small_setup("relay", seed=43)
        beta = beta_bound(chans, forms, cfg, design, "matrices")
        pack = c4_surrogate(chans, design, beta, cfg, "matrices", forms=forms)
        rng = np.random.default_rng(44)
        dim = forms.dim
        for trial in range(50):
            k = trial % cfg.n_pairs
            blocks = [rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
                      for _ in range(len(pack.x0_blocks))]
            expanded = pack.const[k]
            scale = abs(pack.const[k])
            for row, x in zip(pack.vartheta[k], blocks):
                l_term = float(np.real(row @ x))
                q_term = 0.5 * pack.beta[k] * float(np.real(x.conj() @ x))
                expanded += l_term - q_term
                scale += abs(l_term) + abs(q_term)
            centered = c4_surrogate_value(pack, blocks, k)
            assert centered == pytest.approx(expanded, abs=1e-12 * max(scale, 1.0))

    def test_doubled_beta_still_minorizes(self):
        cfg, chans, design, forms = small_setup("relay", seed=24)
        beta = 2.0 * beta_bound(chans, forms, cfg, design, "waveforms")
        pack = c4_surrogate(chans, design, beta, cfg, "waveforms", forms=forms)
        mats, bounds = _energy_blocks(forms, cfg, design.tau, "waveforms")
        rng = np.random.default_rng(25)
        for trial in range(200):
            k = trial % cfg.n_pairs
            blocks = []
            for m, cap in zip(mats[k], bounds):
                x = rng.standard_normal(m.shape[0]) + 1j * rng.standard_normal(m.shape[0])
                blocks.append(x / np.linalg.norm(x) * np.sqrt(cap * rng.uniform()))
            actual = float(exact_energy(forms, cfg, design.tau, "waveforms", blocks, k))
            assert c4_surrogate_value(pack, blocks, k) <= actual + 1e-9

    def test_gradient_matches_finite_difference(self):
        cfg, chans, design, forms = small_setup("relay", seed=26)
        beta = beta_bound(chans, forms, cfg, design, "waveforms")
        pack = c4_surrogate(chans, design, beta, cfg, "waveforms", forms=forms)
        k = 0
        step = 1e-6
        x0 = [b.copy() for b in pack.x0_blocks]
        for n in range(cfg.n_subbands):
            for i in range(cfg.n_pairs):
                for comp in (1.0, 1j):
                    hi = [b.copy() for b in x0]
                    lo = [b.copy() for b in x0]
                    hi[n][i] += comp * step
                    lo[n][i] -= comp * step
                    fd = (float(exact_energy(forms, cfg, design.tau, "waveforms", hi, k))
                          - float(exact_energy(forms, cfg, design.tau, "waveforms", lo, k))
                          ) / (2 * step)
                    sd = (c4_surrogate_value(pack, hi, k)
                          - c4_surrogate_value(pack, lo, k)) / (2 * step)
                    assert sd == pytest.approx(fd, rel=1e-4, abs=1e-9)

    def test_zero_power_expansion_flagged_active(self):
        cfg, chans, design, forms = small_setup("relay", seed=27)
        dark = design.replace(s_e=np.zeros_like(design.s_e))
        forms0 = assemble_quadratic_forms(dark, chans, cfg)
        beta = beta_bound(chans, forms0, cfg, dark, "waveforms")
        pack = c4_surrogate(chans, dark, beta, cfg, "waveforms", forms=forms0)
        assert np.all(pack.active)
        assert np.all(pack.energy_at_x0 == 0.0)
        assert np.all(pack.omega == 0.0)
        # Still a valid minorizer around the origin.
        rng = np.random.default_rng(28)
        mats, bounds = _energy_blocks(forms0, cfg, dark.tau, "waveforms")
        for trial in range(100):
            k = trial % cfg.n_pairs
            blocks = []
            for m, cap in zip(mats[k], bounds):
                x = rng.standard_normal(m.shape[0]) + 1j * rng.standard_normal(m.shape[0])
                blocks.append(x / np.linalg.norm(x) * np.sqrt(cap * rng.uniform()))
            actual = float(exact_energy(forms0, cfg, dark.tau, "waveforms", blocks, k))
            assert c4_surrogate_value(pack, blocks, k) <= actual + 1e-12


# ---------------------------------------------------------------------------
# power-domain rate surrogate
# ---------------------------------------------------------------------------


class TestC5PowerSurrogate:
    @pytest.mark.parametrize("mode", ["relay", "irs"])
    def test_touching(self, mode):
        cfg, chans, design, forms = small_setup(mode, seed=31)
        psi, psi_tilde = psi_tables(design, chans)
        pack = c5_power_surrogate(psi, psi_tilde, design.p_i, cfg)
        gamma = sinr_table(design, chans, cfg)
        for k in range(cfg.n_pairs):
            expected = float(np.sum(np.log2(1.0 + gamma[:, k])))
            assert c5_power_surrogate_value(pack, design.p_i, k) == pytest.approx(
                expected, rel=1e-9)

    @pytest.mark.parametrize("mode", ["relay", "irs"])
    def test_dominance(self, mode):
        cfg, chans, design, forms = small_setup(mode, seed=32)
        psi, psi_tilde = psi_tables(design, chans)
        pack = c5_power_surrogate(psi, psi_tilde, design.p_i, cfg)
        rng = np.random.default_rng(33)
        for trial in range(500):
            k = trial % cfg.n_pairs
            p = rng.uniform(0.0, 2.0, size=design.p_i.shape)
            trial_design = design.replace(p_i=p)
            gamma = sinr_table(trial_design, chans, cfg)
            actual = float(np.sum(np.log2(1.0 + gamma[:, k])))
            assert c5_power_surrogate_value(pack, p, k) <= actual + 1e-9

    def test_rejects_negative_previous_powers(self):
        cfg, chans, design, forms = small_setup("relay", seed=34)
        psi, psi_tilde = psi_tables(design, chans)
        bad = design.p_i.copy()
        bad[0, 0] = -1.0
        with pytest.raises(ValueError):
            c5_power_surrogate(psi, psi_tilde, bad, cfg)
