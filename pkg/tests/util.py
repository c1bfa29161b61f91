"""Shared test helpers: hand-built channel sets and random feasible designs."""

import numpy as np

from wpcmaxmin.channels import ChannelSet
from wpcmaxmin.config import SystemConfig
from wpcmaxmin.model import Design


def make_channels(h, g, seed=0):
    """ChannelSet from explicit fading arrays (positions are placeholders)."""
    h = np.asarray(h, dtype=complex)
    g = np.asarray(g, dtype=complex)
    k = h.shape[2]
    zeros = np.zeros((k, 2))
    dist = np.full(k, 10.0)
    return ChannelSet(seed=seed, h=h, g=g, tx_pos=zeros, rx_pos=zeros,
                      tx_dist=dist, rx_dist=dist)


def random_complex(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_design(cfg: SystemConfig, rng, tau=None, front_scale=1.0,
                  waveform_scale=None) -> Design:
    """Random design that satisfies the transmit-energy constraint.

    Waveform amplitudes and powers are drawn inside the per-(k,n) budget；
    front-end variables are random with the given scale (node-energy
    feasibility is NOT enforced — scale appropriately per test).
    """
    n, k, m = cfg.n_subbands, cfg.n_pairs, cfg.n_elements
    t, rho = cfg.block_length, cfg.rho
    tau = 0.5 * t if tau is None else tau
    budget = t * cfg.p_rf_tx.T  # (N, K)
    share = rng.uniform(0.1, 0.9, size=(n, k))
    split = rng.uniform(0.1, 0.9, size=(n, k))
    e_part = budget * share * split
    i_part = budget * share * (1.0 - split)
    if tau > 0:
        s_mag = np.sqrt(2 * rho * e_part / tau)
    else:
        s_mag = np.zeros((n, k))
    if waveform_scale is not None:
        s_mag = s_mag * waveform_scale
    phase = rng.uniform(0, 2 * np.pi, size=(n, k))
    s_e = s_mag * np.exp(1j * phase)
    if t - tau > 0:
        p_i = 2 * rho * i_part / (t - tau)
    else:
        p_i = np.zeros((n, k))

    if cfg.mode == "relay":
        u_e = front_scale * random_complex(rng, n, m, m)
        u_i = front_scale * random_complex(rng, n, m, m)
        return Design(mode="relay", tau=tau, s_e=s_e, p_i=p_i, u_e=u_e, u_i=u_i)
    theta_e = 1.0 + rng.uniform(0.0, front_scale, size=m)
    theta_i = 1.0 + rng.uniform(0.0, front_scale, size=m)
    phases_e = np.exp(1j * rng.uniform(0, 2 * np.pi, size=m))
    phases_i = np.exp(1j * rng.uniform(0, 2 * np.pi, size=m))
    return Design(mode="irs", tau=tau, s_e=s_e, p_i=p_i,
                  theta_e=theta_e * phases_e, theta_i=theta_i * phases_i)
