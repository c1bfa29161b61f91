"""Seeded synthesis of the two-hop channel realizations.

Transmitter and receiver positions are drawn uniformly in disks; every link
gain combines a distance power law with i.i.d. circularly-symmetric complex
Gaussian fading.  All randomness flows through counter-based generators keyed
by ``(seed, stream, subband)`` so each subband's fading is an independent,
reproducible substream: regenerating with more subbands leaves the earlier
subbands' channels untouched.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .config import Geometry, SystemConfig

_STREAM_POSITIONS = 0
_STREAM_TX_FADING = 1
_STREAM_RX_FADING = 2


@dataclass(frozen=True)
class ChannelSet:
    """One realization of all links for a system.

    ``h`` has shape (N, M, K): subband n, front-end element m, transmitter k.
    ``g`` has shape (N, K, M): subband n, receiver k, front-end element m.
    """

    seed: int
    h: np.ndarray
    g: np.ndarray
    tx_pos: np.ndarray
    rx_pos: np.ndarray
    tx_dist: np.ndarray
    rx_dist: np.ndarray

    @property
    def n_subbands(self) -> int:
        return self.h.shape[0]

    @property
    def n_elements(self) -> int:
        return self.h.shape[1]

    @property
    def n_pairs(self) -> int:
        return self.h.shape[2]

    def tx_column(self, k: int, n: int) -> np.ndarray:
        """Uplink channel of transmitter ``k`` on subband ``n`` (length M)."""
        return self.h[n, :, k]

    def rx_column(self, k: int, n: int) -> np.ndarray:
        """Downlink channel toward receiver ``k`` on subband ``n`` (length M)."""
        return self.g[n, k, :]


def _stream(seed: int, stream: int, index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(stream, index))
    return np.random.Generator(np.random.Philox(ss))


def _uniform_disk(rng: np.random.Generator, count: int, radius: float) -> np.ndarray:
    # Radius grows as sqrt(u) so the density is uniform over the disk area.
    r = radius * np.sqrt(rng.uniform(size=count))
    phi = rng.uniform(0.0, 2.0 * np.pi, size=count)
    return np.column_stack([r * np.cos(phi), r * np.sin(phi)])


def _cscg(rng: np.random.Generator, *shape) -> np.ndarray:
    # Unit-variance circularly-symmetric complex Gaussian entries.
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def link_distance(horizontal: np.ndarray, height: float) -> np.ndarray:
    """Slant length of links with the given horizontal distances."""
    return np.sqrt(np.asarray(horizontal) ** 2 + height**2)


def generate_channels(config: SystemConfig, seed: int) -> ChannelSet:
    """Draw positions and fading for every link of the configured system."""
    geo = config.geometry
    k, n, m = config.n_pairs, config.n_subbands, config.n_elements

    rng_pos = _stream(seed, _STREAM_POSITIONS, 0)
    tx_pos = np.array([-geo.d_tx, 0.0]) + _uniform_disk(rng_pos, k, geo.r_tx)
    rx_pos = np.array([geo.d_rx, 0.0]) + _uniform_disk(rng_pos, k, geo.r_rx)

    tx_dist = link_distance(np.linalg.norm(tx_pos, axis=1), geo.height)
    rx_dist = link_distance(np.linalg.norm(rx_pos, axis=1), geo.height)
    tx_amp = np.array([geo.path_amplitude(d) for d in tx_dist])
    rx_amp = np.array([geo.path_amplitude(d) for d in rx_dist])

    h = np.empty((n, m, k), dtype=complex)
    g = np.empty((n, k, m), dtype=complex)
    for nn in range(n):
        h[nn] = _cscg(_stream(seed, _STREAM_TX_FADING, nn), m, k) * tx_amp[np.newaxis, :]
        g[nn] = _cscg(_stream(seed, _STREAM_RX_FADING, nn), k, m) * rx_amp[:, np.newaxis]

    for arr in (h, g, tx_pos, rx_pos, tx_dist, rx_dist):
        arr.flags.writeable = False
    return ChannelSet(seed=seed, h=h, g=g, tx_pos=tx_pos, rx_pos=rx_pos,
                      tx_dist=tx_dist, rx_dist=rx_dist)


def _complex_to_pairs(a: np.ndarray) -> list:
    stacked = np.stack([a.real, a.imag], axis=-1)
    return stacked.tolist()


def _pairs_to_complex(data: list) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    return arr[..., 0] + 1j * arr[..., 1]


def channels_to_json(channels: ChannelSet) -> str:
    """Serialize a channel realization; complex entries become [re, im]."""
    payload = {
        "seed": channels.seed,
        "n_pairs": channels.n_pairs,
        "n_subbands": channels.n_subbands,
        "n_elements": channels.n_elements,
        "tx_pos": channels.tx_pos.tolist(),
        "rx_pos": channels.rx_pos.tolist(),
        "tx_dist": channels.tx_dist.tolist(),
        "rx_dist": channels.rx_dist.tolist(),
        "h": _complex_to_pairs(channels.h),
        "g": _complex_to_pairs(channels.g),
    }
    return json.dumps(payload)


def channels_from_json(text: str) -> ChannelSet:
    """Inverse of :func:`channels_to_json` (bit-exact for finite doubles)."""
    payload = json.loads(text)
    h = _pairs_to_complex(payload["h"])
    g = _pairs_to_complex(payload["g"])
    tx_pos = np.asarray(payload["tx_pos"], dtype=float)
    rx_pos = np.asarray(payload["rx_pos"], dtype=float)
    tx_dist = np.asarray(payload["tx_dist"], dtype=float)
    rx_dist = np.asarray(payload["rx_dist"], dtype=float)
    for arr in (h, g, tx_pos, rx_pos, tx_dist, rx_dist):
        arr.flags.writeable = False
    return ChannelSet(seed=payload["seed"], h=h, g=g, tx_pos=tx_pos, rx_pos=rx_pos,
                      tx_dist=tx_dist, rx_dist=rx_dist)
