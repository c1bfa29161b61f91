"""System configuration: dimensions, power budgets, noise levels, harvester
constants, and the scenario geometry used to synthesize channels."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

#: Timeline factor: the relay needs two hops per symbol, the reflecting
#: surface forwards within the same symbol.
RHO_RELAY = 2
RHO_SURFACE = 1

MODES = ("relay", "irs")


def dbm_to_watt(dbm: float) -> float:
    """Convert a power level in dBm to watts."""
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watt_to_dbm(watt: float) -> float:
    """Convert a power level in watts to dBm."""
    if watt <= 0:
        raise ValueError("power must be positive to express in dBm")
    return 10.0 * np.log10(watt) + 30.0


@dataclass(frozen=True)
class Geometry:
    """Node placement for channel synthesis.

    Transmitters are dropped uniformly in a disk of radius ``r_tx`` centered
    ``d_tx`` meters to one side of the front-end's ground projection;
    receivers in a disk of radius ``r_rx`` centered ``d_rx`` meters to the
    other side.  The front-end (relay or surface) is elevated ``height``
    meters, so a link with horizontal distance ``l`` has length
    ``sqrt(l^2 + height^2)``.
    """

    d_tx: float = 10.0
    d_rx: float = 10.0
    height: float = 10.0
    r_tx: float = 5.0
    r_rx: float = 5.0
    d_ref: float = 1.0
    pl_exponent: float = 3.0
    pl_base: float = 0.1

    def path_amplitude(self, distance: float) -> float:
        """Amplitude scale factor of a link of the given length."""
        return self.pl_base * (distance / self.d_ref) ** (-self.pl_exponent / 2.0)


@dataclass(frozen=True)
class SystemConfig:
    """Static description of one relay- or surface-assisted system."""

    mode: str
    n_pairs: int
    n_subbands: int
    n_elements: int
    block_length: float = 1.0
    #: Per-transmitter, per-subband RF power budget [W], shape (K, N).
    p_rf_tx: np.ndarray = field(default=None)  # type: ignore[assignment]
    #: Front-end RF power budget [W] entering each per-subband energy
    #: constraint, shape (N,).  For the surface this is the total budget,
    #: repeated per constraint.
    p_rf_node: np.ndarray = field(default=None)  # type: ignore[assignment]
    #: Front-end input noise power [W] per subband, shape (N,).
    sigma2_node: np.ndarray = field(default=None)  # type: ignore[assignment]
    #: Receiver noise power [W], shape (K, N).
    sigma2_rx: np.ndarray = field(default=None)  # type: ignore[assignment]
    #: Residual interference power [W] at each receiver, shape (K, N).
    delta2: np.ndarray = field(default=None)  # type: ignore[assignment]
    #: Harvester log-quadratic response constants (natural-log convention).
    eh_a: float = -0.11
    eh_b: float = -1.17
    eh_c: float = -12.0
    #: Minimum harvested energy per transmitter [J], shape (K,).
    e_min: np.ndarray = field(default=None)  # type: ignore[assignment]
    geometry: Geometry = field(default_factory=Geometry)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        for name in ("n_pairs", "n_subbands", "n_elements"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.block_length <= 0:
            raise ValueError("block_length must be positive")
        k, n = self.n_pairs, self.n_subbands
        object.__setattr__(self, "p_rf_tx", _grid(self.p_rf_tx, (k, n), dbm_to_watt(28.0)))
        default_node = dbm_to_watt(28.0) if self.mode == "relay" else dbm_to_watt(20.0)
        object.__setattr__(self, "p_rf_node", _grid(self.p_rf_node, (n,), default_node))
        default_noise = 1e-11 if self.mode == "relay" else 1e-13
        object.__setattr__(self, "sigma2_node", _grid(self.sigma2_node, (n,), default_noise))
        object.__setattr__(self, "sigma2_rx", _grid(self.sigma2_rx, (k, n), 1e-11))
        object.__setattr__(self, "delta2", _grid(self.delta2, (k, n), 1e-11))
        object.__setattr__(self, "e_min", _grid(self.e_min, (k,), 1e-6))
        for name in ("p_rf_tx", "p_rf_node", "sigma2_node", "sigma2_rx"):
            if np.any(getattr(self, name) <= 0):
                raise ValueError(f"{name} must be strictly positive")
        if np.any(self.delta2 < 0) or np.any(self.e_min < 0):
            raise ValueError("delta2 and e_min must be non-negative")
        if self.eh_a >= 0:
            raise ValueError("eh_a must be negative for a saturating harvester")

    @property
    def rho(self) -> int:
        """Timeline factor: 2 for the relay, 1 for the surface."""
        return RHO_RELAY if self.mode == "relay" else RHO_SURFACE

    _GRID_DIMS = {
        "p_rf_tx": ("n_pairs", "n_subbands"),
        "p_rf_node": ("n_subbands",),
        "sigma2_node": ("n_subbands",),
        "sigma2_rx": ("n_pairs", "n_subbands"),
        "delta2": ("n_pairs", "n_subbands"),
        "e_min": ("n_pairs",),
    }

    def with_updates(self, **kwargs) -> "SystemConfig":
        """Copy of the config with the given fields replaced.

        When a dimension changes, constant per-entry grids are re-broadcast
        to the new shape; a non-constant grid must be supplied explicitly.
        """
        changed = {d for d in ("n_pairs", "n_subbands")
                   if d in kwargs and kwargs[d] != getattr(self, d)}
        if changed:
            for name, dims in self._GRID_DIMS.items():
                if name in kwargs or not changed.intersection(dims):
                    continue
                grid = getattr(self, name)
                if np.all(grid == grid.flat[0]):
                    kwargs[name] = float(grid.flat[0])
                else:
                    raise ValueError(
                        f"{name} is not constant; supply it explicitly when "
                        f"changing {sorted(changed)}")
        return replace(self, **kwargs)


def _grid(value, shape, default) -> np.ndarray:
    if value is None:
        out = np.full(shape, float(default))
    else:
        out = np.asarray(value, dtype=float)
        if out.ndim == 0:
            out = np.full(shape, float(out))
        if out.shape != shape:
            raise ValueError(f"expected shape {shape}, got {out.shape}")
    out = out.copy()
    out.flags.writeable = False
    return out


def desk_config(mode: str = "relay", **overrides) -> SystemConfig:
    """Small configuration for fast continuous-integration runs."""
    defaults = dict(mode=mode, n_pairs=3, n_subbands=4, n_elements=4)
    defaults.update(overrides)
    return SystemConfig(**defaults)


def reference_config(mode: str = "relay", **overrides) -> SystemConfig:
    """Large-scale configuration mirroring the published evaluation setup."""
    defaults = dict(
        mode=mode,
        n_pairs=5,
        n_subbands=8,
        n_elements=6 if mode == "relay" else 20,
        e_min=1e-5,
    )
    defaults.update(overrides)
    return SystemConfig(**defaults)
