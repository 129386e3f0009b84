"""Relay amplifier gain models.

The relay re-amplifies whatever the first hop delivered back up to a target
output power. A fixed gain compensates the ensemble-average fading; a
variable gain tracks each realization. Mode-dependent gain tilts the
fundamental mode against the degenerate pair while holding the output power
constraint.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .system import SystemParams


class GainDomainError(ValueError):
    pass


@dataclass(frozen=True)
class AmplifierConfig:
    """Amplifier operating point.

    ``output_power`` of None means the relay re-emits at the source transmit
    power. ``mode_count`` is 3 for the few-mode amplifier and 1 for the
    single-mode one.
    """

    nsp: float = 1.4
    mode_count: int = 3
    gain_mode: str = "fixed"
    mdg_db: float = 0.0
    output_power: float | None = None

    def __post_init__(self) -> None:
        if self.nsp < 1:
            raise ValueError("nsp must be >= 1")
        if self.mode_count not in (1, 3):
            raise ValueError("mode_count must be 1 or 3")
        if self.gain_mode not in ("fixed", "variable"):
            raise ValueError("gain_mode must be 'fixed' or 'variable'")
        if self.mdg_db < 0:
            raise ValueError("mdg_db must be non-negative")
        if self.mdg_db > 0 and self.mode_count == 1:
            raise ValueError("mode-dependent gain needs the few-mode amplifier")


def _gain(alpha1, transmit_power: float, background_power: float,
          cfg: AmplifierConfig, params: SystemParams):
    alpha1 = np.asarray(alpha1, dtype=float)
    if np.any(alpha1 <= 0) or np.any(alpha1 > 1):
        raise GainDomainError("channel fading must lie in (0, 1]")
    if transmit_power <= 0:
        raise GainDomainError("transmit power must be positive")
    target = cfg.output_power if cfg.output_power is not None else transmit_power
    spont = cfg.mode_count * cfg.nsp * params.photon_energy * params.optical_bandwidth
    out = (target + spont) / (
        transmit_power * alpha1 + cfg.mode_count * background_power + spont
    )
    return out if out.ndim else float(out)


def fixed_gain(mean_alpha1: float, transmit_power: float, background_power: float,
               cfg: AmplifierConfig, params: SystemParams) -> float:
    """Gain that holds the ensemble-average relay output at the target power."""
    return _gain(mean_alpha1, transmit_power, background_power, cfg, params)


def variable_gain(alpha1, transmit_power: float, background_power: float,
                  cfg: AmplifierConfig, params: SystemParams):
    """Per-realization gain holding the instantaneous output at the target power.

    Accepts a scalar or an array of fading values and broadcasts.
    """
    return _gain(alpha1, transmit_power, background_power, cfg, params)


def mode_gains(gain, mdg_db: float, mode_powers) -> np.ndarray:
    """Per-mode gain vector with a fundamental/degenerate-pair tilt.

    The fundamental mode gets 10^(mdg_db/10) times the gain of the two
    degenerate modes (which always share one value), and the whole vector is
    rescaled so the amplified power of ``mode_powers`` equals what the
    uniform ``gain`` would have produced. Trailing axes broadcast, so a
    (..., 3) power array with a (...,) gain array yields (..., 3) gains.
    """
    p = np.asarray(mode_powers, dtype=float)
    gain = np.asarray(gain, dtype=float)
    n_modes = p.shape[-1]
    if n_modes == 1:
        return gain[..., None] * np.ones_like(p)
    if n_modes != 3:
        raise ValueError("mode_powers must have 1 or 3 entries per state")
    if mdg_db == 0.0:
        return gain[..., None] * np.ones_like(p)
    shape = np.array([10.0 ** (mdg_db / 10.0), 1.0, 1.0])
    total = p.sum(axis=-1)
    tilted = (shape * p).sum(axis=-1)
    if np.any(tilted == 0):
        raise GainDomainError("mode powers sum to zero; cannot normalize the gain tilt")
    scale = gain * total / tilted
    return scale[..., None] * shape


def ase_density(gains, nsp: float, params: SystemParams) -> np.ndarray:
    """Spontaneous-emission spectral density per mode, nsp (g - 1) h nu0."""
    return nsp * (np.asarray(gains, dtype=float) - 1.0) * params.photon_energy
