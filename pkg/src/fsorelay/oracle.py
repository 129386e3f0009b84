"""Brute-force time-domain check of the closed-form noise budget.

Each optical source is built literally as its sum of discrete tones with
independent random phases, the destination fields are square-law detected,
and the photocurrent's mean and in-band (brick-wall to the electrical
bandwidth) fluctuation power are measured by FFT. Nothing here shares code
with :mod:`fsorelay.receiver` beyond the parameter set, so agreement between
the two is a real check on every current and beat term.

Estimates come back keyed by the matching :class:`NoiseBudget` field name.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .receiver import _state_arrays, responsivity
from .system import SystemParams


class InsufficientRealizationsError(ValueError):
    pass


@dataclass(frozen=True)
class OracleConfig:
    """Tone count per side, ensemble size, and seed of the estimator."""

    m_terms: int = 125
    n_realizations: int = 200
    seed: int = 0

    def __post_init__(self) -> None:
        if self.m_terms < 16:
            raise ValueError("m_terms must be at least 16")
        if self.n_realizations < 8:
            raise InsufficientRealizationsError(
                "need at least 8 realizations for a standard error"
            )


@dataclass(frozen=True)
class OracleEstimate:
    value: float
    se: float


#: Budget fields the estimator can measure (shot and thermal noise are not
#: optical-field effects and have no time-domain counterpart here).
MEASURED_FIELDS = (
    "signal_current",
    "background_relay_current",
    "background_dest_current",
    "ase_current",
    "var_background_relay",
    "var_background_dest",
    "var_background_cross",
    "var_ase",
    "var_signal_background_relay",
    "var_signal_background_dest",
    "var_signal_ase",
    "var_background_ase",
)


def simulate_budget(x: float, transmit_power: float, state, gains,
                    params: SystemParams, cfg: OracleConfig) -> dict[str, OracleEstimate]:
    """Estimate every measurable budget term for one fading state.

    Sources are toggled independently: self terms come from one source's own
    photocurrent, cross terms from the product current of two sources built
    with the same phase draws.
    """
    h1, h2 = _state_arrays(state)
    gains = np.asarray(gains, dtype=float)
    if h1.ndim != 1 or h2.ndim != 2:
        raise ValueError("the oracle works on a single state at a time")
    n_modes, n_dest = h2.shape

    # Snap the tone spacing so the electrical band holds a whole number of
    # beat bins; with the natural spacing Bo/(2m) the brick-wall edge can
    # fall between bins and bias the in-band power by up to dnu/Be.
    natural = params.optical_bandwidth / (2 * cfg.m_terms)
    k_band = max(1, int(round(params.electrical_bandwidth / natural)))
    dnu = params.electrical_bandwidth / k_band
    m = math.ceil(params.optical_bandwidth / (2.0 * dnu))
    n_t = 1
    while n_t < 4 * m + 4:
        n_t *= 2

    resp = responsivity(params)
    nb = params.background_power / params.optical_bandwidth
    ase_psd = params.nsp * (gains - 1.0) * params.photon_energy

    # Complex tone table: rows are tone index l, columns are time samples over
    # one period of the tone comb.
    l_idx = np.arange(-m, m + 1)
    tones = np.exp(2j * math.pi * np.outer(l_idx, np.arange(n_t)) / n_t)

    hop2_mag = np.abs(h2)  # (M, N)
    coherent = np.einsum("m,m,mn->n", h1, np.sqrt(gains).astype(complex), h2)
    sig_amp = math.sqrt(2.0 * x * transmit_power) * np.abs(coherent)  # (N,)
    bg_relay_amp = np.sqrt(2.0 * nb * dnu * gains)[:, None] * hop2_mag  # (M, N)
    ase_amp = np.sqrt(2.0 * ase_psd * dnu)[:, None] * hop2_mag  # (M, N)
    bg_dest_amp = math.sqrt(2.0 * nb * dnu)

    def self_current(z: np.ndarray) -> np.ndarray:
        return 0.5 * resp * (z.real**2 + z.imag**2).sum(axis=0)

    def cross_current(za: np.ndarray, zb: np.ndarray) -> np.ndarray:
        return resp * (za * zb.conj()).real.sum(axis=0)

    def inband_power(current: np.ndarray) -> float:
        spectrum = np.fft.rfft(current) / n_t
        band = spectrum[1 : k_band + 1]
        return float(2.0 * np.sum(band.real**2 + band.imag**2))

    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    samples: dict[str, list[float]] = {name: [] for name in MEASURED_FIELDS}
    two_pi = 2.0 * math.pi

    for _ in range(cfg.n_realizations):
        phase_sig = rng.uniform(0.0, two_pi, size=n_dest)
        z_sig = (sig_amp * np.exp(1j * phase_sig))[:, None] * np.ones(n_t)

        phase_bgr = rng.uniform(0.0, two_pi, size=(2 * m + 1, n_modes, n_dest))
        amp = np.einsum("mn,lmn->ln", bg_relay_amp, np.exp(1j * phase_bgr))
        z_bgr = amp.T @ tones  # (N, Nt)

        phase_ase = rng.uniform(0.0, two_pi, size=(2 * m + 1, n_modes, n_dest))
        amp = np.einsum("mn,lmn->ln", ase_amp, np.exp(1j * phase_ase))
        z_ase = amp.T @ tones

        phase_bgd = rng.uniform(0.0, two_pi, size=(2 * m + 1, n_dest))
        z_bgd = (bg_dest_amp * np.exp(1j * phase_bgd)).T @ tones

        samples["signal_current"].append(float(self_current(z_sig).mean()))
        samples["background_relay_current"].append(float(self_current(z_bgr).mean()))
        samples["background_dest_current"].append(float(self_current(z_bgd).mean()))
        samples["ase_current"].append(float(self_current(z_ase).mean()))

        samples["var_background_relay"].append(inband_power(self_current(z_bgr)))
        samples["var_background_dest"].append(inband_power(self_current(z_bgd)))
        samples["var_ase"].append(inband_power(self_current(z_ase)))
        samples["var_background_cross"].append(inband_power(cross_current(z_bgr, z_bgd)))
        samples["var_signal_background_relay"].append(
            inband_power(cross_current(z_sig, z_bgr))
        )
        samples["var_signal_background_dest"].append(
            inband_power(cross_current(z_sig, z_bgd))
        )
        samples["var_signal_ase"].append(inband_power(cross_current(z_sig, z_ase)))
        samples["var_background_ase"].append(
            inband_power(cross_current(z_bgr, z_ase))
            + inband_power(cross_current(z_bgd, z_ase))
        )

    out: dict[str, OracleEstimate] = {}
    root_n = math.sqrt(cfg.n_realizations)
    for name, values in samples.items():
        arr = np.asarray(values)
        out[name] = OracleEstimate(
            value=float(arr.mean()),
            se=float(arr.std(ddof=1) / root_n),
        )
    return out
