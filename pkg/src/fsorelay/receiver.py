"""Direct-detection receiver: photocurrents, beat-noise budget, and BER.

The destination photodiode square-law detects the sum of the relayed signal,
amplified relay-side background, amplifier spontaneous emission, and local
background. Every direct current and beat variance is closed-form in the
fading state; the independently coded time-domain estimator in
:mod:`fsorelay.oracle` checks each term.

Conventions: a state is either a :class:`fsorelay.channel.FadingState` or a
plain ``(h1, h2)`` pair, where ``h1`` is the complex coupling row of hop one
(source into each relay mode) and ``h2`` the complex hop-two matrix (relay
mode by destination field). ``gains`` is the per-relay-mode power gain.
Arrays broadcast over leading axes, so one call can budget a whole ensemble.
"""

from __future__ import annotations

from dataclasses import dataclass, fields as dataclass_fields

import numpy as np
from scipy.special import erfc

from .amplifier import AmplifierConfig, fixed_gain, mode_gains, variable_gain
from .system import BOLTZMANN, SystemParams

OOK_ON = 2.0  # the on symbol; the off symbol is 0, so the mean power is Pt


def responsivity(params: SystemParams) -> float:
    """Photodiode responsivity rho * q / (h * nu0), in A/W."""
    return params.quantum_efficiency * params.electron_charge / params.photon_energy


def _state_arrays(state) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(state, tuple):
        h1, h2 = state
    else:
        h1, h2 = state.into_relay, state.into_dest
    return np.asarray(h1), np.asarray(h2)


@dataclass(frozen=True)
class NoiseBudget:
    """Every current (A) and variance (A^2) of one detection configuration.

    Fields may be scalars or broadcast arrays. ``current_off``/``current_on``
    and ``var_off``/``var_on`` are the rail totals used for BER.
    """

    signal_current: np.ndarray
    background_relay_current: np.ndarray
    background_dest_current: np.ndarray
    ase_current: np.ndarray
    var_background_relay: np.ndarray
    var_background_dest: np.ndarray
    var_background_cross: np.ndarray
    var_ase: np.ndarray
    var_signal_background_relay: np.ndarray
    var_signal_background_dest: np.ndarray
    var_signal_ase: np.ndarray
    var_background_ase: np.ndarray
    var_shot_off: np.ndarray
    var_shot_on: np.ndarray
    var_thermal: float
    var_off: np.ndarray
    var_on: np.ndarray

    @property
    def current_off(self):
        return (
            self.background_relay_current
            + self.background_dest_current
            + self.ase_current
        )

    @property
    def current_on(self):
        return self.current_off + self.signal_current

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in dataclass_fields(self)}

    def select(self, i: int) -> "NoiseBudget":
        """Scalar budget of state ``i`` out of a batched budget."""
        picked = {
            name: (val[i] if np.ndim(val) else val)
            for name, val in self.as_dict().items()
        }
        return NoiseBudget(**picked)


def signal_current(x: float, transmit_power: float, state, gains,
                   params: SystemParams):
    """Detected signal DC, per destination field and total.

    The relay modes add coherently: the field reaching destination field n is
    sum_m h1_m sqrt(g_m) h2_mn, complex phases included.
    """
    h1, h2 = _state_arrays(state)
    gains = np.asarray(gains, dtype=float)
    amp = np.einsum("...m,...m,...mn->...n", h1, np.sqrt(gains), h2)
    per_mode = responsivity(params) * x * transmit_power * np.abs(amp) ** 2
    return per_mode, per_mode.sum(axis=-1)


def noise_budget(x: float, transmit_power: float, state, gains,
                 params: SystemParams) -> NoiseBudget:
    """Full current/variance budget for one (or a batch of) fading state(s).

    ``x`` feeds the on-rail signal terms; the off rail is signal-free by
    construction, so a single call yields both rails.
    """
    h1, h2 = _state_arrays(state)
    gains = np.asarray(gains, dtype=float)
    resp = responsivity(params)
    be = params.electrical_bandwidth
    bo = params.optical_bandwidth
    nb = params.background_power / bo  # background PSD per mode, W/Hz
    beat_span = 2.0 * be * bo - be**2
    n_dest = h2.shape[-1]

    hop2_power = h2.real**2 + h2.imag**2  # (..., M, N)
    # Amplified background and spontaneous-emission PSD delivered to each
    # destination field.
    bg_transfer = np.einsum("...m,...mn->...n", gains, hop2_power)
    ase_psd = params.nsp * (gains - 1.0) * params.photon_energy  # (..., M), W/Hz
    ase_transfer = np.einsum("...m,...mn->...n", ase_psd, hop2_power)

    sig_per_mode, sig_total = signal_current(x, transmit_power, (h1, h2), gains, params)

    i_bg_relay = resp * nb * bo * bg_transfer.sum(axis=-1)
    i_bg_dest = resp * params.background_power * n_dest * np.ones(bg_transfer.shape[:-1])
    i_ase = resp * bo * ase_transfer.sum(axis=-1)

    # Noise-by-noise beats. Fields with independent phases landing in the
    # same destination mode beat pairwise: the self terms square the summed
    # PSD, and cross terms between two groups carry twice the PSD product.
    var_bg_relay = resp**2 * nb**2 * beat_span * (bg_transfer**2).sum(axis=-1)
    var_bg_dest = resp**2 * nb**2 * beat_span * n_dest * np.ones(bg_transfer.shape[:-1])
    var_bg_cross = 2.0 * resp**2 * nb**2 * beat_span * bg_transfer.sum(axis=-1)
    var_ase = resp**2 * beat_span * (ase_transfer**2).sum(axis=-1)
    var_bg_ase = (
        2.0 * resp**2 * nb * beat_span
        * (ase_transfer * (1.0 + bg_transfer)).sum(axis=-1)
    )

    # Signal-by-noise beats.
    var_sig_bg_relay = 4.0 * resp * be * nb * (sig_per_mode * bg_transfer).sum(axis=-1)
    var_sig_bg_dest = 4.0 * resp * be * nb * sig_total
    var_sig_ase = 4.0 * resp * be * (sig_per_mode * ase_transfer).sum(axis=-1)

    q = params.electron_charge
    shot_off = 2.0 * q * (i_bg_relay + i_bg_dest + i_ase) * be
    shot_on = shot_off + 2.0 * q * sig_total * be
    thermal = 4.0 * BOLTZMANN * params.temperature * be / params.load_resistance

    var_off = (
        var_bg_relay + var_bg_dest + var_bg_cross + var_ase + var_bg_ase
        + shot_off + thermal
    )
    var_on = (
        var_off - shot_off + shot_on
        + var_sig_bg_relay + var_sig_bg_dest + var_sig_ase
    )

    return NoiseBudget(
        signal_current=sig_total,
        background_relay_current=i_bg_relay,
        background_dest_current=i_bg_dest,
        ase_current=i_ase,
        var_background_relay=var_bg_relay,
        var_background_dest=var_bg_dest,
        var_background_cross=var_bg_cross,
        var_ase=var_ase,
        var_signal_background_relay=var_sig_bg_relay,
        var_signal_background_dest=var_sig_bg_dest,
        var_signal_ase=var_sig_ase,
        var_background_ase=var_bg_ase,
        var_shot_off=shot_off,
        var_shot_on=shot_on,
        var_thermal=thermal,
        var_off=var_off,
        var_on=var_on,
    )


def ber_state_gaussian(budget: NoiseBudget):
    """Gaussian optimal-threshold BER from a budget's two rails."""
    sigma_on = np.sqrt(budget.var_on)
    sigma_off = np.sqrt(budget.var_off)
    q_factor = budget.signal_current / (sigma_on + sigma_off)
    out = 0.5 * erfc(q_factor / np.sqrt(2.0))
    return float(out) if np.ndim(out) == 0 else out


def decision_threshold(budget: NoiseBudget):
    """Current threshold where the two Gaussian tails are equal."""
    sigma_on = np.sqrt(budget.var_on)
    sigma_off = np.sqrt(budget.var_off)
    return (sigma_off * budget.current_on + sigma_on * budget.current_off) / (
        sigma_on + sigma_off
    )


def ber_state_montecarlo(budget: NoiseBudget, n_bits: int, seed: int) -> float:
    """Bit-level BER estimate for a single fading state.

    Draws equiprobable on/off bits, adds Gaussian noise with the matching
    rail variance, and slices at the optimal threshold.
    """
    if n_bits < 100_000:
        raise ValueError("n_bits must be at least 1e5 for a usable estimate")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    i_on = float(np.asarray(budget.current_on))
    i_off = float(np.asarray(budget.current_off))
    s_on = float(np.sqrt(np.asarray(budget.var_on)))
    s_off = float(np.sqrt(np.asarray(budget.var_off)))
    threshold = (s_off * i_on + s_on * i_off) / (s_on + s_off)
    errors = 0
    chunk = 1 << 20
    remaining = int(n_bits)
    while remaining > 0:
        size = min(chunk, remaining)
        bits = rng.integers(0, 2, size=size).astype(bool)
        noise = rng.standard_normal(size)
        current = np.where(bits, i_on + s_on * noise, i_off + s_off * noise)
        errors += int(np.count_nonzero((current > threshold) != bits))
        remaining -= size
    return errors / n_bits


def ensemble_ber(ensemble, transmit_power: float, params: SystemParams,
                 cfg: AmplifierConfig, mc_bits: int | None = None,
                 mc_seed: int = 0) -> float:
    """Mean BER over a fading ensemble at one transmit power.

    Fixed-gain operation derives the gain from this ensemble's own average
    fading; variable gain tracks each state. ``mc_bits`` switches from the
    Gaussian closed form to bit-level counting per state.
    """
    h1 = np.stack([s.into_relay for s in ensemble.states])
    h2 = np.stack([s.into_dest for s in ensemble.states])
    mode_powers = h1.real**2 + h1.imag**2  # (S, M)
    alpha1 = mode_powers.sum(axis=-1)
    if cfg.gain_mode == "fixed":
        g = fixed_gain(float(alpha1.mean()), transmit_power,
                       params.background_power, cfg, params)
        gains = mode_gains(g, cfg.mdg_db, mode_powers.mean(axis=0))
        gains = np.broadcast_to(gains, mode_powers.shape)
    else:
        g = variable_gain(alpha1, transmit_power, params.background_power, cfg, params)
        gains = mode_gains(g, cfg.mdg_db, mode_powers)
    budget = noise_budget(OOK_ON, transmit_power, (h1, h2), gains, params)
    if mc_bits is None:
        return float(np.mean(ber_state_gaussian(budget)))
    seeds = np.random.SeedSequence(mc_seed).generate_state(len(ensemble.states))
    bers = [
        ber_state_montecarlo(budget.select(i), mc_bits, int(seeds[i]))
        for i in range(len(ensemble.states))
    ]
    return float(np.mean(bers))
