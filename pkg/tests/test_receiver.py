"""Receiver currents, beat-noise budget, and BER paths."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from fsorelay.amplifier import AmplifierConfig
from fsorelay.channel import FadingEnsemble, FadingState
from fsorelay.receiver import (
    OOK_ON,
    NoiseBudget,
    ber_state_gaussian,
    ber_state_montecarlo,
    decision_threshold,
    ensemble_ber,
    noise_budget,
    responsivity,
    signal_current,
)
from fsorelay.sweeps import random_fading_states
from fsorelay.system import SystemParams

from conftest import q_for_ber

PARAMS = SystemParams()


def _random_state(rng, n_modes=3, n_dest=2):
    h1 = (rng.standard_normal(n_modes) + 1j * rng.standard_normal(n_modes)) * 0.1
    h2 = (rng.standard_normal((n_modes, n_dest))
          + 1j * rng.standard_normal((n_modes, n_dest))) * 0.2
    return h1, h2


def test_responsivity_value():
    assert responsivity(PARAMS) == pytest.approx(
        0.75 * 1.6e-19 / PARAMS.photon_energy, rel=1e-12)
    assert responsivity(PARAMS) == pytest.approx(0.9364, abs=2e-4)


def test_thermal_noise_value(rng):
    h1, h2 = _random_state(rng)
    budget = noise_budget(OOK_ON, 1e-3, (h1, h2), np.full(3, 5.0), PARAMS)
    assert budget.var_thermal == pytest.approx(6.6271152e-13, rel=1e-6)


def test_signal_current_matches_explicit_sum(rng):
    h1, h2 = _random_state(rng)
    gains = np.array([4.0, 2.0, 3.0])
    pt = 2e-3
    per_mode, total = signal_current(OOK_ON, pt, (h1, h2), gains, PARAMS)
    for n in range(2):
        amp = sum(h1[m] * math.sqrt(gains[m]) * h2[m, n] for m in range(3))
        expected = responsivity(PARAMS) * OOK_ON * pt * abs(amp) ** 2
        assert per_mode[n] == pytest.approx(expected, rel=1e-12)
    assert total == pytest.approx(per_mode.sum(), rel=1e-12)


def test_budget_rail_additivity(rng):
    h1, h2 = _random_state(rng)
    b = noise_budget(OOK_ON, 1e-3, (h1, h2), np.full(3, 8.0), PARAMS)
    reconstructed_off = (
        b.var_background_relay + b.var_background_dest + b.var_background_cross
        + b.var_ase + b.var_background_ase + b.var_shot_off + b.var_thermal
    )
    assert b.var_off == pytest.approx(reconstructed_off, rel=1e-12)
    reconstructed_on = (
        reconstructed_off - b.var_shot_off + b.var_shot_on
        + b.var_signal_background_relay + b.var_signal_background_dest
        + b.var_signal_ase
    )
    assert b.var_on == pytest.approx(reconstructed_on, rel=1e-12)
    assert b.current_on == pytest.approx(b.current_off + b.signal_current, rel=1e-12)


def test_budget_without_background(rng):
    h1, h2 = _random_state(rng)
    quiet = SystemParams(background_power=0.0)
    b = noise_budget(OOK_ON, 1e-3, (h1, h2), np.full(3, 8.0), quiet)
    assert b.background_relay_current == 0.0
    assert b.background_dest_current == 0.0
    assert b.var_background_relay == 0.0
    assert b.var_background_dest == 0.0
    assert b.var_background_cross == 0.0
    assert b.var_background_ase == 0.0
    assert b.var_signal_background_relay == 0.0
    assert b.var_signal_background_dest == 0.0
    assert b.var_ase > 0.0


def test_budget_unit_gain_has_no_ase(rng):
    h1, h2 = _random_state(rng)
    b = noise_budget(OOK_ON, 1e-3, (h1, h2), np.ones(3), PARAMS)
    assert b.ase_current == 0.0
    assert b.var_ase == 0.0
    assert b.var_signal_ase == 0.0
    assert b.var_background_ase == 0.0


def test_budget_off_symbol_has_no_signal(rng):
    h1, h2 = _random_state(rng)
    b = noise_budget(0.0, 1e-3, (h1, h2), np.full(3, 8.0), PARAMS)
    assert np.all(b.signal_current == 0.0)
    assert b.var_shot_on == pytest.approx(b.var_shot_off, rel=1e-12)


def test_signal_terms_scale_with_transmit_power(rng):
    h1, h2 = _random_state(rng)
    gains = np.full(3, 8.0)
    b1 = noise_budget(OOK_ON, 1e-3, (h1, h2), gains, PARAMS)
    b2 = noise_budget(OOK_ON, 2e-3, (h1, h2), gains, PARAMS)
    assert b2.signal_current == pytest.approx(2 * b1.signal_current, rel=1e-12)
    assert b2.var_signal_ase == pytest.approx(2 * b1.var_signal_ase, rel=1e-12)
    assert b2.var_background_relay == pytest.approx(b1.var_background_relay, rel=1e-12)
    assert b2.var_ase == pytest.approx(b1.var_ase, rel=1e-12)


def test_single_mode_collapse(rng):
    # A single-mode relay equals the few-mode budget with dark extra modes.
    h1, h2 = _random_state(rng)
    h1_padded = np.array([h1[0], 0.0, 0.0])
    h2_padded = np.vstack([h2[0], np.zeros((2, 2))])
    g = 6.0
    sm = noise_budget(OOK_ON, 1e-3, (h1[:1], h2[:1]), np.array([g]), PARAMS)
    fm = noise_budget(OOK_ON, 1e-3, (h1_padded, h2_padded), np.full(3, g), PARAMS)
    for name, value in sm.as_dict().items():
        assert np.asarray(value) == pytest.approx(
            np.asarray(getattr(fm, name)), rel=1e-12), name


def test_budget_batching_matches_scalar(rng):
    states = [_random_state(rng) for _ in range(4)]
    h1 = np.stack([s[0] for s in states])
    h2 = np.stack([s[1] for s in states])
    gains = np.full((4, 3), 7.0)
    batched = noise_budget(OOK_ON, 1e-3, (h1, h2), gains, PARAMS)
    for i, (a, b) in enumerate(states):
        single = noise_budget(OOK_ON, 1e-3, (a, b), gains[i], PARAMS)
        picked = batched.select(i)
        assert picked.var_on == pytest.approx(single.var_on, rel=1e-12)
        assert picked.signal_current == pytest.approx(single.signal_current, rel=1e-12)


def _synthetic_budget(signal: float, var_on: float, var_off: float) -> NoiseBudget:
    zero = np.float64(0.0)
    return NoiseBudget(
        signal_current=np.float64(signal),
        background_relay_current=zero,
        background_dest_current=zero,
        ase_current=zero,
        var_background_relay=zero,
        var_background_dest=zero,
        var_background_cross=zero,
        var_ase=zero,
        var_signal_background_relay=zero,
        var_signal_background_dest=zero,
        var_signal_ase=zero,
        var_background_ase=zero,
        var_shot_off=zero,
        var_shot_on=zero,
        var_thermal=0.0,
        var_off=np.float64(var_off),
        var_on=np.float64(var_on),
    )


def test_ber_gaussian_hits_reference_point():
    q = q_for_ber(1e-4)
    budget = _synthetic_budget(signal=2.0 * q, var_on=1.0, var_off=1.0)
    assert ber_state_gaussian(budget) == pytest.approx(1e-4, rel=1e-6)


def test_ber_gaussian_monotone_in_signal():
    bers = [ber_state_gaussian(_synthetic_budget(s, 1.0, 1.0))
            for s in (1.0, 2.0, 4.0, 8.0)]
    assert all(b1 > b2 for b1, b2 in zip(bers, bers[1:]))


def test_decision_threshold_sits_between_rails():
    budget = _synthetic_budget(signal=3.0, var_on=4.0, var_off=1.0)
    threshold = decision_threshold(budget)
    assert budget.current_off < threshold < budget.current_on
    balanced = _synthetic_budget(signal=3.0, var_on=1.0, var_off=1.0)
    assert decision_threshold(balanced) == pytest.approx(1.5, rel=1e-12)


def test_montecarlo_agrees_with_gaussian():
    q = 2.8
    budget = _synthetic_budget(signal=2.0 * q, var_on=1.0, var_off=1.0)
    exact = ber_state_gaussian(budget)
    n_bits = 2_000_000
    estimate = ber_state_montecarlo(budget, n_bits, seed=77)
    se = math.sqrt(exact * (1 - exact) / n_bits)
    assert abs(estimate - exact) < 4 * se


def test_montecarlo_determinism_and_guard():
    budget = _synthetic_budget(signal=5.0, var_on=1.0, var_off=1.0)
    a = ber_state_montecarlo(budget, 200_000, seed=3)
    b = ber_state_montecarlo(budget, 200_000, seed=3)
    assert a == b
    with pytest.raises(ValueError):
        ber_state_montecarlo(budget, 50_000, seed=3)


def _ensemble_from_states(states) -> FadingEnsemble:
    return FadingEnsemble(tuple(states), master_seed=0)


def test_ensemble_ber_identical_states_collapse():
    state = random_fading_states(1, 3, 2, seed=5)[0]
    clones = [FadingState(state.into_relay, state.into_dest, i) for i in range(4)]
    ensemble = _ensemble_from_states(clones)
    fixed = ensemble_ber(ensemble, 1e-3, PARAMS, AmplifierConfig(gain_mode="fixed"))
    variable = ensemble_ber(ensemble, 1e-3, PARAMS,
                            AmplifierConfig(gain_mode="variable"))
    # with no fading spread the two gain policies coincide
    assert fixed == pytest.approx(variable, rel=1e-12)
    assert 0.0 <= fixed <= 0.5


def test_ensemble_ber_is_mean_of_states():
    states = random_fading_states(3, 3, 2, seed=8)
    ensemble = _ensemble_from_states(states)
    cfg = AmplifierConfig(gain_mode="variable")
    whole = ensemble_ber(ensemble, 1e-3, PARAMS, cfg)
    singles = [
        ensemble_ber(_ensemble_from_states([s]), 1e-3, PARAMS, cfg)
        for s in states
    ]
    assert whole == pytest.approx(float(np.mean(singles)), rel=1e-12)


def test_ensemble_ber_montecarlo_path():
    states = random_fading_states(2, 3, 1, seed=9)
    ensemble = _ensemble_from_states(states)
    cfg = AmplifierConfig(gain_mode="fixed")
    gauss = ensemble_ber(ensemble, 1e-5, PARAMS, cfg)
    mc = ensemble_ber(ensemble, 1e-5, PARAMS, cfg, mc_bits=400_000, mc_seed=4)
    assert mc == ensemble_ber(ensemble, 1e-5, PARAMS, cfg, mc_bits=400_000, mc_seed=4)
    se = math.sqrt(max(gauss, 1e-6) * (1 - gauss) / 400_000)
    assert abs(mc - gauss) < 3 * se + 5e-4


@given(scale=st.floats(0.5, 2.0), power_mw=st.floats(0.1, 10.0))
@settings(max_examples=30, deadline=None)
def test_budget_values_stay_finite_and_nonnegative(scale, power_mw):
    rng = np.random.default_rng(17)
    h1, h2 = _random_state(rng)
    b = noise_budget(OOK_ON, power_mw * 1e-3, (h1 * scale, h2), np.full(3, 5.0),
                     PARAMS)
    for name, value in b.as_dict().items():
        arr = np.asarray(value, dtype=float)
        assert np.all(np.isfinite(arr)), name
        assert np.all(arr >= 0.0), name
