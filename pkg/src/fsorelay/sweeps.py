"""Experiment drivers: BER sweeps, relay placement, fading statistics.

Every driver consumes a frozen Scenario and returns a SweepResult holding
the primary table (x column plus named series), optional side tables, and
manifest metadata. Fading ensembles are cached per channel configuration,
so the four relay/gain combinations of one scenario share the same drawn
states and stay exactly paired.
"""

from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass, field, replace

import numpy as np

from .amplifier import AmplifierConfig, fixed_gain, mode_gains
from .channel import (
    ChannelModel,
    FadingEnsemble,
    FadingState,
    HopGeometry,
    ensemble_table,
    fading_stats,
    optimize_receiver_focal,
)
from .fiber import LPModeIndex, lp_mode_field
from .oracle import MEASURED_FIELDS, OracleConfig, simulate_budget
from .receiver import OOK_ON, ensemble_ber, noise_budget
from .scenario import Scenario, dbm_to_watts


@dataclass
class SweepResult:
    """One driver's output: main table, side tables, manifest lines."""

    kind: str
    x_name: str | None
    x: np.ndarray | None
    columns: dict[str, np.ndarray]
    scenario: Scenario
    meta: dict[str, str] = field(default_factory=dict)
    tables: dict[str, tuple[list[str], list[list]]] = field(default_factory=dict)


def channel_model(scenario: Scenario) -> ChannelModel:
    params = scenario.system_params()
    return ChannelModel(
        scenario.geometry(),
        scenario.cn2,
        scenario.master_seed,
        wavelength=params.wavelength,
        free_grid=scenario.free_grid(),
        facet_grid=scenario.facet_grid(),
        smf_mfd=scenario.smf_mfd_um * 1e-6,
        fmf_mfd=scenario.fmf_mfd_um * 1e-6,
        subharmonics=scenario.subharmonics,
        split_step=scenario.split_step,
    )


_ENSEMBLE_CACHE: OrderedDict = OrderedDict()
_ENSEMBLE_CACHE_SIZE = 16


def _ensemble_key(scenario: Scenario) -> tuple:
    bare_geometry = replace(scenario.geometry(), attenuation_db_per_km=0.0)
    return (
        bare_geometry, scenario.cn2, scenario.master_seed,
        scenario.grid_n, scenario.grid_spacing_mm,
        scenario.facet_grid_n, scenario.facet_grid_spacing_um,
        scenario.smf_mfd_um, scenario.fmf_mfd_um,
        scenario.subharmonics, scenario.split_step, scenario.ensemble_size,
    )


def _attenuate(ensemble: FadingEnsemble, geometry) -> FadingEnsemble:
    a1 = geometry.hop(1).attenuation_amplitude
    a2 = geometry.hop(2).attenuation_amplitude
    states = tuple(
        FadingState(a1 * s.into_relay, a2 * s.into_dest, s.index)
        for s in ensemble.states
    )
    return FadingEnsemble(states, ensemble.master_seed)


def master_ensemble(scenario: Scenario, threads: int = 1) -> FadingEnsemble:
    """Draw (or reuse) the full three-mode, six-field ensemble.

    States are drawn and cached without atmospheric attenuation, which is a
    plain per-hop scalar, then scaled for the requested scenario; clear-air
    and haze runs over one geometry share the same screens.
    """
    key = _ensemble_key(scenario)
    if key in _ENSEMBLE_CACHE:
        _ENSEMBLE_CACHE.move_to_end(key)
    else:
        bare = replace(scenario, attenuation_db_per_km=0.0)
        _ENSEMBLE_CACHE[key] = channel_model(bare).draw_ensemble(
            scenario.ensemble_size, threads)
        while len(_ENSEMBLE_CACHE) > _ENSEMBLE_CACHE_SIZE:
            _ENSEMBLE_CACHE.popitem(last=False)
    return _attenuate(_ENSEMBLE_CACHE[key], scenario.geometry())


def _relay_mode_count(relay_type: str) -> int:
    return 3 if relay_type == "FM" else 1


def _amp_config(scenario: Scenario, relay_type: str, gain_mode: str,
                mdg_db: float | None = None) -> AmplifierConfig:
    few_mode = relay_type == "FM"
    if mdg_db is None:
        mdg_db = scenario.mdg_db if few_mode else 0.0
    return AmplifierConfig(
        nsp=scenario.nsp,
        mode_count=3 if few_mode else 1,
        gain_mode=gain_mode,
        mdg_db=mdg_db,
        output_power=(None if scenario.relay_output_dbm is None
                      else dbm_to_watts(scenario.relay_output_dbm)),
    )


def run_ber_sweep(scenario: Scenario, threads: int = 1) -> SweepResult:
    """Ensemble BER against transmit power, one series per relay/gain combo."""
    ensemble = master_ensemble(scenario, threads)
    params = scenario.system_params()
    n_fields = scenario.dest_field_count()
    powers = scenario.transmit_powers_w()
    mc_bits = scenario.mc_bits or None
    columns: dict[str, np.ndarray] = {}
    meta = {"states": str(len(ensemble))}
    for relay in scenario.relay_types():
        sub = ensemble.restricted(_relay_mode_count(relay), n_fields)
        meta[f"mean_alpha1_{relay.lower()}"] = repr(float(sub.alpha1().mean()))
        for gain_mode in scenario.gain_modes():
            cfg = _amp_config(scenario, relay, gain_mode)
            bers = [
                ensemble_ber(sub, p, params, cfg, mc_bits, scenario.master_seed)
                for p in powers
            ]
            columns[f"{relay.lower()}_{gain_mode}"] = np.array(bers)
    return SweepResult("ber-sweep", "pt_dbm", np.array(scenario.pt_dbm),
                       columns, scenario, meta)


def run_mdg_sweep(scenario: Scenario, threads: int = 1) -> SweepResult:
    """BER against transmit power for each differential-gain value.

    Differential gain only exists for the few-mode relay, so this sweep is
    pinned to it; the scenario's first gain mode is honored.
    """
    ensemble = master_ensemble(scenario, threads)
    params = scenario.system_params()
    n_fields = scenario.dest_field_count()
    powers = scenario.transmit_powers_w()
    gain_mode = scenario.gain_modes()[0]
    mc_bits = scenario.mc_bits or None
    sub = ensemble.restricted(3, n_fields)
    columns: dict[str, np.ndarray] = {}
    for mdg in scenario.mdg_list_db:
        cfg = _amp_config(scenario, "FM", gain_mode, mdg_db=mdg)
        bers = [
            ensemble_ber(sub, p, params, cfg, mc_bits, scenario.master_seed)
            for p in powers
        ]
        columns[f"mdg_{mdg:g}db"] = np.array(bers)
    meta = {"states": str(len(ensemble)), "gain_mode": gain_mode}
    return SweepResult("mdg-sweep", "pt_dbm", np.array(scenario.pt_dbm),
                       columns, scenario, meta)


def optimized_receive_focals(scenario: Scenario, d1_km: float, d2_km: float,
                             search: tuple[float, float] = (0.12, 1.2),
                             ) -> tuple[float, float]:
    """Vacuum-optimal receive focals for both hops at the given split."""
    grid = scenario.free_grid()
    facet = scenario.facet_grid()
    wavelength = scenario.system_params().wavelength
    root2 = 2.0 * math.sqrt(2.0)
    source = lp_mode_field(LPModeIndex(0, 1), scenario.smf_mfd_um * 1e-6 / root2, facet)
    fmf_01 = lp_mode_field(LPModeIndex(0, 1), scenario.fmf_mfd_um * 1e-6 / root2, facet)
    hop1 = HopGeometry(d1_km * 1000.0, scenario.focal_tx_source,
                       scenario.focal_rx_relay, scenario.aperture_rx,
                       scenario.attenuation_db_per_km)
    hop2 = HopGeometry(d2_km * 1000.0, scenario.focal_tx_relay,
                       scenario.focal_rx_dest, scenario.aperture_rx,
                       scenario.attenuation_db_per_km)
    f1 = optimize_receiver_focal(hop1, source, fmf_01, grid, wavelength, search)
    f2 = optimize_receiver_focal(hop2, fmf_01, fmf_01, grid, wavelength, search)
    return f1, f2


def run_relay_location_sweep(scenario: Scenario, threads: int = 1) -> SweepResult:
    """BER against transmit power for each relay position on a fixed span.

    The span is d1 + d2 from the scenario; each candidate position gets its
    own vacuum-optimized receive focals and its own fading ensemble.
    """
    total_km = scenario.d1_km + scenario.d2_km
    params = scenario.system_params()
    n_fields = scenario.dest_field_count()
    powers = scenario.transmit_powers_w()
    relay = scenario.relay_types()[0]
    gain_mode = scenario.gain_modes()[0]
    mc_bits = scenario.mc_bits or None
    columns: dict[str, np.ndarray] = {}
    meta = {"total_length_km": repr(total_km)}
    for d1 in scenario.d1_list_km:
        if not 0.0 < d1 < total_km:
            raise ValueError(f"relay position {d1} km outside the {total_km} km span")
        d2 = total_km - d1
        f1, f2 = optimized_receive_focals(scenario, d1, d2)
        local = replace(scenario, d1_km=d1, d2_km=d2,
                        focal_rx_relay=f1, focal_rx_dest=f2)
        ensemble = master_ensemble(local, threads)
        sub = ensemble.restricted(_relay_mode_count(relay), n_fields)
        cfg = _amp_config(scenario, relay, gain_mode)
        bers = [
            ensemble_ber(sub, p, params, cfg, mc_bits, scenario.master_seed)
            for p in powers
        ]
        label = f"d1_{d1:g}km"
        columns[label] = np.array(bers)
        meta[f"focal_rx_relay_{d1:g}km"] = f"{f1:.4f}"
        meta[f"focal_rx_dest_{d1:g}km"] = f"{f2:.4f}"
        meta[f"mean_alpha1_{d1:g}km"] = repr(float(sub.alpha1().mean()))
    return SweepResult("relay-sweep", "pt_dbm", np.array(scenario.pt_dbm),
                       columns, scenario, meta)


def run_fading_stats(scenario: Scenario, threads: int = 1) -> SweepResult:
    """Fading histogram (2 dB bins) and summary statistics, FM vs SM."""
    ensemble = master_ensemble(scenario, threads)
    n_fields = scenario.dest_field_count()
    fm = ensemble.restricted(3, n_fields)
    sm = ensemble.restricted(1, n_fields)
    fm_stats = fading_stats(fm)
    sm_stats = fading_stats(sm)
    fm_db = -10.0 * np.log10(fm.alpha1())
    sm_db = -10.0 * np.log10(sm.alpha1())
    pooled = np.concatenate([fm_db, sm_db])
    lo = 2.0 * math.floor(pooled.min() / 2.0)
    hi = 2.0 * math.ceil(pooled.max() / 2.0)
    edges = np.arange(lo, hi + 2.0, 2.0)
    fm_count, _ = np.histogram(fm_db, bins=edges)
    sm_count, _ = np.histogram(sm_db, bins=edges)
    centers = 0.5 * (edges[:-1] + edges[1:])
    columns = {
        "fm_count": fm_count.astype(float),
        "sm_count": sm_count.astype(float),
    }
    rsd_ratio = (fm_stats["rsd"] / sm_stats["rsd"]
                 if sm_stats["rsd"] > 0 else math.inf)
    meta = {
        "states": str(len(ensemble)),
        "fm_mean_fading_db": f"{fm_stats['mean_fading_db']:.4f}",
        "fm_rsd": f"{fm_stats['rsd']:.4f}",
        "sm_mean_fading_db": f"{sm_stats['mean_fading_db']:.4f}",
        "sm_rsd": f"{sm_stats['rsd']:.4f}",
        "rsd_ratio_fm_over_sm": f"{rsd_ratio:.4f}",
    }
    tables = {"ensemble": ensemble_table(ensemble)}
    return SweepResult("fading-stats", "fading_db_bin_center", centers,
                       columns, scenario, meta, tables)


def random_fading_states(count: int, n_relay: int, n_dest: int,
                         seed: int) -> list[FadingState]:
    """Synthetic states with plausible magnitudes, for budget spot checks."""
    rng = np.random.default_rng(seed)
    states = []
    for i in range(count):
        target_alpha = rng.uniform(0.02, 0.2)
        h1 = rng.standard_normal(n_relay) + 1j * rng.standard_normal(n_relay)
        h1 *= math.sqrt(target_alpha / float(np.sum(np.abs(h1) ** 2)))
        target_hop2 = rng.uniform(0.05, 0.4)
        h2 = rng.standard_normal((n_relay, n_dest)) \
            + 1j * rng.standard_normal((n_relay, n_dest))
        h2 *= math.sqrt(target_hop2 / float(np.sum(np.abs(h2) ** 2)))
        states.append(FadingState(h1, h2, index=i))
    return states


def run_oracle_check(scenario: Scenario, n_states: int = 3,
                     m_terms: int = 64, n_realizations: int = 400,
                     seed: int = 1) -> SweepResult:
    """Closed-form budget terms against the time-domain estimator.

    Random states, mid-sweep transmit power, fixed gain per state; each row
    is one (state, term) pair with the closed value, the estimate, and its
    standard error.
    """
    params = scenario.system_params()
    transmit_power = dbm_to_watts(scenario.pt_dbm[len(scenario.pt_dbm) // 2])
    cfg = _amp_config(scenario, "FM", "fixed")
    states = random_fading_states(n_states, 3, scenario.dest_field_count(), seed)
    header = ["state_index", "term", "closed_form", "estimate", "std_error"]
    rows: list[list] = []
    for state in states:
        g = fixed_gain(state.hop1_power, transmit_power,
                       params.background_power, cfg, params)
        gains = mode_gains(g, scenario.mdg_db,
                           np.abs(state.into_relay) ** 2)
        closed = noise_budget(OOK_ON, transmit_power, state, gains, params).as_dict()
        oracle_cfg = OracleConfig(m_terms=m_terms, n_realizations=n_realizations,
                                  seed=seed + 1000 * (state.index + 1))
        estimates = simulate_budget(OOK_ON, transmit_power, state, gains,
                                    params, oracle_cfg)
        for name in MEASURED_FIELDS:
            est = estimates[name]
            rows.append([state.index, name, float(closed[name]),
                         est.value, est.se])
    meta = {
        "transmit_power_dbm": repr(scenario.pt_dbm[len(scenario.pt_dbm) // 2]),
        "m_terms": str(m_terms),
        "n_realizations": str(n_realizations),
    }
    return SweepResult("oracle-check", None, None, {}, scenario, meta,
                       tables={"oracle": (header, rows)})
