"""Dual-hop free-space optical link simulator with an amplified relay.

The library models a source terminal, a turbulent first hop into a
few-mode (or single-mode) amplified relay, a turbulent second hop, and a
direct-detection receiver, then sweeps bit error rate against transmit
power, relay placement, and amplifier gain imbalance.
"""

__version__ = "0.1.0"

from .amplifier import (
    AmplifierConfig,
    ase_density,
    fixed_gain,
    mode_gains,
    variable_gain,
)
from .channel import (
    ChannelModel,
    FadingEnsemble,
    FadingState,
    HopGeometry,
    LinkGeometry,
    draw_ensemble,
    fading_stats,
    hop_coupling,
    optimize_receiver_focal,
)
from .fiber import LPModeIndex, ModeBasis, lp_mode_field, mode_basis
from .optics import (
    ComplexField,
    GaussianBeamParams,
    GridSpec,
    couple_to_mode,
    field_power,
    lens_collimate,
    make_gaussian,
    propagate,
)
from .oracle import OracleConfig, OracleEstimate, simulate_budget
from .receiver import (
    NoiseBudget,
    ber_state_gaussian,
    ber_state_montecarlo,
    decision_threshold,
    ensemble_ber,
    noise_budget,
    responsivity,
    signal_current,
)
from .scenario import (
    Scenario,
    ScenarioError,
    dbm_to_watts,
    list_presets,
    load_scenario,
    parse_scenario_text,
    scenario_hash,
    scenario_text,
    watts_to_dbm,
)
from .sweeps import (
    SweepResult,
    master_ensemble,
    run_ber_sweep,
    run_fading_stats,
    run_mdg_sweep,
    run_oracle_check,
    run_relay_location_sweep,
)
from .system import SystemParams
from .turbulence import (
    PhaseScreen,
    TurbulenceParams,
    coherence_length,
    generate_screen,
    generate_screen_pair,
)

__all__ = [
    "AmplifierConfig",
    "ChannelModel",
    "ComplexField",
    "FadingEnsemble",
    "FadingState",
    "GaussianBeamParams",
    "GridSpec",
    "HopGeometry",
    "LPModeIndex",
    "LinkGeometry",
    "ModeBasis",
    "NoiseBudget",
    "OracleConfig",
    "OracleEstimate",
    "PhaseScreen",
    "Scenario",
    "ScenarioError",
    "SweepResult",
    "SystemParams",
    "TurbulenceParams",
    "ase_density",
    "ber_state_gaussian",
    "ber_state_montecarlo",
    "coherence_length",
    "couple_to_mode",
    "dbm_to_watts",
    "decision_threshold",
    "draw_ensemble",
    "ensemble_ber",
    "fading_stats",
    "field_power",
    "fixed_gain",
    "generate_screen",
    "generate_screen_pair",
    "hop_coupling",
    "lens_collimate",
    "list_presets",
    "load_scenario",
    "lp_mode_field",
    "make_gaussian",
    "master_ensemble",
    "mode_basis",
    "mode_gains",
    "noise_budget",
    "optimize_receiver_focal",
    "parse_scenario_text",
    "propagate",
    "responsivity",
    "run_ber_sweep",
    "run_fading_stats",
    "run_mdg_sweep",
    "run_oracle_check",
    "run_relay_location_sweep",
    "scenario_hash",
    "scenario_text",
    "signal_current",
    "simulate_budget",
    "variable_gain",
    "watts_to_dbm",
]
