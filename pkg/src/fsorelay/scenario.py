"""Flat key=value experiment configuration.

A scenario pins everything a run needs: link layout, atmosphere, fiber and
grid sampling, relay/receiver configuration, sweep lists, ensemble size and
seed. Text form is one ``key = value`` per line with ``#`` comments; lists
accept either comma separation or an inclusive ``start:stop:step`` range.
Scenarios are frozen and hashable so results can be cached and stamped.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, fields
from importlib import resources

from .channel import LinkGeometry
from .fiber import fields_for_label_count
from .optics import GridSpec
from .system import SystemParams


class ScenarioError(ValueError):
    """Malformed scenario text: unknown key, bad value, or bad combination."""


def dbm_to_watts(dbm: float) -> float:
    return 1e-3 * 10.0 ** (dbm / 10.0)


def watts_to_dbm(watts: float) -> float:
    if watts <= 0:
        raise ValueError("power must be positive")
    return 10.0 * math.log10(watts / 1e-3)


_RELAY_TYPES = ("FM", "SM", "both")
_GAIN_MODES = ("fixed", "variable", "both")


@dataclass(frozen=True)
class Scenario:
    # Link layout
    d1_km: float = 2.5
    d2_km: float = 2.5
    focal_tx_source: float = 0.20
    focal_tx_relay: float = 0.2115
    focal_rx_relay: float = 0.40
    focal_rx_dest: float = 0.40
    aperture_rx: float = 0.15
    attenuation_db_per_km: float = 0.0
    # Atmosphere
    cn2: float = 1e-13
    subharmonics: int = 0
    split_step: int = 1
    # Fibers and sampling
    smf_mfd_um: float = 10.4
    fmf_mfd_um: float = 11.0
    grid_n: int = 1024
    grid_spacing_mm: float = 0.5
    facet_grid_n: int = 512
    facet_grid_spacing_um: float = 0.15
    # Relay and receiver configuration
    relay_type: str = "both"
    gain_mode: str = "fixed"
    destination_modes: int = 1
    four_mode_spatial_fields: bool = False
    mdg_db: float = 0.0
    relay_output_dbm: float | None = None
    # Sweep lists
    pt_dbm: tuple[float, ...] = tuple(float(v) for v in range(-20, 21))
    mdg_list_db: tuple[float, ...] = (0.0, 1.0, 2.0, 3.0)
    d1_list_km: tuple[float, ...] = (1.0, 2.5, 3.0, 4.0)
    # Ensemble
    ensemble_size: int = 1000
    master_seed: int = 12345
    mc_bits: int = 0
    # Receiver-chain overrides
    background_power_nw: float = 20.0
    nsp: float = 1.4

    def __post_init__(self) -> None:
        if self.relay_type not in _RELAY_TYPES:
            raise ScenarioError(f"relay_type must be one of {_RELAY_TYPES}")
        if self.gain_mode not in _GAIN_MODES:
            raise ScenarioError(f"gain_mode must be one of {_GAIN_MODES}")
        if self.destination_modes not in (1, 2, 4):
            raise ScenarioError("destination_modes must be 1, 2 or 4")
        if self.four_mode_spatial_fields and self.destination_modes != 4:
            raise ScenarioError(
                "four_mode_spatial_fields applies only when destination_modes = 4")
        if self.cn2 < 0:
            raise ScenarioError("cn2 must be non-negative")
        if self.mdg_db < 0:
            raise ScenarioError("mdg_db must be non-negative")
        if self.ensemble_size < 1:
            raise ScenarioError("ensemble_size must be positive")
        if self.master_seed < 0:
            raise ScenarioError("master_seed must be non-negative")
        if self.mc_bits < 0:
            raise ScenarioError("mc_bits must be non-negative")
        if self.split_step < 1:
            raise ScenarioError("split_step must be at least 1")
        if self.subharmonics < 0:
            raise ScenarioError("subharmonics must be non-negative")
        for name in ("grid_n", "facet_grid_n"):
            n = getattr(self, name)
            if n < 64 or n & (n - 1):
                raise ScenarioError(f"{name} must be a power of two, 64 or more")
        for name in ("grid_spacing_mm", "facet_grid_spacing_um"):
            if getattr(self, name) <= 0:
                raise ScenarioError(f"{name} must be positive")
        for name in ("pt_dbm", "mdg_list_db", "d1_list_km"):
            if not getattr(self, name):
                raise ScenarioError(f"{name} must not be empty")
        for name in ("d1_km", "d2_km", "nsp", "background_power_nw"):
            if getattr(self, name) <= 0:
                raise ScenarioError(f"{name} must be positive")

    # Derived views -------------------------------------------------------

    def geometry(self) -> LinkGeometry:
        return LinkGeometry(
            d1=self.d1_km * 1000.0,
            d2=self.d2_km * 1000.0,
            focal_tx_source=self.focal_tx_source,
            focal_tx_relay=self.focal_tx_relay,
            focal_rx_relay=self.focal_rx_relay,
            focal_rx_dest=self.focal_rx_dest,
            aperture_rx=self.aperture_rx,
            attenuation_db_per_km=self.attenuation_db_per_km,
        )

    def free_grid(self) -> GridSpec:
        return GridSpec(self.grid_n, self.grid_spacing_mm * 1e-3)

    def facet_grid(self) -> GridSpec:
        return GridSpec(self.facet_grid_n, self.facet_grid_spacing_um * 1e-6)

    def system_params(self) -> SystemParams:
        return SystemParams(
            background_power=self.background_power_nw * 1e-9,
            nsp=self.nsp,
        )

    def transmit_powers_w(self) -> tuple[float, ...]:
        return tuple(dbm_to_watts(p) for p in self.pt_dbm)

    def relay_types(self) -> tuple[str, ...]:
        return ("FM", "SM") if self.relay_type == "both" else (self.relay_type,)

    def gain_modes(self) -> tuple[str, ...]:
        if self.gain_mode == "both":
            return ("fixed", "variable")
        return (self.gain_mode,)

    def dest_field_count(self) -> int:
        return fields_for_label_count(self.destination_modes,
                                      self.four_mode_spatial_fields)

    def relay_output_w(self, transmit_power: float) -> float:
        if self.relay_output_dbm is None:
            return transmit_power
        return dbm_to_watts(self.relay_output_dbm)


# Parsing ------------------------------------------------------------------


def _parse_float(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ScenarioError(f"expected a number, got '{text}'") from None


def _parse_int(text: str) -> int:
    try:
        return int(text, 0)
    except ValueError:
        raise ScenarioError(f"expected an integer, got '{text}'") from None


_TRUE_WORDS = {"true", "1", "yes", "on"}
_FALSE_WORDS = {"false", "0", "no", "off"}


def _parse_bool(text: str) -> bool:
    word = text.strip().lower()
    if word in _TRUE_WORDS:
        return True
    if word in _FALSE_WORDS:
        return False
    raise ScenarioError(f"expected true/false, got '{text}'")


def _parse_float_list(text: str) -> tuple[float, ...]:
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ScenarioError(f"range must be start:stop:step, got '{text}'")
        start, stop, step = (_parse_float(p) for p in parts)
        if step <= 0:
            raise ScenarioError("range step must be positive")
        if stop < start:
            raise ScenarioError("range stop must not precede start")
        count = int(round((stop - start) / step))
        values = [start + i * step for i in range(count + 1)]
        if values[-1] > stop + 1e-9 * step:
            values.pop()
        return tuple(values)
    return tuple(_parse_float(p) for p in text.split(",") if p.strip())


def _parse_choice(options: tuple[str, ...]):
    lookup = {o.lower(): o for o in options}

    def parse(text: str) -> str:
        word = text.strip().lower()
        if word not in lookup:
            raise ScenarioError(f"expected one of {options}, got '{text}'")
        return lookup[word]

    return parse


def _parse_optional_float(text: str) -> float | None:
    if text.strip().lower() == "none":
        return None
    return _parse_float(text)


_PARSERS = {
    "d1_km": _parse_float,
    "d2_km": _parse_float,
    "focal_tx_source": _parse_float,
    "focal_tx_relay": _parse_float,
    "focal_rx_relay": _parse_float,
    "focal_rx_dest": _parse_float,
    "aperture_rx": _parse_float,
    "attenuation_db_per_km": _parse_float,
    "cn2": _parse_float,
    "subharmonics": _parse_int,
    "split_step": _parse_int,
    "smf_mfd_um": _parse_float,
    "fmf_mfd_um": _parse_float,
    "grid_n": _parse_int,
    "grid_spacing_mm": _parse_float,
    "facet_grid_n": _parse_int,
    "facet_grid_spacing_um": _parse_float,
    "relay_type": _parse_choice(_RELAY_TYPES),
    "gain_mode": _parse_choice(_GAIN_MODES),
    "destination_modes": _parse_int,
    "four_mode_spatial_fields": _parse_bool,
    "mdg_db": _parse_float,
    "relay_output_dbm": _parse_optional_float,
    "pt_dbm": _parse_float_list,
    "mdg_list_db": _parse_float_list,
    "d1_list_km": _parse_float_list,
    "ensemble_size": _parse_int,
    "master_seed": _parse_int,
    "mc_bits": _parse_int,
    "background_power_nw": _parse_float,
    "nsp": _parse_float,
}


def parse_scenario_text(text: str) -> Scenario:
    updates: dict = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ScenarioError(f"line {line_no}: expected 'key = value'")
        key = key.strip()
        value = value.strip()
        if key not in _PARSERS:
            raise ScenarioError(f"line {line_no}: unknown key '{key}'")
        if key in updates:
            raise ScenarioError(f"line {line_no}: duplicate key '{key}'")
        try:
            updates[key] = _PARSERS[key](value)
        except ScenarioError as exc:
            raise ScenarioError(f"line {line_no}: {exc}") from None
    try:
        return Scenario(**updates)
    except ScenarioError:
        raise
    except (TypeError, ValueError) as exc:
        raise ScenarioError(str(exc)) from None


def _format_value(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(repr(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def scenario_text(scenario: Scenario) -> str:
    """Canonical text form; parses back to an equal scenario."""
    lines = [f"{f.name} = {_format_value(getattr(scenario, f.name))}"
             for f in fields(scenario)]
    return "\n".join(lines) + "\n"


def scenario_hash(scenario: Scenario) -> str:
    digest = hashlib.sha256(scenario_text(scenario).encode("utf-8"))
    return digest.hexdigest()[:12]


def load_scenario(source: str) -> Scenario:
    """Read a scenario from a file path or a bundled preset name.

    A bare name (no slash, no .cfg suffix needed) is looked up among the
    bundled presets. Missing files raise FileNotFoundError so the command
    line can distinguish them from parse errors.
    """
    import os

    if os.path.exists(source):
        with open(source, "r", encoding="utf-8") as fh:
            return parse_scenario_text(fh.read())
    if os.sep not in source and "/" not in source:
        name = source if source.endswith(".cfg") else source + ".cfg"
        ref = resources.files("fsorelay").joinpath("presets", name)
        if ref.is_file():
            return parse_scenario_text(ref.read_text(encoding="utf-8"))
    raise FileNotFoundError(f"no scenario file or preset named '{source}'")


def list_presets() -> list[str]:
    root = resources.files("fsorelay").joinpath("presets")
    if not root.is_dir():
        return []
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".cfg"))
