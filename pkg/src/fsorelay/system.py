"""Shared physical constants and link-level system parameters."""

from __future__ import annotations

from dataclasses import dataclass

SPEED_OF_LIGHT = 299792458.0  # m/s
BOLTZMANN = 1.380649e-23  # J/K


@dataclass(frozen=True)
class SystemParams:
    """Detector, bandwidth, and noise constants shared by the whole link.

    Power-style fields are in SI units (W, Hz, K, Ohm). ``background_power``
    is the background radiation power collected per spatial mode.
    """

    wavelength: float = 1550e-9
    electrical_bandwidth: float = 2e9
    optical_bandwidth: float = 125e9
    bit_rate: float = 2e9
    nsp: float = 1.4
    temperature: float = 300.0
    quantum_efficiency: float = 0.75
    load_resistance: float = 50.0
    background_power: float = 20e-9
    electron_charge: float = 1.6e-19
    planck: float = 6.626e-34

    def __post_init__(self) -> None:
        if self.electrical_bandwidth > self.optical_bandwidth:
            raise ValueError("electrical bandwidth must not exceed the optical bandwidth")
        for name in (
            "wavelength",
            "electrical_bandwidth",
            "optical_bandwidth",
            "bit_rate",
            "temperature",
            "load_resistance",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0 <= self.quantum_efficiency <= 1:
            raise ValueError("quantum_efficiency must lie in [0, 1]")
        if self.nsp < 0 or self.background_power < 0:
            raise ValueError("nsp and background_power must be non-negative")

    @property
    def center_frequency(self) -> float:
        """Optical carrier frequency in Hz."""
        return SPEED_OF_LIGHT / self.wavelength

    @property
    def photon_energy(self) -> float:
        """Energy of one carrier photon in J."""
        return self.planck * self.center_frequency

    @property
    def wavenumber(self) -> float:
        """Free-space wavenumber 2*pi/wavelength in 1/m."""
        import math

        return 2.0 * math.pi / self.wavelength
