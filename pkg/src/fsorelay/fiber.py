"""Linearly polarized mode fields of graded-index fibers.

The transverse profile is an associated Laguerre polynomial times a Gaussian:

    psi(r, theta) ~ L_(n-1)^m(r^2/omega^2) * (r/omega)^m
                    * exp(-r^2 / (2 omega^2)) * {cos, sin}(m theta)

normalized to unit power on its grid. ``omega`` is the width constant; the
fundamental mode's 1/e^2 intensity diameter (MFD) equals 2*sqrt(2)*omega.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import eval_genlaguerre

from .optics import ComplexField, GridSpec, GridTooCoarseError, WindowTooSmallError

ORIENT_COS = "cos"
ORIENT_SIN = "sin"

#: Default few-mode-fiber width constant, from an 11.0 um fundamental MFD.
FMF_OMEGA = 11.0e-6 / (2.0 * math.sqrt(2.0))
#: Width constant matching the 10.4 um MFD Gaussian mode of standard SMF.
SMF_OMEGA = 10.4e-6 / (2.0 * math.sqrt(2.0))

#: Default facet sampling, fine enough for the six-field basis.
FACET_GRID = GridSpec(n_points=512, spacing=0.15e-6)


class UnsupportedCountError(ValueError):
    pass


@dataclass(frozen=True)
class LPModeIndex:
    """Azimuthal/radial index pair plus degenerate-pair orientation."""

    azimuthal: int
    radial: int
    orientation: str = ORIENT_COS

    def __post_init__(self) -> None:
        if self.azimuthal < 0:
            raise ValueError("azimuthal index must be >= 0")
        if self.radial < 1:
            raise ValueError("radial index must be >= 1")
        if self.orientation not in (ORIENT_COS, ORIENT_SIN):
            raise ValueError("orientation must be 'cos' or 'sin'")
        if self.azimuthal == 0 and self.orientation != ORIENT_COS:
            raise ValueError("rotationally symmetric modes use the cosine convention")

    @property
    def label(self) -> str:
        base = f"LP{self.azimuthal}{self.radial}"
        if self.azimuthal == 0:
            return base
        return base + ("a" if self.orientation == ORIENT_COS else "b")


def lp_mode_field(index: LPModeIndex, omega: float, grid: GridSpec) -> ComplexField:
    """Sampled unit-power LP mode field.

    Parameters
    ----------
    index : LPModeIndex
        Which mode to build.
    omega : float
        Width constant in meters.
    grid : GridSpec
        Facet sampling grid; must resolve and contain the mode.
    """
    if omega < 3 * grid.spacing:
        raise GridTooCoarseError(f"omega {omega:g} m needs spacing <= {omega / 3:g} m")
    if grid.window < 10 * omega:
        raise WindowTooSmallError(f"window {grid.window:g} m too small for omega {omega:g} m")
    ax = grid.axis()
    xx = ax[None, :]
    yy = ax[:, None]
    u = (xx**2 + yy**2) / omega**2
    m = index.azimuthal
    radial = eval_genlaguerre(index.radial - 1, m, u) * np.exp(-0.5 * u)
    if m > 0:
        theta = np.arctan2(yy, xx)
        radial = radial * u ** (m / 2.0)
        azim = np.cos(m * theta) if index.orientation == ORIENT_COS else np.sin(m * theta)
        radial = radial * azim
    samples = radial.astype(np.complex128)
    norm = math.sqrt(np.sum(samples.real**2 + samples.imag**2)) * grid.spacing
    return ComplexField(grid, samples / norm)


@dataclass(frozen=True)
class ModeBasis:
    """Ordered orthonormal set of LP mode fields sharing one grid."""

    omega: float
    modes: tuple[LPModeIndex, ...]
    fields: tuple[ComplexField, ...]

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(m.label for m in self.modes)

    def __len__(self) -> int:
        return len(self.modes)

    def gram(self) -> np.ndarray:
        """Pairwise overlap matrix; identity for a clean basis."""
        spacing2 = self.fields[0].grid.spacing ** 2
        stack = np.stack([f.samples for f in self.fields])
        flat = stack.reshape(len(self.fields), -1)
        return (flat @ flat.conj().T) * spacing2


_MODE_ORDER = (
    LPModeIndex(0, 1),
    LPModeIndex(1, 1, ORIENT_COS),
    LPModeIndex(1, 1, ORIENT_SIN),
    LPModeIndex(2, 1, ORIENT_COS),
    LPModeIndex(2, 1, ORIENT_SIN),
    LPModeIndex(0, 2),
)

_FIELDS_PER_LABEL_COUNT = {1: 1, 2: 3, 4: 6}


def fields_for_label_count(label_count: int, spatial_variant: bool = False) -> int:
    """Number of spatial fields a fiber supporting ``label_count`` modes carries."""
    if label_count not in _FIELDS_PER_LABEL_COUNT:
        raise UnsupportedCountError(f"label_count must be 1, 2, or 4, got {label_count}")
    if spatial_variant and label_count == 4:
        return 4
    return _FIELDS_PER_LABEL_COUNT[label_count]


def mode_basis(
    label_count: int,
    omega: float,
    grid: GridSpec,
    spatial_variant: bool = False,
) -> ModeBasis:
    """Build the ordered LP basis for a fiber supporting 1, 2, or 4 modes.

    A count of 2 carries the degenerate pair as separate fields (3 fields
    total); a count of 4 carries 6 fields. With ``spatial_variant`` set, a
    count of 4 instead means four spatial fields, truncating the same order.
    """
    n_fields = fields_for_label_count(label_count, spatial_variant)
    modes = _MODE_ORDER[:n_fields]
    fields = tuple(lp_mode_field(m, omega, grid) for m in modes)
    return ModeBasis(omega=omega, modes=modes, fields=fields)
