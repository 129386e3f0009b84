"""Kolmogorov turbulence: coherence length and random phase screens.

Screens come from the Fourier-transform method: draw circular complex
normals on the FFT frequency grid weighted by the Kolmogorov spectrum

    sigma^2(f) = 0.023 * r0^(-5/3) * (fx^2 + fy^2)^(-11/6)

(f in cycles/m), inverse transform, and take the real part. The imaginary
part is a second, independent screen from the same draw; both are exposed so
a single draw can feed both hops of a link. Optional subharmonic levels add
the low-frequency power the plain FFT grid misses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .optics import ComplexField, GaussianBeamParams, GridMismatchError, GridSpec


class R0OutOfRangeError(ValueError):
    pass


@dataclass(frozen=True)
class TurbulenceParams:
    """Path and beam description entering the coherence-length formula."""

    cn2: float
    distance: float
    wavenumber: float
    beam: GaussianBeamParams

    def __post_init__(self) -> None:
        if self.cn2 < 0:
            raise ValueError("cn2 must be non-negative")
        if self.distance <= 0:
            raise ValueError("distance must be positive")
        if self.wavenumber <= 0:
            raise ValueError("wavenumber must be positive")


def coherence_length(params: TurbulenceParams) -> float:
    """Atmospheric coherence length r0 of a Gaussian beam over one path.

    Uses the standard transmitter/receiver beam parameters: Theta0 from the
    launch curvature, Lambda0 = 2 d / (k w0^2), and

        a = (1 - Theta^(8/3)) / (1 - Theta)        Theta >= 0
        a = (1 + |Theta|^(8/3)) / (1 - Theta)      Theta < 0

        r0 = [8 / (3 (a + 0.62 Lambda^(11/6)))]^(3/5)
             * (0.423 cn2 k^2 d)^(-3/5)
    """
    if params.cn2 <= 0:
        raise ValueError("coherence length requires cn2 > 0")
    k = params.wavenumber
    d = params.distance
    w0 = params.beam.waist_radius
    r_curv = params.beam.curvature_radius
    theta0 = 1.0 if math.isinf(r_curv) else 1.0 - d / r_curv
    lambda0 = 2.0 * d / (k * w0**2)
    denom = theta0**2 + lambda0**2
    theta = theta0 / denom
    lam = lambda0 / denom
    if abs(1.0 - theta) < 1e-12:
        a = 8.0 / 3.0
    elif theta >= 0:
        a = (1.0 - theta ** (8.0 / 3.0)) / (1.0 - theta)
    else:
        a = (1.0 + abs(theta) ** (8.0 / 3.0)) / (1.0 - theta)
    shape = (8.0 / (3.0 * (a + 0.62 * lam ** (11.0 / 6.0)))) ** 0.6
    return shape * (0.423 * params.cn2 * k**2 * d) ** -0.6


@dataclass(frozen=True)
class PhaseScreen:
    """One realization of accumulated turbulent phase, in radians."""

    grid: GridSpec
    phase: np.ndarray = field(repr=False)
    r0: float = math.inf
    seed: int = 0


def _check_r0(r0: float, grid: GridSpec) -> None:
    if r0 < 4 * grid.spacing or r0 > grid.window / 4:
        raise R0OutOfRangeError(
            f"r0 {r0:g} m outside the resolvable range "
            f"[{4 * grid.spacing:g}, {grid.window / 4:g}] m for this grid"
        )


def _unit_complex_screen(grid: GridSpec, seed: int, subharmonics: int) -> np.ndarray:
    """Complex screen for r0 = 1 m; real and imaginary parts are independent."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    n = grid.n_points
    df = 1.0 / grid.window
    f = np.fft.fftfreq(n, grid.spacing)
    fsq = f[None, :] ** 2 + f[:, None] ** 2
    fsq[0, 0] = 1.0  # placeholder, bin zeroed below
    sigma = np.sqrt(0.023 * fsq ** (-11.0 / 6.0)) * df
    sigma[0, 0] = 0.0
    draw = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    screen = np.fft.ifft2(draw * sigma) * (n * n)
    if subharmonics > 0:
        ax = grid.axis()
        for level in range(1, subharmonics + 1):
            dfl = df / 3.0**level
            for iy in (-1, 0, 1):
                for ix in (-1, 0, 1):
                    if ix == 0 and iy == 0:
                        continue
                    coeff = (rng.standard_normal() + 1j * rng.standard_normal()) * (
                        math.sqrt(0.023 * ((ix * dfl) ** 2 + (iy * dfl) ** 2) ** (-11.0 / 6.0))
                        * dfl
                    )
                    wave_x = np.exp(2j * math.pi * ix * dfl * ax)
                    wave_y = np.exp(2j * math.pi * iy * dfl * ax)
                    screen += coeff * np.outer(wave_y, wave_x)
        screen -= screen.mean()
    return screen


def generate_screen_pair(
    r0_first: float,
    r0_second: float,
    grid: GridSpec,
    seed: int,
    subharmonics: int = 0,
) -> tuple[PhaseScreen, PhaseScreen]:
    """Two independent screens from one complex draw.

    r0 enters the spectrum only as the scalar r0^(-5/6), so the real and
    imaginary components of a single unit draw serve two paths with
    different coherence lengths.
    """
    _check_r0(r0_first, grid)
    _check_r0(r0_second, grid)
    unit = _unit_complex_screen(grid, seed, subharmonics)
    first = PhaseScreen(grid, np.ascontiguousarray(unit.real) * r0_first ** (-5.0 / 6.0), r0_first, seed)
    second = PhaseScreen(grid, np.ascontiguousarray(unit.imag) * r0_second ** (-5.0 / 6.0), r0_second, seed)
    return first, second


def generate_screen(
    r0: float, grid: GridSpec, seed: int, subharmonics: int = 0
) -> PhaseScreen:
    """One Kolmogorov phase screen, deterministic in (seed, r0, grid, subharmonics)."""
    _check_r0(r0, grid)
    unit = _unit_complex_screen(grid, seed, subharmonics)
    return PhaseScreen(grid, np.ascontiguousarray(unit.real) * r0 ** (-5.0 / 6.0), r0, seed)


def flat_screen(grid: GridSpec) -> PhaseScreen:
    """The zero screen (no turbulence)."""
    return PhaseScreen(grid, np.zeros((grid.n_points, grid.n_points)), math.inf, 0)


def apply_screen(fld: ComplexField, screen: PhaseScreen) -> ComplexField:
    """Multiply a field by exp(i * phase); power is untouched."""
    if fld.grid != screen.grid:
        raise GridMismatchError("field and screen grids differ")
    return ComplexField(fld.grid, fld.samples * np.exp(1j * screen.phase))
