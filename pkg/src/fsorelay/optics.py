"""Sampled complex optical fields.

Gaussian sources, angular-spectrum free-space propagation, lens Fourier
transforms between a fiber facet and the pupil plane, and mode-coupling
overlap integrals. Fields carry amplitude in sqrt(W)/m so that the total
power is the sampled integral of |u|^2.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import czt


class OpticsError(ValueError):
    """Base class for field and geometry errors."""


class GridTooCoarseError(OpticsError):
    pass


class WindowTooSmallError(OpticsError):
    pass


class InvalidDistanceError(OpticsError):
    pass


class ScaleMismatchError(OpticsError):
    pass


class GridMismatchError(OpticsError):
    pass


class AliasingWarning(UserWarning):
    """Propagation long enough that wrap-around may reach the window edge."""


@dataclass(frozen=True)
class GridSpec:
    """Uniform square sampling grid centered on the optical axis.

    Parameters
    ----------
    n_points : int
        Samples per axis; a power of two, at least 64.
    spacing : float
        Sample pitch in meters.
    """

    n_points: int
    spacing: float

    def __post_init__(self) -> None:
        n = self.n_points
        if n < 64 or (n & (n - 1)) != 0:
            raise ValueError("n_points must be a power of two and at least 64")
        if self.spacing <= 0:
            raise ValueError("spacing must be positive")

    @property
    def window(self) -> float:
        """Physical side length of the sampled window in meters."""
        return self.n_points * self.spacing

    def axis(self) -> np.ndarray:
        """Centered sample coordinates along one axis."""
        n = self.n_points
        return (np.arange(n) - n // 2) * self.spacing

    def radius_squared(self) -> np.ndarray:
        """x^2 + y^2 on the full grid (rows are y, columns are x)."""
        ax = self.axis()
        return ax[None, :] ** 2 + ax[:, None] ** 2

    def aperture_mask(self, diameter: float) -> np.ndarray:
        """Boolean mask of a centered circular aperture."""
        return self.radius_squared() <= (0.5 * diameter) ** 2


@dataclass(frozen=True)
class GaussianBeamParams:
    """Gaussian beam described by its 1/e^2 intensity radius at the plane."""

    waist_radius: float
    wavelength: float
    curvature_radius: float = math.inf

    def __post_init__(self) -> None:
        if self.waist_radius <= 0:
            raise ValueError("waist_radius must be positive")
        if self.wavelength <= 0:
            raise ValueError("wavelength must be positive")


@dataclass(frozen=True)
class ComplexField:
    """A complex scalar field sampled on a :class:`GridSpec`."""

    grid: GridSpec
    samples: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        expected = (self.grid.n_points, self.grid.n_points)
        if self.samples.shape != expected:
            raise ValueError(f"samples shape {self.samples.shape} != grid shape {expected}")

    def power(self) -> float:
        return field_power(self)


def field_power(fld: ComplexField) -> float:
    """Total power carried by the sampled field, in W."""
    s = fld.samples
    return float(np.sum(s.real**2 + s.imag**2) * fld.grid.spacing**2)


def make_gaussian(params: GaussianBeamParams, grid: GridSpec) -> ComplexField:
    """Build a unit-power Gaussian beam centered on the grid.

    The amplitude profile is exp(-r^2 / w^2) with ``w = waist_radius`` (the
    1/e^2 intensity radius); a finite curvature radius adds the usual
    parabolic phase front.
    """
    if params.waist_radius < 4 * grid.spacing:
        raise GridTooCoarseError(
            f"waist {params.waist_radius:g} m needs spacing <= {params.waist_radius / 4:g} m"
        )
    if grid.window < 6 * params.waist_radius:
        raise WindowTooSmallError(
            f"window {grid.window:g} m too small for waist {params.waist_radius:g} m"
        )
    r2 = grid.radius_squared()
    u = np.exp(-r2 / params.waist_radius**2).astype(np.complex128)
    if math.isfinite(params.curvature_radius):
        k = 2.0 * math.pi / params.wavelength
        u *= np.exp(1j * k * r2 / (2.0 * params.curvature_radius))
    u /= math.sqrt(np.sum(u.real**2 + u.imag**2)) * grid.spacing
    return ComplexField(grid, u)


def propagation_kernel(grid: GridSpec, distance: float, wavelength: float) -> np.ndarray:
    """Angular-spectrum transfer function on the FFT frequency grid.

    Exact non-paraxial kernel; evanescent components are dropped.
    """
    f = np.fft.fftfreq(grid.n_points, grid.spacing)
    fsq = f[None, :] ** 2 + f[:, None] ** 2
    arg = 1.0 - wavelength**2 * fsq
    propagating = arg > 0.0
    kz = (2.0 * math.pi / wavelength) * np.sqrt(np.where(propagating, arg, 0.0))
    return np.where(propagating, np.exp(1j * kz * distance), 0.0)


def propagate(fld: ComplexField, distance: float, wavelength: float) -> ComplexField:
    """Propagate a field through free space by the angular-spectrum method."""
    if distance < 0:
        raise InvalidDistanceError("propagation distance must be non-negative")
    if distance == 0:
        return fld
    grid = fld.grid
    # Beyond this distance the steepest sampled plane wave walks across the
    # whole window and wraps around.
    safe = grid.window * grid.spacing / wavelength
    if distance > safe:
        warnings.warn(
            f"distance {distance:g} m exceeds the alias-free range {safe:g} m "
            f"for this grid",
            AliasingWarning,
            stacklevel=2,
        )
    kernel = propagation_kernel(grid, distance, wavelength)
    out = np.fft.ifft2(np.fft.fft2(fld.samples) * kernel)
    return ComplexField(grid, out)


def _lens_transform_axis(samples: np.ndarray, n_out: int, phi: float, axis: int) -> np.ndarray:
    """Evaluate S[k] = sum_p u[p] exp(-i*phi*(k - n_out//2)*(p - n_in//2)) along one axis."""
    n_in = samples.shape[axis]
    c_in = n_in // 2
    c_out = n_out // 2
    pre = np.exp(1j * phi * c_out * np.arange(n_in))
    post = np.exp(1j * phi * c_in * (np.arange(n_out) - c_out))
    shape_in = [1, 1]
    shape_in[axis] = n_in
    shape_out = [1, 1]
    shape_out[axis] = n_out
    work = samples * pre.reshape(shape_in)
    work = czt(work, m=n_out, w=np.exp(-1j * phi), a=1.0 + 0.0j, axis=axis)
    return work * post.reshape(shape_out)


def lens_collimate(
    fiber_mode: ComplexField,
    focal_length: float,
    output_grid: GridSpec,
    wavelength: float,
) -> ComplexField:
    """Map a fiber-facet field to the pupil plane of a focal-length-f lens.

    The facet sits at the front focal point, so the pupil field is the scaled
    Fourier transform of the facet field with output coordinate
    x = wavelength * focal_length * nu. The transform is evaluated exactly on
    ``output_grid`` with a chirp-z transform, so the facet and pupil grids
    need no common pitch.

    Raises
    ------
    ScaleMismatchError
        If the output grid cannot hold the transformed field (either it spans
        more than one period of the discrete transform, or power is lost off
        its edges).
    """
    if focal_length <= 0:
        raise ValueError("focal_length must be positive")
    grid_in = fiber_mode.grid
    scale = wavelength * focal_length
    period = scale / grid_in.spacing  # spatial period of the discrete transform
    if output_grid.window > period * (1 + 1e-12):
        raise ScaleMismatchError(
            f"output window {output_grid.window:g} m exceeds the transform "
            f"period {period:g} m; use a finer facet grid or smaller output window"
        )
    phi = 2.0 * math.pi * grid_in.spacing * output_grid.spacing / scale
    work = _lens_transform_axis(fiber_mode.samples, output_grid.n_points, phi, axis=1)
    work = _lens_transform_axis(work, output_grid.n_points, phi, axis=0)
    work *= grid_in.spacing**2 / (1j * scale)
    out = ComplexField(output_grid, work)
    p_in = field_power(fiber_mode)
    p_out = field_power(out)
    if p_in > 0 and abs(p_out - p_in) > 1e-3 * p_in:
        raise ScaleMismatchError(
            f"transform lost {(1 - p_out / p_in) * 100:.2f}% of the power; "
            f"the output grid does not hold the transformed support"
        )
    return out


def couple_to_mode(
    aperture_field: ComplexField,
    fiber_mode: ComplexField,
    focal_length: float,
    aperture_diameter: float,
    wavelength: float,
) -> complex:
    """Complex coupling amplitude of a free-space field into one fiber mode.

    The fiber mode is transformed to the pupil plane with the receiving lens
    focal length, the incoming field is truncated by the circular receiving
    aperture, and the overlap integral is taken in the pupil plane.
    |result|^2 is the power coupling efficiency.
    """
    grid = aperture_field.grid
    if aperture_diameter > grid.window:
        raise GridMismatchError(
            f"aperture {aperture_diameter:g} m exceeds the sampled window {grid.window:g} m"
        )
    mode_pupil = lens_collimate(fiber_mode, focal_length, grid, wavelength)
    mask = grid.aperture_mask(aperture_diameter)
    overlap = np.sum(aperture_field.samples * mask * np.conj(mode_pupil.samples))
    return complex(overlap * grid.spacing**2)
