"""Two-hop fading channel: turbulent mode couplings per realization.

Each fading state is one pair of phase screens. Hop one launches the source
fiber mode, crosses its path and screen, and couples into the relay fiber
modes; hop two launches each relay mode past its own screen and couples into
the destination fields. States are drawn by index from a master seed, so
ensembles are reproducible and independent of worker count.

The per-state work runs in the spectral domain against precomputed
receive-mode spectra (a Parseval shortcut); the literal compose-the-optics
path is kept as :func:`hop_coupling` and the two are interchangeable.
"""

from __future__ import annotations

import math
import multiprocessing
from collections import OrderedDict
from dataclasses import dataclass, field, replace

import numpy as np

from .fiber import FACET_GRID, ModeBasis, lp_mode_field, mode_basis, LPModeIndex
from .optics import (
    ComplexField,
    GaussianBeamParams,
    GridSpec,
    couple_to_mode,
    lens_collimate,
    propagate,
    propagation_kernel,
)
from .turbulence import (
    PhaseScreen,
    TurbulenceParams,
    apply_screen,
    coherence_length,
    generate_screen,
    generate_screen_pair,
)

#: Default free-space sampling: half-millimeter pitch over a 512 mm window.
FREE_GRID = GridSpec(n_points=1024, spacing=0.5e-3)

DEFAULT_WAVELENGTH = 1550e-9
DEFAULT_SMF_MFD = 10.4e-6
DEFAULT_FMF_MFD = 11.0e-6

N_RELAY_MODES = 3
N_DEST_FIELDS = 6

#: Fraction of a path segment traversed before its phase plate, per hop.
#: Placement is invisible in vacuum but shapes the fading statistics: the
#: later the plate, the larger the beam crossing it and the deeper and more
#: mode-mixed the coupling loss. Both plates sit adjacent to the relay,
#: modeling turbulence concentrated around the mid-span station: hop one's
#: late placement produces the deep, diversity-rich collection fading at the
#: relay, while hop two's launch-plane placement keeps the amplified modes
#: from scrambling into each other on the way to the destination (a late
#: plate there would make the relay modes interfere as random phasors inside
#: a single destination mode, erasing the few-mode advantage).
SCREEN_FRACTION_HOP1 = 0.875
SCREEN_FRACTION_HOP2 = 0.0


class NoInteriorMaximumError(ValueError):
    pass


@dataclass(frozen=True)
class HopGeometry:
    """One hop: path length, the two lens focals, aperture, attenuation."""

    distance: float
    focal_tx: float
    focal_rx: float
    aperture_rx: float
    attenuation_db_per_km: float = 0.0

    @property
    def attenuation_amplitude(self) -> float:
        loss_db = self.attenuation_db_per_km * self.distance / 1000.0
        return 10.0 ** (-loss_db / 20.0)


@dataclass(frozen=True)
class LinkGeometry:
    """Source-relay-destination layout with its lens focal lengths."""

    d1: float = 2500.0
    d2: float = 2500.0
    focal_tx_source: float = 0.20
    focal_tx_relay: float = 0.2115
    focal_rx_relay: float = 0.40
    focal_rx_dest: float = 0.40
    aperture_rx: float = 0.15
    attenuation_db_per_km: float = 0.0

    def __post_init__(self) -> None:
        for name in ("d1", "d2", "focal_tx_source", "focal_tx_relay",
                     "focal_rx_relay", "focal_rx_dest", "aperture_rx"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.attenuation_db_per_km < 0:
            raise ValueError("attenuation must be non-negative")

    @property
    def total_length(self) -> float:
        return self.d1 + self.d2

    def hop(self, index: int) -> HopGeometry:
        if index == 1:
            return HopGeometry(self.d1, self.focal_tx_source, self.focal_rx_relay,
                               self.aperture_rx, self.attenuation_db_per_km)
        if index == 2:
            return HopGeometry(self.d2, self.focal_tx_relay, self.focal_rx_dest,
                               self.aperture_rx, self.attenuation_db_per_km)
        raise ValueError("hop index must be 1 or 2")


@dataclass(frozen=True)
class FadingState:
    """Complex couplings of one turbulence realization.

    ``into_relay[m]`` couples the source launch into relay mode m;
    ``into_dest[m, n]`` couples relay mode m into destination field n.
    Atmospheric attenuation is folded into the amplitudes.
    """

    into_relay: np.ndarray = field(repr=False)
    into_dest: np.ndarray = field(repr=False)
    index: int = 0

    @property
    def hop1_power(self) -> float:
        """Total fraction of transmitted power collected by the relay."""
        v = self.into_relay
        return float(np.sum(v.real**2 + v.imag**2))

    def restricted(self, n_relay: int, n_dest: int) -> "FadingState":
        """Keep the first relay modes / destination fields only."""
        return FadingState(
            into_relay=self.into_relay[:n_relay],
            into_dest=self.into_dest[:n_relay, :n_dest],
            index=self.index,
        )


@dataclass(frozen=True)
class FadingEnsemble:
    states: tuple[FadingState, ...]
    master_seed: int

    def __len__(self) -> int:
        return len(self.states)

    def alpha1(self) -> np.ndarray:
        """Hop-one collected power fraction per state."""
        return np.array([s.hop1_power for s in self.states])

    def restricted(self, n_relay: int, n_dest: int) -> "FadingEnsemble":
        return FadingEnsemble(
            states=tuple(s.restricted(n_relay, n_dest) for s in self.states),
            master_seed=self.master_seed,
        )


def fading_stats(ensemble: FadingEnsemble) -> dict[str, float]:
    """Mean fading (positive dB loss of the linear mean) and its RSD."""
    if len(ensemble) == 0:
        raise ValueError("ensemble is empty")
    a = ensemble.alpha1()
    mean = float(a.mean())
    return {
        "mean_fading_db": -10.0 * math.log10(mean),
        "rsd": float(a.std(ddof=1) / mean) if len(ensemble) > 1 else 0.0,
    }


def collimated_waist(mfd: float, focal_tx: float, wavelength: float) -> float:
    """1/e^2 radius of a fiber fundamental mode collimated by one lens."""
    return wavelength * focal_tx / (math.pi * (mfd / 2.0))


def hop_coupling(
    tx_mode: ComplexField,
    hop: HopGeometry,
    screens,
    rx_basis: ModeBasis,
    free_grid: GridSpec,
    wavelength: float,
    screen_fraction: float = SCREEN_FRACTION_HOP1,
) -> np.ndarray:
    """Literal one-hop pipeline: collimate, propagate, screen(s), couple.

    ``screens`` is None (vacuum), a single screen for the whole hop, or a
    sequence of screens over equal sub-distances. Each screen sits at
    ``screen_fraction`` of its own segment. Returns the complex coupling
    amplitude per receive mode, attenuation included.
    """
    pupil = lens_collimate(tx_mode, hop.focal_tx, free_grid, wavelength)
    if screens is None:
        screen_list: list[PhaseScreen] = []
    elif isinstance(screens, PhaseScreen):
        screen_list = [screens]
    else:
        screen_list = list(screens)
    if not screen_list:
        out_field = propagate(pupil, hop.distance, wavelength)
    else:
        segment = hop.distance / len(screen_list)
        before = screen_fraction * segment
        out_field = pupil
        for screen in screen_list:
            out_field = propagate(out_field, before, wavelength)
            out_field = apply_screen(out_field, screen)
            out_field = propagate(out_field, segment - before, wavelength)
    att = hop.attenuation_amplitude
    return np.array([
        att * couple_to_mode(out_field, mode, hop.focal_rx, hop.aperture_rx, wavelength)
        for mode in rx_basis.fields
    ])


class _HopOptics:
    """Spectral-domain precompute of one hop.

    ``staged[m]`` is launch m carried forward to the hop's phase-plate plane;
    ``weights[r]`` is the remaining propagation kernel times the conjugate
    spectrum of the masked receive-mode pupil, scaled so that the coupling
    amplitude of a screened field is a plain inner product with its spectrum.
    """

    def __init__(self, staged: list[np.ndarray], weights: np.ndarray):
        self.staged = staged
        self.staged_spectra = [np.fft.fft2(s) for s in staged]
        self.n = staged[0].shape[0]
        self.weights = weights.reshape(weights.shape[0], -1)

    def couple(self, phase: np.ndarray | None) -> np.ndarray:
        """Coupling matrix (n_tx, n_rx) for one screen phase (None = vacuum)."""
        if phase is None:
            return np.array([self.weights @ s.ravel() for s in self.staged_spectra])
        factor = np.exp(1j * phase)
        return np.array([
            self.weights @ np.fft.fft2(field * factor).ravel()
            for field in self.staged
        ])


def _build_hop_optics(
    hop: HopGeometry,
    tx_fields: tuple[ComplexField, ...],
    rx_fields: tuple[ComplexField, ...],
    free_grid: GridSpec,
    wavelength: float,
    screen_fraction: float,
) -> _HopOptics:
    to_plate = propagation_kernel(
        free_grid, screen_fraction * hop.distance, wavelength)
    from_plate = propagation_kernel(
        free_grid, (1.0 - screen_fraction) * hop.distance, wavelength)
    staged = [
        np.fft.ifft2(np.fft.fft2(
            lens_collimate(f, hop.focal_tx, free_grid, wavelength).samples
        ) * to_plate)
        for f in tx_fields
    ]
    mask = free_grid.aperture_mask(hop.aperture_rx)
    n = free_grid.n_points
    # Attenuation is deliberately left out so the precompute (and any cached
    # ensemble) can be reused across clear-air and haze settings; callers
    # scale the couplings by hop.attenuation_amplitude.
    scale = free_grid.spacing**2 / n**2
    weights = np.empty((len(rx_fields), n, n), dtype=np.complex128)
    for i, rx in enumerate(rx_fields):
        pupil = lens_collimate(rx, hop.focal_rx, free_grid, wavelength).samples
        weights[i] = from_plate * np.conj(np.fft.fft2(mask * pupil)) * scale
    return _HopOptics(staged, weights)


class ChannelModel:
    """Precomputed optics plus turbulence parameters for one scenario.

    Always models the full channel (three relay modes, six destination
    fields); single-mode-relay or fewer-destination-mode configurations are
    restrictions of the drawn states, which keeps paired-seed comparisons
    exact across configurations.
    """

    def __init__(
        self,
        geometry: LinkGeometry,
        cn2: float,
        master_seed: int = 0,
        *,
        wavelength: float = DEFAULT_WAVELENGTH,
        free_grid: GridSpec = FREE_GRID,
        facet_grid: GridSpec = FACET_GRID,
        smf_mfd: float = DEFAULT_SMF_MFD,
        fmf_mfd: float = DEFAULT_FMF_MFD,
        subharmonics: int = 0,
        split_step: int = 1,
    ):
        if cn2 < 0:
            raise ValueError("cn2 must be non-negative")
        if split_step < 1:
            raise ValueError("split_step must be at least 1")
        self.geometry = geometry
        self.cn2 = cn2
        self.master_seed = master_seed
        self.wavelength = wavelength
        self.free_grid = free_grid
        self.subharmonics = subharmonics
        self.split_step = split_step
        self.smf_mfd = smf_mfd
        self.fmf_mfd = fmf_mfd

        root2 = 2.0 * math.sqrt(2.0)
        self.source_mode = lp_mode_field(LPModeIndex(0, 1), smf_mfd / root2, facet_grid)
        self.relay_basis = mode_basis(2, fmf_mfd / root2, facet_grid)
        self.dest_basis = mode_basis(4, fmf_mfd / root2, facet_grid)

        self._att1 = geometry.hop(1).attenuation_amplitude
        self._att2 = geometry.hop(2).attenuation_amplitude
        bare = replace(geometry, attenuation_db_per_km=0.0)
        key = (bare, free_grid, facet_grid, smf_mfd, fmf_mfd, wavelength,
               SCREEN_FRACTION_HOP1, SCREEN_FRACTION_HOP2)
        self._hop1, self._hop2 = _optics_cache_get(
            key, bare, self.source_mode, self.relay_basis,
            self.dest_basis, free_grid, wavelength,
        )

        if cn2 > 0:
            k = 2.0 * math.pi / wavelength
            self.r0_hop1 = coherence_length(TurbulenceParams(
                cn2, geometry.d1, k,
                GaussianBeamParams(
                    collimated_waist(smf_mfd, geometry.focal_tx_source, wavelength),
                    wavelength,
                ),
            ))
            self.r0_hop2 = coherence_length(TurbulenceParams(
                cn2, geometry.d2, k,
                GaussianBeamParams(
                    collimated_waist(fmf_mfd, geometry.focal_tx_relay, wavelength),
                    wavelength,
                ),
            ))
        else:
            self.r0_hop1 = math.inf
            self.r0_hop2 = math.inf

    def state_seed(self, index: int) -> int:
        ss = np.random.SeedSequence(self.master_seed, spawn_key=(index,))
        return int(ss.generate_state(1, np.uint64)[0])

    def draw_state(self, index: int) -> FadingState:
        """One fading realization; deterministic in (master_seed, index)."""
        if self.split_step > 1:
            return self._draw_state_split(index)
        if self.cn2 == 0:
            h1 = self._hop1.couple(None)[0]
            h2 = self._hop2.couple(None)
        else:
            s1, s2 = generate_screen_pair(
                self.r0_hop1, self.r0_hop2, self.free_grid,
                self.state_seed(index), self.subharmonics,
            )
            h1 = self._hop1.couple(s1.phase)[0]
            h2 = self._hop2.couple(s2.phase)
        return FadingState(self._att1 * h1, self._att2 * h2, index)

    def _split_screens(self, index: int, hop_index: int) -> list[PhaseScreen] | None:
        if self.cn2 == 0:
            return None
        hop = self.geometry.hop(hop_index)
        k = 2.0 * math.pi / self.wavelength
        segment = hop.distance / self.split_step
        beam = GaussianBeamParams(
            collimated_waist(
                self.smf_mfd if hop_index == 1 else self.fmf_mfd,
                hop.focal_tx, self.wavelength),
            self.wavelength,
        )
        r0_seg = coherence_length(TurbulenceParams(self.cn2, segment, k, beam))
        screens = []
        for j in range(self.split_step):
            ss = np.random.SeedSequence(self.master_seed,
                                        spawn_key=(index, hop_index, j))
            seed = int(ss.generate_state(1, np.uint64)[0])
            screens.append(generate_screen(r0_seg, self.free_grid, seed,
                                           self.subharmonics))
        return screens

    def _draw_state_split(self, index: int) -> FadingState:
        h1 = hop_coupling(self.source_mode, self.geometry.hop(1),
                          self._split_screens(index, 1), self.relay_basis,
                          self.free_grid, self.wavelength,
                          SCREEN_FRACTION_HOP1)
        screens2 = self._split_screens(index, 2)
        rows = [
            hop_coupling(mode, self.geometry.hop(2), screens2,
                         self.dest_basis, self.free_grid, self.wavelength,
                         SCREEN_FRACTION_HOP2)
            for mode in self.relay_basis.fields
        ]
        return FadingState(h1, np.array(rows), index)

    def draw_ensemble(self, count: int, threads: int = 1) -> FadingEnsemble:
        return draw_ensemble(self, count, threads)


# Geometry-keyed cache of the heavy spectral precompute; two entries cover a
# nominal link plus one relay-sweep location at a time.
_OPTICS_CACHE: OrderedDict = OrderedDict()
_OPTICS_CACHE_SIZE = 2


def _optics_cache_get(key, geometry, source_mode, relay_basis, dest_basis,
                      free_grid, wavelength):
    if key in _OPTICS_CACHE:
        _OPTICS_CACHE.move_to_end(key)
        return _OPTICS_CACHE[key]
    hop1 = _build_hop_optics(geometry.hop(1), (source_mode,),
                             relay_basis.fields, free_grid, wavelength,
                             SCREEN_FRACTION_HOP1)
    hop2 = _build_hop_optics(geometry.hop(2), relay_basis.fields,
                             dest_basis.fields, free_grid, wavelength,
                             SCREEN_FRACTION_HOP2)
    _OPTICS_CACHE[key] = (hop1, hop2)
    while len(_OPTICS_CACHE) > _OPTICS_CACHE_SIZE:
        _OPTICS_CACHE.popitem(last=False)
    return _OPTICS_CACHE[key]


_WORKER_MODEL: ChannelModel | None = None


def _draw_index_range(bounds: tuple[int, int]) -> list[FadingState]:
    lo, hi = bounds
    assert _WORKER_MODEL is not None
    return [_WORKER_MODEL.draw_state(i) for i in range(lo, hi)]


def draw_ensemble(model: ChannelModel, count: int, threads: int = 1) -> FadingEnsemble:
    """Draw ``count`` states; identical results for any worker count."""
    if count < 1:
        raise ValueError("count must be positive")
    if threads <= 1:
        states = [model.draw_state(i) for i in range(count)]
        return FadingEnsemble(tuple(states), model.master_seed)
    global _WORKER_MODEL
    _WORKER_MODEL = model
    try:
        ctx = multiprocessing.get_context("fork")
        n_chunks = min(count, threads * 4)
        edges = np.linspace(0, count, n_chunks + 1).astype(int)
        chunks = [(int(edges[i]), int(edges[i + 1])) for i in range(n_chunks)]
        with ctx.Pool(threads) as pool:
            parts = pool.map(_draw_index_range, chunks)
    finally:
        _WORKER_MODEL = None
    states = [s for part in parts for s in part]
    return FadingEnsemble(tuple(states), model.master_seed)


def _golden_section_max(fn, lo: float, hi: float, tol: float) -> tuple[float, float]:
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = fn(c), fn(d)
    while (b - a) > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = fn(d)
    x = 0.5 * (a + b)
    return x, max(fc, fd)


def optimize_receiver_focal(
    hop: HopGeometry,
    tx_mode: ComplexField,
    rx_mode: ComplexField,
    free_grid: GridSpec,
    wavelength: float,
    search: tuple[float, float] = (0.1, 1.0),
    tol: float = 1e-3,
) -> float:
    """Receive focal length maximizing the vacuum fundamental-mode coupling.

    Golden-section search over ``search``; the propagated field is computed
    once and only the receive-side transform varies per evaluation.
    """
    pupil = lens_collimate(tx_mode, hop.focal_tx, free_grid, wavelength)
    arrived = propagate(pupil, hop.distance, wavelength)

    def efficiency(f: float) -> float:
        c = couple_to_mode(arrived, rx_mode, f, hop.aperture_rx, wavelength)
        return abs(c) ** 2

    best, _ = _golden_section_max(efficiency, search[0], search[1], tol)
    if best - search[0] < 2 * tol or search[1] - best < 2 * tol:
        raise NoInteriorMaximumError(
            f"coupling maximum sits at the edge of the search range {search}"
        )
    return best


def ensemble_table(ensemble: FadingEnsemble) -> tuple[list[str], list[list[float]]]:
    """Flat per-state export: index, fading, and hop-two magnitudes/phases."""
    first = ensemble.states[0]
    n_relay, n_dest = first.into_dest.shape
    header = ["state_index", "alpha1_linear"]
    header += [f"h1_abs_{m + 1}" for m in range(n_relay)]
    header += [f"h1_phase_{m + 1}" for m in range(n_relay)]
    for m in range(n_relay):
        for n in range(n_dest):
            header.append(f"h2_abs_{m + 1}{n + 1}")
    for m in range(n_relay):
        for n in range(n_dest):
            header.append(f"h2_phase_{m + 1}{n + 1}")
    rows = []
    for s in ensemble.states:
        row = [float(s.index), s.hop1_power]
        row += [float(v) for v in np.abs(s.into_relay)]
        row += [float(v) for v in np.angle(s.into_relay)]
        row += [float(v) for v in np.abs(s.into_dest).ravel()]
        row += [float(v) for v in np.angle(s.into_dest).ravel()]
        rows.append(row)
    return header, rows
