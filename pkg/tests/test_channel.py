"""Dual-hop channel geometry, fading draws, and ensemble bookkeeping."""

import math
import warnings

import numpy as np
import numpy.testing as npt
import pytest

from fsorelay.channel import (
    SCREEN_FRACTION_HOP1,
    SCREEN_FRACTION_HOP2,
    ChannelModel,
    FadingEnsemble,
    FadingState,
    HopGeometry,
    LinkGeometry,
    NoInteriorMaximumError,
    collimated_waist,
    draw_ensemble,
    ensemble_table,
    fading_stats,
    hop_coupling,
    optimize_receiver_focal,
)
from fsorelay.optics import AliasingWarning, GridSpec
from fsorelay.turbulence import generate_screen_pair

WAVELENGTH = 1550e-9


def test_hop_attenuation_amplitude():
    hop = HopGeometry(2500.0, 0.2, 0.4, 0.15, attenuation_db_per_km=4.2)
    # 10.5 dB over the hop, amplitude domain
    assert hop.attenuation_amplitude == pytest.approx(10 ** (-10.5 / 20), rel=1e-12)
    clear = HopGeometry(2500.0, 0.2, 0.4, 0.15)
    assert clear.attenuation_amplitude == 1.0


def test_link_geometry_hops():
    geo = LinkGeometry()
    h1 = geo.hop(1)
    h2 = geo.hop(2)
    assert h1.distance == 2500.0 and h2.distance == 2500.0
    assert h1.focal_tx == 0.20
    assert h2.focal_tx == 0.2115
    assert h1.focal_rx == h2.focal_rx == 0.40
    assert h1.aperture_rx == 0.15
    assert geo.total_length == 5000.0
    with pytest.raises(ValueError):
        geo.hop(3)


@pytest.mark.parametrize("field,value", [
    ("d1", 0.0),
    ("focal_tx_relay", -0.2),
    ("aperture_rx", 0.0),
    ("attenuation_db_per_km", -1.0),
])
def test_link_geometry_validation(field, value):
    with pytest.raises(ValueError):
        LinkGeometry(**{field: value})


def test_collimated_waist_value():
    w = collimated_waist(10.4e-6, 0.20, WAVELENGTH)
    assert w == pytest.approx(WAVELENGTH * 0.20 / (math.pi * 5.2e-6), rel=1e-12)
    assert w == pytest.approx(18.98e-3, rel=1e-3)


def test_collimated_diameters_agree():
    w_smf = collimated_waist(10.4e-6, 0.20, WAVELENGTH)
    w_fmf = collimated_waist(11.0e-6, 0.2115, WAVELENGTH)
    assert abs(w_smf - w_fmf) / w_smf < 0.01


@pytest.fixture(scope="module")
def vacuum_model(small_free_grid, small_facet_grid):
    return ChannelModel(LinkGeometry(), 0.0, master_seed=7,
                        free_grid=small_free_grid, facet_grid=small_facet_grid)


class TestVacuumCouplings:
    def test_hop1_fundamental_efficiency(self, vacuum_model):
        state = vacuum_model.draw_state(0)
        assert abs(state.into_relay[0]) ** 2 == pytest.approx(0.44, abs=0.01)

    def test_hop1_higher_modes_dark(self, vacuum_model):
        state = vacuum_model.draw_state(0)
        assert np.all(np.abs(state.into_relay[1:]) ** 2 < 1e-4)

    def test_hop2_diagonal(self, vacuum_model):
        h2 = vacuum_model.draw_state(0).into_dest
        assert abs(h2[0, 0]) ** 2 == pytest.approx(0.44, abs=0.01)
        # the two orientations of the first antisymmetric pair behave alike
        assert abs(h2[1, 1]) ** 2 == pytest.approx(abs(h2[2, 2]) ** 2, rel=1e-6)

    def test_hop2_fundamental_leaks_into_radial_overtone(self, vacuum_model):
        h2 = vacuum_model.draw_state(0).into_dest
        assert abs(h2[0, 5]) ** 2 == pytest.approx(0.266, abs=0.01)

    def test_vacuum_draw_is_state_independent(self, vacuum_model):
        a = vacuum_model.draw_state(0)
        b = vacuum_model.draw_state(5)
        npt.assert_array_equal(a.into_relay, b.into_relay)
        npt.assert_array_equal(a.into_dest, b.into_dest)


def test_fading_state_power_and_restriction():
    h1 = np.array([0.3 + 0.4j, 0.1j, 0.2])
    h2 = (np.arange(18, dtype=float) + 1j).reshape(3, 6)
    state = FadingState(h1, h2, index=4)
    assert state.hop1_power == pytest.approx(0.25 + 0.01 + 0.04, rel=1e-12)
    cut = state.restricted(1, 2)
    assert cut.into_relay.shape == (1,)
    assert cut.into_dest.shape == (1, 2)
    npt.assert_array_equal(cut.into_relay, h1[:1])
    npt.assert_array_equal(cut.into_dest, h2[:1, :2])
    assert cut.index == 4


def test_fading_stats_hand_values():
    s1 = FadingState(np.array([0.2 + 0j]), np.ones((1, 1)), 0)
    s2 = FadingState(np.array([0.4 + 0j]), np.ones((1, 1)), 1)
    ens = FadingEnsemble((s1, s2), master_seed=0)
    stats = fading_stats(ens)
    mean = (0.04 + 0.16) / 2
    assert stats["mean_fading_db"] == pytest.approx(-10 * math.log10(mean), rel=1e-12)
    expected_rsd = np.std([0.04, 0.16], ddof=1) / mean
    assert stats["rsd"] == pytest.approx(expected_rsd, rel=1e-12)


def test_fading_stats_degenerate_cases():
    with pytest.raises(ValueError):
        fading_stats(FadingEnsemble((), master_seed=0))
    lone = FadingEnsemble(
        (FadingState(np.array([0.5 + 0j]), np.ones((1, 1)), 0),), 0)
    assert fading_stats(lone)["rsd"] == 0.0


def test_state_seed_depends_on_index_not_time(small_model):
    assert small_model.state_seed(3) == small_model.state_seed(3)
    assert small_model.state_seed(3) != small_model.state_seed(4)
    twin = ChannelModel(LinkGeometry(), 1e-13, master_seed=99,
                        free_grid=small_model.free_grid,
                        facet_grid=GridSpec(256, 0.3e-6))
    assert twin.state_seed(3) == small_model.state_seed(3)


def test_draw_state_deterministic(small_model):
    a = small_model.draw_state(2)
    b = small_model.draw_state(2)
    npt.assert_array_equal(a.into_relay, b.into_relay)
    npt.assert_array_equal(a.into_dest, b.into_dest)
    c = small_model.draw_state(3)
    assert not np.array_equal(a.into_relay, c.into_relay)


def test_draw_ensemble_threads_agree(small_model):
    serial = draw_ensemble(small_model, 5, threads=1)
    forked = draw_ensemble(small_model, 5, threads=2)
    assert [s.index for s in serial.states] == [0, 1, 2, 3, 4]
    for a, b in zip(serial.states, forked.states):
        npt.assert_array_equal(a.into_relay, b.into_relay)
        npt.assert_array_equal(a.into_dest, b.into_dest)


def test_draw_ensemble_rejects_empty(small_model):
    with pytest.raises(ValueError):
        draw_ensemble(small_model, 0)


def test_states_are_passive(small_model):
    ens = draw_ensemble(small_model, 20)
    assert np.all(ens.alpha1() <= 1.0)
    for s in ens.states:
        row_power = np.sum(np.abs(s.into_dest) ** 2, axis=1)
        assert np.all(row_power <= 1.0)


def test_attenuation_scales_cached_bare_states(small_model):
    hazy = ChannelModel(
        LinkGeometry(attenuation_db_per_km=4.2), 1e-13, master_seed=99,
        free_grid=small_model.free_grid, facet_grid=GridSpec(256, 0.3e-6))
    bare = small_model.draw_state(1)
    dim = hazy.draw_state(1)
    att = 10 ** (-10.5 / 20)
    npt.assert_allclose(dim.into_relay, att * bare.into_relay, rtol=1e-12)
    npt.assert_allclose(dim.into_dest, att * bare.into_dest, rtol=1e-12)


@pytest.mark.filterwarnings("ignore::fsorelay.optics.AliasingWarning")
def test_fast_draw_matches_literal_pipeline(small_model):
    m = small_model
    index = 6
    s1, s2 = generate_screen_pair(m.r0_hop1, m.r0_hop2, m.free_grid,
                                  m.state_seed(index), m.subharmonics)
    h1 = hop_coupling(m.source_mode, m.geometry.hop(1), s1, m.relay_basis,
                      m.free_grid, m.wavelength, SCREEN_FRACTION_HOP1)
    rows = [
        hop_coupling(mode, m.geometry.hop(2), s2, m.dest_basis,
                     m.free_grid, m.wavelength, SCREEN_FRACTION_HOP2)
        for mode in m.relay_basis.fields
    ]
    fast = m.draw_state(index)
    npt.assert_allclose(fast.into_relay, h1, rtol=1e-9, atol=1e-12)
    npt.assert_allclose(fast.into_dest, np.array(rows), rtol=1e-9, atol=1e-12)


@pytest.mark.filterwarnings("ignore::fsorelay.optics.AliasingWarning")
def test_split_step_changes_realizations(small_free_grid, small_facet_grid):
    single = ChannelModel(LinkGeometry(), 1e-13, master_seed=11,
                          free_grid=small_free_grid, facet_grid=small_facet_grid)
    double = ChannelModel(LinkGeometry(), 1e-13, master_seed=11,
                          free_grid=small_free_grid, facet_grid=small_facet_grid,
                          split_step=2)
    a = single.draw_state(0)
    b = double.draw_state(0)
    assert not np.allclose(a.into_relay, b.into_relay)
    assert 0.0 < b.hop1_power <= 1.0


def test_model_rejects_bad_arguments(small_free_grid, small_facet_grid):
    with pytest.raises(ValueError):
        ChannelModel(LinkGeometry(), -1e-14, free_grid=small_free_grid,
                     facet_grid=small_facet_grid)
    with pytest.raises(ValueError):
        ChannelModel(LinkGeometry(), 1e-13, split_step=0,
                     free_grid=small_free_grid, facet_grid=small_facet_grid)


def test_restricted_ensemble_views(small_model):
    ens = draw_ensemble(small_model, 3)
    sm = ens.restricted(1, 1)
    assert sm.master_seed == ens.master_seed
    for full, cut in zip(ens.states, sm.states):
        npt.assert_array_equal(cut.into_relay, full.into_relay[:1])
        npt.assert_array_equal(cut.into_dest, full.into_dest[:1, :1])
    # the single-mode collection never exceeds the few-mode one
    assert np.all(sm.alpha1() <= ens.alpha1() + 1e-15)


def test_ensemble_table_layout(small_model):
    ens = draw_ensemble(small_model, 3)
    header, rows = ensemble_table(ens)
    assert len(header) == 2 + 3 + 3 + 18 + 18
    assert header[0] == "state_index"
    assert header[1] == "alpha1_linear"
    assert "h2_abs_36" in header and "h2_phase_11" in header
    assert len(rows) == 3
    for state, row in zip(ens.states, rows):
        assert row[0] == float(state.index)
        assert row[1] == pytest.approx(state.hop1_power, rel=1e-12)
        assert len(row) == len(header)


@pytest.mark.filterwarnings("ignore::fsorelay.optics.AliasingWarning")
def test_receiver_focal_search_finds_interior_maximum(small_free_grid, small_facet_grid):
    from fsorelay.fiber import LPModeIndex, lp_mode_field

    rx = lp_mode_field(LPModeIndex(0, 1), 11e-6 / (2 * math.sqrt(2)),
                       small_facet_grid)
    tx = lp_mode_field(LPModeIndex(0, 1), 10.4e-6 / (2 * math.sqrt(2)),
                       small_facet_grid)
    hop = HopGeometry(2500.0, 0.20, 0.40, 0.15)
    best = optimize_receiver_focal(hop, tx, rx, small_free_grid, WAVELENGTH,
                                   search=(0.15, 1.0), tol=2e-3)
    assert 0.15 + 4e-3 < best < 1.0 - 4e-3

    def efficiency(f):
        from fsorelay.optics import couple_to_mode, lens_collimate, propagate
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", AliasingWarning)
            pupil = lens_collimate(tx, hop.focal_tx, small_free_grid, WAVELENGTH)
            arrived = propagate(pupil, hop.distance, WAVELENGTH)
        return abs(couple_to_mode(arrived, rx, f, hop.aperture_rx, WAVELENGTH)) ** 2

    assert efficiency(best) >= efficiency(best * 0.7)
    assert efficiency(best) >= efficiency(min(best * 1.4, 0.99))


@pytest.mark.filterwarnings("ignore::fsorelay.optics.AliasingWarning")
def test_receiver_focal_edge_raises(small_free_grid, small_facet_grid):
    from fsorelay.fiber import LPModeIndex, lp_mode_field

    rx = lp_mode_field(LPModeIndex(0, 1), 11e-6 / (2 * math.sqrt(2)),
                       small_facet_grid)
    tx = lp_mode_field(LPModeIndex(0, 1), 10.4e-6 / (2 * math.sqrt(2)),
                       small_facet_grid)
    hop = HopGeometry(2500.0, 0.20, 0.40, 0.15)
    with pytest.raises(NoInteriorMaximumError):
        optimize_receiver_focal(hop, tx, rx, small_free_grid, WAVELENGTH,
                                search=(0.10, 0.13), tol=2e-3)
