import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nfext.config import ScenarioConfig
from nfext.errors import MetricsError, ModelError
from nfext.estimators import (ProfileFunction, estimate_3d, lobe_metrics, ml_objective, ml_values,
                              model_for, range_profile)
from nfext.synth import SampledSignal, TimeGrid, Waveform, synthesize_matrix

REF = ScenarioConfig()


def scene_signals(cfg, xi=1.0):
    truth = model_for(cfg, "extended")
    amp, dly = truth.terms([cfg.range_m], [cfg.azimuth], [cfg.elevation])
    grid = TimeGrid.covering([dly.min() - 2 / cfg.bandwidth, dly.max() + 2 / cfg.bandwidth],
                             cfg.bandwidth, cfg.oversample)
    ti, ri = truth.layout.pairs()
    u = xi * synthesize_matrix(amp[0], dly[0], Waveform(cfg.bandwidth), grid)
    return [SampledSignal((int(l), int(lp)), u[p], grid.t0, grid.dt)
            for p, (l, lp) in enumerate(zip(ti, ri))]


def triangle(slope_db_per_m, x):
    return ProfileFunction(x, -slope_db_per_m * np.abs(x), 0.0)


# -- objective ---------------------------------------------------------------------

def test_zero_signals_give_zero():
    cfg = REF.replace(n=3)
    sig = scene_signals(cfg)
    zero = [SampledSignal(s.pair, np.zeros_like(s.samples), s.t0, s.dt) for s in sig]
    m = model_for(cfg)
    for r in (3.9, 4.0, 4.1):
        assert ml_objective(zero, m, (r, 0.0, 0.0)) == 0.0


def test_zero_model_energy_is_an_error():
    u = np.ones((2, 50), dtype=complex)
    with pytest.raises(ModelError):
        ml_values(u, 0.0, 1e-9, 1e8, np.zeros((3, 2)), np.full((3, 2), 2.5e-8))


def test_objective_peaks_at_truth():
    cfg = REF.replace(n=5)
    sig = scene_signals(cfg)
    m = model_for(cfg)
    at = ml_objective(sig, m, (4.0, 0.0, 0.0))
    for r in (3.999, 4.001, 4.01):
        assert ml_objective(sig, m, (r, 0.0, 0.0)) < at


def test_time_shift_invariance():
    rng = np.random.default_rng(0)
    u = rng.standard_normal((4, 200)) + 1j * rng.standard_normal((4, 200))
    amps = rng.standard_normal((6, 4)) + 0j
    delays = 50e-9 + 1e-9 * rng.random((6, 4))
    shift = 37 * 1e-9
    a = ml_values(u, 0.0, 1e-9, 1e8, amps, delays)
    b = ml_values(u, shift, 1e-9, 1e8, amps, delays + shift)
    assert np.allclose(a, b, rtol=1e-9)


@given(mag=st.floats(1e-3, 1e3), ph=st.floats(-math.pi, math.pi))
def test_argmax_invariant_to_complex_scaling(mag, ph):
    cfg = REF.replace(n=4, fc=3.5e9, bandwidth=18e6)
    m = model_for(cfg)
    ranges = np.linspace(3.8, 4.2, 9)
    base = estimate_3d(scene_signals(cfg), m, ranges, [0.0], [0.0])
    scaled = estimate_3d(scene_signals(cfg, mag * np.exp(1j * ph)), m, ranges, [0.0], [0.0])
    assert base == pytest.approx(scaled, abs=1e-9)


# -- profiles ------------------------------------------------------------------------

@pytest.mark.parametrize("target", ["plate", "sphere", "cylinder"])
def test_extended_profile_peaks_at_range(target):
    cfg = REF.replace(target=target, rmin=3.95, rmax=4.05)
    prof = range_profile(cfg)
    assert abs(prof.argmax - 4.0) <= cfg.range_step
    assert prof.values.max() == 0.0


def test_point_model_is_biased_for_a_sphere():
    cfg = REF.replace(fc=3.5e9, bandwidth=18e6, rho=1.0, rmin=2.0, rmax=6.0, rstep=0.005)
    prof = range_profile(cfg, "point")
    assert abs(prof.argmax - 4.0) > cfg.range_step


def test_width_shrinks_with_bandwidth():
    widths = []
    for b in (50e6, 100e6):
        cfg = REF.replace(bandwidth=b, rmin=3.0, rmax=5.0, rstep=0.002)
        widths.append(lobe_metrics(range_profile(cfg))["width_3db"])
    assert widths[1] < widths[0]


# -- lobe metrics -----------------------------------------------------------------------

def test_triangle_width():
    x = np.linspace(-1, 1, 201)
    m = lobe_metrics(triangle(10.0, x))
    assert m["width_3db"] == pytest.approx(0.6, abs=1e-9)
    assert m["argmax"] == pytest.approx(0.0, abs=1e-12)
    assert m["peak_sidelobe_db"] == -math.inf


def test_sidelobe_level():
    x = np.linspace(-3, 3, 601)
    v = 20 * np.log10(np.abs(np.sinc(x)) + 1e-12)
    m = lobe_metrics(ProfileFunction(x, v, 0.0))
    assert m["peak_sidelobe_db"] == pytest.approx(20 * np.log10(0.2172), abs=0.05)
    assert m["width_3db"] == pytest.approx(0.886, abs=0.005)


@pytest.mark.parametrize("x", [np.linspace(-0.1, 1, 50), np.linspace(-1, 0.1, 50)])
def test_missing_crossing(x):
    with pytest.raises(MetricsError):
        lobe_metrics(triangle(10.0, x))


# -- joint estimation ------------------------------------------------------------------

def test_estimate_3d_at_truth():
    cfg = REF.replace(n=9, fc=3.5e9, bandwidth=18e6)
    r, az, el = estimate_3d(scene_signals(cfg), model_for(cfg), np.linspace(3.9, 4.1, 11),
                            np.radians(np.linspace(-2, 2, 5)), np.radians([-1, 0, 1]))
    assert r == pytest.approx(4.0, abs=0.02)
    assert abs(az) <= math.radians(1.0)
    assert abs(el) <= math.radians(1.0)


def test_estimate_3d_tracks_rotated_scene():
    cfg = REF.replace(target="plate", n=13, fc=3.5e9, bandwidth=18e6, azimuth_deg=5.0)
    az_grid = np.radians(np.arange(0.0, 10.01, 1.0))
    r, az, _ = estimate_3d(scene_signals(cfg), model_for(cfg), [4.0], az_grid, [0.0])
    assert math.degrees(az) == pytest.approx(5.0, abs=1.0)


def test_point_model_biased_on_near_plate():
    cfg = REF.replace(target="plate", fc=3.5e9, bandwidth=18e6, range_m=1.0, spacing=0.086)
    r, _, _ = estimate_3d(scene_signals(cfg), model_for(cfg, "point"),
                          np.linspace(0.8, 1.2, 81), [0.0], [0.0])
    assert abs(r - 1.0) > 0.01
