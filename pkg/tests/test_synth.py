import csv
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nfext.config import ScenarioConfig
from nfext.errors import ConfigError
from nfext.spa import PairResponse, Term, layout_response, responses_as_pairs
from nfext.synth import (TimeGrid, Waveform, signal_matrix, substream, synthesize,
                         synthesize_matrix, waveform_eval, write_csv)

B = 18e6


def test_waveform_values():
    assert waveform_eval(B, 0.0) == 1.0
    assert abs(waveform_eval(B, 1 / B)) < 1e-15
    assert waveform_eval(B, 1 / (2 * B)) == pytest.approx(2 / math.pi, rel=1e-15)


def test_waveform_rejects_nonpositive_bandwidth():
    with pytest.raises(ConfigError):
        Waveform(0.0)


def test_covering_grid():
    g = TimeGrid.covering([20e-9, 30e-9], B, 8)
    assert g.dt == pytest.approx(1 / (8 * B))
    assert g.t0 <= 20e-9 - 4 / B and g.end >= 30e-9 + 4 / B
    assert g.t0 / g.dt == pytest.approx(round(g.t0 / g.dt), abs=1e-9)


def test_grid_not_covering_is_rejected():
    g = TimeGrid(0.0, 1e-9, 100)
    with pytest.raises(ConfigError):
        synthesize([PairResponse(0, 0, (Term(1.0, 90e-9),))], Waveform(B), g)


def test_noise_free_peak_at_delay():
    g = TimeGrid.covering([25e-9], B, 8)
    mid = g.n // 2
    tau = g.t0 + mid * g.dt
    sig, = synthesize([PairResponse(0, 0, (Term(3 - 4j, tau),))], Waveform(B), g)
    i = int(np.argmax(abs(sig.samples)))
    assert i == mid
    assert abs(sig.samples[i]) == pytest.approx(5.0, rel=1e-15)


def test_reflection_factor_is_linear():
    g = TimeGrid.covering([25e-9], B, 8)
    r = [PairResponse(0, 0, (Term(0.3 + 0.1j, 25e-9),))]
    xi = 2 * np.exp(1j * np.pi / 3)
    a = synthesize(r, Waveform(B), g)[0].samples
    b = synthesize(r, Waveform(B), g, xi=xi)[0].samples
    assert np.allclose(b, xi * a, rtol=1e-15, atol=0)


def test_same_seed_is_bit_identical():
    g = TimeGrid.covering([25e-9], B, 8)
    r = [PairResponse(1, 2, (Term(1.0, 25e-9),))]
    a = synthesize(r, Waveform(B), g, noise_var=0.5, seed=11)[0].samples
    b = synthesize(r, Waveform(B), g, noise_var=0.5, seed=11)[0].samples
    assert np.array_equal(a, b)


def test_pair_streams_are_decorrelated():
    n = 10_000
    x = substream(3, 0, 1).standard_normal(n)
    y = substream(3, 1, 0).standard_normal(n)
    z = substream(4, 0, 1).standard_normal(n)
    assert abs(np.corrcoef(x, y)[0, 1]) < 0.05
    assert abs(np.corrcoef(x, z)[0, 1]) < 0.05


def test_noise_variance():
    g = TimeGrid(0.0, 1e-9, 20_000)
    u = synthesize_matrix(np.zeros(1), np.zeros(1), Waveform(B), g, noise_var=2.0, seed=5)
    assert np.mean(abs(u) ** 2) == pytest.approx(2.0, rel=0.05)
    assert abs(np.mean(u.real ** 2) - np.mean(u.imag ** 2)) < 0.1


def test_noise_does_not_depend_on_pair_order():
    g = TimeGrid.covering([25e-9], B, 8)
    r = [PairResponse(0, 1, (Term(1.0, 25e-9),)), PairResponse(1, 0, (Term(1.0, 25e-9),))]
    fwd = synthesize(r, Waveform(B), g, noise_var=1.0, seed=2)
    rev = synthesize(r[::-1], Waveform(B), g, noise_var=1.0, seed=2)
    assert np.array_equal(fwd[0].samples, rev[1].samples)


@given(amps=st.lists(st.complex_numbers(min_magnitude=0.1, max_magnitude=10), min_size=1,
                     max_size=3))
def test_energy_identity(amps):
    # terms 40/B apart do not overlap appreciably
    delays = [100e-9 + 40 / B * i for i in range(len(amps))]
    g = TimeGrid.covering(delays, B, 8)
    g = TimeGrid(g.t0 - 400 / B, g.dt, g.n + int(800 * 8))
    r = [PairResponse(0, 0, tuple(Term(a, d) for a, d in zip(amps, delays)))]
    u = synthesize(r, Waveform(B), g)[0].samples
    energy = np.sum(abs(u) ** 2) * g.dt
    assert energy == pytest.approx(sum(abs(a) ** 2 for a in amps) / B, rel=0.02)


def test_pair_swap_keeps_envelope():
    cfg = ScenarioConfig().replace(target="sphere", bandwidth=B)
    resp = layout_response(cfg.true_surface(), cfg.antenna_layout(), cfg)
    pairs = responses_as_pairs(resp)
    g = TimeGrid.covering(resp.delay, B, 8)
    sigs = {s.pair: s.samples for s in synthesize(pairs, Waveform(B), g)}
    for l, lp in [(0, 12), (3, 7), (1, 11)]:
        assert np.allclose(abs(sigs[(l, lp)]), abs(sigs[(lp, l)]), rtol=1e-12, atol=1e-20)


def test_signal_matrix_requires_shared_grid():
    g = TimeGrid.covering([25e-9], B, 8)
    r = [PairResponse(0, 0, (Term(1.0, 25e-9),))]
    a = synthesize(r, Waveform(B), g)
    b = synthesize(r, Waveform(B), TimeGrid(g.t0 - g.dt, g.dt, g.n + 2))
    u, t0, dt = signal_matrix(a)
    assert u.shape == (1, g.n) and t0 == g.t0 and dt == g.dt
    with pytest.raises(ConfigError):
        signal_matrix(a + b)


def test_csv_round_trip(tmp_path):
    g = TimeGrid.covering([25e-9], B, 4)
    sig = synthesize([PairResponse(2, 5, (Term(0.1 - 0.2j, 25e-9),))], Waveform(B), g)
    path = tmp_path / "s.csv"
    write_csv(path, sig)
    rows = list(csv.DictReader(open(path)))
    assert len(rows) == g.n
    assert rows[0]["pair_tx"] == "2" and rows[0]["pair_rx"] == "5"
    back = np.array([complex(float(r["re"]), float(r["im"])) for r in rows])
    assert np.array_equal(back, sig[0].samples)
