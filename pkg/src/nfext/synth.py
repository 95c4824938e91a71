"""Sinc waveform, sampled per-pair received signals and AWGN with per-pair streams."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .config import format_value
from .errors import ConfigError

GUARD = 4.0  # grid margin around the delays, in units of 1/B


def waveform_eval(bandwidth: float, t):
    """``sin(pi B t) / (pi B t)``, equal to 1 at ``t = 0``."""
    if not bandwidth > 0:
        raise ConfigError("bandwidth must be positive")
    return np.sinc(bandwidth * np.asarray(t, dtype=float))


@dataclass(frozen=True)
class Waveform:
    bandwidth: float

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ConfigError("bandwidth must be positive")

    def __call__(self, t):
        return waveform_eval(self.bandwidth, t)


@dataclass(frozen=True)
class TimeGrid:
    t0: float
    dt: float
    n: int

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n)

    @property
    def end(self) -> float:
        return self.t0 + self.dt * (self.n - 1)

    @classmethod
    def covering(cls, delays, bandwidth: float, oversample: int = 8) -> "TimeGrid":
        """Grid with step ``1/(oversample B)`` spanning every delay ``+- 4/B``.

        ``t0`` is snapped to a multiple of the step so that grids built for
        overlapping delay sets share sample instants.
        """
        if oversample < 2:
            raise ConfigError("oversample must be at least 2")
        d = np.asarray(delays, dtype=float)
        d = d[np.isfinite(d)]
        if d.size == 0:
            raise ConfigError("no delays to cover")
        dt = 1.0 / (oversample * bandwidth)
        first = math.floor((d.min() - GUARD / bandwidth) / dt)
        last = math.ceil((d.max() + GUARD / bandwidth) / dt)
        return cls(first * dt, dt, last - first + 1)

    def check_covers(self, delays, bandwidth: float):
        d = np.asarray(delays, dtype=float)
        if d.size == 0:
            return
        margin = GUARD / bandwidth - 1e-9 * self.dt - 1e-15
        if d.min() - margin < self.t0 - 1e-6 * self.dt or d.max() + margin > self.end + 1e-6 * self.dt:
            raise ConfigError("time grid does not cover all delays with a 4/B margin")


@dataclass(frozen=True, eq=False)
class SampledSignal:
    pair: tuple
    samples: np.ndarray
    t0: float
    dt: float

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self.samples))


def substream(seed: int, l: int, lp: int) -> np.random.Generator:
    """Counter-based generator keyed by ``(seed, l, l')``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(l), int(lp)])))


def pair_noise(seed: int, l: int, lp: int, n: int, noise_var: float) -> np.ndarray:
    g = substream(seed, l, lp)
    w = g.standard_normal((n, 2))
    return math.sqrt(noise_var / 2.0) * (w[:, 0] + 1j * w[:, 1])


def synthesize_matrix(amplitude, delay, wf: Waveform, grid: TimeGrid, xi: complex = 1.0,
                      noise_var: float = 0.0, seed: int = 0, pairs=None) -> np.ndarray:
    """Noise-free model plus noise for P pairs as a ``(P, n)`` complex array.

    ``amplitude`` and ``delay`` have shape ``(P,)`` or ``(P, K)``; zero
    amplitudes are ignored. ``pairs`` supplies the ``(l, l')`` keys of the
    noise streams (defaults to ``(p, p)``).
    """
    amp = np.asarray(amplitude, dtype=complex)
    dly = np.asarray(delay, dtype=float)
    if amp.ndim == 1:
        amp, dly = amp[:, None], dly[:, None]
    grid.check_covers(dly[amp != 0], wf.bandwidth)
    t = grid.times
    u = np.zeros((amp.shape[0], grid.n), dtype=complex)
    for k in range(amp.shape[1]):
        u += amp[:, k, None] * wf(t[None, :] - dly[:, k, None])
    u *= xi
    if noise_var > 0:
        keys = pairs if pairs is not None else [(p, p) for p in range(len(u))]
        for p, (l, lp) in enumerate(keys):
            u[p] += pair_noise(seed, l, lp, grid.n, noise_var)
    return u


def synthesize(responses: Sequence, wf: Waveform, grid: TimeGrid, xi: complex = 1.0,
               noise_var: float = 0.0, seed: int = 0) -> list:
    """Sample ``xi * sum_terms a s(t - tau) + w`` for every pair response.

    Parameters
    ----------
    responses : sequence of PairResponse
    wf : Waveform
    grid : TimeGrid
        Must cover every term delay with a ``4/B`` margin.
    xi : complex
        Common complex reflection factor.
    noise_var, seed
        Circular complex Gaussian noise variance per sample; the stream of
        pair ``(l, l')`` depends only on ``(seed, l, l')``.

    Returns
    -------
    list of SampledSignal
    """
    kmax = max([len(r.terms) for r in responses] + [1])
    amp = np.zeros((len(responses), kmax), dtype=complex)
    dly = np.zeros((len(responses), kmax))
    for p, r in enumerate(responses):
        for k, term in enumerate(r.terms):
            amp[p, k] = term.amplitude
            dly[p, k] = term.delay
    keys = [(r.tx_index, r.rx_index) for r in responses]
    u = synthesize_matrix(amp, dly, wf, grid, xi, noise_var, seed, keys)
    return [SampledSignal((l, lp), u[p], grid.t0, grid.dt) for p, (l, lp) in enumerate(keys)]


def signal_matrix(signals: Sequence[SampledSignal]):
    """Stack signals sharing one grid into ``(P, n)``; returns ``(u, t0, dt)``."""
    if not signals:
        raise ConfigError("no signals")
    t0, dt, n = signals[0].t0, signals[0].dt, len(signals[0].samples)
    for s in signals:
        if s.t0 != t0 or s.dt != dt or len(s.samples) != n:
            raise ConfigError("signals must share one time grid")
    return np.stack([s.samples for s in signals]), t0, dt


def write_csv(path, signals: Sequence[SampledSignal]):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["pair_tx", "pair_rx", "t", "re", "im"])
        for s in signals:
            for t, v in zip(s.times, s.samples):
                w.writerow([s.pair[0], s.pair[1], format_value(float(t)),
                            format_value(float(v.real)), format_value(float(v.imag))])
