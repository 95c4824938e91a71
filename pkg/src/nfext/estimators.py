"""
Matched-filter maximum-likelihood objective, range profiles, ambiguity maps,
grid-search pose estimation and main-lobe metrics.

The objective for a candidate pose with model signals ``mu`` is

    |sum_p sum_i u_p[i] conj(mu_p[i]) dt|^2 / sum_p sum_i |mu_p[i]|^2 dt

evaluated on the sample grid of the received signals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .constants import C
from .errors import MetricsError, ModelError
from .geometry import AntennaLayout, TargetSurface, pose_rotation
from .spa import spa_terms_posed
from .synth import TimeGrid, Waveform, signal_matrix, synthesize_matrix

CHUNK = 128  # candidate poses per batch
TIE_RTOL = 1e-9  # objective values closer than this are numerically indistinguishable
FLOOR_DB = -300.0


@dataclass(frozen=True)
class TargetModel:
    """Signal model used by the estimator.

    Parameters
    ----------
    kind : {"extended", "point"}
        ``extended`` places ``surface`` at the candidate pose and uses its
        stationary-phase response. ``point`` replaces the target by its
        reference point, with amplitude ``1/(r_tx r_rx)`` and phase
        ``-k (r_tx + r_rx)``.
    surface : TargetSurface
        Shape in its own frame (placement is ignored).
    layout : AntennaLayout
    config
        Supplies ``k``, ``l2i0``, ``pattern``.
    """

    kind: str
    surface: TargetSurface
    layout: AntennaLayout
    config: object

    def __post_init__(self):
        if self.kind not in ("extended", "point"):
            raise ModelError(f"unknown model {self.kind!r}")

    def poses(self, ranges, azimuths, elevations):
        """Reference points and frames for candidate ``(R, az, el)`` triples."""
        ranges, azimuths, elevations = np.broadcast_arrays(
            np.asarray(ranges, float), np.asarray(azimuths, float), np.asarray(elevations, float))
        rot = np.stack([pose_rotation(a, e) for a, e in zip(azimuths.ravel(), elevations.ravel())])
        off = self.layout.centre + ranges.ravel()[:, None] * rot[:, 0, :]
        return rot, off

    def terms(self, ranges, azimuths=0.0, elevations=0.0, pairs=None):
        """Amplitudes and delays ``(C, P)`` for every candidate and pair."""
        ti, ri = pairs if pairs is not None else self.layout.pairs()
        tx = self.layout.positions[ti]
        rx = self.layout.positions[ri]
        rot, off = self.poses(ranges, azimuths, elevations)
        if self.kind == "point":
            r1 = np.linalg.norm(off[:, None, :] - tx[None], axis=-1)
            r2 = np.linalg.norm(off[:, None, :] - rx[None], axis=-1)
            d = r1 + r2
            return np.exp(-1j * self.config.k * d) / (r1 * r2), d / C
        amps, delays = [], []
        for lo in range(0, len(rot), CHUNK):
            a, t = spa_terms_posed(self.surface, rot[lo:lo + CHUNK], off[lo:lo + CHUNK],
                                   tx, rx, self.config)
            amps.append(a)
            delays.append(t)
        return np.concatenate(amps), np.concatenate(delays)


def model_for(config, kind: str | None = None) -> TargetModel:
    return TargetModel(kind or config.model, config.surface(), config.antenna_layout(), config)


# ---------------------------------------------------------------------------
# objective
# ---------------------------------------------------------------------------

def ml_values(u, t0: float, dt: float, bandwidth: float, amps, delays) -> np.ndarray:
    """Objective for many candidates given ``(C, P)`` model terms."""
    amps = np.asarray(amps, dtype=complex)
    delays = np.asarray(delays, dtype=float)
    if amps.ndim == 2:
        amps, delays = amps[..., None], delays[..., None]
    num, den = kernels.matched_filter(u, t0, dt, bandwidth, amps, delays)
    if np.any(den <= 0):
        raise ModelError("model signal has zero energy for some candidate")
    return np.abs(num) ** 2 / den


def ml_objective(signals, model: TargetModel, candidate) -> float:
    """Objective at one candidate ``(R, az, el)`` for sampled signals."""
    u, t0, dt = signal_matrix(signals)
    ti = np.array([s.pair[0] for s in signals])
    ri = np.array([s.pair[1] for s in signals])
    r, az, el = candidate
    a, d = model.terms([r], [az], [el], pairs=(ti, ri))
    return float(ml_values(u, t0, dt, model.config.bandwidth, a, d)[0])


def _to_db(values):
    peak = np.max(values)
    if not peak > 0:
        return np.full(values.shape, FLOOR_DB)
    with np.errstate(divide="ignore"):
        db = 10.0 * np.log10(values / peak)
    return np.maximum(db, FLOOR_DB)


# ---------------------------------------------------------------------------
# scenario plumbing
# ---------------------------------------------------------------------------

def _scene(config, model_terms_delays):
    """True extended-target signal on a grid covering the candidate delays."""
    truth = model_for(config, "extended")
    t_amp, t_del = truth.terms([config.range_m], [config.azimuth], [config.elevation])
    wf = Waveform(config.bandwidth)
    every = np.concatenate([t_del.ravel(), np.asarray(model_terms_delays).ravel()])
    grid = TimeGrid.covering(every, config.bandwidth, config.oversample)
    ti, ri = truth.layout.pairs()
    u = synthesize_matrix(t_amp[0], t_del[0], wf, grid, 1.0, config.noise_var, config.seed,
                          list(zip(ti.tolist(), ri.tolist())))
    return u, grid


def default_range_grid(config) -> np.ndarray:
    n = int(round((config.rmax - config.rmin) / config.range_step))
    return config.rmin + config.range_step * np.arange(n + 1)


def default_angle_grid(config) -> np.ndarray:
    n = int(round((config.amax_deg - config.amin_deg) / config.astep_deg))
    return np.radians(config.amin_deg + config.astep_deg * np.arange(n + 1))


@dataclass(frozen=True, eq=False)
class ProfileFunction:
    axis: np.ndarray
    values: np.ndarray  # dB, peak 0
    argmax: float


@dataclass(frozen=True, eq=False)
class AmbiguityMap:
    ranges: np.ndarray
    angles: np.ndarray
    values: np.ndarray  # dB, shape (len(ranges), len(angles))
    argmax: tuple
    sweep: str


def range_profile(config, model: str | None = None, grid=None) -> ProfileFunction:
    """Objective versus test range at the true angles, normalised to 0 dB."""
    grid = default_range_grid(config) if grid is None else np.asarray(grid, dtype=float)
    m = model_for(config, model)
    amps, delays = m.terms(grid, config.azimuth, config.elevation)
    u, tg = _scene(config, delays)
    vals = ml_values(u, tg.t0, tg.dt, config.bandwidth, amps, delays)
    i = _tie_break_argmax(vals, [grid])
    return ProfileFunction(grid, _to_db(vals), float(grid[i]))


def ambiguity_map(config, model: str | None = None, ranges=None, angles=None,
                  sweep: str | None = None) -> AmbiguityMap:
    """Objective over (range, angle) with the other angle held at truth.

    ``sweep`` selects the swept angle: ``"azimuth"`` or ``"elevation"``.
    """
    sweep = sweep or config.sweep_angle
    ranges = default_range_grid(config) if ranges is None else np.asarray(ranges, float)
    angles = default_angle_grid(config) if angles is None else np.asarray(angles, float)
    R, A = np.meshgrid(ranges, angles, indexing="ij")
    if sweep == "azimuth":
        az, el = A.ravel(), np.full(A.size, config.elevation)
    elif sweep == "elevation":
        az, el = np.full(A.size, config.azimuth), A.ravel()
    else:
        raise ValueError(f"unknown sweep {sweep!r}")
    m = model_for(config, model)
    amps, delays = m.terms(R.ravel(), az, el)
    u, tg = _scene(config, delays)
    vals = ml_values(u, tg.t0, tg.dt, config.bandwidth, amps, delays).reshape(R.shape)
    i, j = np.unravel_index(_tie_break_argmax(vals, [ranges, angles]), vals.shape)
    return AmbiguityMap(ranges, angles, _to_db(vals), (float(ranges[i]), float(angles[j])), sweep)


def _tie_break_argmax(values, axes) -> int:
    """Flat index of the maximum; near-ties prefer small ``R`` then small ``|angles|``."""
    flat = np.asarray(values).ravel()
    peak = flat.max()
    cand = np.flatnonzero(flat >= peak - TIE_RTOL * abs(peak))
    if len(cand) == 1:
        return int(cand[0])
    idx = np.unravel_index(cand, np.shape(values))
    keys = [np.asarray(axes[0])[idx[0]]] + [np.abs(np.asarray(ax)[ix]) for ax, ix in
                                             zip(axes[1:], idx[1:])]
    order = np.lexsort(tuple(reversed(keys)))
    return int(cand[order[0]])


def _parabola_offset(vm, v0, vp):
    den = vm - 2 * v0 + vp
    if den >= 0:
        return 0.0
    return float(np.clip(0.5 * (vm - vp) / den, -0.5, 0.5))


def estimate_3d(signals, model: TargetModel, ranges, azimuths, elevations):
    """Grid-search ``(R, az, el)`` with a one-step quadratic refinement per axis.

    Parameters
    ----------
    signals : sequence of SampledSignal
    model : TargetModel
    ranges, azimuths, elevations : array_like
        Strictly increasing grids (a single value fixes that coordinate).

    Returns
    -------
    tuple of float
        ``(R_hat, az_hat, el_hat)``.
    """
    axes = [np.atleast_1d(np.asarray(g, dtype=float)) for g in (ranges, azimuths, elevations)]
    G = np.meshgrid(*axes, indexing="ij")
    u, t0, dt = signal_matrix(signals)
    ti = np.array([s.pair[0] for s in signals])
    ri = np.array([s.pair[1] for s in signals])
    a, d = model.terms(G[0].ravel(), G[1].ravel(), G[2].ravel(), pairs=(ti, ri))
    vals = ml_values(u, t0, dt, model.config.bandwidth, a, d).reshape(G[0].shape)
    best = np.unravel_index(_tie_break_argmax(vals, axes), vals.shape)
    out = []
    for ax, grid in enumerate(axes):
        i = best[ax]
        value = grid[i]
        if 0 < i < len(grid) - 1:
            sl = list(best)
            trio = []
            for di in (-1, 0, 1):
                sl[ax] = i + di
                trio.append(vals[tuple(sl)])
            value = grid[i] + _parabola_offset(*trio) * (grid[i + 1] - grid[i])
        out.append(float(value))
    return tuple(out)


# ---------------------------------------------------------------------------
# lobe metrics
# ---------------------------------------------------------------------------

def lobe_metrics(profile) -> dict:
    """Main-lobe -3 dB width and peak sidelobe level of a dB profile.

    The main lobe spans the -3 dB crossings (linearly interpolated) and is
    extended outwards to the nearest local minima; the peak sidelobe is the
    largest value outside it, or ``-inf`` when nothing remains.
    """
    x = np.asarray(profile.axis, dtype=float)
    v = np.asarray(profile.values, dtype=float)
    m = int(np.argmax(v))
    v = v - v[m]
    i = m
    while i > 0 and v[i - 1] > -3.0:
        i -= 1
    if i == 0:
        raise MetricsError("no -3 dB crossing on the low side; widen the grid")
    left = x[i - 1] + (x[i] - x[i - 1]) * (-3.0 - v[i - 1]) / (v[i] - v[i - 1])
    lo = i - 1
    j = m
    while j < len(v) - 1 and v[j + 1] > -3.0:
        j += 1
    if j == len(v) - 1:
        raise MetricsError("no -3 dB crossing on the high side; widen the grid")
    right = x[j] + (x[j + 1] - x[j]) * (-3.0 - v[j]) / (v[j + 1] - v[j])
    hi = j + 1
    while lo > 0 and v[lo - 1] <= v[lo]:
        lo -= 1
    while hi < len(v) - 1 and v[hi + 1] <= v[hi]:
        hi += 1
    outside = np.concatenate([v[:lo], v[hi + 1:]])
    psl = float(outside.max()) if outside.size else -math.inf
    return {"width_3db": float(right - left), "peak_sidelobe_db": psl, "argmax": float(x[m])}
