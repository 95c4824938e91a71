"""
Range bias of the point-target abstraction.

Biases are reported as ``R - R_hat``: the point model places every path
through the reference point, which overestimates each total distance, so the
fitted range falls short of the true one and the bias is positive.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import BoundaryError, ConfigError, DegenerateWeightError
from .geometry import (AntennaLayout, TargetSurface, as_layout, jet_arrays, pose_rotation,
                       surface_at_pose)
from .spa import specular_batch

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _pair_points(layout: AntennaLayout):
    ti, ri = layout.pairs()
    return layout.positions[ti], layout.positions[ri]


def specular_totals(surface: TargetSurface, tx, rx):
    """Total specular path of every pair and whether its point is on the target."""
    a = surface.to_local(tx)
    b = surface.to_local(rx)
    y, z = specular_batch(surface, a, b)
    h = jet_arrays(surface, y, z)[0]
    p = np.column_stack([h, y, z])
    d = np.linalg.norm(p - a, axis=1) + np.linalg.norm(p - b, axis=1)
    return d, np.asarray(surface.on_surface(y, z), dtype=bool)


def point_totals(ref, tx, rx):
    return np.linalg.norm(ref - tx, axis=1) + np.linalg.norm(ref - rx, axis=1)


def _golden(f, lo, hi, tol):
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def minimize_scalar(f, lo: float, hi: float, tol: float = 1e-7):
    """Golden-section search followed by a parabolic polish step.

    Raises
    ------
    BoundaryError
        When the minimiser sits at an end of ``[lo, hi]``.
    """
    x, fx = _golden(f, lo, hi, tol)
    if x - lo < 2 * tol or hi - x < 2 * tol:
        raise BoundaryError(f"minimum at the search boundary ({x:.9g} in [{lo}, {hi}])")
    h = max(tol, 1e-6 * abs(x))
    fm, fp = f(x - h), f(x + h)
    den = fm - 2 * fx + fp
    if den > 0:
        step = 0.5 * h * (fm - fp) / den
        if abs(step) <= h:
            xs = x + step
            fs = f(xs)
            if fs <= fx:
                x = xs
    return x


def genie_ls_range(surface: TargetSurface, layout, model: str, interval, *,
                   azimuth: float = 0.0, elevation: float = 0.0, tol: float = 1e-7,
                   visible_only: bool = False) -> float:
    """Least-squares range from the true per-pair totals.

    Parameters
    ----------
    surface : TargetSurface
        The true, placed target; its specular totals are the "measurements".
    layout : AntennaLayout or layout spec
    model : {"point", "extended"}
        Candidate totals at test range ``R``: distances through the
        reference point at ``centre + R e_r`` or the specular totals of the
        shape placed at that pose.
    interval : (float, float)
        Search bracket for the test range.
    visible_only : bool
        Drop pairs whose specular point misses the finite target. By default
        every pair enters the fit, with the plate treated as its full plane.

    Returns
    -------
    float
        ``R_hat``.
    """
    layout = as_layout(layout)
    tx, rx = _pair_points(layout)
    actual, seen = specular_totals(surface, tx, rx)
    if visible_only:
        tx, rx, actual = tx[seen], rx[seen], actual[seen]
    if not len(actual):
        raise DegenerateWeightError("no specular point lies on the target")
    rot = pose_rotation(azimuth, elevation)
    centre = layout.centre
    shape = surface.placed((0.0, 0.0, 0.0))
    if model == "point":
        def residual(r):
            return actual - point_totals(centre + r * rot[0], tx, rx)
    elif model == "extended":
        def residual(r):
            cand = surface_at_pose(shape, centre, r, azimuth, elevation)
            return actual - specular_totals(cand, tx, rx)[0]
    else:
        raise ConfigError(f"unknown model {model!r}")
    lo, hi = interval
    return minimize_scalar(lambda r: float(np.sum(residual(r) ** 2)), lo, hi, tol)


def analytic_point_bias(layout, surface: TargetSurface, reference=None,
                        visible_only: bool = False) -> float:
    """Weighted first-order bias ``R - R_hat`` of the point model.

    Each pair contributes its path excess ``(r_tx + r_rx) - D_specular`` with
    weight ``w_tx + w_rx``, where ``w`` is the sine of the angle between the
    array axis and the antenna-to-reference line (for a broadside linear
    array: ``R / r``).
    """
    layout = as_layout(layout)
    ref = surface.offset if reference is None else np.asarray(reference, dtype=float)
    centre = layout.centre
    rng = float(np.linalg.norm(ref - centre))
    if rng < 10.0 * layout.aperture:
        warnings.warn("range below ten apertures: the first-order bias is not reliable",
                      RuntimeWarning, stacklevel=2)
    if rng == 0:
        raise DegenerateWeightError("reference point at the array centre")
    tx, rx = _pair_points(layout)
    actual, seen = specular_totals(surface, tx, rx)
    los = (ref - centre) / rng

    def weight(p):
        d = ref - p
        return (d @ los) / np.linalg.norm(d, axis=1)

    w = weight(tx) + weight(rx)
    excess = point_totals(ref, tx, rx) - actual
    if visible_only:
        w, excess = w[seen], excess[seen]
    den = float(np.sum(w * w))
    if den == 0:
        raise DegenerateWeightError("all bias weights vanish")
    return float(np.sum(excess * w) / den)


def equipotential_plate(alpha: float, n: int, spacing: float) -> float:
    """Range at which a flat plate gives point-model bias ``alpha``.

    Second-order expansion for a broadside linear array with every specular
    point on the plate: ``R = spacing^2 sum_{l,l'} (i_l + i_l')^2 / (8 N^2 alpha)``
    with centred indices ``i``.
    """
    if not alpha > 0:
        raise ConfigError("alpha must be positive")
    i = np.arange(n) - (n - 1) / 2.0
    s = np.sum((i[:, None] + i[None, :]) ** 2)
    return float(spacing ** 2 * s / (8.0 * n * n * alpha))


def plate_far_field_bias(n: int, spacing: float, rng: float) -> float:
    """Inverse of :func:`equipotential_plate`: bias at range ``rng``."""
    return equipotential_plate(1.0, n, spacing) / rng


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

AXES = ("R", "rho", "delta", "sub_spacing")


@dataclass(frozen=True, eq=False)
class BiasSweep:
    axis1: str
    grid1: np.ndarray
    axis2: str
    grid2: np.ndarray
    values: np.ndarray  # shape (len(grid1), len(grid2))
    relative: bool


def _apply(config, name, value):
    if name == "R":
        return config.replace(range_m=value)
    if name == "delta":
        return config.replace(spacing=value)
    if name == "sub_spacing":
        return config.replace(sub_spacing=value)
    if name == "rho":
        if config.target == "plate":
            return config.replace(d_y=2 * value, d_z=2 * value)
        return config.replace(rho=value)
    raise ConfigError(f"unknown sweep axis {name!r}")


def _genie_bias(config):
    surface = config.true_surface()
    layout = config.antenna_layout()
    r = config.range_m
    r_hat = genie_ls_range(surface, layout, "point", (0.2 * r, 1.5 * r),
                           azimuth=config.azimuth, elevation=config.elevation)
    return r - r_hat


def _ml_bias(config):
    from .estimators import range_profile
    r = config.range_m
    # the point-model peak can land well beyond R at half-wavelength spacing
    cfg = config.replace(rmin=max(0.05, 0.3 * r), rmax=2.0 * r)
    prof = range_profile(cfg, "point")
    i = int(np.argmax(prof.values))
    x = prof.axis
    if i == 0 or i == len(x) - 1:
        raise BoundaryError(f"ML range peak at window edge {x[i]:.4g} m")
    vm, v0, vp = (10 ** (prof.values[j] / 10) for j in (i - 1, i, i + 1))
    den = vm - 2 * v0 + vp
    r_hat = x[i] + 0.5 * (vm - vp) / den * (x[1] - x[0]) if den < 0 else x[i]
    return r - r_hat


def bias_cell(config, estimator: str = "genie", relative: bool = False) -> float:
    if estimator not in ("genie", "ml"):
        raise ConfigError(f"unknown estimator {estimator!r}")
    b = _genie_bias(config) if estimator == "genie" else _ml_bias(config)
    return abs(b) / config.range_m if relative else b


def bias_sweep(config, axis1: str, grid1, axis2: str | None = None, grid2=None,
               estimator: str = "genie", relative: bool = False) -> BiasSweep:
    """Point-model bias over one or two of ``R``, ``rho``, ``delta``, ``sub_spacing``.

    ``rho`` means the radius for curved targets and the half-length for
    the plate. ``relative`` reports ``|R - R_hat| / R``.
    """
    if estimator not in ("genie", "ml"):
        raise ConfigError(f"unknown estimator {estimator!r}")
    g1 = np.asarray(grid1, dtype=float)
    g2 = np.asarray([np.nan] if grid2 is None else grid2, dtype=float)
    for g in (g1, g2):
        if len(g) > 1 and np.any(np.diff(g) <= 0):
            raise ConfigError("sweep grids must be strictly increasing")
    out = np.empty((len(g1), len(g2)))
    for i, v1 in enumerate(g1):
        c1 = _apply(config, axis1, float(v1))
        for j, v2 in enumerate(g2):
            c = c1 if axis2 is None else _apply(c1, axis2, float(v2))
            out[i, j] = bias_cell(c, estimator, relative)
    return BiasSweep(axis1, g1, axis2 or "", g2, out, relative)
