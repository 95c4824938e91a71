"""
Stationary points, phase Hessians and stationary-phase response coefficients.

For an antenna pair the received signal is an oscillatory surface integral
with phase ``psi = -k (r_tx + r_rx)``. Its stationary points are the specular
points of the pair, i.e. the minimisers of the total path length. Each one
contributes

    P * g(x_s) * J(x_s) * 2*pi * |det H|^(-1/2) * exp(j psi) * exp(j pi/4 sgn H)

where ``P = -k^2 eta L^2 I0 / (8 pi^2)``, ``g`` is the geometric amplitude
(pattern, spreading and polarisation triple product), ``J`` the surface
element of the ``(y, z)`` parametrisation and ``H`` the Hessian of ``psi``.

Signature convention: ``sgn H = n_plus - n_minus`` of the Hessian of ``psi``.
A path-length minimum is a maximum of ``psi``, so it carries ``sgn = -2`` and
the factor ``exp(-j pi/2)``. This is the convention that reproduces the
direct surface quadrature in :mod:`nfext.oracle`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .constants import C, ETA
from .errors import ConvergenceError, DegenerateHessianError, PreconditionError
from .geometry import (BOUNDARY_TOL, Kind, TargetSurface, as_layout,
                       basis_from_angles, jet_arrays, normal_from_gradient, view_arrays)

RESIDUAL_TOL = 1e-12  # on the path-length gradient (dimensionless)
MERGE_RADIUS = 1e-7
DEGENERATE_DET = 1e-12  # relative to k^2


@dataclass(frozen=True)
class StationaryPointSolution:
    """Specular point of one antenna pair.

    ``point`` is in world coordinates, ``local`` holds the surface-frame
    ``(y, z)``. Phase and Hessian are computed for the wavenumber ``k`` the
    solution was built with.
    """

    point: np.ndarray = field(repr=False)
    local: tuple
    r_tx: float
    r_rx: float
    total_distance: float
    k: float
    phase: float
    hess_psi: np.ndarray = field(repr=False)
    det: float
    signature: int
    on_boundary: bool
    on_surface: bool
    residual: float


@dataclass(frozen=True)
class Term:
    amplitude: complex
    delay: float


@dataclass(frozen=True)
class PairResponse:
    tx_index: int
    rx_index: int
    terms: tuple

    @property
    def delays(self):
        return [t.delay for t in self.terms]


# ---------------------------------------------------------------------------
# stationary points
# ---------------------------------------------------------------------------

def _as_points(tx, rx):
    a = np.atleast_2d(np.asarray(tx, dtype=float))
    b = np.atleast_2d(np.asarray(rx, dtype=float))
    a, b = np.broadcast_arrays(a, b)
    return np.ascontiguousarray(a), np.ascontiguousarray(b)


def plate_specular(a, b):
    """Closed-form specular point on the plane ``x = 0`` (local frame).

    Requires both antennas strictly on the same side of the plane.
    """
    a, b = _as_points(a, b)
    ax, bx = a[:, 0], b[:, 0]
    if not np.all(ax * bx > 0):
        raise PreconditionError("plate closed form needs every antenna on the same side (x_tx * x_rx > 0)")
    s = ax + bx
    y = (a[:, 1] * bx + b[:, 1] * ax) / s
    z = (a[:, 2] * bx + b[:, 2] * ax) / s
    return y, z


def _multistart_grid(surface: TargetSurface, n=5):
    hy, hz = surface.half_extent
    if surface.kind is Kind.PLATE:
        ys = np.linspace(-hy, hy, n)
        zs = np.linspace(-hz, hz, n)
    elif surface.kind is Kind.SPHERE:
        ys = zs = np.linspace(-0.8, 0.8, n) * surface.radius
    else:
        ys = np.linspace(-hy, hy, n)
        zs = np.linspace(-0.8, 0.8, n) * surface.radius
    Y, Z = np.meshgrid(ys, zs, indexing="ij")
    Y, Z = Y.ravel(), Z.ravel()
    if surface.kind is Kind.SPHERE:
        rad = np.hypot(Y, Z)
        lim = 0.8 * surface.radius
        scale = np.where(rad > lim, lim / np.where(rad > 0, rad, 1.0), 1.0)
        Y, Z = Y * scale, Z * scale
    return Y, Z


def fermat_multistart(surface: TargetSurface, a_local, b_local, n=5):
    """Minimise the total path from an ``n x n`` grid of starts.

    Works on the unbounded shape (the plate is the full plane). Returns the
    distinct converged minimisers as ``(y, z, residual)`` arrays sorted by
    total path length.
    """
    a = np.asarray(a_local, dtype=float).reshape(3)
    b = np.asarray(b_local, dtype=float).reshape(3)
    y0, z0 = _multistart_grid(surface, n)
    m = len(y0)
    A = np.repeat(a[None], m, axis=0)
    B = np.repeat(b[None], m, axis=0)
    step = max(surface.half_extent)
    y, z, gn, status = kernels.newton_specular(surface.kind.code, surface.radius, A, B, y0, z0,
                                               RESIDUAL_TOL, 100, step)
    ok = status == 0
    if not ok.any():
        raise ConvergenceError("no multi-start run reached the residual tolerance",
                               best_residual=float(np.min(gn)))
    y, z, gn = y[ok], z[ok], gn[ok]
    D = kernels.distance_derivatives(surface.kind.code, surface.radius, y, z, A[ok], B[ok])[0]
    order = np.lexsort((z, y, D))
    keep_y, keep_z, keep_g = [], [], []
    h = jet_arrays(surface, y, z)[0]
    pts = np.column_stack([h, y, z])
    kept = []
    for i in order:
        if any(np.linalg.norm(pts[i] - pts[j]) <= MERGE_RADIUS for j in kept):
            continue
        kept.append(i)
        keep_y.append(y[i])
        keep_z.append(z[i])
        keep_g.append(gn[i])
    return np.array(keep_y), np.array(keep_z), np.array(keep_g)


def _hessian_parts(surface, a, b, y, z):
    D, gy, gz, Hyy, Hzz, Hyz = kernels.distance_derivatives(surface.kind.code, surface.radius,
                                                           y, z, a, b)
    return D, gy, gz, Hyy, Hzz, Hyz


def _signature(Hyy, Hzz, Hyz):
    """n_plus - n_minus for symmetric 2x2 matrices (arrays)."""
    tr = Hyy + Hzz
    disc = np.sqrt(np.maximum((0.5 * (Hyy - Hzz)) ** 2 + Hyz * Hyz, 0.0))
    l1 = 0.5 * tr + disc
    l2 = 0.5 * tr - disc
    return (np.sign(l1) + np.sign(l2)).astype(int)


def solve_stationary(surface: TargetSurface, tx, rx, k: float = 1.0):
    """All specular points of the pair ``(tx, rx)`` on ``surface``.

    Parameters
    ----------
    surface : TargetSurface
        Placed target.
    tx, rx : array_like (3,)
        World positions of the transmitting and receiving antennas; they may
        coincide (monostatic pair).
    k : float
        Wavenumber used for the stored phase and phase Hessian. The default
        of 1 gives them per unit wavenumber.

    Returns
    -------
    list of StationaryPointSolution
        Sorted by total path length. The plate uses the closed-form mirror
        point; curved shapes use multi-start Fermat minimisation.
    """
    a, b = (surface.to_local(np.asarray(p, dtype=float)) for p in (tx, rx))
    if surface.kind is Kind.PLATE:
        ys, zs = plate_specular(a, b)
        gres = None
    else:
        ys, zs, gres = fermat_multistart(surface, a, b)
    out = [_build_solution(surface, a, b, float(y), float(z), k) for y, z in zip(ys, zs)]
    if gres is not None:
        for sol in out:
            if sol.residual > 1e-8:
                raise ConvergenceError("stationary residual above tolerance", sol.residual)
    return sorted(out, key=lambda s: s.total_distance)


def _build_solution(surface, a, b, y, z, k):
    A, B = a[None], b[None]
    Y, Z = np.array([y]), np.array([z])
    D, gy, gz, Hyy, Hzz, Hyz = _hessian_parts(surface, A, B, Y, Z)
    h = float(jet_arrays(surface, y, z)[0])
    local = np.array([h, y, z])
    r_tx = float(np.linalg.norm(local - a))
    r_rx = float(np.linalg.norm(local - b))
    hess = -k * np.array([[Hyy[0], Hyz[0]], [Hyz[0], Hzz[0]]])
    sig = int(_signature(hess[0, 0], hess[1, 1], hess[0, 1]))
    gap = float(surface.boundary_gap(y, z))
    return StationaryPointSolution(
        point=surface.to_world(local), local=(y, z), r_tx=r_tx, r_rx=r_rx,
        total_distance=r_tx + r_rx, k=k, phase=-k * (r_tx + r_rx), hess_psi=hess,
        det=float(np.linalg.det(hess)), signature=sig,
        on_boundary=abs(gap) <= BOUNDARY_TOL, on_surface=bool(gap >= 0),
        residual=float(max(abs(gy[0]), abs(gz[0]))))


def phase_hessian(surface: TargetSurface, tx, rx, sp: StationaryPointSolution, k: float):
    """Analytic 2x2 Hessian of ``psi`` at the stationary point ``sp``."""
    a, b = (surface.to_local(np.asarray(p, dtype=float))[None] for p in (tx, rx))
    y, z = sp.local
    _, _, _, Hyy, Hzz, Hyz = _hessian_parts(surface, a, b, np.array([y]), np.array([z]))
    return -k * np.array([[Hyy[0], Hyz[0]], [Hyz[0], Hzz[0]]])


def plate_linear_hessian(x_tx, z_tx, x_rx, z_rx, k):
    """Closed-form phase Hessian for the plate with a z-axis linear array."""
    s = x_tx + x_rx
    r = 0.5 * math.sqrt(s * s + (z_tx - z_rx) ** 2)
    hyy = -k / r * s * s / (2 * x_tx * x_rx)
    hzz = -k / r ** 3 * s ** 4 / (8 * x_tx * x_rx)
    return np.array([[hyy, 0.0], [0.0, hzz]])


# ---------------------------------------------------------------------------
# batched specular points
# ---------------------------------------------------------------------------

def _initial_guess(surface: TargetSurface, a, b):
    rho = surface.radius
    if surface.kind is Kind.SPHERE:
        centre = np.array([rho, 0.0, 0.0])
        ua = a - centre
        ub = b - centre
        ua /= np.linalg.norm(ua, axis=1)[:, None]
        ub /= np.linalg.norm(ub, axis=1)[:, None]
        n0 = ua + ub
        n0 /= np.linalg.norm(n0, axis=1)[:, None]
        y0, z0 = rho * n0[:, 1], rho * n0[:, 2]
        rad = np.hypot(y0, z0)
        lim = 0.95 * rho
        scale = np.where(rad > lim, lim / np.where(rad > 0, rad, 1.0), 1.0)
        return y0 * scale, z0 * scale
    # cylinder: bisector in the x-z plane, distance-weighted mean along the axis
    ua = np.column_stack([a[:, 0] - rho, a[:, 2]])
    ub = np.column_stack([b[:, 0] - rho, b[:, 2]])
    da = np.linalg.norm(ua, axis=1)
    db = np.linalg.norm(ub, axis=1)
    n0 = ua / da[:, None] + ub / db[:, None]
    n0 /= np.linalg.norm(n0, axis=1)[:, None]
    z0 = np.clip(rho * n0[:, 1], -0.95 * rho, 0.95 * rho)
    wa = np.maximum(da - rho, 1e-9)
    wb = np.maximum(db - rho, 1e-9)
    y0 = (a[:, 1] * wb + b[:, 1] * wa) / (wa + wb)
    return y0, z0


def specular_batch(surface: TargetSurface, a_local, b_local):
    """Minimising specular point for many pairs at once (surface frame).

    Curved shapes run one damped-Newton solve per pair from a bisector
    initial guess; any pair that fails falls back to the multi-start search.
    """
    a, b = _as_points(a_local, b_local)
    if surface.kind is Kind.PLATE:
        return plate_specular(a, b)
    y0, z0 = _initial_guess(surface, a, b)
    step = max(surface.half_extent)
    y, z, gn, status = kernels.newton_specular(surface.kind.code, surface.radius, a, b, y0, z0,
                                               RESIDUAL_TOL, 100, step)
    for i in np.flatnonzero(status != 0):
        ys, zs, _ = fermat_multistart(surface, a[i], b[i])
        y[i], z[i] = ys[0], zs[0]
    return y, z


# ---------------------------------------------------------------------------
# amplitudes
# ---------------------------------------------------------------------------

def pattern_gain(kind: str, cos_theta):
    if kind == "isotropic":
        return np.ones_like(cos_theta)
    if kind == "cosine":
        return cos_theta
    raise ValueError(f"unknown pattern {kind!r}")


def prefactor(k, l2i0=1.0, eta=ETA):
    return -(k * k) * eta * l2i0 / (8.0 * math.pi ** 2)


def geometric_amplitude(tx_world, rx_world, point_world, normal_world, pattern="isotropic"):
    """``f(theta_tx) f(theta_rx) / (r_tx r_rx) * n . (e_phi_tx x e_theta_rx)``.

    All inputs broadcast over leading dimensions. The surface element is not
    included.
    """
    r1, st1, ct1, sp1, cp1 = view_arrays(tx_world, point_world)
    r2, st2, ct2, sp2, cp2 = view_arrays(rx_world, point_world)
    e_phi_tx = basis_from_angles(st1, ct1, sp1, cp1)[..., 2, :]
    e_theta_rx = basis_from_angles(st2, ct2, sp2, cp2)[..., 1, :]
    triple = np.einsum("...i,...i->...", normal_world, np.cross(e_phi_tx, e_theta_rx))
    return pattern_gain(pattern, ct1) * pattern_gain(pattern, ct2) / (r1 * r2) * triple


@dataclass(frozen=True)
class BatchTerms:
    """One stationary-phase term per pair, vectorised."""

    amplitude: np.ndarray
    delay: np.ndarray
    total_distance: np.ndarray
    point: np.ndarray
    local_yz: np.ndarray
    det: np.ndarray
    signature: np.ndarray
    on_surface: np.ndarray


def _assemble(surface, a, b, tx_world, rx_world, y, z, rot, off, config) -> BatchTerms:
    # rot, off: surface frame per row, shapes (n, 3, 3) and (n, 3)
    k = config.k
    D, _, _, Hyy, Hzz, Hyz = _hessian_parts(surface, a, b, y, z)
    det_d = Hyy * Hzz - Hyz * Hyz
    det = k * k * det_d
    if np.any(np.abs(det) < DEGENERATE_DET * k * k):
        raise DegenerateHessianError("phase Hessian is singular; the stationary-phase "
                                     "approximation does not apply")
    sig = _signature(-Hyy, -Hzz, -Hyz)
    h, hy, hz = jet_arrays(surface, y, z)[:3]
    local = np.column_stack([h, y, z])
    point = np.einsum("ni,nij->nj", local, rot) + off
    normal = np.einsum("ni,nij->nj", normal_from_gradient(hy, hz), rot)
    g = geometric_amplitude(tx_world, rx_world, point, normal, getattr(config, "pattern", "isotropic"))
    jac = np.sqrt(1.0 + hy * hy + hz * hz)
    amp = (prefactor(k, getattr(config, "l2i0", 1.0), getattr(config, "eta", ETA))
           * g * jac * 2.0 * np.pi / np.sqrt(np.abs(det))
           * np.exp(-1j * k * D) * np.exp(0.25j * np.pi * sig))
    on = np.asarray(surface.on_surface(y, z), dtype=bool)
    amp = np.where(on, amp, 0.0)
    return BatchTerms(amplitude=amp, delay=D / C, total_distance=D, point=point,
                      local_yz=np.column_stack([y, z]), det=det, signature=sig, on_surface=on)


def spa_terms(surface: TargetSurface, tx_world, rx_world, config, y=None, z=None) -> BatchTerms:
    """Stationary-phase coefficients for many pairs.

    ``config`` needs ``k``, ``l2i0`` and ``pattern`` attributes (for example
    :class:`nfext.config.ScenarioConfig`). Off-surface specular points get a
    zero amplitude.
    """
    tx_world, rx_world = _as_points(tx_world, rx_world)
    a = surface.to_local(tx_world)
    b = surface.to_local(rx_world)
    if y is None:
        y, z = specular_batch(surface, a, b)
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    n = len(y)
    rot = np.broadcast_to(surface.frame, (n, 3, 3))
    off = np.broadcast_to(surface.offset, (n, 3))
    return _assemble(surface, a, b, tx_world, rx_world, y, z, rot, off, config)


def spa_terms_posed(surface: TargetSurface, rotations, offsets, tx_world, rx_world, config):
    """Stationary-phase terms of ``P`` pairs for ``C`` placements of one shape.

    ``rotations`` is ``(C, 3, 3)`` and ``offsets`` ``(C, 3)``; the placement
    already stored in ``surface`` is ignored. Returns ``(amplitude, delay)``
    of shape ``(C, P)``.
    """
    rot = np.asarray(rotations, dtype=float).reshape(-1, 3, 3)
    off = np.asarray(offsets, dtype=float).reshape(-1, 3)
    tx_world, rx_world = _as_points(tx_world, rx_world)
    n_c, n_p = len(rot), len(tx_world)
    # local = rot @ (world - off), for every candidate and pair
    a = np.einsum("cij,cpj->cpi", rot, tx_world[None] - off[:, None]).reshape(-1, 3)
    b = np.einsum("cij,cpj->cpi", rot, rx_world[None] - off[:, None]).reshape(-1, 3)
    y, z = specular_batch(surface, a, b)
    rot_rows = np.repeat(rot, n_p, axis=0)
    off_rows = np.repeat(off, n_p, axis=0)
    t = _assemble(surface, a, b, np.tile(tx_world, (n_c, 1)), np.tile(rx_world, (n_c, 1)),
                  y, z, rot_rows, off_rows, config)
    return t.amplitude.reshape(n_c, n_p), t.delay.reshape(n_c, n_p)


def spa_coefficient(surface: TargetSurface, tx, rx, sp: StationaryPointSolution, config) -> complex:
    """Stationary-phase contribution of one specular point.

    Raises
    ------
    DegenerateHessianError
        When ``|det H| < 1e-12 k^2``.
    PreconditionError
        When the specular point lies off the physical target.
    """
    if not sp.on_surface:
        raise PreconditionError("specular point lies off the target; it contributes nothing")
    y, z = sp.local
    terms = spa_terms(surface, tx, rx, config, y=np.array([y]), z=np.array([z]))
    return complex(terms.amplitude[0])


def pair_response(surface: TargetSurface, layout, l: int, lp: int, config) -> PairResponse:
    """Stationary-phase model of the signal transmitted by ``l`` and received by ``lp``."""
    layout = as_layout(layout)
    tx = layout.positions[l]
    rx = layout.positions[lp]
    sols = solve_stationary(surface, tx, rx, k=config.k)
    terms = tuple(Term(spa_coefficient(surface, tx, rx, s, config), s.total_distance / C)
                  for s in sols if s.on_surface)
    return PairResponse(int(l), int(lp), terms)


@dataclass(frozen=True)
class LayoutResponse:
    """Batched responses of every ordered pair of a layout (tx-major)."""

    tx_index: np.ndarray
    rx_index: np.ndarray
    terms: BatchTerms

    @property
    def amplitude(self):
        return self.terms.amplitude

    @property
    def delay(self):
        return self.terms.delay


def layout_response(surface: TargetSurface, layout, config) -> LayoutResponse:
    layout = as_layout(layout)
    ti, ri = layout.pairs()
    t = spa_terms(surface, layout.positions[ti], layout.positions[ri], config)
    return LayoutResponse(ti, ri, t)


def responses_as_pairs(resp: LayoutResponse):
    """Convert a batched response to a list of :class:`PairResponse`."""
    out = []
    for i, (l, lp) in enumerate(zip(resp.tx_index, resp.rx_index)):
        terms = ()
        if resp.terms.on_surface[i]:
            terms = (Term(complex(resp.amplitude[i]), float(resp.delay[i])),)
        out.append(PairResponse(int(l), int(lp), terms))
    return out
