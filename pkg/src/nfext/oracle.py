"""
Brute-force references for the stationary-phase fast paths.

* :func:`po_quadrature` integrates the physical-optics received-signal
  integral directly with a midpoint rule and compensated summation.
* :func:`grid_specular` finds the specular point by exhaustive search of the
  total path length with nested grid zooms.
* :func:`fd_hessian` differentiates the phase numerically.

None of these call the analytic stationary-point or Hessian code.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import ETA
from .errors import BudgetError, ConfigError, DomainError
from .geometry import Kind, TargetSurface, shape_delta, view_arrays, basis_from_angles

TILE = 1 << 17


@dataclass(frozen=True)
class QuadratureMesh:
    """Mesh density for the surface quadrature.

    ``samples_per_wavelength`` sets the arc-length step ``lambda / spw``; the
    mesh is refused when its node count exceeds ``budget``.
    """

    samples_per_wavelength: float = 16.0
    budget: int = 4_000_000

    def __post_init__(self):
        if self.samples_per_wavelength < 4:
            raise ConfigError("samples_per_wavelength must be >= 4")

    def step(self, k: float) -> float:
        return 2.0 * math.pi / k / self.samples_per_wavelength

    def halved(self) -> "QuadratureMesh":
        return QuadratureMesh(2 * self.samples_per_wavelength, 4 * self.budget)


# ---------------------------------------------------------------------------
# meshes in the natural parametrisation of each shape (local frame)
# ---------------------------------------------------------------------------

def _axis(lo, hi, step):
    n = max(1, int(math.ceil((hi - lo) / step)))
    w = (hi - lo) / n
    return lo + (np.arange(n) + 0.5) * w, w


def _plate_counts(surface, step):
    dy, dz = surface.plate_dims
    return max(1, math.ceil(dy / step)) * max(1, math.ceil(dz / step))


def _sphere_rings(surface, step):
    rho = surface.radius
    alpha, da = _axis(0.0, math.pi / 2, step / rho)
    nb = np.maximum(1, np.ceil(2 * math.pi * rho * np.sin(alpha) / step)).astype(np.int64)
    return alpha, da, nb


def _cyl_counts(surface, step):
    rho = surface.radius
    ny = max(1, math.ceil(surface.cyl_length / step))
    nb = max(1, math.ceil(math.pi * rho / step))
    return ny, nb


def mesh_node_count(surface: TargetSurface, k: float, mesh: QuadratureMesh) -> int:
    step = mesh.step(k)
    if surface.kind is Kind.PLATE:
        return _plate_counts(surface, step)
    if surface.kind is Kind.SPHERE:
        return int(_sphere_rings(surface, step)[2].sum())
    ny, nb = _cyl_counts(surface, step)
    return ny * nb


def _mesh_tiles(surface: TargetSurface, step: float):
    """Yield ``(points, normals, weights)`` tiles in the local frame."""
    if surface.kind is Kind.PLATE:
        dy, dz = surface.plate_dims
        y, wy = _axis(-dy / 2, dy / 2, step)
        z, wz = _axis(-dz / 2, dz / 2, step)
        rows = max(1, TILE // len(z))
        for lo in range(0, len(y), rows):
            Y, Z = np.meshgrid(y[lo:lo + rows], z, indexing="ij")
            pts = np.column_stack([np.zeros(Y.size), Y.ravel(), Z.ravel()])
            nrm = np.tile([-1.0, 0.0, 0.0], (Y.size, 1))
            yield pts, nrm, np.full(Y.size, wy * wz)
    elif surface.kind is Kind.SPHERE:
        rho = surface.radius
        alpha, da, nb = _sphere_rings(surface, step)
        start = 0
        while start < len(alpha):
            stop = start
            count = 0
            while stop < len(alpha) and (count == 0 or count + nb[stop] <= TILE):
                count += nb[stop]
                stop += 1
            a = np.repeat(alpha[start:stop], nb[start:stop])
            nbr = np.repeat(nb[start:stop], nb[start:stop])
            idx = np.arange(count) - np.repeat(np.cumsum(nb[start:stop]) - nb[start:stop],
                                                nb[start:stop])
            b = (idx + 0.5) * (2 * math.pi / nbr)
            sa, ca = np.sin(a), np.cos(a)
            nrm = np.column_stack([-ca, sa * np.cos(b), sa * np.sin(b)])
            pts = np.array([rho, 0.0, 0.0]) + rho * nrm
            w = rho * rho * sa * da * (2 * math.pi / nbr)
            yield pts, nrm, w
            start = stop
    else:
        rho = surface.radius
        ny, nb = _cyl_counts(surface, step)
        y, wy = _axis(-surface.cyl_length / 2, surface.cyl_length / 2, step)
        beta, db = _axis(-math.pi / 2, math.pi / 2, step / rho)
        rows = max(1, TILE // len(beta))
        for lo in range(0, len(y), rows):
            Y, Bt = np.meshgrid(y[lo:lo + rows], beta, indexing="ij")
            Y, Bt = Y.ravel(), Bt.ravel()
            nrm = np.column_stack([-np.cos(Bt), np.zeros(Y.size), np.sin(Bt)])
            pts = np.column_stack([rho * (1 - np.cos(Bt)), Y, rho * np.sin(Bt)])
            yield pts, nrm, np.full(Y.size, rho * db * wy)


def _tile_terms(surface, tx, rx, k, pts_local, nrm_local, w, pattern):
    pts = surface.to_world(pts_local)
    nrm = surface.vector_to_world(nrm_local)
    lit = (np.einsum("ij,ij->i", nrm, pts - tx) < 0) & (np.einsum("ij,ij->i", nrm, pts - rx) < 0)
    pts, nrm, w = pts[lit], nrm[lit], w[lit]
    r1, st1, ct1, sp1, cp1 = view_arrays(tx, pts)
    r2, st2, ct2, sp2, cp2 = view_arrays(rx, pts)
    e_phi = basis_from_angles(st1, ct1, sp1, cp1)[:, 2, :]
    e_theta = basis_from_angles(st2, ct2, sp2, cp2)[:, 1, :]
    triple = np.einsum("ij,ij->i", nrm, np.cross(e_phi, e_theta))
    gain = np.ones_like(r1) if pattern == "isotropic" else ct1 * ct2
    return gain * triple / (r1 * r2) * np.exp(-1j * k * (r1 + r2)) * w


def po_quadrature(surface: TargetSurface, tx, rx, k: float, mesh: QuadratureMesh | None = None,
                  *, pattern: str = "isotropic", l2i0: float = 1.0, eta: float = ETA,
                  order=None) -> complex:
    """Received signal of one pair by direct surface quadrature (carrier only).

    Integrates ``P * g * exp(j psi) dS`` over the part of the target facing
    both antennas, with ``P = -k^2 eta L^2 I0 / (8 pi^2)``. The plate uses a
    uniform ``(y, z)`` grid, the sphere polar rings about its apex and the
    cylinder ``(y, angle)``; each node carries its exact surface element.

    ``order`` optionally permutes the tiles (used to check that the result
    does not depend on traversal order).
    """
    mesh = mesh or QuadratureMesh()
    tx = np.asarray(tx, dtype=float)
    rx = np.asarray(rx, dtype=float)
    count = mesh_node_count(surface, k, mesh)
    if count > mesh.budget:
        raise BudgetError(f"quadrature mesh needs {count} nodes, budget is {mesh.budget}")
    step = mesh.step(k)
    partial_re, partial_im = [], []
    tiles = list(_mesh_tiles(surface, step))
    if order is not None:
        tiles = [tiles[i] for i in order]
    for pts, nrm, w in tiles:
        vals = _tile_terms(surface, tx, rx, k, pts, nrm, w, pattern)
        partial_re.append(math.fsum(vals.real.tolist()))
        partial_im.append(math.fsum(vals.imag.tolist()))
    total = complex(math.fsum(partial_re), math.fsum(partial_im))
    return -(k * k) * eta * l2i0 / (8 * math.pi ** 2) * total


def po_tile_count(surface: TargetSurface, k: float, mesh: QuadratureMesh) -> int:
    return sum(1 for _ in _mesh_tiles(surface, mesh.step(k)))


# ---------------------------------------------------------------------------
# specular point by exhaustive search
# ---------------------------------------------------------------------------

def _path(surface, a, b, Y, Z):
    inside = surface.kind is Kind.PLATE or np.ones(Y.shape, bool)
    rho = surface.radius
    if surface.kind is Kind.PLATE:
        H = np.zeros_like(Y)
    elif surface.kind is Kind.SPHERE:
        s2 = Y * Y + Z * Z
        inside = s2 < rho * rho
        H = np.where(inside, s2 / (rho + np.sqrt(np.abs(rho * rho - s2))), 0.0)
    else:
        inside = Z * Z < rho * rho
        H = np.where(inside, Z * Z / (rho + np.sqrt(np.abs(rho * rho - Z * Z))), 0.0)
    D = (np.sqrt((H - a[0]) ** 2 + (Y - a[1]) ** 2 + (Z - a[2]) ** 2)
         + np.sqrt((H - b[0]) ** 2 + (Y - b[1]) ** 2 + (Z - b[2]) ** 2))
    return np.where(inside, D, np.inf), H


def _search_box(surface, a, b):
    hy, hz = surface.half_extent
    if surface.kind is Kind.SPHERE:
        return (-hy, hy), (-hz, hz)
    ylo = min(-hy, a[1], b[1])
    yhi = max(hy, a[1], b[1])
    if surface.kind is Kind.CYLINDER:
        return (ylo, yhi), (-hz, hz)
    return (ylo, yhi), (min(-hz, a[2], b[2]), max(hz, a[2], b[2]))


def grid_specular(surface: TargetSurface, tx, rx, grid_n: int = 128, levels: int = 3):
    """Minimise the total path over a ``grid_n x grid_n`` lattice plus zooms.

    Each zoom level recentres on the current best node and shrinks the
    spacing tenfold; an even ``grid_n`` is bumped to the next odd count so
    the lattice contains its centre. A final parabolic fit through the best
    node and its neighbours polishes each coordinate. Returns
    ``(point_world, total_distance)``.
    """
    if grid_n < 64:
        raise ConfigError("grid_n must be at least 64")
    n = grid_n | 1
    a = surface.to_local(np.asarray(tx, dtype=float))
    b = surface.to_local(np.asarray(rx, dtype=float))
    (ylo, yhi), (zlo, zhi) = _search_box(surface, a, b)
    for level in range(levels + 1):
        ys = np.linspace(ylo, yhi, n)
        zs = np.linspace(zlo, zhi, n)
        Y, Z = np.meshgrid(ys, zs, indexing="ij")
        D, _ = _path(surface, a, b, Y, Z)
        i, j = np.unravel_index(np.argmin(D), D.shape)
        y, z = Y[i, j], Z[i, j]
        sy, sz = ys[1] - ys[0], zs[1] - zs[0]
        if level < levels:
            ylo, yhi = y - sy * n / 20, y + sy * n / 20
            zlo, zhi = z - sz * n / 20, z + sz * n / 20
    y = _vertex(D[i - 1, j] if i else np.inf, D[i, j], D[i + 1, j] if i < n - 1 else np.inf, y, sy)
    z = _vertex(D[i, j - 1] if j else np.inf, D[i, j], D[i, j + 1] if j < n - 1 else np.inf, z, sz)
    dist, h = _path(surface, a, b, np.array(y), np.array(z))
    if not np.isfinite(dist) or dist > D[i, j]:
        y, z = Y[i, j], Z[i, j]
        dist, h = _path(surface, a, b, np.array(y), np.array(z))
    return surface.to_world(np.array([float(h), y, z])), float(dist)


def _vertex(fm, f0, fp, x, step):
    den = fm - 2 * f0 + fp
    if not np.isfinite(den) or den <= 0:
        return x
    return x + 0.5 * step * (fm - fp) / den


# ---------------------------------------------------------------------------
# finite-difference phase Hessian
# ---------------------------------------------------------------------------

def _path_delta(surface, a, b, y0, z0, dy, dz):
    """``D(y0+dy, z0+dz) - D(y0, z0)`` without catastrophic cancellation."""
    rho = surface.radius
    if surface.kind is Kind.PLATE:
        h0 = 0.0
    elif surface.kind is Kind.SPHERE:
        s2 = y0 * y0 + z0 * z0
        h0 = s2 / (rho + math.sqrt(rho * rho - s2))
    else:
        h0 = z0 * z0 / (rho + math.sqrt(rho * rho - z0 * z0))
    dh = float(shape_delta(surface, y0, z0, dy, dz))
    p0 = np.array([h0, y0, z0])
    dp = np.array([dh, dy, dz])
    total = 0.0
    for q in (a, b):
        r0 = np.linalg.norm(p0 - q)
        r1 = np.linalg.norm(p0 + dp - q)
        total += float(dp @ (2 * (p0 - q) + dp)) / (r0 + r1)
    return total


def fd_hessian(surface: TargetSurface, tx, rx, point, step: float = 1e-5, k: float = 1.0):
    """Central second differences of ``psi = -k D`` at local ``point=(y, z)``.

    ``point`` may also be a :class:`nfext.spa.StationaryPointSolution`.
    """
    if not 1e-7 <= step <= 1e-3:
        raise ConfigError("step must lie in [1e-7, 1e-3]")
    y0, z0 = (point.local if hasattr(point, "local") else point)
    y0, z0 = float(y0), float(z0)
    for sy in (-step, 0.0, step):
        for sz in (-step, 0.0, step):
            if not bool(surface.in_domain(y0 + sy, z0 + sz)):
                coord = "y" if sy and not bool(surface.in_domain(y0 + sy, z0)) else "z"
                raise DomainError("finite-difference stencil leaves the domain", coord,
                                  y0 + sy if coord == "y" else z0 + sz)
    a = surface.to_local(np.asarray(tx, dtype=float))
    b = surface.to_local(np.asarray(rx, dtype=float))

    def d(dy, dz):
        return _path_delta(surface, a, b, y0, z0, dy, dz)

    h2 = step * step
    hyy = (d(step, 0.0) + d(-step, 0.0)) / h2
    hzz = (d(0.0, step) + d(0.0, -step)) / h2
    hyz = (d(step, step) - d(step, -step) - d(-step, step) + d(-step, -step)) / (4 * h2)
    return -k * np.array([[hyy, hyz], [hyz, hzz]])
