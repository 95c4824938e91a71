"""
Target-surface calculus, antenna layouts and per-antenna spherical views.

A target is a parametric surface ``x = h(y, z)`` expressed in its own local
frame, with ``h(0, 0) = 0`` and the illuminating antennas on the ``x < 0``
side. The local frame is placed in the world by a translation
(``origin_offset``) and a rotation whose rows are the local axes written in
world coordinates. Shapes are never re-oriented in their local frame: a pose
change maps the antennas into the local frame instead.

Three kinds are supported:

* plate    -- ``h = 0`` on ``|y| <= D_y/2, |z| <= D_z/2``
* sphere   -- ``h = rho - sqrt(rho^2 - y^2 - z^2)`` (antenna-facing branch)
* cylinder -- ``h = rho - sqrt(rho^2 - z^2)``, axis along local ``y``
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import NamedTuple, Sequence, Union

import numpy as np

from .errors import ConfigError, DomainError, GeometryError

BOUNDARY_TOL = 1e-9


class Kind(str, Enum):
    PLATE = "plate"
    SPHERE = "sphere"
    CYLINDER = "cylinder"

    @property
    def code(self) -> int:
        return _KIND_CODES[self]


_KIND_CODES = {Kind.PLATE: 0, Kind.SPHERE: 1, Kind.CYLINDER: 2}

_IDENTITY = (1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0)


@dataclass(frozen=True)
class TargetSurface:
    """Canonical target shape plus its placement in the world frame.

    Parameters
    ----------
    kind : Kind
        Plate, sphere or cylinder.
    plate_dims : (float, float)
        ``(D_y, D_z)`` in metres, used by the plate only.
    radius : float
        Curvature radius ``rho`` in metres (sphere and cylinder).
    cyl_length : float
        Cylinder length along its axis (local ``y``), metres.
    origin_offset : 3-tuple
        World position of the local origin, i.e. of the point ``h(0,0)=0``.
    rotation : 9-tuple
        Row-major 3x3 matrix whose rows are the local axes in world
        coordinates, so ``local = rotation @ (world - origin_offset)``.
    """

    kind: Kind
    plate_dims: tuple = (0.8, 1.75)
    radius: float = 1.24
    cyl_length: float = 1.75
    origin_offset: tuple = (0.0, 0.0, 0.0)
    rotation: tuple = field(default=_IDENTITY, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        object.__setattr__(self, "plate_dims", tuple(float(v) for v in self.plate_dims))
        object.__setattr__(self, "origin_offset", tuple(float(v) for v in self.origin_offset))
        rot = np.asarray(self.rotation, dtype=float).reshape(3, 3)
        if not np.allclose(rot @ rot.T, np.eye(3), atol=1e-9):
            raise ConfigError("rotation must be orthonormal")
        object.__setattr__(self, "rotation", tuple(rot.ravel().tolist()))
        if self.kind is Kind.PLATE:
            if min(self.plate_dims) <= 0:
                raise ConfigError("plate dimensions must be positive")
        else:
            if not self.radius > 0:
                raise ConfigError("radius must be positive")
            if self.kind is Kind.CYLINDER and not self.cyl_length > 0:
                raise ConfigError("cylinder length must be positive")

    @classmethod
    def plate(cls, d_y, d_z, **kw):
        return cls(Kind.PLATE, plate_dims=(d_y, d_z), **kw)

    @classmethod
    def sphere(cls, rho, **kw):
        return cls(Kind.SPHERE, radius=rho, **kw)

    @classmethod
    def cylinder(cls, rho, length, **kw):
        return cls(Kind.CYLINDER, radius=rho, cyl_length=length, **kw)

    # -- placement -----------------------------------------------------
    @property
    def frame(self) -> np.ndarray:
        return np.asarray(self.rotation, dtype=float).reshape(3, 3)

    @property
    def offset(self) -> np.ndarray:
        return np.asarray(self.origin_offset, dtype=float)

    def placed(self, offset, rotation=None) -> "TargetSurface":
        rot = _IDENTITY if rotation is None else tuple(np.asarray(rotation, float).ravel())
        return replace(self, origin_offset=tuple(np.asarray(offset, float)), rotation=rot)

    def to_local(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        return (p - self.offset) @ self.frame.T

    def to_world(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=float)
        return p @ self.frame + self.offset

    def vector_to_world(self, vectors) -> np.ndarray:
        return np.asarray(vectors, dtype=float) @ self.frame

    # -- domain --------------------------------------------------------
    @property
    def half_extent(self) -> tuple:
        """Half sizes of the physical surface along local y and z."""
        if self.kind is Kind.PLATE:
            return self.plate_dims[0] / 2, self.plate_dims[1] / 2
        if self.kind is Kind.SPHERE:
            return self.radius, self.radius
        return self.cyl_length / 2, self.radius

    def in_domain(self, y, z):
        """Vectorised membership test for the shape-function domain."""
        y = np.asarray(y, dtype=float)
        z = np.asarray(z, dtype=float)
        if self.kind is Kind.PLATE:
            hy, hz = self.half_extent
            return (np.abs(y) <= hy) & (np.abs(z) <= hz)
        if self.kind is Kind.SPHERE:
            return y * y + z * z < self.radius ** 2
        return (np.abs(y) <= self.cyl_length / 2) & (np.abs(z) < self.radius)

    def on_surface(self, y, z):
        """Whether local (y, z) lies on the finite physical target."""
        return self.in_domain(y, z)

    def boundary_gap(self, y, z):
        """Distance (in the y-z plane) from (y, z) to the domain boundary.

        Negative values mean the point lies outside the physical bounds.
        """
        y = np.asarray(y, dtype=float)
        z = np.asarray(z, dtype=float)
        if self.kind is Kind.PLATE:
            hy, hz = self.half_extent
            return np.minimum(hy - np.abs(y), hz - np.abs(z))
        if self.kind is Kind.SPHERE:
            return self.radius - np.hypot(y, z)
        return np.minimum(self.cyl_length / 2 - np.abs(y), self.radius - np.abs(z))

    def check_domain(self, y, z):
        if self.kind is Kind.PLATE:
            hy, hz = self.half_extent
            if abs(y) > hy:
                raise DomainError(f"y={y} outside plate |y| <= {hy}", "y", y)
            if abs(z) > hz:
                raise DomainError(f"z={z} outside plate |z| <= {hz}", "z", z)
        elif self.kind is Kind.SPHERE:
            if not y * y + z * z < self.radius ** 2:
                coord = "y" if abs(y) >= abs(z) else "z"
                raise DomainError(
                    f"(y, z)=({y}, {z}) outside sphere disk of radius {self.radius}",
                    coord, y if coord == "y" else z)
        else:
            if abs(y) > self.cyl_length / 2:
                raise DomainError(f"y={y} outside cylinder length", "y", y)
            if not abs(z) < self.radius:
                raise DomainError(f"z={z} outside cylinder |z| < {self.radius}", "z", z)


class SurfaceJet(NamedTuple):
    h: float
    grad: tuple  # (h_y, h_z)
    hess: tuple  # (h_yy, h_zz, h_yz)


def jet_arrays(surface: TargetSurface, y, z):
    """Height, gradient and Hessian of ``h`` on arrays, without domain checks.

    Returns ``(h, hy, hz, hyy, hzz, hyz)``; the plate is treated as the
    unbounded plane ``x = 0``.
    """
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    zero = np.zeros(np.broadcast(y, z).shape)
    rho = surface.radius
    if surface.kind is Kind.PLATE:
        return zero, zero, zero, zero, zero, zero.copy()
    if surface.kind is Kind.SPHERE:
        d2 = rho * rho - y * y - z * z
        d = np.sqrt(d2)
        h = (y * y + z * z) / (rho + d)  # rho - d without cancellation
        d3 = d2 * d
        return h, y / d, z / d, (rho * rho - z * z) / d3, (rho * rho - y * y) / d3, y * z / d3
    d2 = rho * rho - z * z
    d = np.sqrt(d2)
    h = z * z / (rho + d) + zero
    return h, zero, z / d + zero, zero, rho * rho / (d2 * d) + zero, zero.copy()


def surface_jet(surface: TargetSurface, y: float, z: float) -> SurfaceJet:
    """Analytic height, gradient and Hessian of the shape function at (y, z)."""
    surface.check_domain(y, z)
    h, hy, hz, hyy, hzz, hyz = (float(v) for v in jet_arrays(surface, y, z))
    return SurfaceJet(h, (hy, hz), (hyy, hzz, hyz))


def shape_delta(surface: TargetSurface, y0, z0, dy, dz):
    """``h(y0+dy, z0+dz) - h(y0, z0)`` evaluated without cancellation."""
    y0, z0, dy, dz = (np.asarray(v, dtype=float) for v in (y0, z0, dy, dz))
    rho = surface.radius
    if surface.kind is Kind.PLATE:
        return np.zeros(np.broadcast(y0, z0, dy, dz).shape)
    if surface.kind is Kind.SPHERE:
        ds2 = dy * (2 * y0 + dy) + dz * (2 * z0 + dz)
        d0 = np.sqrt(rho * rho - y0 * y0 - z0 * z0)
        d1 = np.sqrt(rho * rho - (y0 + dy) ** 2 - (z0 + dz) ** 2)
        return ds2 / (d0 + d1)
    ds2 = dz * (2 * z0 + dz) + 0 * dy
    d0 = np.sqrt(rho * rho - z0 * z0)
    d1 = np.sqrt(rho * rho - (z0 + dz) ** 2)
    return ds2 / (d0 + d1)


def surface_normal(surface: TargetSurface, y: float, z: float) -> np.ndarray:
    """Outward unit normal in the local frame (negative x component)."""
    jet = surface_jet(surface, y, z)
    return normal_from_gradient(*jet.grad)


def normal_from_gradient(hy, hz) -> np.ndarray:
    hy = np.asarray(hy, dtype=float)
    hz = np.asarray(hz, dtype=float)
    norm = np.sqrt(1.0 + hy * hy + hz * hz)
    return np.stack(np.broadcast_arrays(-1.0 / norm, hy / norm, hz / norm), axis=-1)


# ---------------------------------------------------------------------------
# spherical views
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SphericalView:
    """Spherical coordinates of a surface point seen from one antenna.

    Elevation ``theta`` is measured from the x-z plane toward +y and azimuth
    ``phi`` from +x toward +z. ``basis`` rows are ``e_r, e_theta, e_phi``.
    """

    r: float
    sin_theta: float
    cos_theta: float
    sin_phi: float
    cos_phi: float
    basis: np.ndarray = field(compare=False)

    @property
    def e_r(self):
        return self.basis[0]

    @property
    def e_theta(self):
        return self.basis[1]

    @property
    def e_phi(self):
        return self.basis[2]

    @property
    def theta(self):
        return math.atan2(self.sin_theta, self.cos_theta)

    @property
    def phi(self):
        return math.atan2(self.sin_phi, self.cos_phi)


def basis_from_angles(st, ct, sp, cp) -> np.ndarray:
    """Rows ``e_r, e_theta, e_phi`` for (arrays of) angle sines/cosines."""
    st, ct, sp, cp = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (st, ct, sp, cp)))
    zero = np.zeros_like(st)
    e_r = np.stack([ct * cp, st, ct * sp], axis=-1)
    e_t = np.stack([-st * cp, ct, -st * sp], axis=-1)
    e_p = np.stack([-sp, zero, cp], axis=-1)
    return np.stack([e_r, e_t, e_p], axis=-2)


def view_arrays(antenna, point):
    """Vectorised spherical view: ``(r, sin_t, cos_t, sin_p, cos_p)``.

    When the point lies straight along +-y from the antenna the azimuth is
    undefined and is reported as zero.
    """
    d = np.asarray(point, dtype=float) - np.asarray(antenna, dtype=float)
    dx, dy, dz = d[..., 0], d[..., 1], d[..., 2]
    rho_xz = np.hypot(dx, dz)
    r = np.sqrt(rho_xz * rho_xz + dy * dy)
    with np.errstate(invalid="ignore", divide="ignore"):
        st = dy / r
        ct = rho_xz / r
        flat = rho_xz == 0
        sp = np.where(flat, 0.0, dz / np.where(flat, 1.0, rho_xz))
        cp = np.where(flat, 1.0, dx / np.where(flat, 1.0, rho_xz))
    return r, st, ct, sp, cp


def spherical_view(antenna, surface_point) -> SphericalView:
    antenna = np.asarray(antenna, dtype=float)
    surface_point = np.asarray(surface_point, dtype=float)
    if np.array_equal(antenna, surface_point):
        raise GeometryError("surface point coincides with the antenna")
    r, st, ct, sp, cp = (float(v) for v in view_arrays(antenna, surface_point))
    return SphericalView(r, st, ct, sp, cp, basis_from_angles(st, ct, sp, cp))


def pose_rotation(azimuth: float, elevation: float) -> np.ndarray:
    """Rotation whose rows are the spherical basis at (elevation, azimuth).

    Used as the target frame for a pose: local +x points away from the array
    centre along the line of sight.
    """
    return basis_from_angles(math.sin(elevation), math.cos(elevation),
                             math.sin(azimuth), math.cos(azimuth))


def surface_at_pose(surface: TargetSurface, centre, rng: float, azimuth: float = 0.0,
                    elevation: float = 0.0) -> TargetSurface:
    """Place ``surface`` so its reference point sits at ``centre + rng * e_r``
    and its local x-axis points along ``e_r`` (the target faces the array)."""
    rot = pose_rotation(azimuth, elevation)
    return surface.placed(np.asarray(centre, float) + rng * rot[0], rot)


# ---------------------------------------------------------------------------
# antenna layouts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Linear:
    n: int
    spacing: float
    standoff: float


@dataclass(frozen=True)
class Planar:
    n_y: int
    n_z: int
    spacing: float
    standoff: float


@dataclass(frozen=True)
class Distributed:
    sub: Linear
    count: int
    sub_spacing: float


LayoutSpec = Union[Linear, Planar, Distributed]


@dataclass(frozen=True, eq=False)
class AntennaLayout:
    positions: np.ndarray

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float).reshape(-1, 3)
        if len(pos) < 1:
            raise ConfigError("layout needs at least one antenna")
        if len(np.unique(np.round(pos, 12), axis=0)) != len(pos):
            raise ConfigError("antenna positions must be pairwise distinct")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)

    @property
    def count(self) -> int:
        return len(self.positions)

    @property
    def centre(self) -> np.ndarray:
        return self.positions.mean(axis=0)

    @property
    def aperture(self) -> float:
        """Largest antenna-to-antenna distance."""
        p = self.positions
        return float(np.max(np.linalg.norm(p[:, None] - p[None], axis=-1)))

    def pairs(self):
        """All ordered ``(tx, rx)`` index pairs, tx-major."""
        n = self.count
        tx, rx = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        return tx.ravel(), rx.ravel()


def _centred(n, spacing):
    return (np.arange(n) - (n - 1) / 2.0) * spacing


def build_layout(spec: LayoutSpec) -> AntennaLayout:
    """Antenna positions for a linear, planar or distributed array.

    Arrays sit in the plane ``x = -standoff`` and are centred on the x-axis;
    linear arrays run along z.
    """
    if isinstance(spec, Linear):
        _require_positive(n=spec.n, standoff=spec.standoff)
        if spec.n > 1:
            _require_positive(spacing=spec.spacing)
        z = _centred(spec.n, spec.spacing if spec.n > 1 else 0.0)
        pos = np.column_stack([np.full(spec.n, -float(spec.standoff)), np.zeros(spec.n), z])
        return AntennaLayout(pos)
    if isinstance(spec, Planar):
        _require_positive(n_y=spec.n_y, n_z=spec.n_z, spacing=spec.spacing, standoff=spec.standoff)
        yy, zz = np.meshgrid(_centred(spec.n_y, spec.spacing), _centred(spec.n_z, spec.spacing),
                             indexing="ij")
        pos = np.column_stack([np.full(yy.size, -float(spec.standoff)), yy.ravel(), zz.ravel()])
        return AntennaLayout(pos)
    if isinstance(spec, Distributed):
        _require_positive(count=spec.count)
        if spec.count > 1:
            _require_positive(sub_spacing=spec.sub_spacing)
        sub = build_layout(spec.sub).positions
        offsets = _centred(spec.count, spec.sub_spacing if spec.count > 1 else 0.0)
        pos = np.concatenate([sub + np.array([0.0, 0.0, off]) for off in offsets])
        return AntennaLayout(pos)
    raise ConfigError(f"unknown layout spec {spec!r}")


def _require_positive(**values):
    for name, v in values.items():
        if not v > 0:
            raise ConfigError(f"{name} must be positive, got {v}")


def as_layout(obj: Union[AntennaLayout, LayoutSpec, Sequence]) -> AntennaLayout:
    if isinstance(obj, AntennaLayout):
        return obj
    if isinstance(obj, (Linear, Planar, Distributed)):
        return build_layout(obj)
    return AntennaLayout(np.asarray(obj, dtype=float))
