"""Cross-checks of the fast stationary-phase paths against the brute-force oracles."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .geometry import Kind, TargetSurface
from .oracle import QuadratureMesh, fd_hessian, grid_specular, po_quadrature
from .spa import fermat_multistart, phase_hessian, plate_specular, solve_stationary, spa_coefficient


class Check(NamedTuple):
    name: str
    value: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.value <= self.tolerance)


def random_pairs(rng: np.random.Generator, n: int, xlo=-6.0, xhi=-1.0, spread=(0.4, 0.875)):
    """Antenna pairs on the ``x < 0`` side with ``|y|, |z|`` bounded by ``spread``."""
    sy, sz = np.broadcast_to(spread, (2,))

    def draw():
        return np.column_stack([rng.uniform(xlo, xhi, n), rng.uniform(-sy, sy, n),
                                rng.uniform(-sz, sz, n)])
    return draw(), draw()


def plate_checks(n: int = 200, seed: int = 1):
    rng = np.random.default_rng(seed)
    plate = TargetSurface.plate(0.8, 1.75)
    a, b = random_pairs(rng, n)
    yc, zc = plate_specular(a, b)
    fermat = grid = 0.0
    for i in range(n):
        ys, zs, _ = fermat_multistart(plate, a[i], b[i])
        fermat = max(fermat, float(np.hypot(ys[0] - yc[i], zs[0] - zc[i])))
        p, _ = grid_specular(plate, a[i], b[i], 128)
        grid = max(grid, float(np.hypot(p[1] - yc[i], p[2] - zc[i])))
    return [Check("plate specular: closed form vs Fermat (m)", fermat, 1e-8),
            Check("plate specular: closed form vs grid (m)", grid, 1e-5)]


def _surfaces():
    return {Kind.PLATE: TargetSurface.plate(4.0, 4.0), Kind.SPHERE: TargetSurface.sphere(1.24),
            Kind.CYLINDER: TargetSurface.cylinder(1.24, 4.0)}


def hessian_check(kind: Kind, n: int = 100, seed: int = 2, k: float = 1.0):
    """Largest relative error of the analytic phase Hessian against finite differences."""
    rng = np.random.default_rng(seed)
    surface = _surfaces()[kind]
    a, b = random_pairs(rng, n, spread=0.5)
    worst = 0.0
    for i in range(n):
        sp = solve_stationary(surface, a[i], b[i], k)[0]
        h = phase_hessian(surface, a[i], b[i], sp, k)
        f = fd_hessian(surface, a[i], b[i], sp, 1e-5, k)
        worst = max(worst, float(np.abs(f - h).max() / np.abs(h).max()))
    return Check(f"{kind.value} phase Hessian vs finite differences (rel)", worst, 1e-5)


def spa_po_checks(config, pairs=((6, 6), (0, 12), (3, 9))):
    """Magnitude and phase of the stationary-phase coefficient against quadrature."""
    out = []
    mesh = QuadratureMesh(config.samples_per_wavelength, config.node_budget)
    for kind in Kind:
        c = config.replace(target=kind.value)
        surface = c.true_surface()
        pos = c.antenna_layout().positions
        for l, lp in pairs:
            if max(l, lp) >= len(pos):
                continue
            sp = solve_stationary(surface, pos[l], pos[lp], c.k)[0]
            ratio = po_quadrature(surface, pos[l], pos[lp], c.k, mesh, pattern=c.pattern,
                                  l2i0=c.l2i0) / spa_coefficient(surface, pos[l], pos[lp], sp, c)
            out.append(Check(f"{kind.value} ({l},{lp}) |PO/SPA| - 1", abs(abs(ratio) - 1), 0.05))
            out.append(Check(f"{kind.value} ({l},{lp}) phase(PO/SPA) (rad)",
                             abs(float(np.angle(ratio))), 0.1))
    return out


def run_checks(config, quick: bool = False):
    checks = plate_checks(50)
    checks += [hessian_check(kind, 30) for kind in Kind]
    if not quick:
        checks += spa_po_checks(config.replace(fc=3.5e9))
    return checks
