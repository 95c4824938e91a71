import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nfext.config import ScenarioConfig
from nfext.constants import C, ETA
from nfext.errors import DegenerateHessianError, PreconditionError
from nfext.geometry import Linear, TargetSurface, build_layout
from nfext.spa import (fermat_multistart, pair_response, phase_hessian, plate_linear_hessian,
                       plate_specular, solve_stationary, spa_coefficient, spa_terms,
                       specular_batch)

CFG = ScenarioConfig()


def iso(k):
    return SimpleNamespace(k=k, l2i0=1.0, pattern="isotropic")


def rot_x(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[1, 0, 0], [0, c, -s], [0, s, c]])


# -- stationary points ----------------------------------------------------------

def test_plate_monostatic_boresight():
    sp, = solve_stationary(TargetSurface.plate(0.8, 1.75), [-4, 0, 0], [-4, 0, 0])
    assert np.allclose(sp.point, 0) and sp.on_surface


def test_plate_mirror_image_point():
    # reflect tx to (2,0,0); the segment to (-4,0,3) crosses x=0 at z=1
    sp, = solve_stationary(TargetSurface.plate(4, 4), [-2, 0, 0], [-4, 0, 3])
    assert np.allclose(sp.point, [0, 0, 1], atol=1e-14)
    assert sp.total_distance == pytest.approx(math.sqrt(36 + 9))


def test_plate_opposite_sides_rejected():
    with pytest.raises(PreconditionError):
        plate_specular(np.array([[-1.0, 0, 0]]), np.array([[1.0, 0, 0]]))


def test_sphere_apex_monostatic():
    s = TargetSurface.sphere(1.0, origin_offset=(0, 0, 0))
    sp = solve_stationary(s, [-4, 0, 0], [-4, 0, 0])[0]
    assert np.allclose(sp.point, 0, atol=1e-9)


def test_sphere_symmetric_pair_lands_on_midplane():
    s = TargetSurface.sphere(1.0)
    sp = solve_stationary(s, [-4, 0, -0.5], [-4, 0, 0.5])[0]
    assert abs(sp.local[0]) < 1e-9 and abs(sp.local[1]) < 1e-9


def test_stored_phase_and_distance_consistent():
    sp = solve_stationary(TargetSurface.sphere(1.24), [-4, 0.2, 0.3], [-3, -0.1, -0.6], k=7.0)[0]
    assert sp.phase == -7.0 * (sp.r_tx + sp.r_rx)
    assert sp.total_distance == sp.r_tx + sp.r_rx
    assert sp.residual <= 1e-8


def test_sphere_apex_hessian():
    k, R, rho = 3.0, 4.0, 1.0
    sp = solve_stationary(TargetSurface.sphere(rho), [-R, 0, 0], [-R, 0, 0], k)[0]
    expect = -2 * k * (1 / R + 1 / rho)
    assert np.allclose(sp.hess_psi, expect * np.eye(2), rtol=1e-12, atol=1e-12)
    assert sp.signature == -2


def test_plate_boresight_hessian():
    k, R = 5.0, 4.0
    plate = TargetSurface.plate(1, 1)
    sp = solve_stationary(plate, [-R, 0, 0], [-R, 0, 0], k)[0]
    h = phase_hessian(plate, [-R, 0, 0], [-R, 0, 0], sp, k)
    assert np.allclose(h, np.diag([-2 * k / R, -2 * k / R]), rtol=1e-14)
    assert h[0, 1] == 0


def test_large_sphere_approaches_plate():
    k, R = 2.0, 4.0
    a = [-R, 0, 0]
    h_s = solve_stationary(TargetSurface.sphere(1e6), a, a, k)[0].hess_psi
    h_p = solve_stationary(TargetSurface.plate(1, 1), a, a, k)[0].hess_psi
    assert np.allclose(h_s, h_p, rtol=1e-4)


@given(xt=st.floats(-6, -1), zt=st.floats(-0.8, 0.8), xr=st.floats(-6, -1),
       zr=st.floats(-0.8, 0.8))
def test_plate_hessian_matches_closed_form(xt, zt, xr, zr):
    k = 73.3
    plate = TargetSurface.plate(10, 10)
    tx, rx = [xt, 0, zt], [xr, 0, zr]
    sp = solve_stationary(plate, tx, rx, k)[0]
    h = phase_hessian(plate, tx, rx, sp, k)
    ref = plate_linear_hessian(xt, zt, xr, zr, k)
    assert np.allclose(h, ref, rtol=1e-12, atol=1e-12 * abs(ref).max())
    assert h[0, 1] == 0


def _pair_strategy():
    x = st.floats(-6, -1.5)
    yz = st.floats(-0.5, 0.5)
    return st.tuples(x, yz, yz), st.tuples(x, yz, yz)


@pytest.mark.parametrize("surface", [TargetSurface.sphere(1.24),
                                     TargetSurface.cylinder(1.24, 4.0)],
                         ids=["sphere", "cylinder"])
@given(pair=st.tuples(*_pair_strategy()))
def test_batch_matches_multistart_and_is_a_minimum(surface, pair):
    a, b = (np.array(p) for p in pair)
    yb, zb = specular_batch(surface, a[None], b[None])
    ym, zm, _ = fermat_multistart(surface, a, b)
    assert abs(yb[0] - ym[0]) < 1e-7 and abs(zb[0] - zm[0]) < 1e-7
    sp = solve_stationary(surface, a, b, 10.0)[0]
    assert sp.signature == -2
    assert sp.det > 0 and np.trace(sp.hess_psi) < 0


@given(pair=st.tuples(*_pair_strategy()))
def test_specular_reflection_property(pair):
    s = TargetSurface.sphere(1.24)
    tx, rx = (np.array(p) for p in pair)
    sp = solve_stationary(s, tx, rx)[0]
    p = sp.point
    u = (tx - p) / np.linalg.norm(tx - p) + (rx - p) / np.linalg.norm(rx - p)
    n = np.array([p[0] - 1.24, p[1], p[2]]) / 1.24
    assert np.linalg.norm(u - (u @ n) * n) <= 1e-8


@given(pair=st.tuples(*_pair_strategy()))
def test_closed_form_plate_matches_fermat(pair):
    plate = TargetSurface.plate(0.8, 1.75)
    a, b = (np.array(p) for p in pair)
    yc, zc = plate_specular(a[None], b[None])
    ys, zs, _ = fermat_multistart(plate, a, b)
    assert math.hypot(ys[0] - yc[0], zs[0] - zc[0]) <= 1e-8


# -- coefficients ---------------------------------------------------------------

def test_plate_boresight_amplitude():
    k, R = 20.0, 4.0
    plate = TargetSurface.plate(1, 1)
    sp = solve_stationary(plate, [-R, 0, 0], [-R, 0, 0], k)[0]
    u = spa_coefficient(plate, [-R, 0, 0], [-R, 0, 0], sp, iso(k))
    assert abs(u) == pytest.approx(k * ETA / (8 * math.pi * R), rel=1e-12)


def test_amplitude_halves_when_standoff_doubles():
    k = 20.0
    plate = TargetSurface.plate(1, 1)
    vals = []
    for R in (3.0, 6.0):
        sp = solve_stationary(plate, [-R, 0, 0], [-R, 0, 0], k)[0]
        vals.append(abs(spa_coefficient(plate, [-R, 0, 0], [-R, 0, 0], sp, iso(k))))
    assert vals[0] / vals[1] == pytest.approx(2.0, rel=1e-12)


def test_phase_includes_minimum_signature():
    k, R = 20.0, 4.0
    plate = TargetSurface.plate(1, 1)
    sp = solve_stationary(plate, [-R, 0, 0], [-R, 0, 0], k)[0]
    u = spa_coefficient(plate, [-R, 0, 0], [-R, 0, 0], sp, iso(k))
    # negative prefactor times exp(-j k D) times exp(-j pi/2)
    expect = -np.exp(-1j * k * 2 * R) * np.exp(-0.5j * np.pi)
    assert np.angle(u / expect) == pytest.approx(0, abs=1e-9)


def test_degenerate_hessian_rejected():
    plate = TargetSurface.plate(1, 1)
    a = np.array([[-1e7, 0, 0]])
    with pytest.raises(DegenerateHessianError):
        spa_terms(plate, a, a, iso(1.0))


def test_off_surface_point():
    plate = TargetSurface.plate(0.2, 0.2)
    tx, rx = [-1, 0, 1], [-1, 0, 1]
    sp = solve_stationary(plate, tx, rx, 1.0)[0]
    assert not sp.on_surface
    with pytest.raises(PreconditionError):
        spa_coefficient(plate, tx, rx, sp, iso(1.0))
    lay = build_layout(Linear(3, 2.0, 1.0))
    assert pair_response(plate, lay, 0, 0, CFG).terms == ()


def test_pair_response_plate_delay():
    cfg = CFG.replace(target="plate", n=1, range_m=4.0)
    r = pair_response(cfg.true_surface(), cfg.antenna_layout(), 0, 0, cfg)
    assert len(r.terms) == 1
    assert r.terms[0].delay == pytest.approx(8 / C, rel=1e-14)
    assert r.terms[0].delay == pytest.approx(26.685e-9, rel=1e-4)


def test_pair_response_swap_keeps_delay():
    cfg = CFG.replace(target="sphere")
    s, lay = cfg.true_surface(), cfg.antenna_layout()
    a = pair_response(s, lay, 0, 12, cfg)
    b = pair_response(s, lay, 12, 0, cfg)
    assert len(a.terms) == len(solve_stationary(s, lay.positions[0], lay.positions[12]))
    assert a.delays == pytest.approx(b.delays, rel=1e-14)


@pytest.mark.parametrize("angle", [0.3, 1.0, math.pi / 2, 2.5])
def test_sphere_scene_rotation_about_x(angle):
    # geometry is exactly invariant; |u| is invariant up to the polarisation
    # triple product, whose antenna basis stays fixed in the world frame
    k = 20.0
    tx, rx = np.array([-4, 0, 0.3]), np.array([-3.5, 0, -0.5])
    base = TargetSurface.sphere(1.24)
    sp0 = solve_stationary(base, tx, rx, k)[0]
    u0 = spa_coefficient(base, tx, rx, sp0, iso(k))
    r = rot_x(angle)
    s = base.placed((0, 0, 0), r.T)
    sp = solve_stationary(s, r @ tx, r @ rx, k)[0]
    u = spa_coefficient(s, r @ tx, r @ rx, sp, iso(k))
    assert sp.total_distance == pytest.approx(sp0.total_distance, rel=1e-12)
    assert sp.det == pytest.approx(sp0.det, rel=1e-10)
    assert abs(u) == pytest.approx(abs(u0), rel=1e-5)
