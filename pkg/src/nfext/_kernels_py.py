"""Pure numpy implementations of the hot kernels.

Signatures match the compiled ``_kernels`` module exactly; see
:mod:`nfext.kernels` for selection.
"""

import numpy as np

STATUS_CONVERGED = 0
STATUS_MAXITER = 1
STATUS_STALLED = 2


def _jets(kind, rho, y, z):
    zero = np.zeros_like(y)
    if kind == 0:
        return zero, zero, zero, zero, zero, zero
    if kind == 1:
        d2 = rho * rho - y * y - z * z
        d = np.sqrt(d2)
        d3 = d2 * d
        return ((y * y + z * z) / (rho + d), y / d, z / d,
                (rho * rho - z * z) / d3, (rho * rho - y * y) / d3, y * z / d3)
    d2 = rho * rho - z * z
    d = np.sqrt(d2)
    return z * z / (rho + d), zero, z / d, zero, rho * rho / (d2 * d), zero


def _inside(kind, rho, y, z):
    if kind == 0:
        return np.ones(y.shape, dtype=bool)
    lim = rho * rho * (1.0 - 1e-12)
    if kind == 1:
        return y * y + z * z < lim
    return z * z < lim


def _distance(kind, rho, y, z, a, b):
    h = _jets(kind, rho, y, z)[0]
    ra = np.sqrt((h - a[:, 0]) ** 2 + (y - a[:, 1]) ** 2 + (z - a[:, 2]) ** 2)
    rb = np.sqrt((h - b[:, 0]) ** 2 + (y - b[:, 1]) ** 2 + (z - b[:, 2]) ** 2)
    return ra + rb


def distance_derivatives(kind, rho, y, z, a, b):
    """Total path ``D``, its gradient and Hessian w.r.t. (y, z).

    ``a`` and ``b`` are ``(n, 3)`` antenna positions in the surface frame.
    Returns ``(D, gy, gz, Hyy, Hzz, Hyz)``.
    """
    h, hy, hz, hyy, hzz, hyz = _jets(kind, rho, y, z)
    D = np.zeros_like(y)
    gy = np.zeros_like(y)
    gz = np.zeros_like(y)
    Hyy = np.zeros_like(y)
    Hzz = np.zeros_like(y)
    Hyz = np.zeros_like(y)
    for p in (a, b):
        ex = h - p[:, 0]
        r = np.sqrt(ex * ex + (y - p[:, 1]) ** 2 + (z - p[:, 2]) ** 2)
        Ay = ex * hy + (y - p[:, 1])
        Az = ex * hz + (z - p[:, 2])
        D += r
        gy += Ay / r
        gz += Az / r
        r3 = r * r * r
        Hyy += (1.0 + hy * hy + ex * hyy) / r - Ay * Ay / r3
        Hzz += (1.0 + hz * hz + ex * hzz) / r - Az * Az / r3
        Hyz += (hy * hz + ex * hyz) / r - Ay * Az / r3
    return D, gy, gz, Hyy, Hzz, Hyz


def newton_specular(kind, rho, a, b, y0, z0, tol=1e-12, maxiter=100, max_step=1.0):
    """Damped Newton minimisation of the total path length over (y, z).

    Parameters
    ----------
    kind : int
        0 plate (unbounded plane), 1 sphere, 2 cylinder.
    rho : float
        Curvature radius (ignored for the plate).
    a, b : ndarray (n, 3)
        Transmit and receive antenna positions in the surface frame.
    y0, z0 : ndarray (n,)
        Starting points, which must lie inside the domain.
    tol : float
        Infinity-norm tolerance on the path gradient.
    max_step : float
        Cap on the length of a single Newton step, metres.

    Returns
    -------
    y, z : ndarray
        Final iterates.
    gnorm : ndarray
        Gradient infinity norm at the final iterate.
    status : ndarray of int8
        0 converged, 1 iteration cap, 2 line search stalled.
    """
    a = np.ascontiguousarray(a, dtype=float)
    b = np.ascontiguousarray(b, dtype=float)
    y = np.array(y0, dtype=float, copy=True)
    z = np.array(z0, dtype=float, copy=True)
    n = y.shape[0]
    status = np.full(n, STATUS_MAXITER, dtype=np.int8)
    gnorm = np.full(n, np.inf)
    active = np.arange(n)
    for _ in range(maxiter):
        if active.size == 0:
            break
        aa, bb = a[active], b[active]
        ya, za = y[active], z[active]
        D, gy, gz, Hyy, Hzz, Hyz = distance_derivatives(kind, rho, ya, za, aa, bb)
        gn = np.maximum(np.abs(gy), np.abs(gz))
        gnorm[active] = gn
        done = gn <= tol
        status[active[done]] = STATUS_CONVERGED
        keep = ~done
        if not keep.any():
            active = active[:0]
            break
        active = active[keep]
        aa, bb, ya, za = aa[keep], bb[keep], ya[keep], za[keep]
        D, gy, gz, Hyy, Hzz, Hyz, gn = (v[keep] for v in (D, gy, gz, Hyy, Hzz, Hyz, gn))

        tr2 = 0.5 * (Hyy + Hzz)
        det = Hyy * Hzz - Hyz * Hyz
        lam_min = tr2 - np.sqrt(np.maximum(tr2 * tr2 - det, 0.0))
        scale = np.abs(Hyy) + np.abs(Hzz) + 1e-300
        shift = np.where(lam_min > 1e-8 * scale, 0.0, 1e-3 * scale - lam_min)
        Ayy = Hyy + shift
        Azz = Hzz + shift
        dd = Ayy * Azz - Hyz * Hyz
        dy = -(Azz * gy - Hyz * gz) / dd
        dz = -(Ayy * gz - Hyz * gy) / dd
        slope = gy * dy + gz * dz
        dn = np.hypot(dy, dz)
        cap = np.where(dn > max_step, max_step / np.where(dn > 0, dn, 1.0), 1.0)
        dy *= cap
        dz *= cap
        quadratic = (shift == 0.0) & (gn < 1e-7)

        t = np.ones_like(D)
        accepted = np.zeros(D.shape, dtype=bool)
        for _ls in range(60):
            todo = ~accepted
            if not todo.any():
                break
            yt = ya + t * dy
            zt = za + t * dz
            ok = _inside(kind, rho, yt, zt) & todo
            Dt = np.full_like(D, np.inf)
            if ok.any():
                Dt[ok] = _distance(kind, rho, yt[ok], zt[ok], aa[ok], bb[ok])
            good = ok & (quadratic | (Dt <= D + 1e-4 * t * slope))
            accepted |= good
            t = np.where(accepted, t, 0.5 * t)
        y[active[accepted]] = ya[accepted] + t[accepted] * dy[accepted]
        z[active[accepted]] = za[accepted] + t[accepted] * dz[accepted]
        stalled = ~accepted
        if stalled.any():
            status[active[stalled]] = STATUS_STALLED
            active = active[accepted]
    return y, z, gnorm, status


def _sinc(x):
    return np.sinc(x)


def matched_filter(u, t0, dt, bandwidth, amps, delays, chunk=256):
    """Correlate sampled signals against sinc-pulse models.

    Parameters
    ----------
    u : complex ndarray (P, nt)
        One sampled signal per antenna pair on the grid ``t0 + i*dt``.
    amps : complex ndarray (C, P, K)
        Model term amplitudes for C candidates, P pairs and up to K terms
        (zero-padded).
    delays : float ndarray (C, P, K)
        Term delays in seconds.

    Returns
    -------
    num : complex ndarray (C,)
        ``sum_p sum_i u_p[i] * conj(mu_p[i]) * dt``.
    den : float ndarray (C,)
        ``sum_p sum_i |mu_p[i]|^2 * dt``.
    """
    u = np.asarray(u, dtype=complex)
    amps = np.asarray(amps, dtype=complex)
    delays = np.asarray(delays, dtype=float)
    C = amps.shape[0]
    t = t0 + dt * np.arange(u.shape[1])
    num = np.empty(C, dtype=complex)
    den = np.empty(C, dtype=float)
    for lo in range(0, C, chunk):
        hi = min(C, lo + chunk)
        s = _sinc(bandwidth * (t[None, None, None, :] - delays[lo:hi, :, :, None]))
        mu = np.einsum("cpk,cpki->cpi", amps[lo:hi], s)
        num[lo:hi] = np.einsum("pi,cpi->c", u, mu.conj()) * dt
        den[lo:hi] = np.einsum("cpi,cpi->c", mu.real, mu.real) * dt + \
            np.einsum("cpi,cpi->c", mu.imag, mu.imag) * dt
    return num, den
