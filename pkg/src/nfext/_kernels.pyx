# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; semantics mirror :mod:`nfext._kernels_py`."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, sin, cos, M_PI, INFINITY

cnp.import_array()

DEF STATUS_CONVERGED = 0
DEF STATUS_MAXITER = 1
DEF STATUS_STALLED = 2


cdef inline void _jet(int kind, double rho, double y, double z, double* out) noexcept nogil:
    cdef double d2, d, d3
    if kind == 0:
        out[0] = 0.0; out[1] = 0.0; out[2] = 0.0; out[3] = 0.0; out[4] = 0.0; out[5] = 0.0
    elif kind == 1:
        d2 = rho * rho - y * y - z * z
        d = sqrt(d2)
        d3 = d2 * d
        out[0] = (y * y + z * z) / (rho + d)
        out[1] = y / d
        out[2] = z / d
        out[3] = (rho * rho - z * z) / d3
        out[4] = (rho * rho - y * y) / d3
        out[5] = y * z / d3
    else:
        d2 = rho * rho - z * z
        d = sqrt(d2)
        out[0] = z * z / (rho + d)
        out[1] = 0.0
        out[2] = z / d
        out[3] = 0.0
        out[4] = rho * rho / (d2 * d)
        out[5] = 0.0


cdef inline bint _inside(int kind, double rho, double y, double z) noexcept nogil:
    cdef double lim = rho * rho * (1.0 - 1e-12)
    if kind == 0:
        return True
    if kind == 1:
        return y * y + z * z < lim
    return z * z < lim


cdef inline double _dist(int kind, double rho, double y, double z,
                         double ax, double ay, double az,
                         double bx, double by, double bz) noexcept nogil:
    cdef double j[6]
    _jet(kind, rho, y, z, j)
    cdef double h = j[0]
    return (sqrt((h - ax) * (h - ax) + (y - ay) * (y - ay) + (z - az) * (z - az)) +
            sqrt((h - bx) * (h - bx) + (y - by) * (y - by) + (z - bz) * (z - bz)))


cdef inline void _derivs(int kind, double rho, double y, double z,
                         double ax, double ay, double az,
                         double bx, double by, double bz, double* o) noexcept nogil:
    # o: D, gy, gz, Hyy, Hzz, Hyz
    cdef double j[6]
    cdef double px[2]
    cdef double py[2]
    cdef double pz[2]
    cdef double ex, r, r3, Ay, Az
    cdef int q
    _jet(kind, rho, y, z, j)
    px[0] = ax; py[0] = ay; pz[0] = az
    px[1] = bx; py[1] = by; pz[1] = bz
    o[0] = 0.0; o[1] = 0.0; o[2] = 0.0; o[3] = 0.0; o[4] = 0.0; o[5] = 0.0
    for q in range(2):
        ex = j[0] - px[q]
        r = sqrt(ex * ex + (y - py[q]) * (y - py[q]) + (z - pz[q]) * (z - pz[q]))
        Ay = ex * j[1] + (y - py[q])
        Az = ex * j[2] + (z - pz[q])
        r3 = r * r * r
        o[0] += r
        o[1] += Ay / r
        o[2] += Az / r
        o[3] += (1.0 + j[1] * j[1] + ex * j[3]) / r - Ay * Ay / r3
        o[4] += (1.0 + j[2] * j[2] + ex * j[4]) / r - Az * Az / r3
        o[5] += (j[1] * j[2] + ex * j[5]) / r - Ay * Az / r3


def newton_specular(int kind, double rho, a, b, y0, z0, double tol=1e-12,
                    int maxiter=100, double max_step=1.0):
    cdef double[:, ::1] A = np.ascontiguousarray(a, dtype=np.float64)
    cdef double[:, ::1] Bm = np.ascontiguousarray(b, dtype=np.float64)
    cdef Py_ssize_t n = A.shape[0]
    y_out = np.array(y0, dtype=np.float64, copy=True)
    z_out = np.array(z0, dtype=np.float64, copy=True)
    gnorm_out = np.full(n, INFINITY)
    status_out = np.full(n, STATUS_MAXITER, dtype=np.int8)
    cdef double[::1] Y = y_out
    cdef double[::1] Z = z_out
    cdef double[::1] G = gnorm_out
    cdef signed char[::1] S = status_out
    cdef Py_ssize_t i
    cdef int it, ls
    cdef double o[6]
    cdef double y, z, gn, tr2, det, lam_min, scale, shift, Ayy, Azz, dd, dy, dz
    cdef double slope, dn, t, yt, zt, Dt
    cdef bint quadratic, accepted
    with nogil:
        for i in range(n):
            y = Y[i]
            z = Z[i]
            for it in range(maxiter):
                _derivs(kind, rho, y, z, A[i, 0], A[i, 1], A[i, 2],
                        Bm[i, 0], Bm[i, 1], Bm[i, 2], o)
                gn = fabs(o[1]) if fabs(o[1]) > fabs(o[2]) else fabs(o[2])
                G[i] = gn
                if gn <= tol:
                    S[i] = STATUS_CONVERGED
                    break
                tr2 = 0.5 * (o[3] + o[4])
                det = o[3] * o[4] - o[5] * o[5]
                lam_min = tr2 * tr2 - det
                lam_min = tr2 - sqrt(lam_min if lam_min > 0.0 else 0.0)
                scale = fabs(o[3]) + fabs(o[4]) + 1e-300
                if lam_min > 1e-8 * scale:
                    shift = 0.0
                else:
                    shift = 1e-3 * scale - lam_min
                Ayy = o[3] + shift
                Azz = o[4] + shift
                dd = Ayy * Azz - o[5] * o[5]
                dy = -(Azz * o[1] - o[5] * o[2]) / dd
                dz = -(Ayy * o[2] - o[5] * o[1]) / dd
                slope = o[1] * dy + o[2] * dz
                dn = sqrt(dy * dy + dz * dz)
                if dn > max_step:
                    dy = dy * (max_step / dn)
                    dz = dz * (max_step / dn)
                quadratic = shift == 0.0 and gn < 1e-7
                t = 1.0
                accepted = False
                for ls in range(60):
                    yt = y + t * dy
                    zt = z + t * dz
                    if _inside(kind, rho, yt, zt):
                        if quadratic:
                            accepted = True
                            break
                        Dt = _dist(kind, rho, yt, zt, A[i, 0], A[i, 1], A[i, 2],
                                   Bm[i, 0], Bm[i, 1], Bm[i, 2])
                        if Dt <= o[0] + 1e-4 * t * slope:
                            accepted = True
                            break
                    t = 0.5 * t
                if not accepted:
                    S[i] = STATUS_STALLED
                    break
                y = y + t * dy
                z = z + t * dz
            Y[i] = y
            Z[i] = z
    return y_out, z_out, gnorm_out, status_out


def matched_filter(u, double t0, double dt, double bandwidth, amps, delays, chunk=None):
    cdef double complex[:, ::1] U = np.ascontiguousarray(u, dtype=np.complex128)
    cdef double complex[:, :, ::1] Am = np.ascontiguousarray(amps, dtype=np.complex128)
    cdef double[:, :, ::1] Dl = np.ascontiguousarray(delays, dtype=np.float64)
    cdef Py_ssize_t C = Am.shape[0]
    cdef Py_ssize_t P = Am.shape[1]
    cdef Py_ssize_t K = Am.shape[2]
    cdef Py_ssize_t nt = U.shape[1]
    num_out = np.zeros(C, dtype=np.complex128)
    den_out = np.zeros(C, dtype=np.float64)
    cdef double complex[::1] NUM = num_out
    cdef double[::1] DEN = den_out
    # per-term sin/cos of the phase at sample 0 plus the per-sample rotation
    s0_arr = np.empty(K, dtype=np.float64)
    c0_arr = np.empty(K, dtype=np.float64)
    x0_arr = np.empty(K, dtype=np.float64)
    cdef double[::1] S0 = s0_arr
    cdef double[::1] C0 = c0_arr
    cdef double[::1] X0 = x0_arr
    cdef double step = M_PI * bandwidth * dt
    cdef double cs = cos(step)
    cdef double sn = sin(step)
    cdef Py_ssize_t c, p, k, i
    cdef double num_re, num_im, den, mu_re, mu_im, x, sx, cx, tmp, val
    cdef double complex a, uu
    with nogil:
        for c in range(C):
            num_re = 0.0
            num_im = 0.0
            den = 0.0
            for p in range(P):
                for k in range(K):
                    X0[k] = M_PI * bandwidth * (t0 - Dl[c, p, k])
                    S0[k] = sin(X0[k])
                    C0[k] = cos(X0[k])
                for i in range(nt):
                    mu_re = 0.0
                    mu_im = 0.0
                    for k in range(K):
                        a = Am[c, p, k]
                        if a.real != 0.0 or a.imag != 0.0:
                            x = X0[k] + i * step
                            if fabs(x) < 1e-8:
                                val = 1.0 - x * x / 6.0
                            else:
                                val = S0[k] / x
                            mu_re = mu_re + a.real * val
                            mu_im = mu_im + a.imag * val
                        # advance sin(x0 + i*step) by one sample
                        tmp = S0[k] * cs + C0[k] * sn
                        C0[k] = C0[k] * cs - S0[k] * sn
                        S0[k] = tmp
                    uu = U[p, i]
                    num_re = num_re + uu.real * mu_re + uu.imag * mu_im
                    num_im = num_im + uu.imag * mu_re - uu.real * mu_im
                    den = den + mu_re * mu_re + mu_im * mu_im
            NUM[c] = (num_re + 1j * num_im) * dt
            DEN[c] = den * dt
    return num_out, den_out
