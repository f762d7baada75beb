"""Hot numeric loops: the Dormand-Prince integrator for ``-y'' + q y = lam^2 rho y``
and the direct Fourier sum used for the transition function.

Each kernel has a numba implementation (per-lambda adaptive steps) and a
vectorised numpy implementation (one shared step sequence for the whole
lambda batch, controlled by the worst member).  The public wrappers pick one
according to :mod:`discscat._accel`.

The ODE is integrated over a *mesh* of forced nodes.  On mesh interval ``s``
the density is the constant ``rho[s]`` and the potential is linear,
``q(x) = q0[s] + slope[s] * (x - mesh[s])``.
"""
import numpy as np

from . import _accel
from ._accel import njit

# Dormand-Prince 5(4) tableau.
C2, C3, C4, C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
A21 = 1.0 / 5.0
A31, A32 = 3.0 / 40.0, 9.0 / 40.0
A41, A42, A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
A51, A52, A53, A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
A61, A62, A63, A64, A65 = (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0,
                           49.0 / 176.0, -5103.0 / 18656.0)
B1, B3, B4, B5, B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
E1, E3, E4, E5, E6, E7 = (71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0,
                          -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0)

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0

STATUS_OK = 0
STATUS_MAX_STEPS = 1
STATUS_STEP_UNDERFLOW = 2


@njit(cache=True, nogil=True)
def _dp5_batch_nb(lams, y0, yp0, mesh, rho, q0, slope, backward, rec_pos, n_rec,
                  rtol, atol, max_steps):
    n = lams.shape[0]
    m = mesh.shape[0] - 1
    out_y = np.empty(n, dtype=np.complex128)
    out_yp = np.empty(n, dtype=np.complex128)
    rec_y = np.zeros((n, n_rec), dtype=np.complex128)
    rec_yp = np.zeros((n, n_rec), dtype=np.complex128)
    status = np.zeros(n, dtype=np.int64)
    span = mesh[m] - mesh[0]

    for k in range(n):
        lam2 = lams[k] * lams[k]
        y = y0[k]
        yp = yp0[k]
        if backward:
            node = m
            sgn = -1.0
        else:
            node = 0
            sgn = 1.0
        if rec_pos[node] >= 0:
            rec_y[k, rec_pos[node]] = y
            rec_yp[k, rec_pos[node]] = yp
        lam_abs = abs(lams[k])
        h = 0.05 / (1.0 + lam_abs)
        steps = 0
        failed = False
        for it in range(m):
            s = m - 1 - it if backward else it
            xl = mesh[s]
            c0 = q0[s]
            c1 = slope[s]
            r = rho[s]
            if backward:
                x = mesh[s + 1]
                x_end = xl
            else:
                x = xl
                x_end = mesh[s + 1]
            # first stage at the segment start (q may jump across nodes)
            k1y = yp
            k1p = (c0 + c1 * (x - xl) - lam2 * r) * y
            while True:
                remaining = abs(x_end - x)
                if remaining <= 1e-15 * (1.0 + span):
                    break
                clipped = False
                h_try = h
                if h_try >= remaining:
                    h_try = remaining
                    clipped = True
                dx = sgn * h_try

                ya = y + dx * A21 * k1y
                pa = yp + dx * A21 * k1p
                xa = x + C2 * dx
                k2y = pa
                k2p = (c0 + c1 * (xa - xl) - lam2 * r) * ya

                ya = y + dx * (A31 * k1y + A32 * k2y)
                pa = yp + dx * (A31 * k1p + A32 * k2p)
                xa = x + C3 * dx
                k3y = pa
                k3p = (c0 + c1 * (xa - xl) - lam2 * r) * ya

                ya = y + dx * (A41 * k1y + A42 * k2y + A43 * k3y)
                pa = yp + dx * (A41 * k1p + A42 * k2p + A43 * k3p)
                xa = x + C4 * dx
                k4y = pa
                k4p = (c0 + c1 * (xa - xl) - lam2 * r) * ya

                ya = y + dx * (A51 * k1y + A52 * k2y + A53 * k3y + A54 * k4y)
                pa = yp + dx * (A51 * k1p + A52 * k2p + A53 * k3p + A54 * k4p)
                xa = x + C5 * dx
                k5y = pa
                k5p = (c0 + c1 * (xa - xl) - lam2 * r) * ya

                ya = y + dx * (A61 * k1y + A62 * k2y + A63 * k3y + A64 * k4y + A65 * k5y)
                pa = yp + dx * (A61 * k1p + A62 * k2p + A63 * k3p + A64 * k4p + A65 * k5p)
                xa = x + dx
                k6y = pa
                k6p = (c0 + c1 * (xa - xl) - lam2 * r) * ya

                yn = y + dx * (B1 * k1y + B3 * k3y + B4 * k4y + B5 * k5y + B6 * k6y)
                pn = yp + dx * (B1 * k1p + B3 * k3p + B4 * k4p + B5 * k5p + B6 * k6p)
                k7y = pn
                k7p = (c0 + c1 * (xa - xl) - lam2 * r) * yn

                ey = dx * (E1 * k1y + E3 * k3y + E4 * k4y + E5 * k5y + E6 * k6y + E7 * k7y)
                ep = dx * (E1 * k1p + E3 * k3p + E4 * k4p + E5 * k5p + E6 * k6p + E7 * k7p)
                sy = atol + rtol * max(abs(y), abs(yn))
                sp = atol * (1.0 + lam_abs) + rtol * max(abs(yp), abs(pn))
                err = max(abs(ey) / sy, abs(ep) / sp)

                steps += 1
                if err <= 1.0:
                    if err == 0.0:
                        fac = MAX_FACTOR
                    else:
                        fac = min(MAX_FACTOR, max(MIN_FACTOR, SAFETY * err ** -0.2))
                    if clipped:
                        x = x_end
                        h = max(h, h_try * fac)
                    else:
                        x = x + dx
                        h = h_try * fac
                    y = yn
                    yp = pn
                    k1y = k7y
                    k1p = k7p
                else:
                    fac = max(MIN_FACTOR, SAFETY * err ** -0.2)
                    h = h_try * fac
                    if h < 1e-14 * (1.0 + span):
                        status[k] = STATUS_STEP_UNDERFLOW
                        failed = True
                        break
                if steps > max_steps:
                    status[k] = STATUS_MAX_STEPS
                    failed = True
                    break
            if failed:
                break
            node = s if backward else s + 1
            if rec_pos[node] >= 0:
                rec_y[k, rec_pos[node]] = y
                rec_yp[k, rec_pos[node]] = yp
        out_y[k] = y
        out_yp[k] = yp
    return out_y, out_yp, rec_y, rec_yp, status


def _dp5_batch_np(lams, y0, yp0, mesh, rho, q0, slope, backward, rec_pos, n_rec,
                  rtol, atol, max_steps):
    n = lams.shape[0]
    m = mesh.shape[0] - 1
    lam2 = lams * lams
    lam_abs = np.abs(lams)
    y = y0.astype(np.complex128).copy()
    yp = yp0.astype(np.complex128).copy()
    rec_y = np.zeros((n, n_rec), dtype=np.complex128)
    rec_yp = np.zeros((n, n_rec), dtype=np.complex128)
    status = np.zeros(n, dtype=np.int64)
    span = mesh[m] - mesh[0]
    sgn = -1.0 if backward else 1.0
    node = m if backward else 0
    if rec_pos[node] >= 0:
        rec_y[:, rec_pos[node]] = y
        rec_yp[:, rec_pos[node]] = yp
    h = 0.05 / (1.0 + (lam_abs.max() if n else 0.0))
    atol_p = atol * (1.0 + lam_abs)
    steps = 0
    segments = range(m - 1, -1, -1) if backward else range(m)
    for s in segments:
        xl = mesh[s]
        c0, c1, r = q0[s], slope[s], rho[s]
        if backward:
            x, x_end = mesh[s + 1], xl
        else:
            x, x_end = xl, mesh[s + 1]

        def coef(xa):
            return (c0 + c1 * (xa - xl)) - lam2 * r

        k1y = yp
        k1p = coef(x) * y
        while True:
            remaining = abs(x_end - x)
            if remaining <= 1e-15 * (1.0 + span):
                break
            clipped = h >= remaining
            h_try = remaining if clipped else h
            dx = sgn * h_try

            k2y = yp + dx * A21 * k1p
            k2p = coef(x + C2 * dx) * (y + dx * A21 * k1y)
            k3y = yp + dx * (A31 * k1p + A32 * k2p)
            k3p = coef(x + C3 * dx) * (y + dx * (A31 * k1y + A32 * k2y))
            k4y = yp + dx * (A41 * k1p + A42 * k2p + A43 * k3p)
            k4p = coef(x + C4 * dx) * (y + dx * (A41 * k1y + A42 * k2y + A43 * k3y))
            k5y = yp + dx * (A51 * k1p + A52 * k2p + A53 * k3p + A54 * k4p)
            k5p = coef(x + C5 * dx) * (y + dx * (A51 * k1y + A52 * k2y + A53 * k3y + A54 * k4y))
            k6y = yp + dx * (A61 * k1p + A62 * k2p + A63 * k3p + A64 * k4p + A65 * k5p)
            k6p = coef(x + dx) * (y + dx * (A61 * k1y + A62 * k2y + A63 * k3y + A64 * k4y
                                            + A65 * k5y))
            yn = y + dx * (B1 * k1y + B3 * k3y + B4 * k4y + B5 * k5y + B6 * k6y)
            pn = yp + dx * (B1 * k1p + B3 * k3p + B4 * k4p + B5 * k5p + B6 * k6p)
            k7y = pn
            k7p = coef(x + dx) * yn
            ey = dx * (E1 * k1y + E3 * k3y + E4 * k4y + E5 * k5y + E6 * k6y + E7 * k7y)
            ep = dx * (E1 * k1p + E3 * k3p + E4 * k4p + E5 * k5p + E6 * k6p + E7 * k7p)
            sy = atol + rtol * np.maximum(np.abs(y), np.abs(yn))
            sp = atol_p + rtol * np.maximum(np.abs(yp), np.abs(pn))
            err = max(np.max(np.abs(ey) / sy), np.max(np.abs(ep) / sp)) if n else 0.0

            steps += 1
            if err <= 1.0:
                fac = MAX_FACTOR if err == 0.0 else min(MAX_FACTOR, max(MIN_FACTOR, SAFETY * err ** -0.2))
                if clipped:
                    x = x_end
                    h = max(h, h_try * fac)
                else:
                    x = x + dx
                    h = h_try * fac
                y, yp = yn, pn
                k1y, k1p = k7y, k7p
            else:
                h = h_try * max(MIN_FACTOR, SAFETY * err ** -0.2)
                if h < 1e-14 * (1.0 + span):
                    status[:] = STATUS_STEP_UNDERFLOW
                    return y, yp, rec_y, rec_yp, status
            if steps > max_steps:
                status[:] = STATUS_MAX_STEPS
                return y, yp, rec_y, rec_yp, status
        node = s if backward else s + 1
        if rec_pos[node] >= 0:
            rec_y[:, rec_pos[node]] = y
            rec_yp[:, rec_pos[node]] = yp
    return y, yp, rec_y, rec_yp, status


def dp5_batch(lams, y0, yp0, mesh, rho, q0, slope, backward, rec_pos, n_rec,
              rtol, atol, max_steps):
    """Integrate ``y'' = (q - lam^2 rho) y`` across the mesh for every lambda.

    ``rec_pos[node]`` is the output column for mesh node ``node`` (``-1`` for
    nodes that are not recorded).  Returns the end values, the recorded
    values and a per-lambda status code.
    """
    lams = np.ascontiguousarray(lams, dtype=np.complex128)
    y0 = np.ascontiguousarray(y0, dtype=np.complex128)
    yp0 = np.ascontiguousarray(yp0, dtype=np.complex128)
    rec_pos = np.ascontiguousarray(rec_pos, dtype=np.int64)
    args = (lams, y0, yp0, np.ascontiguousarray(mesh, dtype=np.float64),
            np.ascontiguousarray(rho, dtype=np.float64),
            np.ascontiguousarray(q0, dtype=np.float64),
            np.ascontiguousarray(slope, dtype=np.float64),
            bool(backward), rec_pos, int(n_rec), float(rtol), float(atol), int(max_steps))
    if _accel.USE_NUMBA:
        return _dp5_batch_nb(*args)
    return _dp5_batch_np(*args)


@njit(cache=True, nogil=True)
def _fourier_sum_nb(lam, wg, t):
    out = np.empty(t.shape[0], dtype=np.complex128)
    for j in range(t.shape[0]):
        tj = t[j]
        sr = 0.0
        si = 0.0
        for n in range(lam.shape[0]):
            ang = lam[n] * tj
            c = np.cos(ang)
            s = np.sin(ang)
            sr += wg[n].real * c - wg[n].imag * s
            si += wg[n].real * s + wg[n].imag * c
        out[j] = sr + 1j * si
    return out


def _fourier_sum_np(lam, wg, t, chunk=512):
    out = np.empty(t.shape[0], dtype=np.complex128)
    for i in range(0, t.shape[0], chunk):
        tc = t[i:i + chunk]
        out[i:i + chunk] = np.exp(1j * np.outer(tc, lam)) @ wg
    return out


def fourier_sum(lam, wg, t):
    """``sum_n wg[n] * exp(1j * lam[n] * t[j])`` for every ``t[j]``."""
    lam = np.ascontiguousarray(lam, dtype=np.float64)
    wg = np.ascontiguousarray(wg, dtype=np.complex128)
    t = np.ascontiguousarray(t, dtype=np.float64)
    if _accel.USE_NUMBA:
        return _fourier_sum_nb(lam, wg, t)
    return _fourier_sum_np(lam, wg, t)
