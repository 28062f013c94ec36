"""Numba-compiled implementations of the hot evaluation loops.

Scalar loops with early termination; semantics match ``_kernels_numpy``
to within roundoff (the numpy path keeps summing past the stopping index,
adding only sub-roundoff terms).
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def f_theta_table(x, dens, t0, jmax, rtol, cap, lookahead):
    nx = x.size
    ncap = min(cap, dens.size + 1)
    table = np.zeros((jmax + 1, nx))
    used = np.empty(nx, dtype=np.int64)
    tail = np.zeros(nx)
    converged = np.zeros(nx, dtype=np.bool_)
    for ix in range(nx):
        xv = x[ix]
        t = t0
        table[0, ix] = t
        scale = abs(t)
        run = 0
        n = 1
        stopped = 0
        while n < ncap:
            t *= -xv / dens[n - 1]
            p = 1.0
            wmax = abs(t)
            for j in range(jmax + 1):
                table[j, ix] += t * p
                a = abs(table[j, ix])
                if a > scale:
                    scale = a
                p *= n
            wmax *= p / n if n > 0 else 1.0  # |t| * n^jmax
            if wmax <= rtol * scale:
                run += 1
                if run >= lookahead:
                    stopped = 1
                    tail[ix] = 10.0 * wmax
                    break
            else:
                run = 0
            n += 1
        used[ix] = n if stopped else ncap
        if not stopped:
            p = 1.0
            for j in range(jmax):
                p *= ncap - 1
            tail[ix] = 10.0 * abs(t) * p
        converged[ix] = stopped == 1
    return table, used, tail, converged


@njit(cache=True)
def g_series_theta_table(y, expo, lead, dens, jmax, rtol, cap, lookahead):
    ny = y.size
    nb = expo.size
    ncap = min(cap, dens.shape[1] + 1)
    table = np.zeros((jmax + 1, ny))
    used = np.zeros(ny, dtype=np.int64)
    tail = np.zeros(ny)
    converged = np.ones(ny, dtype=np.bool_)
    for iy in range(ny):
        yv = y[iy]
        ly = np.log(yv)
        scale = 0.0
        for b in range(nb):
            pref = np.exp(expo[b] * ly)
            t = lead[b] * pref
            k0 = expo[b]
            p = 1.0
            for j in range(jmax + 1):
                table[j, iy] += t * p
                p *= k0
            if abs(t) > scale:
                scale = abs(t)
            run = 0
            n = 1
            stopped = 0
            wmax = abs(t)
            while n < ncap:
                t *= -yv / dens[b, n - 1]
                k = k0 + n
                p = 1.0
                wmax = abs(t)
                for j in range(jmax + 1):
                    table[j, iy] += t * p
                    a = abs(table[j, iy])
                    if a > scale:
                        scale = a
                    p *= k
                if jmax > 0:
                    wmax *= abs(p / k)  # |t| * |k|^jmax
                if wmax <= rtol * scale:
                    run += 1
                    if run >= lookahead:
                        stopped = 1
                        tail[iy] += 10.0 * wmax
                        break
                else:
                    run = 0
                n += 1
            if used[iy] < n:
                used[iy] = n if stopped else ncap
            if not stopped:
                tail[iy] += 10.0 * wmax
                converged[iy] = False
    return table, used, tail, converged


@njit(cache=True)
def g_quad_theta_table(y, s, w, h, jmax):
    ny = y.size
    nk = s.size
    out = np.zeros((jmax + 1, ny))
    acc = np.zeros(jmax + 1, dtype=np.complex128)
    for iy in range(ny):
        ly = np.log(y[iy])
        for j in range(jmax + 1):
            acc[j] = 0.0 + 0.0j
        for k in range(nk):
            e = w[k] * np.exp(s[k] * ly)
            p = 1.0 + 0.0j
            for j in range(jmax + 1):
                acc[j] += e * p
                p *= s[k]
        for j in range(jmax + 1):
            out[j, iy] = (h / np.pi) * acc[j].real
    return out
