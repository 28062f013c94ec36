"""Pure-numpy implementations of the hot evaluation loops.

Same signatures as ``_kernels_numba``; selected via PRODGAP_DISABLE_NUMBA
or when numba is unavailable.  All inputs are contiguous float64/complex128
arrays prepared by ``specfun``.
"""

from __future__ import annotations

import numpy as np


def f_theta_table(x, dens, t0, jmax, rtol, cap, lookahead):
    """Power-series sums S_j(x) = sum_n n^j t_n(x) for j = 0..jmax.

    t_0 = t0, t_n = t_{n-1} * (-x) / dens[n-1].  Returns (table of shape
    (jmax+1, nx), terms used, tail bound).  Terms stop counting once
    |t_n| * n^jmax stays below rtol * scale for ``lookahead`` consecutive
    terms; the full product up to that point is what the sums contain.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    nx = x.size
    ncap = min(int(cap), dens.size + 1)
    ratios = np.where(dens[:ncap - 1, None] != 0.0, -x[None, :] / dens[:ncap - 1, None], 0.0)
    terms = np.empty((ncap, nx))
    terms[0] = t0
    if ncap > 1:
        np.cumprod(ratios, axis=0, out=terms[1:])
        terms[1:] *= t0
    npow = np.arange(ncap, dtype=np.float64)
    powers = np.empty((jmax + 1, ncap))
    powers[0] = 1.0
    for j in range(1, jmax + 1):
        powers[j] = powers[j - 1] * npow
    table = powers @ terms

    weight = np.abs(terms) * powers[jmax][:, None]
    scale = np.max(np.abs(table), axis=0) + np.abs(t0)
    below = weight <= rtol * scale[None, :]
    # first index where `lookahead` consecutive terms are below threshold
    run = np.zeros(nx, dtype=np.int64)
    used = np.full(nx, ncap, dtype=np.int64)
    active = np.ones(nx, dtype=bool)
    for n in range(ncap):
        run = np.where(below[n], run + 1, 0)
        done = active & (run >= lookahead)
        used[done] = n + 1
        active &= ~done
    tail = np.zeros(nx)
    for ix in range(nx):
        u = used[ix]
        if u < ncap:
            tail[ix] = 10.0 * np.max(weight[u:min(u + lookahead, ncap), ix])
        else:
            tail[ix] = 10.0 * weight[-1, ix]
    converged = ~active
    return table, used, tail, converged


def g_series_theta_table(y, expo, lead, dens, jmax, rtol, cap, lookahead):
    """Residue-series sums G_j(y) = sum_b y^expo[b] sum_n (expo[b]+n)^j u_{b,n}.

    u_{b,0} = lead[b], u_{b,n} = u_{b,n-1} * (-y) / dens[b, n-1].  Shapes:
    expo/lead (nb,), dens (nb, ncap-1).  Returns (table (jmax+1, ny),
    terms, tail, converged).
    """
    y = np.ascontiguousarray(y, dtype=np.float64)
    ny = y.size
    nb = expo.size
    ncap = min(int(cap), dens.shape[1] + 1)
    table = np.zeros((jmax + 1, ny))
    used = np.zeros(ny, dtype=np.int64)
    tail = np.zeros(ny)
    converged = np.zeros(ny, dtype=bool)
    logy = np.log(y)
    for b in range(nb):
        terms = np.empty((ncap, ny))
        terms[0] = lead[b]
        if ncap > 1:
            ratios = -y[None, :] / dens[b, :ncap - 1, None]
            np.cumprod(ratios, axis=0, out=terms[1:])
            terms[1:] *= lead[b]
        terms *= np.exp(expo[b] * logy)[None, :]
        kpow = expo[b] + np.arange(ncap, dtype=np.float64)
        powers = np.empty((jmax + 1, ncap))
        powers[0] = 1.0
        for j in range(1, jmax + 1):
            powers[j] = powers[j - 1] * kpow
        table += powers @ terms

        weight = np.abs(terms) * np.abs(powers[jmax])[:, None]
        scale = np.max(np.abs(table), axis=0) + np.abs(terms[0])
        below = weight <= rtol * scale[None, :]
        run = np.zeros(ny, dtype=np.int64)
        used_b = np.full(ny, ncap, dtype=np.int64)
        active = np.ones(ny, dtype=bool)
        for n in range(ncap):
            run = np.where(below[n], run + 1, 0)
            done = active & (run >= lookahead)
            used_b[done] = n + 1
            active &= ~done
        used = np.maximum(used, used_b)
        for iy in range(ny):
            u = used_b[iy]
            if u < ncap:
                tail[iy] += 10.0 * np.max(weight[u:min(u + lookahead, ncap), iy])
            else:
                tail[iy] += 10.0 * weight[-1, iy]
        converged_b = ~active
        converged = converged_b if b == 0 else (converged & converged_b)
    return table, used, tail, converged


def g_quad_theta_table(y, s, w, h, jmax):
    """Vertical-line quadrature sums G_j(y) = (h/pi) Re sum_k w_k s_k^j y^{s_k}."""
    y = np.ascontiguousarray(y, dtype=np.float64)
    expo = np.exp(np.outer(np.log(y), s))
    expo *= w[None, :]
    powers = np.empty((jmax + 1, s.size), dtype=np.complex128)
    powers[0] = 1.0
    for j in range(1, jmax + 1):
        powers[j] = powers[j - 1] * s
    return (h / np.pi) * (expo @ powers.T).real.T
