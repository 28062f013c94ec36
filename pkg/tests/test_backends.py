"""The numba and numpy evaluation kernels must agree to roundoff."""

import numpy as np
import pytest

from prodgap import _kernels_numpy
from prodgap.params import ModelParams
from prodgap import specfun

numba_kernels = pytest.importorskip("prodgap._kernels_numba")


@pytest.fixture(scope="module")
def contexts():
    return [
        specfun._Context(ModelParams((0.0,))),
        specfun._Context(ModelParams((2.0,))),
        specfun._Context(ModelParams((1.0, 2.5))),
        specfun._Context(ModelParams((1.0, 2.0))),
    ]


def _alternating_scale(x, dens, t0, jmax, ncap=500):
    """sum_n |t_n| n^jmax: the cancellation floor of the alternating sums."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    terms = np.empty((ncap, x.size))
    terms[0] = t0
    ratios = np.abs(x[None, :]) / dens[: ncap - 1, None]
    np.cumprod(ratios, axis=0, out=terms[1:])
    terms[1:] *= t0
    n = np.arange(ncap, dtype=float)
    return (n**jmax) @ np.abs(terms) + abs(t0)


def test_f_tables_match(contexts):
    x = np.array([0.0, 1e-4, 0.7, 13.0, 77.0])
    for ctx in contexts:
        a = numba_kernels.f_theta_table(
            x, ctx.f_dens, ctx.f_lead, 3, specfun.SERIES_RTOL, 500, 10
        )
        b = _kernels_numpy.f_theta_table(
            x, ctx.f_dens, ctx.f_lead, 3, specfun.SERIES_RTOL, 500, 10
        )
        # agreement is limited only by the cancellation floor each backend
        # hits in its own summation order
        scale = _alternating_scale(x, ctx.f_dens, ctx.f_lead, 3)
        assert np.max(np.abs(a[0] - b[0]) / scale) < 1e-13
        assert np.array_equal(a[3], b[3])  # convergence flags


def test_g_series_tables_match(contexts):
    y = np.array([1e-5, 0.3, 2.0, 40.0])
    for ctx in contexts:
        if ctx.g_mode != "series":
            continue
        a = numba_kernels.g_series_theta_table(
            y, ctx.g_expo, ctx.g_lead, ctx.g_dens, 2, specfun.SERIES_RTOL, 500, 10
        )
        b = _kernels_numpy.g_series_theta_table(
            y, ctx.g_expo, ctx.g_lead, ctx.g_dens, 2, specfun.SERIES_RTOL, 500, 10
        )
        scale = sum(
            np.exp(ctx.g_expo[i] * np.log(y))
            * _alternating_scale(y, np.abs(ctx.g_dens[i]), abs(ctx.g_lead[i]), 2)
            for i in range(ctx.g_expo.size)
        )
        assert np.max(np.abs(a[0] - b[0]) / scale) < 1e-13


def test_g_quad_tables_match(contexts):
    y = np.array([1e-5, 0.3, 2.0, 40.0])
    for ctx in contexts:
        if ctx.g_mode != "quad":
            continue
        a = numba_kernels.g_quad_theta_table(
            y, ctx.g_quad_s, ctx.g_quad_w, ctx.g_quad_h, 3
        )
        b = _kernels_numpy.g_quad_theta_table(
            y, ctx.g_quad_s, ctx.g_quad_w, ctx.g_quad_h, 3
        )
        scale = np.max(np.abs(a), axis=0) + 1e-300
        assert np.max(np.abs(a - b) / scale) < 1e-12


def test_env_flag_selects_numpy(tmp_path):
    import subprocess
    import sys

    code = (
        "import prodgap.backend as b; print(b.BACKEND)"
    )
    out = subprocess.run(
        [sys.executable, "-c", code],
        capture_output=True,
        text=True,
        env={"PRODGAP_DISABLE_NUMBA": "1", "PATH": "/usr/bin:/bin"},
    )
    assert out.stdout.strip() == "numpy"
