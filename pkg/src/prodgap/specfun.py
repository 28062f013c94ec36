"""Building-block functions for the hard-edge kernel.

Two entire-function families enter every kernel formula: ``f`` with the
everywhere-convergent power series

    f(x) = sum_{n>=0} (-1)^n x^n / (n! prod_j Gamma(1+nu_j+n)),

and its Mellin-transform partner ``g`` defined by a vertical-line
Mellin-Barnes integral with integrand prod_j Gamma(nu_j - s) / Gamma(1+s).
``g`` is evaluated by a residue series over the poles s = nu_j + n when all
pairwise nu differences stay clear of the integers, and by trapezoidal
quadrature on the vertical line Re s = -1/2 otherwise (pole collisions
create logarithmic terms the series form does not capture).

Derived objects: theta powers (t d/dt)^j of f and g, the kernel factor
functions phi_j / psi_j, and the coefficients alpha_i of the monic
polynomial with roots nu_1..nu_M.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gamma as _gamma
from scipy.special import gammaln, loggamma

from .backend import kernels
from .errors import DomainError, EvaluationError
from .params import ModelParams

SERIES_CAP = 500
SERIES_RTOL = 1e-16
SERIES_LOOKAHEAD = 10
QUAD_LINE_RE = -0.5
QUAD_STEP = 0.04
_ZERO_TOL = 1e-12
_NONINT_TOL = 1e-6


@dataclass(frozen=True)
class SeriesEval:
    """Value of a truncated evaluation plus its accuracy record."""

    value: float
    terms_used: int
    truncation_bound: float

    def __post_init__(self):
        if self.terms_used < 1:
            raise ValueError("terms_used must be >= 1")
        if not self.truncation_bound >= 0.0:
            raise ValueError("truncation_bound must be nonnegative")


def elementary_symmetric(values, k: int) -> float:
    """e_k of the given values; e_0 = 1 by the empty-product convention."""
    vals = list(values)
    if k < 0 or k > len(vals):
        raise DomainError(f"k={k} out of range for {len(vals)} values")
    # Newton's triangle: e[j] <- e[j] + v * e[j-1], one value at a time.
    e = np.zeros(k + 1)
    e[0] = 1.0
    for v in vals:
        top = min(k, len(e) - 1)
        for j in range(top, 0, -1):
            e[j] += v * e[j - 1]
    return float(e[k])


def elementary_symmetric_all(values) -> np.ndarray:
    """All of e_0..e_n for n = len(values)."""
    vals = list(values)
    e = np.zeros(len(vals) + 1)
    e[0] = 1.0
    for i, v in enumerate(vals):
        for j in range(i + 1, 0, -1):
            e[j] += v * e[j - 1]
    return e


def alpha_coeffs(params: ModelParams) -> np.ndarray:
    """Coefficients of prod_i (x - nu_i) = sum_i alpha_i x^i, alpha_M = 1."""
    e = elementary_symmetric_all(params.nu)
    M = params.M
    signs = (-1.0) ** (M - np.arange(M + 1))
    return signs * e[M - np.arange(M + 1)]


# ---------------------------------------------------------------------------
# per-parameter evaluation context


def _g_series_valid(nu: np.ndarray) -> bool:
    # residue series is safe only when no pole families collide (all
    # pairwise differences away from the integers)
    M = nu.size
    if M == 1:
        return True
    for i in range(M):
        for j in range(M):
            if i == j:
                continue
            d = nu[i] - nu[j]
            if abs(d - round(d)) <= _NONINT_TOL:
                return False
    return True


class _Context:
    """Precomputed coefficient arrays for one parameter set."""

    def __init__(self, params: ModelParams):
        self.params = params
        nu = params.nu_array()
        M = params.M

        n = np.arange(1, SERIES_CAP, dtype=float)
        self.f_dens = n * np.prod(nu[:, None] + n[None, :], axis=0)
        self.f_lead = float(np.exp(-np.sum(gammaln(1.0 + nu))))

        self.g_mode = "series" if _g_series_valid(nu) else "quad"
        if self.g_mode == "series":
            lead = np.empty(M)
            dens = np.empty((M, SERIES_CAP - 1))
            for b in range(M):
                others = np.delete(nu, b)
                lead[b] = float(np.prod(_gamma(others - nu[b])) / _gamma(1.0 + nu[b]))
                dens[b] = n * (nu[b] + n) * np.prod(
                    others[:, None] - nu[b] - n[None, :], axis=0
                )
            self.g_expo = nu.copy()
            self.g_lead = lead
            self.g_dens = dens
        else:
            # the line sits half a unit left of the first pole: g decays like
            # y^min(nu) at 0, and keeping |y^c| comparable to |g| stops the
            # oscillatory sum from losing absolute accuracy at small y
            c = float(np.min(nu)) + QUAD_LINE_RE
            h = QUAD_STEP

            def log_env(t):
                s = c + 1j * t
                return float(
                    np.sum(loggamma(nu - s)).real - loggamma(1.0 + s).real
                )

            base = log_env(0.0)
            t = 5.0
            while log_env(t) > base - 60.0 and t < 500.0:
                t += 5.0
            k = np.arange(0, int(np.ceil(t / h)) + 1)
            s = c + 1j * h * k
            logw = np.sum(loggamma(nu[:, None] - s[None, :]), axis=0) - loggamma(
                1.0 + s
            )
            w = np.exp(logw)
            w[0] *= 0.5
            self.g_quad_s = s
            self.g_quad_w = w
            self.g_quad_h = h
            self.g_quad_c = c
            self.g_quad_tail = float(np.abs(w[-1]) * h / np.pi / (1.0 - np.exp(-h)))

    # -- raw theta tables ---------------------------------------------------

    def f_table(self, x: np.ndarray, jmax: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        table, used, tail, conv = kernels.f_theta_table(
            np.ascontiguousarray(x, dtype=float),
            self.f_dens,
            self.f_lead,
            jmax,
            SERIES_RTOL,
            SERIES_CAP,
            SERIES_LOOKAHEAD,
        )
        if not np.all(conv):
            scale = np.max(np.abs(table), axis=0) + abs(self.f_lead)
            bad = ~conv & (tail > 1e-10 * scale)
            if np.any(bad):
                raise EvaluationError(
                    f"f series did not converge within {SERIES_CAP} terms "
                    f"at x={np.asarray(x)[bad][:3]}",
                    partial=table,
                )
        return table, used, tail

    def g_table(self, y: np.ndarray, jmax: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        y = np.ascontiguousarray(y, dtype=float)
        if np.any(y <= 0.0):
            raise DomainError("g requires y > 0")
        if self.g_mode == "series":
            table, used, tail, conv = kernels.g_series_theta_table(
                y,
                self.g_expo,
                self.g_lead,
                self.g_dens,
                jmax,
                SERIES_RTOL,
                SERIES_CAP,
                SERIES_LOOKAHEAD,
            )
            if not np.all(conv):
                scale = np.max(np.abs(table), axis=0) + np.max(np.abs(self.g_lead))
                bad = ~conv & (tail > 1e-10 * scale)
                if np.any(bad):
                    raise EvaluationError(
                        f"g residue series did not converge at y={y[bad][:3]}",
                        partial=table,
                    )
            return table, used, tail
        table = kernels.g_quad_theta_table(
            y, self.g_quad_s, self.g_quad_w, self.g_quad_h, jmax
        )
        npts = self.g_quad_s.size
        tail = self.g_quad_tail * np.power(y, self.g_quad_c)
        used = np.full(y.shape, npts, dtype=np.int64)
        return table, used, tail


@lru_cache(maxsize=64)
def _ctx(params: ModelParams) -> _Context:
    return _Context(params)


def g_mode(params: ModelParams) -> str:
    """Which evaluation route g uses for these parameters."""
    return _ctx(params).g_mode


# ---------------------------------------------------------------------------
# public evaluations


def eval_f(params: ModelParams, x: float) -> SeriesEval:
    """f(x) for x >= 0, with series-truncation provenance."""
    if x < 0:
        raise DomainError("f requires x >= 0")
    table, used, tail = _ctx(params).f_table(np.array([x]), 0)
    return SeriesEval(float(table[0, 0]), int(used[0]), float(tail[0]))


def eval_g(params: ModelParams, y: float) -> SeriesEval:
    """g(y) for y > 0, with truncation/quadrature provenance."""
    table, used, tail = _ctx(params).g_table(np.array([y]), 0)
    return SeriesEval(float(table[0, 0]), int(used[0]), float(tail[0]))


def f_theta_many(params: ModelParams, x, jmax: int) -> np.ndarray:
    """Rows j = 0..jmax of (x d/dx)^j f on an array of points."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x < 0):
        raise DomainError("f requires x >= 0")
    return _ctx(params).f_table(x, jmax)[0]


def g_theta_many(params: ModelParams, y, jmax: int) -> np.ndarray:
    """Rows j = 0..jmax of (y d/dy)^j g on an array of points."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    return _ctx(params).g_table(y, jmax)[0]


def theta_power(params: ModelParams, which: str, j: int, t: float) -> float:
    """(t d/dt)^j applied to f or g at the point t."""
    if not 0 <= j <= params.M + 1:
        raise DomainError(f"theta order j={j} outside 0..M+1")
    if which == "f":
        return float(f_theta_many(params, [t], j)[j, 0])
    if which == "g":
        return float(g_theta_many(params, [t], j)[j, 0])
    raise DomainError(f"unknown function {which!r}; expected 'f' or 'g'")


def phi_many(params: ModelParams, x, jmax: int | None = None) -> np.ndarray:
    """phi_j(x) = (-1)^(M-j+1) (x d/dx)^j f(x); rows j = 0..jmax.

    jmax may run to M+1; the extra order feeds kernel diagonals.
    """
    M = params.M
    if jmax is None:
        jmax = M
    table = f_theta_many(params, x, jmax)
    signs = (-1.0) ** (M - np.arange(jmax + 1) + 1)
    return signs[:, None] * table


def psi_many(params: ModelParams, y) -> np.ndarray:
    """psi_j(y) = sum_{i=0}^{M-j} alpha_{i+j} (y d/dy)^i g(y); rows j = 0..M."""
    M = params.M
    table = g_theta_many(params, y, M)
    alphas = alpha_coeffs(params)
    mix = np.zeros((M + 1, M + 1))
    for j in range(M + 1):
        mix[j, : M - j + 1] = alphas[j:]
    return mix @ table


def phi(params: ModelParams, j: int, x: float) -> float:
    if not 0 <= j <= params.M:
        raise DomainError(f"phi index j={j} outside 0..M")
    return float(phi_many(params, [x], jmax=j)[j, 0])


def psi(params: ModelParams, j: int, y: float) -> float:
    if not 0 <= j <= params.M:
        raise DomainError(f"psi index j={j} outside 0..M")
    return float(psi_many(params, [y])[j, 0])


# ---------------------------------------------------------------------------
# behavior at the origin


def _zero_count(params: ModelParams) -> int:
    return int(np.sum(np.abs(params.nu_array()) < _ZERO_TOL))


def g_at_zero(params: ModelParams) -> float:
    """Limit of g at 0+.

    Finite only when at most one nu vanishes; two or more zero exponents
    put a logarithm at the leading order.
    """
    nu = params.nu_array()
    z = _zero_count(params)
    if z >= 2:
        raise EvaluationError("g diverges logarithmically at 0 (repeated zero nu)")
    if z == 0:
        return 0.0
    pos = nu[np.abs(nu) >= _ZERO_TOL]
    return float(np.prod(_gamma(pos)))


def phi_at_zero(params: ModelParams) -> np.ndarray:
    """phi_j(0): only j = 0 survives since (x d/dx)^j kills constants."""
    out = np.zeros(params.M + 1)
    out[0] = (-1.0) ** (params.M + 1) * _ctx(params).f_lead
    return out


def psi_at_zero(params: ModelParams) -> np.ndarray:
    """psi_j(0+) = alpha_j * g(0+); raises if g diverges at 0."""
    g0 = g_at_zero(params)
    return alpha_coeffs(params) * g0


# ---------------------------------------------------------------------------
# defining differential operators, used as consistency residuals


def ode_residual_f(params: ModelParams, x: float, relative: bool = False) -> float:
    """prod_{j=0..M} (x d/dx + nu_j) f + x f, identically zero for exact f."""
    if x <= 0:
        raise DomainError("residual defined for x > 0")
    M = params.M
    e_full = elementary_symmetric_all(params.nu_full)
    table = f_theta_many(params, [x], M + 1)[:, 0]
    coeffs = e_full[::-1]  # coefficient of theta^k is e_{M+1-k}
    res = float(coeffs @ table) + x * table[0]
    if relative:
        scale = float(np.abs(coeffs) @ np.abs(table)) + abs(x * table[0])
        return res / scale if scale > 0 else 0.0
    return res


def ode_residual_g(params: ModelParams, y: float, relative: bool = False) -> float:
    """prod_{j=0..M} (y d/dy - nu_j) g - (-1)^M y g, identically zero."""
    if y <= 0:
        raise DomainError("residual defined for y > 0")
    M = params.M
    alphas = alpha_coeffs(params)
    table = g_theta_many(params, [y], M + 1)[:, 0]
    # prod_{j=0..M}(t - nu_j) = t * sum_i alpha_i t^i, so theta^k carries
    # alpha_{k-1} for k >= 1 and there is no theta^0 term.
    res = float(alphas @ table[1:]) - (-1.0) ** M * y * table[0]
    if relative:
        scale = float(np.abs(alphas) @ np.abs(table[1:])) + abs(y * table[0])
        return res / scale if scale > 0 else 0.0
    return res
