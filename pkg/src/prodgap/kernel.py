"""The limiting hard-edge kernel for products of Gaussian matrices.

Two independent representations are implemented: the bilinear form

    K(x, y) = sum_{j=0..M} phi_j(x) psi_j(y) / (x - y),

whose numerator vanishes on the diagonal (continuity property), and the
integral form K(x, y) = int_0^1 f(xt) g(yt) dt.  The bilinear form is the
fast path used for matrix assembly; the integral form is the independent
cross-check.  For M = 1 the kernel reduces to the classical Bessel kernel
via K(x, y) = 4 K_Bessel(4x, 4y), which ``bessel_kernel`` provides.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import jv, jvp

from . import specfun
from .errors import DomainError, EvaluationError
from .params import ModelParams

# relative half-width of the band around the diagonal where the bilinear
# quotient loses digits to cancellation and a Taylor form takes over
DIAG_BAND = 1e-4


@dataclass(frozen=True)
class KernelPoint:
    """One kernel evaluation with provenance."""

    x: float
    y: float
    value: float
    method: str

    def __post_init__(self):
        if not np.isfinite(self.value):
            raise ValueError("kernel value must be finite")
        if self.method not in ("bilinear", "integral"):
            raise ValueError(f"unknown method {self.method!r}")


def _tables(params: ModelParams, t: np.ndarray):
    """phi rows 0..M+1 and psi rows 0..M at the points t (all > 0)."""
    phi = specfun.phi_many(params, t, jmax=params.M + 1)
    psi = specfun.psi_many(params, t)
    return phi, psi


def _diag_values(params: ModelParams, t: np.ndarray, phi=None, psi=None) -> np.ndarray:
    """K(t, t) for t > 0 via the L'Hospital limit of the bilinear form."""
    if phi is None or psi is None:
        phi, psi = _tables(params, t)
    # d/dx phi_j = -phi_{j+1}/x, so K(t,t) = -(1/t) sum_j phi_{j+1} psi_j
    return -np.sum(phi[1:, :] * psi, axis=0) / t


def _psi_prime(params: ModelParams, t: np.ndarray, psi: np.ndarray) -> np.ndarray:
    M = params.M
    alphas = specfun.alpha_coeffs(params)
    out = np.empty_like(psi)
    out[0] = (-1.0) ** M * psi[M]
    for j in range(1, M + 1):
        out[j] = (psi[j - 1] - alphas[j - 1] * psi[M]) / t
    return out


def _second_variation(params: ModelParams, t: np.ndarray) -> np.ndarray:
    """(N_xx - 2 N_xy + N_yy)(t, t) for the numerator N = sum phi_j psi_j."""
    M = params.M
    phi, psi = _tables(params, t)
    alphas = specfun.alpha_coeffs(params)
    e_full = specfun.elementary_symmetric_all(params.nu_full)

    # theta^(M+2) f from the defining operator identity, then phi_{M+2}
    ftab = specfun.f_theta_many(params, t, M + 1)
    theta_top = -(t * ftab[0] + t * ftab[1]) - e_full[::-1][: M + 1] @ ftab[1 : M + 2]
    phi_ext = np.vstack([phi, -theta_top[None, :]])  # rows 0..M+2

    phi_p = -phi_ext[1 : M + 2] / t  # phi_j' for j = 0..M
    phi_pp = (phi_ext[2 : M + 3] + phi_ext[1 : M + 2]) / t**2
    psi_p = _psi_prime(params, t, psi)
    psi_pp = np.empty_like(psi)
    psi_m_p = psi_p[M]
    psi_pp[0] = (-1.0) ** M * psi_m_p
    for j in range(1, M + 1):
        psi_pp[j] = (psi_p[j - 1] - alphas[j - 1] * psi_m_p) / t - (
            psi[j - 1] - alphas[j - 1] * psi[M]
        ) / t**2

    n_xx = np.sum(phi_pp * psi, axis=0)
    n_xy = np.sum(phi_p * psi_p, axis=0)
    n_yy = np.sum(phi[: M + 1] * psi_pp, axis=0)
    return n_xx - 2.0 * n_xy + n_yy


def kernel_grid(params: ModelParams, xs, ys) -> np.ndarray:
    """Bilinear-form kernel on the grid xs x ys (all points > 0)."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    phi_x, _ = _tables(params, xs)
    _, psi_y = _tables(params, ys)
    M = params.M
    num = phi_x[: M + 1].T @ psi_y
    diff = xs[:, None] - ys[None, :]
    band = DIAG_BAND * (1.0 + 0.5 * (xs[:, None] + ys[None, :]))
    near = np.abs(diff) < band
    out = np.divide(num, diff, out=np.zeros_like(num), where=~near)
    if np.any(near):
        ii, jj = np.nonzero(near)
        mid = 0.5 * (xs[ii] + ys[jj])
        kd = _diag_values(params, mid)
        corr = _second_variation(params, mid)
        out[ii, jj] = kd + (xs[ii] - ys[jj]) / 8.0 * corr
    return out


def kernel_diag(params: ModelParams, t) -> np.ndarray:
    """K(t, t) on an array of points t > 0."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t <= 0):
        raise DomainError("diagonal values need t > 0")
    return _diag_values(params, t)


def kernel_bilinear(params: ModelParams, x: float, y: float) -> float:
    """K(x, y) through the bilinear representation."""
    if x < 0 or y < 0:
        raise DomainError("kernel defined for x, y >= 0")
    if x == 0.0 and y == 0.0:
        # the integral form collapses to f(0) g(0+)
        return float(specfun.eval_f(params, 0.0).value * specfun.g_at_zero(params))
    if y == 0.0:
        psi0 = specfun.psi_at_zero(params)
        phis = specfun.phi_many(params, [x])[:, 0]
        return float(phis @ psi0 / x)
    if x == 0.0:
        phi0 = specfun.phi_at_zero(params)
        psis = specfun.psi_many(params, [y])[:, 0]
        return float(phi0 @ psis / (-y))
    return float(kernel_grid(params, [x], [y])[0, 0])


def kernel_integral(params: ModelParams, x: float, y: float) -> float:
    """K(x, y) = int_0^1 f(xt) g(yt) dt by adaptive quadrature."""
    if x < 0 or y < 0:
        raise DomainError("kernel defined for x, y >= 0")
    if y == 0.0:
        g0 = specfun.g_at_zero(params)
        if g0 == 0.0:
            return 0.0
        val, err = quad(
            lambda t: float(specfun.f_theta_many(params, [x * t], 0)[0, 0]) * g0,
            0.0,
            1.0,
            epsabs=1e-12,
            epsrel=1e-12,
            limit=200,
        )
    else:

        def integrand(t):
            fv = specfun.f_theta_many(params, [x * t], 0)[0, 0]
            gv = specfun.g_theta_many(params, [y * t], 0)[0, 0]
            return float(fv * gv)

        val, err = quad(
            integrand, 0.0, 1.0, epsabs=1e-12, epsrel=1e-12, limit=400
        )
    if err > 1e-11 * (1.0 + abs(val)):
        raise EvaluationError(
            f"kernel quadrature error estimate {err:.2e} too large at ({x}, {y})",
            partial=val,
        )
    return val


def kernel_point(
    params: ModelParams, x: float, y: float, method: str = "bilinear"
) -> KernelPoint:
    if method == "bilinear":
        value = kernel_bilinear(params, x, y)
    elif method == "integral":
        value = kernel_integral(params, x, y)
    else:
        raise DomainError(f"unknown method {method!r}")
    return KernelPoint(x=float(x), y=float(y), value=value, method=method)


def bessel_kernel(nu: float, x: float, y: float) -> float:
    """Classical hard-edge Bessel kernel.

    [J_nu(sqrt x) sqrt(y) J_nu'(sqrt y) - sqrt(x) J_nu'(sqrt x) J_nu(sqrt y)]
    / (2 (x - y)), with the L'Hospital limit on the diagonal.
    """
    if x <= 0 or y <= 0:
        raise DomainError("Bessel kernel defined for x, y > 0")
    if abs(x - y) < 1e-6 * (1.0 + 0.5 * (x + y)):
        # numerator is antisymmetric, so the midpoint limit is O(h^2) exact
        t = 0.5 * (x + y)
        u = np.sqrt(t)
        jn = jv(nu, u)
        jp = jvp(nu, u)
        return float(0.25 * ((1.0 - nu**2 / t) * jn**2 + jp**2))
    ux, uy = np.sqrt(x), np.sqrt(y)
    num = jv(nu, ux) * uy * jvp(nu, uy) - ux * jvp(nu, ux) * jv(nu, uy)
    return float(num / (2.0 * (x - y)))
