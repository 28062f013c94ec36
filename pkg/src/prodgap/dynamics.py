"""Canonical coordinates and integrable structure of the gap determinant.

The interval endpoints act as time variables.  At each endpoint a_l the
transformed kernel factors give coordinates

    x_j^(l) = (i if l even else 1) * Q_j(a_l),
    y_j^(l) = (i if l even else 1) * P_j(a_l),

plus endpoint-independent pairs xi_j, eta_j built from the cross-moment
matrix V.  The imaginary prefactor at even endpoints makes one set of
evolution equations cover both parities; products pairing x with y are
always real.

This module provides: construction of the coordinates from the Nystrom
side, residual checkers for the multi-interval evolution equations, the
Hamiltonians in coordinate and trace form with their Poisson structure,
the rank-one Lax matrices with Schlesinger-type and isomonodromy residual
checks, and the single-interval ODE system whose solution reproduces the
gap probability through

    log F(s) = int_0^s (xi_M(t) - xi_M(0)) / t dt,

equivalently exp(-int_0^s log(s/t) Q_0(t) P_M(t) dt) in the unprefixed
transformed functions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad, solve_ivp

from . import fredholm, kernel, specfun
from .errors import DomainError, EvaluationError
from .params import IntervalUnion, ModelParams, single_interval


# ---------------------------------------------------------------------------
# state containers


@dataclass(frozen=True)
class DynamicalState:
    """Coordinates attached to every endpoint of an interval union."""

    params: ModelParams
    endpoints: tuple[float, ...]
    x: np.ndarray            # (2m, M+1) complex
    y: np.ndarray            # (2m, M+1) complex
    xi: np.ndarray           # (M+1,) real
    eta: np.ndarray          # (M+1,) real
    endpoint_ok: np.ndarray  # (2m,) bool


@dataclass(frozen=True)
class SingleState:
    """Single-interval coordinates at time s (used as value or derivative)."""

    s: float
    x: np.ndarray
    y: np.ndarray
    xi: np.ndarray
    eta: np.ndarray


@dataclass(frozen=True)
class LaxMatrices:
    e: np.ndarray            # (M+1, M+1)
    c: np.ndarray            # (M+1, M+1)
    a: tuple[np.ndarray, ...]  # 2m rank-one matrices


@dataclass(frozen=True)
class GapCurve:
    """Sampled gap-probability curve with provenance."""

    params: ModelParams
    s: np.ndarray
    f: np.ndarray
    provenance: str

    def __post_init__(self):
        if self.provenance not in ("fredholm", "ode", "montecarlo"):
            raise ValueError(f"unknown provenance {self.provenance!r}")
        s = np.asarray(self.s, dtype=float)
        f = np.asarray(self.f, dtype=float)
        if np.any(np.diff(s) <= 0):
            raise ValueError("s grid must be strictly increasing")
        lo = 0.0 if self.provenance == "montecarlo" else np.nextafter(0.0, 1.0)
        if np.any(f < lo) or np.any(f > 1.0 + 1e-12):
            raise ValueError("gap probabilities must lie in (0, 1]")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "f", f)


def initial_xi(params: ModelParams) -> np.ndarray:
    """xi_j at vanishing interval: (-1)^(M+1-j) e_{M+1-j}(nu_0..nu_M)."""
    M = params.M
    e_full = specfun.elementary_symmetric_all(params.nu_full)
    j = np.arange(M + 1)
    return (-1.0) ** (M + 1 - j) * e_full[M + 1 - j]


def _parity_prefactors(n_end: int, imag_sign: int = 1) -> np.ndarray:
    # endpoint a_l with l = k+1 (1-based): even l carries the imaginary unit
    pref = np.ones(n_end, dtype=complex)
    pref[1::2] = imag_sign * 1j
    return pref


def state_from_fredholm(
    params: ModelParams,
    interval: IntervalUnion,
    order: int = 40,
    rdata: fredholm.ResolventData | None = None,
) -> DynamicalState:
    """Assemble the canonical coordinates from the Nystrom solve."""
    if rdata is None:
        system = fredholm.build_nystrom(params, interval, order)
        rdata = fredholm.solve_qp(params, system)
    M = params.M
    n_end = 2 * interval.m
    pref = _parity_prefactors(n_end)
    x = pref[:, None] * rdata.q_end.T
    y = pref[:, None] * rdata.p_end.T
    sign = (-1.0) ** M
    xi = sign * rdata.v_matrix[0, :] + initial_xi(params)
    eta = sign * rdata.v_matrix[:, M]
    return DynamicalState(
        params=params,
        endpoints=interval.endpoints,
        x=x,
        y=y,
        xi=xi,
        eta=eta,
        endpoint_ok=rdata.endpoint_ok.copy(),
    )


# ---------------------------------------------------------------------------
# multi-interval evolution equations as finite-difference residuals


def _coupling(state: DynamicalState, l: int, k: int) -> complex:
    """sum_i x_i^(l) y_i^(k)."""
    return complex(np.sum(state.x[l] * state.y[k]))


def pde_residuals(
    params: ModelParams, interval: IntervalUnion, order: int, h: float
) -> dict[str, float]:
    """Max absolute residual of each evolution-equation family (a)-(f).

    Endpoint derivatives are central differences of the Fredholm-derived
    coordinates; the right-hand sides use the central state.
    """
    ends = np.asarray(interval.endpoints)
    n_end = ends.size
    if np.any(ends - h <= 0.0):
        raise DomainError("step h too large: endpoints must stay positive")
    gaps = np.diff(ends)
    if np.any(gaps <= 2 * h):
        raise DomainError("step h too large: endpoints must stay ordered")

    center = state_from_fredholm(params, interval, order)
    M = params.M
    a = ends
    dx = np.empty((n_end, n_end, M + 1), dtype=complex)  # d x^(l) / d a_k
    dy = np.empty_like(dx)
    dxi = np.empty((n_end, M + 1))
    deta = np.empty((n_end, M + 1))
    for k in range(n_end):
        up = state_from_fredholm(params, interval.with_endpoint(k, a[k] + h), order)
        dn = state_from_fredholm(params, interval.with_endpoint(k, a[k] - h), order)
        dx[k] = (up.x - dn.x) / (2 * h)
        dy[k] = (up.y - dn.y) / (2 * h)
        dxi[k] = (up.xi - dn.xi) / (2 * h)
        deta[k] = (up.eta - dn.eta) / (2 * h)

    res = {key: 0.0 for key in "abcdef"}
    for l in range(n_end):
        for k in range(n_end):
            if k == l:
                continue
            s_lk = _coupling(center, l, k)
            rhs_a = -center.x[k] / (a[l] - a[k]) * s_lk
            res["a"] = max(res["a"], float(np.max(np.abs(dx[k, l] - rhs_a))))
            s_kl = _coupling(center, k, l)
            rhs_b = -center.y[k] / (a[k] - a[l]) * s_kl
            res["b"] = max(res["b"], float(np.max(np.abs(dy[k, l] - rhs_b))))

    sgn = (-1.0) ** (M + 1)
    for l in range(n_end):
        cross_x = np.zeros(M + 1, dtype=complex)
        cross_y = np.zeros(M + 1, dtype=complex)
        for k in range(n_end):
            if k == l:
                continue
            cross_x += center.x[k] * (a[k] / (a[l] - a[k])) * _coupling(center, l, k)
            cross_y += center.y[k] * (a[k] / (a[k] - a[l])) * _coupling(center, k, l)
        lhs_x = a[l] * dx[l, l]
        rhs_x = np.empty(M + 1, dtype=complex)
        rhs_x[:M] = -center.eta[:M] * center.x[l, 0] - center.x[l, 1:] + cross_x[:M]
        rhs_x[M] = (
            -center.eta[M] * center.x[l, 0]
            + sgn * a[l] * center.x[l, 0]
            + np.sum(center.xi * center.x[l])
            + cross_x[M]
        )
        res["c"] = max(res["c"], float(np.max(np.abs(lhs_x - rhs_x))))

        lhs_y = a[l] * dy[l, l]
        rhs_y = np.empty(M + 1, dtype=complex)
        rhs_y[1:] = -center.xi[1:] * center.y[l, M] + center.y[l, :M] + cross_y[1:]
        rhs_y[0] = (
            -center.xi[0] * center.y[l, M]
            + (-1.0) ** M * a[l] * center.y[l, M]
            + np.sum(center.eta * center.y[l])
            + cross_y[0]
        )
        res["d"] = max(res["d"], float(np.max(np.abs(lhs_y - rhs_y))))

        rhs_e = sgn * center.x[l, 0] * center.y[l]
        res["e"] = max(res["e"], float(np.max(np.abs(dxi[l] - rhs_e))))
        rhs_f = sgn * center.x[l] * center.y[l, M]
        res["f"] = max(res["f"], float(np.max(np.abs(deta[l] - rhs_f))))
    return res


# ---------------------------------------------------------------------------
# Hamiltonians, Poisson structure


@dataclass(frozen=True)
class PhaseGradient:
    """Gradient of a scalar with respect to the canonical coordinates."""

    dx: np.ndarray    # (2m, M+1)
    dy: np.ndarray    # (2m, M+1)
    dxi: np.ndarray   # (M+1,)
    deta: np.ndarray  # (M+1,)


def poisson_bracket(
    grad_f: PhaseGradient, grad_g: PhaseGradient, endpoints, m_factors: int
) -> complex:
    """{F, G} under the bracket with endpoint weights 1/a_k and the
    (-1)^M-weighted xi/eta pairs."""
    ends = np.asarray(endpoints, dtype=float)
    total = 0.0 + 0.0j
    for k, a in enumerate(ends):
        pair = np.sum(grad_f.dx[k] * grad_g.dy[k] - grad_f.dy[k] * grad_g.dx[k])
        if a == 0.0:
            if abs(pair) > 0.0:
                raise EvaluationError("singular bracket: a_k = 0 with nonzero gradient")
            continue
        total += pair / a
    total += (-1.0) ** m_factors * np.sum(
        grad_f.dxi * grad_g.deta - grad_f.deta * grad_g.dxi
    )
    return complex(total)


def hamiltonian_explicit(state: DynamicalState, l: int, check: bool = True) -> float:
    """H_l in canonical coordinates; verified against the trace form.

    The sign is pinned by H_l = -a_l d(log det)/da_l.  The canonical
    expression below evaluates to the opposite of that quantity, so both it
    and the trace form are negated on return; equivalently, the endpoint
    flow is the bracket flow generated by -H_l.
    """
    M = state.params.M
    a = np.asarray(state.endpoints)
    x, y = state.x, state.y
    val = (
        -np.sum(state.eta * y[l]) * x[l, 0]
        + (-1.0) ** (M + 1) * a[l] * x[l, 0] * y[l, M]
        - np.sum(x[l, 1:] * y[l, :M])
        + y[l, M] * np.sum(state.xi * x[l])
    )
    for k in range(a.size):
        if k == l:
            continue
        val += (
            (a[k] / (a[l] - a[k]))
            * np.sum(x[k] * y[l])
            * np.sum(x[l] * y[k])
        )
    val = -complex(val)
    if check:
        tr = _hamiltonian_trace(state, l)
        scale = 1.0 + abs(val)
        if abs(val - tr) > 1e-9 * scale:
            raise EvaluationError(
                f"coordinate and trace Hamiltonians disagree: {val} vs {tr}"
            )
    if abs(val.imag) > 1e-9 * (1.0 + abs(val.real)):
        raise EvaluationError(f"Hamiltonian unexpectedly complex: {val}")
    return float(val.real)


def _hamiltonian_trace(state: DynamicalState, l: int) -> complex:
    # same determinant-pinned sign convention as hamiltonian_explicit
    lax = lax_matrices(state)
    a = np.asarray(state.endpoints)
    al = lax.a[l]
    val = np.trace(lax.c @ al) + a[l] * np.trace(lax.e @ al)
    for k in range(a.size):
        if k == l:
            continue
        val += (a[k] / (a[l] - a[k])) * np.trace(lax.a[k] @ al)
    return -complex(val)


def hamiltonian_trace(state: DynamicalState, l: int) -> float:
    val = _hamiltonian_trace(state, l)
    return float(val.real)


def hamiltonian_gradient(state: DynamicalState, l: int) -> PhaseGradient:
    """Analytic gradient of H_l (determinant-pinned sign convention)."""
    M = state.params.M
    a = np.asarray(state.endpoints)
    n_end = a.size
    x, y = state.x, state.y
    dx = np.zeros((n_end, M + 1), dtype=complex)
    dy = np.zeros((n_end, M + 1), dtype=complex)

    dx[l, 0] += -np.sum(state.eta * y[l]) + (-1.0) ** (M + 1) * a[l] * y[l, M]
    dx[l, 1:] += -y[l, :M]
    dx[l] += state.xi * y[l, M]

    dy[l] += -state.eta * x[l, 0]
    dy[l, M] += (-1.0) ** (M + 1) * a[l] * x[l, 0] + np.sum(state.xi * x[l])
    dy[l, :M] += -x[l, 1:]

    for k in range(n_end):
        if k == l:
            continue
        c_k = a[k] / (a[l] - a[k])
        s1 = np.sum(x[k] * y[l])  # sum_i x_i^(k) y_i^(l)
        s2 = np.sum(x[l] * y[k])  # sum_j x_j^(l) y_j^(k)
        dx[l] += c_k * s1 * y[k]
        dy[l] += c_k * s2 * x[k]
        dx[k] += c_k * s2 * y[l]
        dy[k] += c_k * s1 * x[l]

    dxi = y[l, M] * x[l]
    deta = -x[l, 0] * y[l]
    return PhaseGradient(dx=-dx, dy=-dy, dxi=-dxi, deta=-deta)


# ---------------------------------------------------------------------------
# Lax matrices, Schlesinger-type and isomonodromy residuals


def lax_matrices(state: DynamicalState) -> LaxMatrices:
    M = state.params.M
    e = np.zeros((M + 1, M + 1))
    e[M, 0] = (-1.0) ** (M + 1)
    c = np.zeros((M + 1, M + 1))
    for i in range(M):
        c[i, 0] = -state.eta[i]
        c[i, i + 1] = -1.0
    c[M, 0] = state.xi[0] - state.eta[M]
    c[M, 1:] = state.xi[1:]
    a_mats = tuple(np.outer(state.x[k], state.y[k]) for k in range(len(state.endpoints)))
    return LaxMatrices(e=e, c=c.astype(complex), a=a_mats)


def connection_matrix(state: DynamicalState, z: complex) -> np.ndarray:
    """X(z) = E + (C - sum_k A^(k)) / z + sum_k A^(k) / (z - a_k)."""
    lax = lax_matrices(state)
    a = np.asarray(state.endpoints)
    if abs(z) < 1e-10 or np.any(np.abs(z - a) < 1e-10):
        raise DomainError(f"z={z} too close to a pole of the connection")
    total = lax.e.astype(complex) + (lax.c - sum(lax.a)) / z
    for k in range(a.size):
        total += lax.a[k] / (z - a[k])
    return total


def deformation_matrix(state: DynamicalState, j: int, z: complex) -> np.ndarray:
    """Theta_j(z) = -A^(j) / (z - a_j)."""
    lax = lax_matrices(state)
    a_j = state.endpoints[j]
    if abs(z - a_j) < 1e-10:
        raise DomainError(f"z={z} too close to the pole a_j={a_j}")
    return -lax.a[j] / (z - a_j)


def _commutator(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    return p @ q - q @ p


def schlesinger_residuals(
    params: ModelParams, interval: IntervalUnion, order: int, h: float
) -> dict[str, float]:
    """Residuals of the three matrix evolution equations for A^(l) and C."""
    ends = np.asarray(interval.endpoints)
    n_end = ends.size
    center = state_from_fredholm(params, interval, order)
    lax = lax_matrices(center)
    a = ends

    da = np.empty((n_end, n_end, params.M + 1, params.M + 1), dtype=complex)
    dc = np.empty((n_end, params.M + 1, params.M + 1), dtype=complex)
    for k in range(n_end):
        up = lax_matrices(
            state_from_fredholm(params, interval.with_endpoint(k, a[k] + h), order)
        )
        dn = lax_matrices(
            state_from_fredholm(params, interval.with_endpoint(k, a[k] - h), order)
        )
        for l in range(n_end):
            da[k, l] = (up.a[l] - dn.a[l]) / (2 * h)
        dc[k] = (up.c - dn.c) / (2 * h)

    res = {"off_diagonal": 0.0, "diagonal": 0.0, "c_equation": 0.0}
    for l in range(n_end):
        for k in range(n_end):
            if k == l:
                continue
            rhs = _commutator(lax.a[l], lax.a[k]) / (a[l] - a[k])
            res["off_diagonal"] = max(
                res["off_diagonal"], float(np.max(np.abs(da[k, l] - rhs)))
            )
        rhs_diag = _commutator(lax.c + a[l] * lax.e, lax.a[l])
        for k in range(n_end):
            if k == l:
                continue
            rhs_diag += (a[k] / (a[l] - a[k])) * _commutator(lax.a[k], lax.a[l])
        res["diagonal"] = max(
            res["diagonal"], float(np.max(np.abs(a[l] * da[l, l] - rhs_diag)))
        )
        rhs_c = _commutator(lax.e, lax.a[l])
        res["c_equation"] = max(
            res["c_equation"], float(np.max(np.abs(dc[l] - rhs_c)))
        )
    return res


def isomonodromy_residual(
    params: ModelParams,
    interval: IntervalUnion,
    order: int,
    z_samples,
    h: float,
) -> float:
    """Max residual of dX/da_j = dTheta_j/dz + [Theta_j, X] at the samples."""
    ends = np.asarray(interval.endpoints)
    center = state_from_fredholm(params, interval, order)
    lax = lax_matrices(center)
    worst = 0.0
    for j in range(ends.size):
        up = state_from_fredholm(params, interval.with_endpoint(j, ends[j] + h), order)
        dn = state_from_fredholm(params, interval.with_endpoint(j, ends[j] - h), order)
        for z in np.atleast_1d(z_samples):
            x_up = connection_matrix(up, z)
            x_dn = connection_matrix(dn, z)
            fd = (x_up - x_dn) / (2 * h)
            theta = deformation_matrix(center, j, z)
            rhs = lax.a[j] / (z - ends[j]) ** 2 + _commutator(
                theta, connection_matrix(center, z)
            )
            worst = max(worst, float(np.max(np.abs(fd - rhs))))
    return worst


# ---------------------------------------------------------------------------
# single-interval ODE system and the gap-probability formula


def ode_rhs(params: ModelParams, s: float, state: SingleState) -> SingleState:
    """Right-hand side of the single-interval system (returned as a state
    whose fields hold the derivatives)."""
    if s <= 0:
        raise DomainError("the system is defined for s > 0")
    M = params.M
    x, y, xi, eta = state.x, state.y, state.xi, state.eta
    sgn = (-1.0) ** (M + 1)
    dx = np.empty(M + 1, dtype=complex)
    dx[:M] = (-eta[:M] * x[0] - x[1:]) / s
    dx[M] = (-eta[M] * x[0] + sgn * s * x[0] + np.sum(xi * x)) / s
    dy = np.empty(M + 1, dtype=complex)
    dy[1:] = (-xi[1:] * y[M] + y[:M]) / s
    dy[0] = (-xi[0] * y[M] + (-1.0) ** M * s * y[M] + np.sum(eta * y)) / s
    dxi = sgn * x[0] * y
    deta = sgn * x * y[M]
    return SingleState(s=s, x=dx, y=dy, xi=dxi, eta=deta)


def _origin_corrections(params: ModelParams, eps: float):
    """First Neumann-order start values at s = eps.

    x_j(eps) = i [phi_j + int_0^eps K(eps,t) phi_j(t) dt], similarly for y
    with the transposed kernel; xi/eta pick up the leading V integrals and
    the log-weighted integral initializes the gap exponent.
    """
    M = params.M
    sign = (-1.0) ** M

    def phi_vec(t):
        return specfun.phi_many(params, [t])[:, 0]

    def psi_vec(t):
        return specfun.psi_many(params, [t])[:, 0]

    x0 = specfun.phi_many(params, [eps])[:, 0].astype(complex)
    y0 = specfun.psi_many(params, [eps])[:, 0].astype(complex)
    for j in range(M + 1):
        corr_x, _ = quad(
            lambda t, j=j: kernel.kernel_bilinear(params, eps, t) * phi_vec(t)[j],
            0.0,
            eps,
            epsabs=1e-14,
            epsrel=1e-10,
            limit=100,
        )
        corr_y, _ = quad(
            lambda t, j=j: kernel.kernel_bilinear(params, t, eps) * psi_vec(t)[j],
            0.0,
            eps,
            epsabs=1e-14,
            epsrel=1e-10,
            limit=100,
        )
        x0[j] += corr_x
        y0[j] += corr_y

    xi0 = initial_xi(params).astype(complex)
    eta0 = np.zeros(M + 1, dtype=complex)
    for j in range(M + 1):
        v0j, _ = quad(
            lambda t, j=j: phi_vec(t)[0] * psi_vec(t)[j],
            0.0,
            eps,
            epsabs=1e-16,
            epsrel=1e-10,
            limit=100,
        )
        vjm, _ = quad(
            lambda t, j=j: phi_vec(t)[j] * psi_vec(t)[M],
            0.0,
            eps,
            epsabs=1e-16,
            epsrel=1e-10,
            limit=100,
        )
        xi0[j] += sign * v0j
        eta0[j] += sign * vjm

    # log F(s) = int_0^s (xi_M(t) - xi_M(0))/t dt; to leading Neumann order
    # xi_M - xi_M(0) = (-1)^M int_0^t phi_0 psi_M, giving a log-weighted start
    logw, _ = quad(
        lambda t: np.log(eps / t) * phi_vec(t)[0] * psi_vec(t)[M],
        0.0,
        eps,
        epsabs=1e-16,
        epsrel=1e-10,
        limit=100,
    )
    i2 = sign * logw
    return x0, y0, xi0, eta0, i2


@dataclass
class SingleIntervalSolution:
    """Integrated single-interval trajectory with dense output."""

    params: ModelParams
    eps: float
    s_max: float
    imag_sign: int
    start: str
    _sol: object = field(repr=False)
    _e_last: float = field(repr=False)

    def state(self, s: float) -> SingleState:
        M = self.params.M
        if not self.eps <= s <= self.s_max:
            raise DomainError(f"s={s} outside integrated range")
        z = self._sol(np.log(s))
        return SingleState(
            s=s,
            x=z[: M + 1],
            y=z[M + 1 : 2 * (M + 1)],
            xi=z[2 * (M + 1) : 3 * (M + 1)],
            eta=z[3 * (M + 1) : 4 * (M + 1)],
        )

    def log_gap(self, s: float) -> float:
        M = self.params.M
        if s == 0.0:
            return 0.0
        if s < self.eps:
            if self.start != "origin":
                raise DomainError(f"s={s} below the bootstrap start point")
            *_, i2 = _origin_corrections(self.params, s)
            return i2
        z = self._sol(np.log(s))
        return float(z[4 * (M + 1)].real)

    def gap(self, s: float) -> float:
        return float(np.exp(self.log_gap(s)))

    def gap_curve(self, s_grid) -> GapCurve:
        s_grid = np.asarray(s_grid, dtype=float)
        f = np.array([self.gap(s) for s in s_grid])
        return GapCurve(params=self.params, s=s_grid, f=f, provenance="ode")


def integrate_single(
    params: ModelParams,
    s_max: float,
    tol: float = 1e-12,
    s_grid=None,
    eps: float = 1e-5,
    imag_sign: int = 1,
    bootstrap: bool = False,
    bootstrap_order: int = 40,
) -> tuple[SingleIntervalSolution, GapCurve]:
    """Integrate the single-interval system on (eps, s_max].

    The start values at eps come from the function values themselves plus
    their first Neumann correction.  The default eps balances the two error
    sources at the regular-singular origin: the dropped Neumann orders
    shrink with eps while roundoff of the tiny resonant components is
    amplified like 1/eps, so neither very small nor large eps helps.
    Parameter sets whose psi diverge at 0 have no finite origin data; for
    those pass ``bootstrap=True`` to initialize from the Nystrom solve at
    s = eps instead (a numerical, not analytic, start).
    """
    if s_max <= eps:
        raise DomainError("s_max must exceed the start point eps")
    if imag_sign not in (1, -1):
        raise DomainError("imag_sign must be +1 or -1")
    M = params.M

    if bootstrap:
        eps = max(eps, 1e-3)
        system = fredholm.build_nystrom(params, single_interval(eps), bootstrap_order)
        rdata = fredholm.solve_qp(params, system)
        st = state_from_fredholm(params, single_interval(eps), bootstrap_order, rdata)
        x0 = st.x[1].copy()
        y0 = st.y[1].copy()
        xi0 = st.xi.astype(complex)
        eta0 = st.eta.astype(complex)
        i2 = system.logdet
        if imag_sign == -1:
            x0 = np.conj(x0)
            y0 = np.conj(y0)
    else:
        try:
            specfun.psi_at_zero(params)
        except EvaluationError as exc:
            raise EvaluationError(
                "psi diverges at the origin for these parameters; "
                "use bootstrap=True for a Nystrom-initialized start"
            ) from exc
        x0, y0, xi0, eta0, i2 = _origin_corrections(params, eps)
        unit = 1j * imag_sign
        x0 = unit * x0
        y0 = unit * y0

    e_last = float(initial_xi(params)[M])
    z0 = np.concatenate([x0, y0, xi0, eta0, [complex(i2)]])
    sgn = (-1.0) ** (M + 1)

    # integrate in tau = log s: the system has the s d/ds form natively, and
    # near the regular-singular origin the solution's s^k log s structure
    # becomes smooth exponential-polynomial behavior in tau
    def rhs(tau, z):
        s = np.exp(tau)
        x = z[: M + 1]
        y = z[M + 1 : 2 * (M + 1)]
        xi = z[2 * (M + 1) : 3 * (M + 1)]
        eta = z[3 * (M + 1) : 4 * (M + 1)]
        dz = np.empty_like(z)
        dz[:M] = -eta[:M] * x[0] - x[1:M + 1]
        dz[M] = -eta[M] * x[0] + sgn * s * x[0] + np.sum(xi * x)
        dz[M + 1 + 1 : 2 * (M + 1)] = -xi[1:] * y[M] + y[:M]
        dz[M + 1] = -xi[0] * y[M] + (-1.0) ** M * s * y[M] + np.sum(eta * y)
        dz[2 * (M + 1) : 3 * (M + 1)] = s * sgn * x[0] * y
        dz[3 * (M + 1) : 4 * (M + 1)] = s * sgn * x * y[M]
        # d/ds log F = (xi_M - xi_M(0)) / s
        dz[4 * (M + 1)] = xi[M] - e_last
        return dz

    # Components opening with high powers of s (resonant directions) sit far
    # below any fixed absolute floor near the start, so phase one runs under
    # pure relative control; no coordinate crosses zero that early.  Past
    # s_switch the coordinates are O(1) and oscillatory, where a relative-only
    # test would stall at zero crossings, so a normal absolute floor returns.
    s_switch = min(0.25, 0.5 * s_max)
    sols = []
    if eps < s_switch:
        # x and y sectors get no absolute floor (their errors scale with
        # themselves); xi/eta/log-F pick up cross-talk from the O(1)
        # coordinates, so a machine-level floor avoids overconstraining them
        atol1 = np.concatenate(
            [
                np.full(2 * (M + 1), 1e-300),
                np.full(2 * (M + 1) + 1, 1e-16),
            ]
        )
        part1 = solve_ivp(
            rhs,
            (np.log(eps), np.log(s_switch)),
            z0,
            method="DOP853",
            rtol=tol,
            atol=atol1,
            dense_output=True,
        )
        if not part1.success:
            raise EvaluationError(
                f"ODE integration failed on the opening leg: {part1.message}"
            )
        sols.append(part1.sol)
        z0 = part1.y[:, -1]
        t_start = np.log(s_switch)
    else:
        t_start = np.log(eps)
    part2 = solve_ivp(
        rhs,
        (t_start, np.log(s_max)),
        z0,
        method="DOP853",
        rtol=tol,
        atol=tol * 1e-2,
        dense_output=True,
    )
    if not part2.success:
        raise EvaluationError(f"ODE integration failed: {part2.message}")
    sols.append(part2.sol)

    def dense(tau):
        if len(sols) == 2 and tau < sols[1].t_min:
            return sols[0](tau)
        return sols[-1](tau)

    solution = SingleIntervalSolution(
        params=params,
        eps=eps,
        s_max=s_max,
        imag_sign=imag_sign,
        start="fredholm" if bootstrap else "origin",
        _sol=dense,
        _e_last=e_last,
    )
    if s_grid is None:
        s_grid = np.linspace(s_max / 50.0, s_max, 50)
    curve = solution.gap_curve(s_grid)
    return solution, curve


def gap_curve_fredholm(
    params: ModelParams, s_grid, order: int = 40
) -> GapCurve:
    """Gap probabilities on (0, s) for each s via the Nystrom determinant."""
    s_grid = np.asarray(s_grid, dtype=float)
    f = np.array(
        [
            1.0
            if s == 0.0
            else fredholm.gap_probability(params, single_interval(s), order)
            for s in s_grid
        ]
    )
    return GapCurve(params=params, s=s_grid, f=f, provenance="fredholm")
