"""Nystrom discretization of the kernel operator on an interval union.

The operator acts on L^2 with kernel K(x,y) chi_J(y); per-interval
Gauss-Legendre nodes turn it into the dense matrix A_ij = K(x_i, x_j) w_j.
The gap probability is det(I - A), evaluated through an LU factorization
that is reused for every linear solve (transposed solves give the adjoint
quantities).  On top of the factorization sit the resolvent-side objects:
the transformed functions Q_j = (1-K)^{-1} phi_j and P_j = (1-K')^{-1} psi_j,
the cross-moment matrix V_ij = int_J phi_i P_j, the resolvent kernel, its
endpoint diagonal, the Hamiltonians H_l = (-1)^l a_l R(a_l, a_l), and the
1-form of endpoint log-derivatives of the determinant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.linalg import lu_factor, lu_solve

from . import kernel, specfun
from .errors import DomainError, EvaluationError
from .params import IntervalUnion, ModelParams


@dataclass(frozen=True)
class NystromSystem:
    params: ModelParams
    interval: IntervalUnion
    order: int
    nodes: np.ndarray        # (n,)
    weights: np.ndarray      # (n,)
    kernel_matrix: np.ndarray  # (n, n), K(x_i, x_j) w_j
    lu: tuple                # lu_factor of (I - kernel_matrix)
    logdet: float            # log det(I - kernel_matrix)
    det_sign: float

    @property
    def n(self) -> int:
        return self.nodes.size

    def solve(self, rhs: np.ndarray, transposed: bool = False) -> np.ndarray:
        """(I - A) x = rhs, or the transposed system."""
        return lu_solve(self.lu, rhs, trans=1 if transposed else 0)


@dataclass(frozen=True)
class ResolventData:
    system: NystromSystem
    q_nodes: np.ndarray      # (M+1, n)
    p_nodes: np.ndarray      # (M+1, n)
    v_matrix: np.ndarray     # (M+1, M+1)
    q_end: np.ndarray        # (M+1, 2m)
    p_end: np.ndarray        # (M+1, 2m); NaN where unavailable
    r_diag: np.ndarray       # (2m,); NaN where unavailable
    endpoint_ok: np.ndarray  # (2m,) bool


def gauss_legendre_union(interval: IntervalUnion, order: int):
    """Per-interval Gauss-Legendre nodes and weights, concatenated.

    An interval whose left endpoint is 0 is mapped through x = b u^2: the
    kernel can carry x^k log x terms at the hard edge and the substitution
    restores superalgebraic convergence there.  Node count stays ``order``
    per interval.
    """
    if order < 4:
        raise DomainError("quadrature order must be >= 4")
    ref_x, ref_w = leggauss(order)
    nodes, weights = [], []
    for a, b in interval.intervals:
        if a == 0.0:
            u = 0.5 * (ref_x + 1.0)
            wu = 0.5 * ref_w
            nodes.append(b * u**2)
            weights.append(2.0 * b * u * wu)
        else:
            half = 0.5 * (b - a)
            nodes.append(a + half * (ref_x + 1.0))
            weights.append(half * ref_w)
    return np.concatenate(nodes), np.concatenate(weights)


def build_nystrom(params: ModelParams, interval: IntervalUnion, order: int) -> NystromSystem:
    nodes, weights = gauss_legendre_union(interval, order)
    kmat = kernel.kernel_grid(params, nodes, nodes) * weights[None, :]
    ident = np.eye(nodes.size)
    lu = lu_factor(ident - kmat)
    diag = np.diag(lu[0])
    if np.any(diag == 0.0):
        raise EvaluationError("I - K numerically singular (unit eigenvalue)")
    swaps = int(np.sum(lu[1] != np.arange(nodes.size)))
    sign = float(np.prod(np.sign(diag)) * (-1.0) ** swaps)
    logdet = float(np.sum(np.log(np.abs(diag))))
    return NystromSystem(
        params=params,
        interval=interval,
        order=order,
        nodes=nodes,
        weights=weights,
        kernel_matrix=kmat,
        lu=lu,
        logdet=logdet,
        det_sign=sign,
    )


def gap_probability(
    params: ModelParams,
    interval: IntervalUnion,
    order: int = 40,
    system: NystromSystem | None = None,
) -> float:
    """det(I - K chi_J): probability that J holds no points of the process."""
    if system is None:
        system = build_nystrom(params, interval, order)
    if system.det_sign <= 0.0:
        raise EvaluationError(
            "nonpositive determinant: discretization failed (operator norm >= 1?)"
        )
    return float(np.exp(system.logdet))


def log_gap(params: ModelParams, interval: IntervalUnion, order: int = 40) -> float:
    system = build_nystrom(params, interval, order)
    if system.det_sign <= 0.0:
        raise EvaluationError("nonpositive determinant in log_gap")
    return system.logdet


def _endpoints_available(params: ModelParams, interval: IntervalUnion) -> np.ndarray:
    ok = np.ones(2 * interval.m, dtype=bool)
    for k, a in enumerate(interval.endpoints):
        if a == 0.0:
            try:
                specfun.g_at_zero(params)
            except EvaluationError:
                ok[k] = False
    return ok


def _kernel_column(params: ModelParams, nodes: np.ndarray, y: float) -> np.ndarray:
    """K(x_i, y) for the node vector; y may sit at an endpoint."""
    if y == 0.0:
        psi0 = specfun.psi_at_zero(params)
        phis = specfun.phi_many(params, nodes)
        return (phis.T @ psi0) / nodes
    return kernel.kernel_grid(params, nodes, [y])[:, 0]


def solve_qp(params: ModelParams, system: NystromSystem) -> ResolventData:
    """Q_j, P_j on nodes and endpoints, V matrix, resolvent diagonal."""
    nodes, weights = system.nodes, system.weights
    M = params.M
    phis = specfun.phi_many(params, nodes)        # (M+1, n)
    psis = specfun.psi_many(params, nodes)        # (M+1, n)
    q_nodes = system.solve(phis.T).T              # (M+1, n)
    # adjoint kernel: (I - W^{-1} A^T W) p = psi  =>  (I - A^T)(W p) = W psi
    wp = system.solve((weights[None, :] * psis).T, transposed=True).T
    p_nodes = wp / weights[None, :]
    v_matrix = (phis * weights[None, :]) @ p_nodes.T

    ends = np.asarray(system.interval.endpoints)
    ok = _endpoints_available(params, system.interval)
    q_end = np.full((M + 1, ends.size), np.nan)
    p_end = np.full((M + 1, ends.size), np.nan)
    r_diag = np.full(ends.size, np.nan)
    wq = weights[None, :] * q_nodes               # (M+1, n)
    for k, a in enumerate(ends):
        # Nystrom natural extension off the grid
        row = kernel.kernel_grid(params, [a], nodes)[0] if a > 0.0 else _kernel_row_at_zero(params, nodes)
        q_end[:, k] = specfun.phi_many(params, [a])[:, 0] + wq @ row
        if not ok[k]:
            continue
        col = _kernel_column(params, nodes, a)
        psi_a = (
            specfun.psi_many(params, [a])[:, 0] if a > 0.0 else specfun.psi_at_zero(params)
        )
        p_end[:, k] = psi_a + (weights[None, :] * p_nodes) @ col
        # R = K + K R: interpolate the resolvent column through node values
        r_col = system.solve(col)
        k_diag = (
            kernel.kernel_diag(params, [a])[0]
            if a > 0.0
            else kernel.kernel_bilinear(params, 0.0, 0.0)
        )
        r_diag[k] = k_diag + float((row * weights) @ r_col)
    return ResolventData(
        system=system,
        q_nodes=q_nodes,
        p_nodes=p_nodes,
        v_matrix=v_matrix,
        q_end=q_end,
        p_end=p_end,
        r_diag=r_diag,
        endpoint_ok=ok,
    )


def _kernel_row_at_zero(params: ModelParams, nodes: np.ndarray) -> np.ndarray:
    phi0 = specfun.phi_at_zero(params)
    psis = specfun.psi_many(params, nodes)
    return (phi0 @ psis) / (-nodes)


def resolvent_kernel(
    params: ModelParams,
    rdata: ResolventData,
    x: float,
    y: float,
) -> float:
    """Kernel of (1-K)^{-1} K at (x, y); zero for y outside the closure of J.

    Off the diagonal this is sum_j Q_j(x) P_j(y) / (x - y); on or near the
    diagonal the Neumann form R = K + K R is interpolated through the node
    values, which needs no limiting procedure.
    """
    system = rdata.system
    J = system.interval
    inside = J.contains(y) or any(abs(y - a) < 1e-13 for a in J.endpoints)
    if not inside:
        return 0.0
    if abs(x - y) >= kernel.DIAG_BAND * (1.0 + 0.5 * (x + y)):
        qx = _q_at(params, rdata, x)
        py = _p_at(params, rdata, y)
        return float(qx @ py / (x - y))
    col = _kernel_column(params, system.nodes, y)
    r_col = system.solve(col)
    kxy = kernel.kernel_bilinear(params, x, y)
    row = (
        kernel.kernel_grid(params, [x], system.nodes)[0]
        if x > 0.0
        else _kernel_row_at_zero(params, system.nodes)
    )
    return float(kxy + (row * system.weights) @ r_col)


def _q_at(params: ModelParams, rdata: ResolventData, x: float) -> np.ndarray:
    system = rdata.system
    row = (
        kernel.kernel_grid(params, [x], system.nodes)[0]
        if x > 0.0
        else _kernel_row_at_zero(params, system.nodes)
    )
    return specfun.phi_many(params, [x])[:, 0] + (
        system.weights[None, :] * rdata.q_nodes
    ) @ row


def _p_at(params: ModelParams, rdata: ResolventData, y: float) -> np.ndarray:
    system = rdata.system
    psi_y = (
        specfun.psi_many(params, [y])[:, 0] if y > 0.0 else specfun.psi_at_zero(params)
    )
    col = _kernel_column(params, system.nodes, y)
    return psi_y + (system.weights[None, :] * rdata.p_nodes) @ col


def hamiltonians(params: ModelParams, rdata: ResolventData) -> np.ndarray:
    """H_l = (-1)^l a_l R(a_l, a_l); zero at a coordinate a_l = 0."""
    ends = np.asarray(rdata.system.interval.endpoints)
    out = np.empty(ends.size)
    for k, a in enumerate(ends):
        if a == 0.0:
            out[k] = 0.0
        else:
            sign = (-1.0) ** (k + 1)
            out[k] = sign * a * rdata.r_diag[k]
    return out


def one_form(params: ModelParams, interval: IntervalUnion, order: int = 40) -> np.ndarray:
    """h_l = d/da_l log det(I - K) = (-1)^(l-1) R(a_l, a_l)."""
    system = build_nystrom(params, interval, order)
    rdata = solve_qp(params, system)
    signs = (-1.0) ** np.arange(2 * interval.m)  # (-1)^(l-1) with l = k+1
    return signs * rdata.r_diag


def logdet_a_derivative(
    params: ModelParams,
    interval: IntervalUnion,
    order: int,
    k: int,
    h: float | None = None,
    richardson: bool = True,
) -> float:
    """Central-difference d/da_k of log det(I - K), Richardson-extrapolated."""
    a = interval.endpoints[k]
    if h is None:
        h = 1e-4 * (1.0 + a)

    def central(step):
        up = log_gap(params, interval.with_endpoint(k, a + step), order)
        dn = log_gap(params, interval.with_endpoint(k, a - step), order)
        return (up - dn) / (2.0 * step)

    d1 = central(h)
    if not richardson:
        return d1
    d2 = central(h / 2.0)
    return (4.0 * d2 - d1) / 3.0
