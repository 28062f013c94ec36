"""Command-line interface.

Subcommands: ``gap`` (determinant and ODE gap curves side by side),
``kernel`` (both kernel representations on a grid), ``ode`` (full
single-interval trajectories), ``mc`` (Monte Carlo vs. reference), and
``verify`` (the full invariant suite with a pass/fail report).  Output is
CSV (RFC 4180) or JSON with a metadata block; numbers carry 17 significant
digits so runs are reproducible records.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__, dynamics, fredholm, kernel, montecarlo, specfun
from .backend import BACKEND
from .errors import DomainError, EvaluationError
from .params import IntervalUnion, ModelParams, single_interval


@dataclass
class RunConfig:
    command: str
    params: ModelParams | None
    s_max: float = 10.0
    points: int = 50
    s_values: tuple[float, ...] | None = None
    order: int = 40
    tol: float = 1e-12
    n0: int = 100
    trials: int = 20000
    seed: int = 1
    bootstrap: bool = False
    out: str = "-"
    fmt: str = "csv"
    extra: dict = field(default_factory=dict)


def _parse_nu(text: str) -> ModelParams:
    try:
        values = tuple(float(tok) for tok in text.split(",") if tok.strip() != "")
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad nu list {text!r}") from exc
    if not values:
        raise argparse.ArgumentTypeError("nu list is empty")
    return ModelParams(values)


def _parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in text.split(",") if tok.strip() != "")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="prodgap",
        description="Hard-edge gap probabilities for products of complex "
        "Gaussian matrices (number of factors inferred from the nu list).",
    )
    parser.add_argument("--version", action="version", version=f"prodgap {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, nu_required=True):
        p.add_argument("--nu", type=_parse_nu, required=nu_required,
                       help="comma-separated exponents nu_1,..,nu_M")
        p.add_argument("--order", type=int, default=40,
                       help="quadrature order per interval (default 40)")
        p.add_argument("--out", default="-", help="output path, - for stdout")
        p.add_argument("--format", dest="fmt", choices=("csv", "json"),
                       default="csv")

    p_gap = sub.add_parser("gap", help="gap probability curve, both routes")
    common(p_gap)
    p_gap.add_argument("--s-max", type=float, default=10.0)
    p_gap.add_argument("--points", type=int, default=50)
    p_gap.add_argument("--tol", type=float, default=1e-12,
                       help="ODE integrator tolerance")
    p_gap.add_argument("--bootstrap", action="store_true",
                       help="start the ODE from the Nystrom solve")

    p_ker = sub.add_parser("kernel", help="kernel values on a square grid")
    common(p_ker)
    p_ker.add_argument("--grid-max", type=float, default=10.0)
    p_ker.add_argument("--points", type=int, default=10,
                       help="points per axis")

    p_ode = sub.add_parser("ode", help="single-interval trajectories")
    common(p_ode)
    p_ode.add_argument("--s-max", type=float, default=10.0)
    p_ode.add_argument("--points", type=int, default=50)
    p_ode.add_argument("--tol", type=float, default=1e-12)
    p_ode.add_argument("--bootstrap", action="store_true")

    p_mc = sub.add_parser("mc", help="Monte Carlo gap estimates vs reference")
    common(p_mc)
    p_mc.add_argument("--n0", type=int, default=100, help="base dimension")
    p_mc.add_argument("--trials", type=int, default=20000)
    p_mc.add_argument("--seed", type=int, default=1)
    p_mc.add_argument("--s", dest="s_values", type=_parse_floats,
                      default=(0.5, 1.0, 2.0), help="comma-separated s values")

    p_ver = sub.add_parser("verify", help="run every invariant suite")
    common(p_ver)
    p_ver.add_argument("--seed", type=int, default=1,
                       help="seed for the stochastic checks")
    p_ver.add_argument("--trials", type=int, default=10000)

    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(command=args.command, params=args.nu)
    for name in ("s_max", "points", "order", "tol", "n0", "trials", "seed",
                 "bootstrap", "out", "fmt", "s_values"):
        if hasattr(args, name):
            setattr(cfg, name, getattr(args, name))
    if hasattr(args, "grid_max"):
        cfg.extra["grid_max"] = args.grid_max
    return cfg


def _fmt_num(v: float) -> str:
    return f"{float(v):.17g}"


def _emit(cfg: RunConfig, header: list[str], rows: list[list[float]], metadata: dict):
    if cfg.fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, quoting=csv.QUOTE_MINIMAL, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt_num(v) for v in row])
        text = buf.getvalue()
    else:
        columns = {name: [float(row[i]) for row in rows] for i, name in enumerate(header)}
        text = json.dumps({"metadata": metadata, "columns": columns}, indent=2) + "\n"
    if cfg.out == "-":
        sys.stdout.write(text)
    else:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _metadata(cfg: RunConfig) -> dict:
    return {
        "command": cfg.command,
        "nu": list(cfg.params.nu) if cfg.params else None,
        "factors": cfg.params.M if cfg.params else None,
        "order": cfg.order,
        "tol": cfg.tol,
        "version": __version__,
        "backend": BACKEND,
    }


def cmd_gap(cfg: RunConfig) -> int:
    params = cfg.params
    if cfg.s_max < 0:
        raise DomainError("s-max must be nonnegative")
    if cfg.s_max == 0.0:
        rows = [[0.0, 1.0, 1.0, 0.0]]
    else:
        grid = np.linspace(0.0, cfg.s_max, cfg.points)
        sol, _ = dynamics.integrate_single(
            params, cfg.s_max, tol=cfg.tol, bootstrap=cfg.bootstrap
        )
        rows = []
        for s in grid:
            f_ode = sol.gap(float(s))
            f_fred = (
                1.0
                if s == 0.0
                else fredholm.gap_probability(params, single_interval(float(s)), cfg.order)
            )
            rows.append([float(s), f_fred, f_ode, abs(f_fred - f_ode)])
    _emit(cfg, ["s", "F_fredholm", "F_ode", "abs_diff"], rows, _metadata(cfg))
    return 0


def cmd_kernel(cfg: RunConfig) -> int:
    params = cfg.params
    gmax = cfg.extra.get("grid_max", 10.0)
    pts = np.linspace(gmax / cfg.points, gmax, cfg.points)
    rows = []
    for x in pts:
        for y in pts:
            kb = kernel.kernel_bilinear(params, float(x), float(y))
            ki = kernel.kernel_integral(params, float(x), float(y))
            rows.append([float(x), float(y), kb, ki, abs(kb - ki)])
    _emit(cfg, ["x", "y", "K_bilinear", "K_integral", "abs_diff"], rows, _metadata(cfg))
    return 0


def cmd_ode(cfg: RunConfig) -> int:
    params = cfg.params
    M = params.M
    sol, _ = dynamics.integrate_single(
        params, cfg.s_max, tol=cfg.tol, bootstrap=cfg.bootstrap
    )
    grid = np.linspace(max(sol.eps, cfg.s_max / cfg.points), cfg.s_max, cfg.points)
    header = ["s"]
    for name in ("x", "y"):
        for j in range(M + 1):
            header += [f"{name}{j}_re", f"{name}{j}_im"]
    header += [f"xi{j}" for j in range(M + 1)]
    header += [f"eta{j}" for j in range(M + 1)]
    header.append("F")
    rows = []
    for s in grid:
        st = sol.state(float(s))
        row = [float(s)]
        for vec in (st.x, st.y):
            for z in vec:
                row += [float(z.real), float(z.imag)]
        row += [float(v.real) for v in st.xi]
        row += [float(v.real) for v in st.eta]
        row.append(sol.gap(float(s)))
        rows.append(row)
    _emit(cfg, header, rows, _metadata(cfg))
    return 0


def cmd_mc(cfg: RunConfig) -> int:
    params = cfg.params
    spec = montecarlo.EnsembleSpec(
        n0=cfg.n0, params=params, trials=cfg.trials, seed=cfg.seed
    )
    s_values = sorted(cfg.s_values or (0.5, 1.0, 2.0))
    rows = []
    for s in s_values:
        est, err = montecarlo.empirical_gap(spec, float(s))
        ref = fredholm.gap_probability(params, single_interval(float(s)), cfg.order)
        rows.append([float(s), est, err, ref])
    meta = _metadata(cfg)
    meta.update({"n0": cfg.n0, "trials": cfg.trials, "seed": cfg.seed})
    _emit(cfg, ["s", "empirical", "stderr", "F_reference"], rows, meta)
    return 0


# ---------------------------------------------------------------------------
# verification suites


def _suite_specfun(params):
    grid = np.geomspace(1e-3, 50.0, 20)
    worst = 0.0
    for t in grid:
        worst = max(worst, abs(specfun.ode_residual_f(params, float(t), relative=True)))
        worst = max(worst, abs(specfun.ode_residual_g(params, float(t), relative=True)))
    return worst <= 1e-8, f"max relative residual {worst:.2e} (tol 1e-8)"


def _suite_continuity(params):
    grid = np.geomspace(1e-3, 50.0, 20)
    phis = specfun.phi_many(params, grid)
    psis = specfun.psi_many(params, grid)
    num = np.abs(np.sum(phis[: params.M + 1] * psis, axis=0))
    den = np.sum(np.abs(phis[: params.M + 1] * psis), axis=0)
    worst = float(np.max(num / den))
    return worst <= 1e-10, f"max relative cancellation {worst:.2e} (tol 1e-10)"


def _suite_dual_rep(params):
    pts = np.linspace(2.0, 10.0, 5)
    worst = 0.0
    for x in pts:
        for y in pts:
            kb = kernel.kernel_bilinear(params, float(x), float(y))
            ki = kernel.kernel_integral(params, float(x), float(y))
            worst = max(worst, abs(kb - ki) / (1.0 + abs(kb)))
    return worst <= 1e-8, f"max representation mismatch {worst:.2e} (tol 1e-8)"


def _suite_bessel_reduction(_params):
    p1 = ModelParams((0.0,))
    worst = 0.0
    for x in (0.3, 1.0, 4.0, 9.0):
        for y in (0.5, 2.0, 7.0):
            kb = kernel.kernel_bilinear(p1, x, y)
            ref = 4.0 * kernel.bessel_kernel(0.0, 4.0 * x, 4.0 * y)
            worst = max(worst, abs(kb - ref))
    return worst <= 1e-10, f"max Bessel-reduction error {worst:.2e} (tol 1e-10)"


def _suite_selfconv(params):
    f1 = fredholm.gap_probability(params, single_interval(10.0), 40)
    f2 = fredholm.gap_probability(params, single_interval(10.0), 80)
    diff = abs(f1 - f2)
    return diff <= 1e-10, f"order 40 vs 80 determinant diff {diff:.2e} (tol 1e-10)"


def _suite_tau(params, bootstrap):
    sol, _ = dynamics.integrate_single(params, 10.0, bootstrap=bootstrap)
    worst = 0.0
    for s in (0.5, 2.0, 10.0):
        f_o = sol.gap(s)
        f_n = fredholm.gap_probability(params, single_interval(s), 60)
        worst = max(worst, abs(f_o - f_n))
    return worst <= 1e-6, f"max |F_ode - F_nystrom| {worst:.2e} (tol 1e-6)"


def _suite_hamiltonian(params):
    interval = IntervalUnion((0.5, 2.0))
    system = fredholm.build_nystrom(params, interval, 40)
    rdata = fredholm.solve_qp(params, system)
    h_res = fredholm.hamiltonians(params, rdata)
    state = dynamics.state_from_fredholm(params, interval, 40, rdata)
    worst = 0.0
    for k in range(2):
        h_coord = dynamics.hamiltonian_explicit(state, k)
        d = fredholm.logdet_a_derivative(params, interval, 40, k)
        h_fd = -interval.endpoints[k] * d
        worst = max(worst, abs(h_coord - h_res[k]), abs(h_coord - h_fd))
    return worst <= 1e-6, f"max pairwise Hamiltonian mismatch {worst:.2e} (tol 1e-6)"


def _suite_involution(params):
    interval = IntervalUnion((0.5, 2.0))
    state = dynamics.state_from_fredholm(params, interval, 40)
    g1 = dynamics.hamiltonian_gradient(state, 0)
    g2 = dynamics.hamiltonian_gradient(state, 1)
    br = dynamics.poisson_bracket(g1, g2, state.endpoints, params.M)
    h1 = dynamics.hamiltonian_explicit(state, 0)
    h2 = dynamics.hamiltonian_explicit(state, 1)
    rel = abs(br) / (1.0 + abs(h1) * abs(h2))
    return rel <= 1e-6, f"|{{H1,H2}}| = {rel:.2e} relative (tol 1e-6)"


def _convergence_order(res_h, res_h2):
    orders = []
    for key in res_h:
        if res_h[key] > 1e-13 and res_h2[key] > 1e-14:
            orders.append(np.log2(res_h[key] / res_h2[key]))
    return min(orders) if orders else float("inf")


def _suite_pde(params):
    interval = IntervalUnion((0.5, 1.0, 1.5, 2.2))
    r1 = dynamics.pde_residuals(params, interval, 24, 1e-3)
    r2 = dynamics.pde_residuals(params, interval, 24, 5e-4)
    order = _convergence_order(r1, r2)
    return order >= 1.9, f"empirical order {order:.2f} (need >= 1.9)"


def _suite_schlesinger(params):
    interval = IntervalUnion((0.5, 1.0, 1.5, 2.2))
    r1 = dynamics.schlesinger_residuals(params, interval, 24, 1e-3)
    r2 = dynamics.schlesinger_residuals(params, interval, 24, 5e-4)
    order = _convergence_order(r1, r2)
    z_samples = (3.5, 4.0 + 1.5j, 0.17)
    i1 = dynamics.isomonodromy_residual(params, interval, 24, z_samples, 1e-3)
    i2 = dynamics.isomonodromy_residual(params, interval, 24, z_samples, 5e-4)
    iorder = float(np.log2(i1 / i2)) if i2 > 1e-14 else float("inf")
    ok = order >= 1.9 and iorder >= 1.9
    return ok, f"matrix-equation order {order:.2f}, deformation order {iorder:.2f} (need >= 1.9)"


def _suite_structural(params):
    grid = np.linspace(0.5, 8.0, 6)
    curve = dynamics.gap_curve_fredholm(params, grid, order=40)
    decreasing = bool(np.all(np.diff(curve.f) < 0))
    in_range = bool(np.all((curve.f > 0) & (curve.f <= 1)))
    s0 = 1e-2
    f_small = fredholm.gap_probability(params, single_interval(s0), 40)
    nodes, weights = fredholm.gauss_legendre_union(single_interval(s0), 40)
    trace = float(weights @ kernel.kernel_diag(params, nodes))
    slope_err = abs((1.0 - f_small) - trace)
    ok = decreasing and in_range and slope_err <= s0**2
    return ok, (
        f"decreasing={decreasing} range={in_range} "
        f"small-s slope error {slope_err:.2e} (tol {s0**2:.0e})"
    )


def _suite_mc(params, seed, trials):
    spec = montecarlo.EnsembleSpec(
        n0=1, params=ModelParams((0.0,)), trials=trials, seed=seed
    )
    worst = 0.0
    for s in (0.5, 1.0, 2.0):
        est, err = montecarlo.empirical_gap(spec, s)
        worst = max(worst, abs(est - np.exp(-s)) / err)
    return worst <= 3.0, f"max deviation {worst:.2f} standard errors (tol 3)"


def cmd_verify(cfg: RunConfig) -> int:
    params = cfg.params
    try:
        specfun.psi_at_zero(params)
        bootstrap = False
    except EvaluationError:
        bootstrap = True
    suites = [
        ("specfun_ode_residuals", lambda: _suite_specfun(params)),
        ("kernel_continuity", lambda: _suite_continuity(params)),
        ("kernel_dual_representation", lambda: _suite_dual_rep(params)),
        ("bessel_reduction", lambda: _suite_bessel_reduction(params)),
        ("nystrom_self_convergence", lambda: _suite_selfconv(params)),
        ("tau_agreement", lambda: _suite_tau(params, bootstrap)),
        ("hamiltonian_triple", lambda: _suite_hamiltonian(params)),
        ("involution", lambda: _suite_involution(params)),
        ("pde_residual_convergence", lambda: _suite_pde(params)),
        ("schlesinger_isomonodromy", lambda: _suite_schlesinger(params)),
        ("structural_gap_curve", lambda: _suite_structural(params)),
        ("mc_exponential_law", lambda: _suite_mc(params, cfg.seed, cfg.trials)),
    ]
    all_ok = True
    rows = []
    for name, fn in suites:
        t0 = time.time()
        try:
            ok, detail = fn()
        except Exception as exc:  # keep going; report the failure
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        all_ok &= ok
        status = "PASS" if ok else "FAIL"
        print(f"[{status}] {name}: {detail} ({time.time() - t0:.1f}s)")
        rows.append((name, ok, detail))
    if cfg.out != "-":
        payload = {
            "metadata": _metadata(cfg),
            "checks": [
                {"name": n, "passed": bool(p), "detail": d} for n, p, d in rows
            ],
        }
        with open(cfg.out, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
    return 0 if all_ok else 1


_COMMANDS = {
    "gap": cmd_gap,
    "kernel": cmd_kernel,
    "ode": cmd_ode,
    "mc": cmd_mc,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = _config_from_args(args)
    try:
        return _COMMANDS[cfg.command](cfg)
    except (DomainError, EvaluationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
