"""Command line entry point: ``kirchhoff <command> [options]``.

Exit codes: 0 success, 2 invalid input, 3 solver failure, 4 falsified assertion.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import io
from .params import DomainError, PreconditionError, ProblemParams, SolverError

OUT_ENV = "KIRCHHOFF_OUT"
EXIT_INPUT, EXIT_SOLVER, EXIT_FALSIFIED = 2, 3, 4


class Falsified(Exception):
    def __init__(self, what, payload):
        super().__init__(what)
        self.payload = payload


def parse_a_grid(spec: str):
    """'log:lo:hi:n', 'lin:lo:hi:n' or a comma list."""
    if spec is None:
        return None
    if spec.startswith(("log:", "lin:")):
        kind, lo, hi, n = spec.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
        if n < 1 or lo <= 0 and kind == "log":
            raise DomainError(f"bad grid {spec!r}")
        vals = np.geomspace(lo, hi, n) if kind == "log" else np.linspace(lo, hi, n)
        return [float(v) for v in vals]
    vals = [float(v) for v in spec.split(",") if v.strip()]
    if not vals:
        raise DomainError("empty a grid")
    return sorted(vals)


def read_config(path) -> dict:
    """key = value lines; '#' starts a comment; keys use option names without dashes."""
    cfg = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DomainError(f"{path}:{lineno}: expected key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        cfg[k.replace("-", "_")] = v
    return cfg


def _bool(v):
    if isinstance(v, bool):
        return v
    return str(v).lower() in ("1", "true", "yes", "on")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value file; flags override its entries")
    common.add_argument("--N", type=int, default=1)
    common.add_argument("--p", type=float, default=3.0)
    common.add_argument("--a", default="auto", help="coupling; 'auto' picks a command-specific value")
    common.add_argument("--b", type=float, default=1.0)
    common.add_argument("--f-inf", dest="f_inf", type=float, default=1.0)
    common.add_argument("--f-min", dest="f_min", type=float, default=None)
    common.add_argument("--f-max", dest="f_max", type=float, default=None)
    common.add_argument("--tol", type=float, default=None)
    common.add_argument("--out", default=None, help=f"output directory (default ${OUT_ENV} or ./kirchhoff_out)")
    common.add_argument("--format", choices=("json", "csv", "both"), default="both")
    common.add_argument("--a-grid", dest="a_grid", default=None)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--theorem", default=None)

    ap = argparse.ArgumentParser(prog="kirchhoff", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("ground-state", parents=[common], help="shoot the semilinear ground state")
    sub.add_parser("branch", parents=[common], help="branch roots and classes over an a grid")
    sub.add_parser("thresholds", parents=[common], help="all named constants")
    fib = sub.add_parser("fibering", parents=[common], help="fibering-map analysis of one function")
    fib.add_argument("--from-ground-state", dest="from_ground_state", action="store_true")
    fib.add_argument("--dir-sq", dest="dir_sq", type=float, default=None)
    fib.add_argument("--mass", type=float, default=None)
    fib.add_argument("--fp", type=float, default=None)
    sub.add_parser("probe", parents=[common], help="landscape and nonexistence probes")
    sub.add_parser("pohozaev", parents=[common], help="Pohozaev residuals of branch solutions")
    na = sub.add_parser("nonauto", parents=[common], help="1D minimisation with variable f")
    na.add_argument("--profile", choices=("gaussian", "spline", "constant"), default="gaussian")
    na.add_argument("--eps", type=float, default=0.2)
    na.add_argument("--sigma", type=float, default=1.0)
    na.add_argument("--L", type=float, default=30.0)
    na.add_argument("--n", type=int, default=6000)
    tb = sub.add_parser("table", parents=[common], help="both summary tables")
    tb.add_argument("--dims", default=None, help="comma list of dimensions (default 1..6, or --N if given)")
    return ap


def parse_args(argv):
    ap = build_parser()
    args = ap.parse_args(argv)
    explicit = {a.split("=", 1)[0].lstrip("-").replace("-", "_") for a in argv if a.startswith("--")}
    if args.config:
        cfg = read_config(args.config)
        sub_ap = ap._subparsers._group_actions[0].choices[args.command]
        for k, v in cfg.items():
            if k in explicit or not hasattr(args, k):
                continue
            action = next((act for act in sub_ap._actions if act.dest == k), None)
            if action is not None and action.type is not None:
                v = action.type(v)
            elif isinstance(getattr(args, k), bool):
                v = _bool(v)
            setattr(args, k, v)
    args.explicit = explicit
    args.n_explicit = "N" in explicit or (args.config and "N" in read_config(args.config))
    return args


def out_dir(args) -> Path:
    d = Path(args.out or os.environ.get(OUT_ENV) or "kirchhoff_out")
    d.mkdir(parents=True, exist_ok=True)
    return d


def make_params(args, a=0.0) -> ProblemParams:
    return ProblemParams(args.N, args.p, a=a, b=args.b, f_inf=args.f_inf,
                         f_min=args.f_min, f_max=args.f_max)


def _want(args, kind):
    return args.format in (kind, "both")


def _gs(args, params=None):
    from .ground_state import find_ground_state

    kw = {"tol": args.tol} if args.tol else {}
    p = params or make_params(args)
    return find_ground_state(p.N, p.p, p.f_inf, **kw)


def _coupling(args, auto):
    if str(args.a).lower() == "auto":
        return auto()
    return float(args.a)


def cmd_ground_state(args):
    params = make_params(args)
    gs = _gs(args, params)
    d = out_dir(args)
    if _want(args, "json"):
        io.write_json(d / "ground_state.json", gs.summary())
    if _want(args, "csv"):
        pr = gs.profile
        io.write_csv(d / "ground_state_profile.csv", ["r", "w", "w_prime"],
                     zip(map(float, pr.nodes), map(float, pr.values), map(float, pr.derivatives)))
    print(f"w0={gs.w0:.12g} h1_sq={gs.h1_sq:.12g} energy0={gs.energy0:.12g}")


def cmd_thresholds(args):
    from .constants import compute_thresholds

    params = make_params(args, _coupling(args, lambda: 0.0))
    ts = compute_thresholds(params, _gs(args, params))
    d = out_dir(args)
    doc = ts.as_dict()
    if _want(args, "json"):
        io.write_json(d / "thresholds.json", doc)
    if _want(args, "csv"):
        io.write_csv(d / "thresholds.csv", ["name", "value", "provenance"],
                     [(k, v, ts.PROVENANCE[k]) for k, v in ts.values().items()])
    for k, v in ts.values().items():
        print(f"{k} = {v:.12g}")


def _default_grid(params, gs, ts):
    ref = ts.lambda_ if ts.lambda_ else 1.0 / gs.G
    hi = ts.nonexist_upper * 2 if ts.nonexist_upper else 1e3 * ref
    return [float(v) for v in np.geomspace(ref * 1e-2, hi, 25)]


def cmd_branch(args):
    from .branches import branch_diagram, theorem_t1_checks
    from .constants import compute_thresholds

    params = make_params(args)
    gs = _gs(args, params)
    ts = compute_thresholds(params, gs)
    grid = parse_a_grid(args.a_grid) if args.a_grid else None
    if grid is None:
        a = _coupling(args, lambda: ts.lambda_ / 2 if ts.lambda_ else 0.0)
        grid = [a] if a > 0 else _default_grid(params, gs, ts)
    diag = branch_diagram(params, gs, grid)
    doc = {"params": params.as_dict(), "G": gs.G, "rows": diag.rows,
           "fold_empirical": diag.fold_empirical, "fold_closed": diag.fold_closed}
    if args.theorem == "t1":
        checks = [theorem_t1_checks(params.with_a(a), gs, ts.lambda_).as_dict()
                  for a in grid if a < ts.lambda_]
        doc["t1_checks"] = checks
        bad = [c for c in checks if not c["passed"]]
        if bad:
            raise Falsified("t1 inequalities", {"failed": bad})
    d = out_dir(args)
    if _want(args, "json"):
        io.write_json(d / "branch.json", doc)
    if _want(args, "csv"):
        diag.write_csv(d / "branch.csv")
    for r in diag.rows:
        print(f"a={r['a']:.6g} roots={r['n_roots']} "
              + " ".join(s["nehari_class"] for s in r["solutions"]))


def _fibering_data(args, params):
    from .fibering import FunctionData

    if args.from_ground_state or args.dir_sq is None:
        gs = _gs(args, params)
        return FunctionData.from_integrals(gs.G, gs.M, gs.f_inf * gs.P, params.b), gs
    if args.mass is None or args.fp is None:
        raise DomainError("--dir-sq needs --mass and --fp")
    return FunctionData.from_integrals(args.dir_sq, args.mass, args.fp, params.b), None


def cmd_fibering(args):
    from .fibering import critical_points, sweep

    params = make_params(args, _coupling(args, lambda: 0.0))
    data, _ = _fibering_data(args, params)
    rep = critical_points(data, params)
    d = out_dir(args)
    doc = {"params": params.as_dict(), "data": data.as_dict(), "report": rep.as_dict()}
    if _want(args, "json"):
        io.write_json(d / "fibering.json", doc)
    if _want(args, "csv"):
        hi = (rep.t_plus or rep.t_hat_0 or rep.t_minus or rep.T_f) * 4
        io.write_csv(d / "fibering_sweep.csv", ["t", "h", "h_prime", "h_second"],
                     sweep(data, params, np.linspace(0, hi, 401)))
    print(f"critical points: n={rep.n_roots} t_minus={rep.t_minus} t_plus={rep.t_plus}")


def cmd_probe(args):
    from .constants import compute_thresholds
    from . import probes

    params = make_params(args)
    gs = _gs(args, params)
    ts = compute_thresholds(params, gs)
    theorem = args.theorem or "t0-1"
    if theorem == "t0-2":
        a = _coupling(args, lambda: 1.2 * ts.nonexist_upper)
        rep = probes.nonexistence_check(params, gs, a, ts)
    elif theorem == "t5":
        grid = parse_a_grid(args.a_grid) if args.a_grid else None
        rep = probes.t5_sign_checks(params, gs, grid, ts)
    elif theorem == "t0-1":
        def auto():
            if params.N <= 3:
                return 1.0
            if params.N == 4:
                return 0.5 * ts.a_star_under
            return 0.5 * ts.a_star_lower
        a = _coupling(args, auto)
        rep = probes.landscape_probe(params.with_a(a), gs, ts)
    else:
        raise DomainError(f"unknown theorem {theorem!r} (t0-1, t0-2, t5)")
    doc = {"params": params.as_dict(), "theorem": theorem, "report": rep.as_dict()}
    d = out_dir(args)
    if _want(args, "json"):
        io.write_json(d / "probe.json", doc)
    if _want(args, "csv") and rep.trajectory:
        io.write_csv(d / "probe_trajectory.csv", ["t", "J"], rep.trajectory)
    print(f"{theorem}: {rep.verdict}")
    if rep.falsified:
        raise Falsified(theorem, doc)


def cmd_pohozaev(args):
    from .constants import compute_thresholds
    from . import probes

    params = make_params(args)
    gs = _gs(args, params)
    ts = compute_thresholds(params, gs)
    grid = parse_a_grid(args.a_grid) if args.a_grid else [
        _coupling(args, lambda: ts.lambda_ / 2 if ts.lambda_ else 0.0)]
    reps = [probes.pohozaev_probe(params.with_a(a), gs, args.tol or 1e-5) for a in grid]
    doc = {"params": params.as_dict(), "reports": [r.as_dict() for r in reps]}
    d = out_dir(args)
    if _want(args, "json"):
        io.write_json(d / "pohozaev.json", doc)
    if _want(args, "csv"):
        rows = [(a, k, v["value"], v["tol"], v["pass"]) for a, r in zip(grid, reps)
                for k, v in r.residuals.items()]
        io.write_csv(d / "pohozaev.csv", ["a", "identity", "residual", "tol", "pass"], rows)
    for a, r in zip(grid, reps):
        print(f"a={a:.6g}: {r.verdict}")
    if any(r.falsified for r in reps):
        raise Falsified("pohozaev", doc)


def cmd_nonauto(args):
    from .constants import compute_thresholds
    from .ground_state import closed_form_1d
    from .nonauto1d import (CoefficientSpec, Grid1D, condition_checkers, energy_comparison,
                            gradient_check, minimize_m1)

    if args.N != 1:
        raise DomainError("nonauto runs in N = 1")
    f = CoefficientSpec(args.f_inf, args.profile, args.eps, args.sigma)
    base = f.params(args.p, b=args.b)
    gs = closed_form_1d(args.p, args.f_inf)
    ts = compute_thresholds(base, gs)
    if ts.lambda_ is None:
        raise DomainError(f"(D4) fails for this f: {ts.notes.get('lambda0')}")
    a = _coupling(args, lambda: ts.lambda_ / 2)
    params = base.with_a(a)
    grid = Grid1D(args.L, args.n)
    sol = minimize_m1(params, f, grid, tol=args.tol or 1e-8, S_p=gs.S_p)
    m3, below = energy_comparison(sol, params, f, grid)
    summary = {
        "params": params.as_dict(), "coefficient": {"kind": f.kind, "eps": f.eps, "sigma": f.sigma},
        "Lambda": ts.lambda_, "a_below_Lambda": a < ts.lambda_, "solution": sol.summary(),
        "conditions": condition_checkers(f, params, grid=grid),
        "m3": m3.as_dict(), "energy_below_m3": below,
        "gradient_check": gradient_check(params, f, Grid1D(args.L, min(args.n, 600)), 10, args.seed),
    }
    d = out_dir(args)
    if _want(args, "json"):
        io.write_json(d / "nonauto.json", summary)
    if _want(args, "csv"):
        sol.write_csv(d / "nonauto_solution.csv")
        sol.write_history(d / "nonauto_history.csv")
    print(f"energy={sol.energy:.12g} kkt={sol.kkt_residual:.3e} converged={sol.converged}")
    if not sol.converged:
        raise SolverError(f"no convergence after {sol.iterations} iterations")
    if not (sol.checks["norm_ok"] and sol.checks["energy_ok"]):
        raise Falsified("t2 bounds", summary)


def cmd_table(args):
    from . import probes

    if args.dims:
        dims = [int(v) for v in args.dims.split(",")]
    elif args.n_explicit:
        dims = [args.N]
    else:
        dims = [1, 2, 3, 4, 5, 6]
    p_fixed = args.p if "p" in args.explicit else None
    p_of = (lambda N: p_fixed) if p_fixed is not None else probes.default_p
    grid = parse_a_grid(args.a_grid) if args.a_grid else None
    tab = probes.landscape_table(dims, p_of, grid)
    d = out_dir(args)
    if _want(args, "json"):
        io.write_json(d / "table.json", tab)
    if _want(args, "csv"):
        for name, cols in (("boundedness", probes.BOUND_COLUMNS), ("solutions", probes.SOL_COLUMNS)):
            rows = []
            for row, cells in tab[name].items():
                rows.append([row] + [cells[c]["computed"] for c in cols])
            io.write_csv(d / f"table_{name}.csv", ["row", *cols], rows)
    for name, cols in (("boundedness", probes.BOUND_COLUMNS), ("solutions", probes.SOL_COLUMNS)):
        print(f"[{name}]")
        for row, cells in tab[name].items():
            print(f"  {row:8s} " + " | ".join(f"{c}: {cells[c]['computed']}" for c in cols))
    if not (tab["match"] and tab["sweep_consistent"]):
        raise Falsified("table", tab)


COMMANDS = {
    "ground-state": cmd_ground_state, "branch": cmd_branch, "thresholds": cmd_thresholds,
    "fibering": cmd_fibering, "probe": cmd_probe, "pohozaev": cmd_pohozaev,
    "nonauto": cmd_nonauto, "table": cmd_table,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else 0
    except (DomainError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        COMMANDS[args.command](args)
    except Falsified as exc:
        path = out_dir(args) / "falsification.json"
        io.write_json(path, {"command": args.command, "assertion": str(exc), "data": exc.payload})
        print(f"falsified: {exc} (details in {path})", file=sys.stderr)
        return EXIT_FALSIFIED
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (DomainError, PreconditionError, ValueError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return 0


if __name__ == "__main__":
    sys.exit(main())
