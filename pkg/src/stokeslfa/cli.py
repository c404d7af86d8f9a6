"""Command-line front end: ``stokeslfa <command> [options]``.

Commands: ``smooth``, ``twogrid``, ``optimize``, ``solve``, ``table <id>``,
``tables list``.  Exit codes: 0 success, 1 numerical failure, 2 usage.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys

import numpy as np

from . import lfa
from . import mgsolver as mg
from . import tables as tb
from .relaxation import SCHEME_PARAMS, SCHEMES, RelaxScheme
from .symbols import Discretization

PARAM_FLAGS = ("alpha", "alpha1", "alpha2", "omega", "omega_j", "delta", "sigma")
DEVIATION_FLAG = 0.03


class UsageError(Exception):
    pass


def _add_problem_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--disc", choices=("posd", "prsd", "q2q1"), required=True)
    p.add_argument("--scheme", choices=SCHEMES, required=True)
    p.add_argument("--beta", type=float, default=None, help="stabilization weight (default per discretization)")
    for name in PARAM_FLAGS:
        p.add_argument(f"--{name.replace('_', '-')}", dest=name, type=float, default=None)
    p.add_argument("--sweeps", type=int, default=2, help="IBSR Jacobi sweeps on the Schur complement")
    p.add_argument("--inner-cycles", type=int, default=0, help="IBSR inner W(1,1) cycles (0: Jacobi sweeps)")
    p.add_argument("--out", help="write a CSV file")


def _add_cycle_flags(p: argparse.ArgumentParser, nu_default=(1, 1)) -> None:
    p.add_argument("--nu1", type=int, default=nu_default[0])
    p.add_argument("--nu2", type=int, default=nu_default[1])
    p.add_argument("--coarsen", choices=("redisc", "galerkin"), default="redisc")


def _scheme_from_args(args) -> RelaxScheme:
    kw = {k: getattr(args, k) for k in PARAM_FLAGS if getattr(args, k) is not None}
    unused = sorted(set(kw) - set(SCHEME_PARAMS[args.scheme]))
    if unused:
        raise UsageError(f"parameters {', '.join(unused)} do not apply to {args.scheme}")
    try:
        return RelaxScheme(args.scheme, sweeps=args.sweeps, inner_cycles=args.inner_cycles, **kw)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _disc_from_args(args) -> Discretization:
    return Discretization(args.disc, beta=args.beta)


def _header(fields: dict) -> str:
    return "# " + " ".join(f"{k}={v}" for k, v in fields.items())


def _write_csv(path, header: dict, columns, rows) -> None:
    buf = io.StringIO()
    buf.write(_header(header) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    w.writerows(rows)
    text = buf.getvalue()
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _fmt_theta(theta) -> str:
    if theta is None:
        return "-"
    return f"({theta.theta1:.6f}, {theta.theta2:.6f})"


def _params_text(scheme: RelaxScheme) -> str:
    return " ".join(f"{k}={v:g}" for k, v in scheme.params().items())


def _parse_range(text: str) -> list[float]:
    """``lo:hi:step`` (inclusive) or a comma list."""
    try:
        if ":" in text:
            lo, hi, step = (float(v) for v in text.split(":"))
            if step <= 0 or hi < lo:
                raise ValueError
            return lfa.frange(lo, hi, step)
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"bad range {text!r}; expected lo:hi:step or v1,v2,...") from None


def _parse_grid(items) -> dict:
    grid = {}
    for item in items or ():
        name, _, rng = item.partition("=")
        name = name.replace("-", "_")
        if name not in PARAM_FLAGS or not rng:
            raise UsageError(f"bad grid entry {item!r}; expected name=lo:hi:step")
        grid[name] = _parse_range(rng)
    return grid


# --------------------------------------------------------------------------
# commands


def cmd_smooth(args) -> int:
    disc = _disc_from_args(args)
    if args.optimal:
        try:
            opt = lfa.theorem_optima(disc, args.scheme)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        scheme = opt.scheme
        print(f"optimum mu = {opt.mu} ({float(opt.mu):.6f}) for {opt.constraints}")
    else:
        scheme = _scheme_from_args(args)
    res = lfa.smoothing_factor(scheme, disc, args.samples)
    print(f"mu = {res.factor:.6f}  argmax theta = {_fmt_theta(res.argmax_theta)}  [{_params_text(scheme)}]")
    if args.out:
        header = {"command": "smooth", "disc": disc.kind, "beta": disc.beta, "scheme": scheme.kind,
                  "samples": args.samples, **scheme.params()}
        _write_csv(args.out, header, ("mu", "theta1", "theta2"),
                   [(res.factor, res.argmax_theta.theta1, res.argmax_theta.theta2)])
    return 0


def cmd_twogrid(args) -> int:
    disc = _disc_from_args(args)
    tg = lfa.TwoGridSpec(args.nu1, args.nu2, args.coarsen, args.samples)
    if args.optimal:
        step, radius = lfa.default_refinement(disc.kind)
        res = lfa.optimize_params(RelaxScheme(args.scheme, sweeps=args.sweeps), disc, tg,
                                  lfa.default_grid(args.scheme), N=args.samples,
                                  search_N=lfa.default_search_samples(disc.kind),
                                  refine_step=step, refine_radius=radius)
        scheme = res.params
    else:
        scheme = _scheme_from_args(args)
    header = {"command": "twogrid", "disc": disc.kind, "beta": disc.beta, "scheme": scheme.kind,
              "nu1": tg.nu1, "nu2": tg.nu2, "coarsening": tg.coarsening, "samples": tg.samples, **scheme.params()}
    if args.sweep:
        names = [s.strip().replace("-", "_") for s in args.sweep.split(",")]
        if len(names) != 2 or not args.range1 or not args.range2:
            raise UsageError("--sweep needs two parameter names plus --range1 and --range2")
        axes = {names[0]: _parse_range(args.range1), names[1]: _parse_range(args.range2)}
        try:
            grid = lfa.parameter_sweep(scheme, disc, tg, axes, N=args.samples)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        rows = [(a, b, grid[i, j]) for i, a in enumerate(axes[names[0]]) for j, b in enumerate(axes[names[1]])]
        _write_csv(args.out or "-", header, (names[0], names[1], "rho"), rows)
        return 0
    res = lfa.two_grid_factor(scheme, disc, tg)
    print(f"rho = {res.factor:.6f}  argmax theta = {_fmt_theta(res.argmax_theta)}  [{_params_text(scheme)}]")
    if args.spectrum:
        t1, t2, eig = lfa.two_grid_spectrum(scheme, disc, tg)
        rows = [(a, b, z.real, z.imag) for a, b, zs in zip(t1, t2, eig) for z in zs]
        _write_csv(args.spectrum, header, ("theta1", "theta2", "real", "imag"), rows)
    if args.out:
        _write_csv(args.out, header, ("rho", "theta1", "theta2"),
                   [(res.factor, res.argmax_theta.theta1, res.argmax_theta.theta2)])
    return 0


def cmd_optimize(args) -> int:
    disc = _disc_from_args(args)
    custom = _parse_grid(args.grid)
    grid = custom or lfa.default_grid(args.scheme)
    step, radius = lfa.default_refinement(disc.kind)
    if custom or args.refine is not None:
        # an explicit grid or --refine overrides the built-in refinement; --refine 0 disables it
        step = args.refine or None
    base = _scheme_from_args(args)
    objective = "smoothing" if args.objective == "smoothing" else lfa.TwoGridSpec(
        args.nu1, args.nu2, args.coarsen, args.samples)
    search = args.search_samples or lfa.default_search_samples(disc.kind)
    res = lfa.optimize_params(base, disc, objective, grid, N=args.samples, search_N=search,
                              refine_step=step, refine_radius=radius)
    print(f"{args.objective} factor = {res.factor:.6f}  [{_params_text(res.params)}]")
    if args.out:
        header = {"command": "optimize", "disc": disc.kind, "scheme": base.kind, "objective": args.objective,
                  "samples": args.samples, "search_samples": search}
        names = list(res.params.params())
        _write_csv(args.out, header, (*names, "factor"), [(*res.params.params().values(), res.factor)])
    return 0


def cmd_solve(args) -> int:
    if args.config:
        exps = mg.load_experiments(args.config)
        failed = False
        for exp in exps:
            rows = list(mg.run_experiment(exp, with_lfa=not args.no_lfa))
            for row in rows:
                print(",".join(str(row[c]) for c in mg.RESULT_COLUMNS))
                failed |= not math.isfinite(row["rho_hat"])
            if args.out:
                mg.append_results(args.out, rows)
        return 1 if failed else 0
    if args.disc is None or args.scheme is None:
        raise UsageError("solve needs --disc and --scheme (or --config)")
    disc = _disc_from_args(args)
    scheme = _scheme_from_args(args)
    cycle = mg.CycleSpec(args.cycle, args.nu1, args.nu2, args.coarsen)
    status = 0
    out_rows = []
    for n in args.n:
        rep = mg.measure_rho_hat(disc, cycle, scheme, n, args.k, args.seed)
        rho_lfa = float("nan")
        if not args.no_lfa and args.nu1 + args.nu2 > 0:
            rho_lfa = lfa.two_grid_factor(scheme, disc, lfa.TwoGridSpec(args.nu1, args.nu2, args.coarsen)).factor
        flag = " DIVERGED" if rep.diverged else ""
        print(f"n={n} {cycle.label} rho_hat={rep.label} rho_lfa={rho_lfa:.3f} time={rep.wall_time:.1f}s{flag}")
        status = 1 if rep.overflow else status
        out_rows.append(("cli", n, args.cycle, args.nu1, args.nu2, rep.rho_hat if not rep.overflow else float("nan"),
                         rho_lfa, round(rep.wall_time, 3)))
    if args.out:
        header = {"command": "solve", "disc": disc.kind, "beta": disc.beta, "scheme": scheme.kind,
                  "cycle": args.cycle, "coarsening": args.coarsen, "k": args.k, "seed": args.seed, **scheme.params()}
        _write_csv(args.out, header, mg.RESULT_COLUMNS, out_rows)
    return status


def _run_lfa_table(t: tb.LFATable, samples: int):
    disc = Discretization(t.disc)
    rows = []
    for row in t.rows:
        mu = lfa.smoothing_factor(row.scheme, disc, samples).factor
        rho = lfa.two_grid_factor(row.scheme, disc, lfa.TwoGridSpec(1, 0, "redisc", samples)).factor
        rows.append((row.label, _params_text(row.scheme), f"{mu:.3f}", f"{row.mu:.3f}", f"{rho:.3f}", f"{row.rho:.3f}"))
        print(f"{row.label:22s} mu={mu:.3f} (ref {row.mu:.3f})  rho={rho:.3f} (ref {row.rho:.3f})")
    return ("label", "params", "mu", "mu_ref", "rho", "rho_ref"), rows


def cmd_table(args) -> int:
    try:
        t = tb.get_table(args.id)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from exc
    header = {"command": "table", "id": t.id, "disc": t.disc, "samples": args.samples}
    if isinstance(t, tb.LFATable):
        columns, rows = _run_lfa_table(t, args.samples)
        if args.out:
            _write_csv(args.out, header, columns, rows)
        return 0
    disc = Discretization(t.disc)
    header.update(cycle=t.cycle, k=args.k, seed=args.seed, scheme=t.scheme.kind, **t.scheme.params())
    print(f"{t.id}: {t.title}")
    rows = []
    status = 0
    for j, (nu1, nu2) in enumerate(tb.CYCLES):
        rho_lfa = lfa.two_grid_factor(t.analysis_scheme, disc, lfa.TwoGridSpec(nu1, nu2, "redisc", args.samples)).factor
        for n in args.n:
            scheme = t.scheme_for(n, j)
            rep = mg.measure_rho_hat(disc, mg.CycleSpec(t.cycle, nu1, nu2), scheme, n, args.k, args.seed)
            if n not in t.measured:
                ref_text = "-"
            else:
                ref = t.measured[n][j]
                ref_text = "NAN" if ref is None else f"{ref:.3f}"
            flags = []
            if rep.diverged:
                flags.append("divergent")
            if rep.overflow:
                status = 1
            if not rep.diverged and abs(rep.rho_hat - rho_lfa) > DEVIATION_FLAG:
                flags.append("deviates-from-lfa")
            inner = f"({scheme.inner_cycles})" if scheme.inner_cycles else ""
            print(f"{mg.CycleSpec(t.cycle, nu1, nu2).label:8s} n={n:<4d} rho_hat={rep.label}{inner:4s} "
                  f"ref={ref_text:8s} rho_lfa={rho_lfa:.3f} {' '.join(flags)}")
            rows.append((t.cycle, nu1, nu2, n, scheme.inner_cycles, rep.label, ref_text, f"{rho_lfa:.3f}",
                         ";".join(flags)))
    if args.out:
        _write_csv(args.out, header,
                   ("cycle", "nu1", "nu2", "n", "inner_cycles", "rho_hat", "rho_ref", "rho_lfa", "flags"), rows)
    return status


def cmd_tables(args) -> int:
    for tid in tb.table_ids():
        print(f"{tid:20s} {tb.get_table(tid).title}")
    return 0


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stokeslfa", description="LFA and multigrid for Stokes block relaxation")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("smooth", help="LFA smoothing factor")
    _add_problem_flags(p)
    p.add_argument("--samples", type=int, default=128)
    p.add_argument("--optimal", action="store_true", help="use the closed-form optimal parameters")
    p.set_defaults(func=cmd_smooth)

    p = sub.add_parser("twogrid", help="LFA two-grid factor, spectrum and parameter sweeps")
    _add_problem_flags(p)
    _add_cycle_flags(p)
    p.add_argument("--samples", type=int, default=128)
    p.add_argument("--optimal", action="store_true", help="brute-force optimize the parameters first")
    p.add_argument("--spectrum", help="CSV file for all two-grid eigenvalues")
    p.add_argument("--sweep", help="two parameter names, e.g. alpha,omega (writes the factor grid)")
    p.add_argument("--range1", help="lo:hi:step for the first sweep parameter")
    p.add_argument("--range2", help="lo:hi:step for the second sweep parameter")
    p.set_defaults(func=cmd_twogrid)

    p = sub.add_parser("optimize", help="brute-force parameter optimization")
    _add_problem_flags(p)
    _add_cycle_flags(p, (1, 0))
    p.add_argument("--objective", choices=("smoothing", "twogrid"), default="twogrid")
    p.add_argument("--grid", nargs="*", help="name=lo:hi:step entries (default: built-in grid)")
    p.add_argument("--samples", type=int, default=128)
    p.add_argument("--search-samples", type=int, default=None, help="sampling used during the search (default 32, 16 for q2q1)")
    p.add_argument("--refine", type=float, default=None, help="local refinement step after the grid search (default 0.05 for q2q1 on the built-in grid, 0 disables)")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("solve", help="measure multigrid convergence on periodic grids")
    p.add_argument("--config", help="JSON experiment file (overrides the problem flags)")
    p.add_argument("--disc", choices=("posd", "prsd", "q2q1"))
    p.add_argument("--scheme", choices=SCHEMES)
    p.add_argument("--beta", type=float, default=None)
    for name in PARAM_FLAGS:
        p.add_argument(f"--{name.replace('_', '-')}", dest=name, type=float, default=None)
    p.add_argument("--sweeps", type=int, default=2)
    p.add_argument("--inner-cycles", type=int, default=0)
    _add_cycle_flags(p)
    p.add_argument("--cycle", choices=("V", "W", "TG"), default="W")
    p.add_argument("--n", type=int, nargs="+", default=[64])
    p.add_argument("--k", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-lfa", action="store_true", help="skip the LFA prediction column")
    p.add_argument("--out", help="CSV file (appended to for --config runs)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("table", help="reproduce one table by id (see 'tables list')")
    p.add_argument("id")
    p.add_argument("--n", type=int, nargs="+", default=[64, 128])
    p.add_argument("--k", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=128)
    p.add_argument("--out")
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("tables", help="list table ids")
    p.add_argument("action", choices=("list",))
    p.set_defaults(func=cmd_tables)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"stokeslfa: error: {exc}", file=sys.stderr)
        return 2
    except (lfa.AnalysisError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"stokeslfa: numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
