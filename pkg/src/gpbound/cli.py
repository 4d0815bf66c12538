"""Command line front end: instance generation, solving, certification, rounding,
oracle checks, and CSV report assembly.

Output paths given as relative names resolve against the ``GPBOUND_OUTDIR``
environment variable when it is set. A JSON file passed through ``--config``
takes precedence over individual flags for the keys it defines.

Exit codes: 0 success, 1 generic failure, 2 usage, 3 infeasible or malformed
problem data, 4 solver divergence, 5 certificate (sandwich) violation.
"""
from __future__ import annotations

import argparse
import json
import os
import re
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

from . import admm, certify, model, oracle, reports, rounding
from .graphs import (
    InstanceFormatError,
    KEquipartition,
    SpecValidationError,
    gen_gpkc_instance,
    gen_rand_graph,
    read_instance,
    write_instance,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 3
EXIT_DIVERGED = 4
EXIT_CERT_VIOLATION = 5

OUTDIR_ENV = "GPBOUND_OUTDIR"


@dataclass
class RunConfig:
    """Bundle of tunables accepted everywhere a config file is allowed."""

    problem: str | None = None
    relaxation: str | None = None
    eps_tol: float | None = None
    max_iter: int | None = None
    sigma0: float | None = None
    rule: str | None = None
    method: str | None = None
    samples: int | None = None
    time_limit: float | None = None
    seed: int | None = None
    m_met: int | None = None
    max_rounds: int | None = None
    mu: float | None = None
    distribution: str | None = None

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        data = json.loads(Path(path).read_text())
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def to_file(self, path) -> None:
        payload = {k: v for k, v in asdict(self).items() if v is not None}
        Path(path).write_text(json.dumps(payload, indent=2) + "\n")

    def apply_to(self, args: argparse.Namespace) -> None:
        # config values win over flags; documented contract
        for key, val in asdict(self).items():
            if val is not None and hasattr(args, key):
                setattr(args, key, val)


def _out_path(name) -> Path:
    path = Path(name)
    base = os.environ.get(OUTDIR_ENV)
    if base and not path.is_absolute():
        return Path(base) / path
    return path


def _load_problem(args):
    g, spec = read_instance(args.instance)
    problem = args.problem
    if problem is None:
        problem = "gpkc" if spec is not None else "keq"
    if problem == "keq":
        if args.k is None:
            raise SystemExit("--k is required for equipartition runs")
        return g, KEquipartition.for_graph(g.n, args.k)
    if spec is None:
        raise SpecValidationError(f"{args.instance} carries no capacity block")
    return g, spec


def _build(g, spec, relaxation):
    if isinstance(spec, KEquipartition):
        return model.build_keq_dnn(g, spec.k) if relaxation == "dnn" else model.build_keq_sdp(g, spec.k)
    return model.build_gpkc_dnn(g, spec) if relaxation == "dnn" else model.build_gpkc_sdp(g, spec)


def _k_or_w(spec) -> str:
    if isinstance(spec, KEquipartition):
        return str(spec.k)
    return str(int(spec.W)) if float(spec.W).is_integer() else repr(float(spec.W))


def _read_lb(args) -> float | None:
    if getattr(args, "lb", None) is not None:
        return args.lb
    path = getattr(args, "lb_csv", None)
    if path:
        rows = [r for r in reports.read_rows(path) if isinstance(r, reports.SolveRow)]
        if rows:
            return rows[-1].lb
    return None


def cmd_gen(args) -> int:
    outdir = _out_path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = []
    for density in args.density:
        if args.gpkc:
            if args.k is None:
                raise SystemExit("--k is required when generating capacity instances")
            g, spec = gen_gpkc_instance(args.n, density, args.k, args.seed)
            path = outdir / f"{g.name}.gp"
            write_instance(path, g, spec)
        else:
            g = gen_rand_graph(args.n, density, args.seed)
            path = outdir / f"{g.name}.gp"
            write_instance(path, g)
        paths.append(path)
        print(path)
    return EXIT_OK


def _solve_one(args, g, spec) -> list[reports.SolveRow]:
    relaxation = args.relaxation
    rows: list[reports.SolveRow] = []
    certs: list[reports.CertRow] = []

    if relaxation == "dnn+met":
        prm = model.CutLoopParams(max_rounds=args.max_rounds, m_met=args.m_met,
                                  tol=args.eps_tol, max_iter=args.max_iter,
                                  sigma0=args.sigma0)
        trace = model.cutting_loop(g, spec, prm)
        for rnd in trace:
            rows.append(reports.SolveRow(g.n, _k_or_w(spec), "dnn+met", rnd.bound,
                                         rnd.iterations, rnd.seconds, rnd.status))
        if args.cuts_out:
            reports.write_rows(_out_path(args.cuts_out),
                               [reports.CutRoundRow(r.round, r.bound, r.cuts) for r in trace])
    else:
        problem = _build(g, spec, relaxation)
        trace_rows: list[reports.TraceRow] = []
        callback = None
        if args.trace:
            every = max(1, args.trace_every)
            latest: list[reports.TraceRow] = []

            def callback(k, state, rec, primal, dual):
                row = reports.TraceRow(k, *rec.as_tuple(), state.sigma, primal, dual)
                latest[:] = [row]
                if k % every == 0:
                    trace_rows.append(row)

        t_cpu = time.process_time()
        result = admm.solve(
            problem,
            admm.AdmmParams(eps_tol=args.eps_tol, max_iter=args.max_iter,
                            sigma0=args.sigma0, rule=args.rule),
            callback=callback,
        )
        cpu = time.process_time() - t_cpu
        cert = certify.certify_bound(problem, result, method=args.certify, mu=args.mu)
        rows.append(reports.SolveRow(g.n, _k_or_w(spec), relaxation, cert.value,
                                     result.iterations, cpu, result.status))
        certs.append(reports.CertRow(g.name, relaxation, cert.method, cert.value,
                                     cert.perturbation, cert.xbar,
                                     result.status == "converged"))
        if args.trace:
            if latest and (not trace_rows or trace_rows[-1] != latest[0]):
                trace_rows.append(latest[0])  # the final iteration always shows
            reports.write_rows(_out_path(args.trace), trace_rows)
        if args.cert_out and certs:
            reports.write_rows(_out_path(args.cert_out), certs, append=True)
    return rows


def cmd_solve(args) -> int:
    all_rows = []
    for instance in args.instance:
        args_one = argparse.Namespace(**vars(args))
        args_one.instance = instance
        g, spec = _load_problem(args_one)
        rows = _solve_one(args_one, g, spec)
        all_rows.extend(rows)
        for row in rows:
            print(f"{row.n},{row.k_or_w},{row.relaxation},{row.lb:.6f},"
                  f"{row.iterations},{row.cpu_seconds:.3f},{row.status}")
    if args.out:
        reports.write_rows(_out_path(args.out), all_rows, append=True)
    return EXIT_OK


def cmd_heur(args) -> int:
    g, spec = _load_problem(args)
    problem = _build(g, spec, args.relaxation)
    result = admm.solve(problem, admm.AdmmParams(eps_tol=args.eps_tol,
                                                 max_iter=args.max_iter))
    X = result.state.X

    method = args.method
    kwargs = dict(samples=args.samples, time_limit=args.time_limit, seed=args.seed)
    if method == "vc":
        if isinstance(spec, KEquipartition):
            heur = rounding.vc_round_keq(g, X, spec.k, spec.m, **kwargs)
        else:
            heur = rounding.vc_round_gpkc(g, X, spec.a, spec.W, **kwargs)
    elif method == "hyp":
        if not isinstance(spec, KEquipartition):
            raise SystemExit("hyperplane rounding applies to equipartition problems only")
        heur = rounding.hyperplane_round(g, X, spec.k, spec.m,
                                         distribution=args.distribution, **kwargs)
    elif method == "vc+2opt":
        heur = rounding.vc_plus_two_opt(g, X, spec, **kwargs)
    elif method == "hyp+2opt":
        heur = rounding.hyp_plus_two_opt(g, X, spec, **kwargs)
    else:
        raise SystemExit(f"unknown method {method!r}")

    heur.partition.validate_for(spec)
    lb = _read_lb(args)
    gap = None
    if lb is not None and abs(lb) > 1e-12:
        gap = 100.0 * (heur.ub - lb) / lb
    row = reports.HeurRow(g.name, heur.method, heur.ub, gap)
    print(f"{row.instance},{row.method},{row.ub:.6f}," +
          ("" if gap is None else f"{gap:.4f}"))
    if args.out:
        reports.write_rows(_out_path(args.out), [row], append=True)
    if args.detail_out:
        detail = reports.HeurDetailRow(g.name, heur.method, heur.ub,
                                       heur.samples_used, heur.elapsed)
        reports.write_rows(_out_path(args.detail_out), [detail], append=True)
    return EXIT_OK


def cmd_oracle(args) -> int:
    g, spec = _load_problem(args)
    if isinstance(spec, KEquipartition):
        res = oracle.brute_force_keq(g, spec.k)
    else:
        res = oracle.brute_force_gpkc(g, spec.a, spec.W)
    row = reports.OracleRow(g.name, res.opt, res.enumerated)
    print(f"{row.instance},{row.opt},{row.enumerated}")
    if args.out:
        reports.write_rows(_out_path(args.out), [row], append=True)

    lb = _read_lb(args)
    ub = args.ub
    if ub is None and args.ub_csv:
        hrows = [r for r in reports.read_rows(args.ub_csv)
                 if isinstance(r, (reports.HeurRow, reports.HeurDetailRow))]
        if hrows:
            ub = min(r.ub for r in hrows)
    violated = False
    if lb is not None and lb > res.opt + 1e-9:
        print(f"certificate violation: lb {lb} exceeds optimum {res.opt}", file=sys.stderr)
        violated = True
    if ub is not None and ub < res.opt - 1e-9:
        print(f"certificate violation: ub {ub} undercuts optimum {res.opt}", file=sys.stderr)
        violated = True
    return EXIT_CERT_VIOLATION if violated else EXIT_OK


_N_PATTERN = re.compile(r"_n(\d+)_")


def cmd_report(args) -> int:
    solve_rows: list[reports.SolveRow] = []
    for path in args.solve_csv:
        solve_rows.extend(r for r in reports.read_rows(path) if isinstance(r, reports.SolveRow))
    heur_rows: list[reports.HeurRow | reports.HeurDetailRow] = []
    for path in args.heur_csv:
        heur_rows.extend(r for r in reports.read_rows(path)
                         if isinstance(r, (reports.HeurRow, reports.HeurDetailRow)))
    for path in args.cert_csv:
        reports.read_rows(path)  # parse check; certificates carry no extra join key

    by_key: dict[tuple[int, str], dict[str, float]] = {}
    for row in solve_rows:
        by_key.setdefault((row.n, row.k_or_w), {})[row.relaxation] = row.lb

    # generated names embed n and the problem kind; upper bounds join on both
    best_ub: dict[tuple[int, str], tuple[float, str]] = {}
    for row in heur_rows:
        match = _N_PATTERN.search(row.instance)
        if not match:
            continue
        key = (int(match.group(1)), "gpkc" if row.instance.startswith("GPKC") else "keq")
        if key not in best_ub or row.ub < best_ub[key][0]:
            best_ub[key] = (row.ub, row.method)

    def imp(new, base):
        if new is None or base is None or abs(base) < 1e-12:
            return None
        return 100.0 * (new - base) / base

    summary = []
    for (n, kw), bounds in sorted(by_key.items()):
        lb_sdp = bounds.get("sdp")
        lb_dnn = bounds.get("dnn")
        lb_met = bounds.get("dnn+met")
        kind = "keq" if float(kw) <= n else "gpkc"  # capacities exceed n, k never does
        ub, ub_method = best_ub.get((n, kind), (None, None))
        ref = next((v for v in (lb_met, lb_dnn, lb_sdp) if v is not None), None)
        gap = None
        if ub is not None and ref is not None and abs(ref) > 1e-12:
            gap = 100.0 * (ub - ref) / ref
        summary.append(reports.SummaryRow(n, kw, lb_sdp, lb_dnn, imp(lb_dnn, lb_sdp),
                                          lb_met, imp(lb_met, lb_sdp), ub, ub_method, gap))
    reports.write_rows(_out_path(args.out), summary)
    print(_out_path(args.out))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gpbound",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON config file; its values override flags")

    p = sub.add_parser("gen", help="generate random instances")
    add_common(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--density", type=float, nargs="+", default=[0.2, 0.5, 0.8])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--gpkc", action="store_true", help="attach vertex weights and a capacity")
    p.add_argument("--k", type=int, help="group count used to calibrate the capacity")
    p.add_argument("--outdir", default=".")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="solve a relaxation and certify a lower bound")
    add_common(p)
    p.add_argument("--instance", nargs="+", required=True)
    p.add_argument("--problem", choices=["keq", "gpkc"])
    p.add_argument("--k", type=int, help="group count (equipartition)")
    p.add_argument("--relaxation", choices=["sdp", "dnn", "dnn+met"], default="dnn")
    p.add_argument("--eps-tol", dest="eps_tol", type=float, default=1e-5)
    p.add_argument("--max-iter", dest="max_iter", type=int, default=20000)
    p.add_argument("--sigma0", type=float, default=1.0)
    p.add_argument("--rule", choices=["auto", "adaptive", "classic"], default="auto")
    p.add_argument("--certify", choices=["auto", "eig", "lp"], default="auto")
    p.add_argument("--mu", type=float, default=certify.DEFAULT_MU)
    p.add_argument("--m-met", dest="m_met", type=int, default=None)
    p.add_argument("--max-rounds", dest="max_rounds", type=int, default=10)
    p.add_argument("--out", help="append the result row to this CSV")
    p.add_argument("--cert-out", dest="cert_out", help="append the certificate row here")
    p.add_argument("--cuts-out", dest="cuts_out", help="write per-round cut trace here")
    p.add_argument("--trace", help="write an iteration trace CSV")
    p.add_argument("--trace-every", dest="trace_every", type=int, default=100)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("heur", help="round a relaxation solution to a feasible partition")
    add_common(p)
    p.add_argument("--instance", required=True)
    p.add_argument("--problem", choices=["keq", "gpkc"])
    p.add_argument("--k", type=int)
    p.add_argument("--method", choices=["vc", "hyp", "vc+2opt", "hyp+2opt"],
                   default="vc+2opt")
    p.add_argument("--distribution", choices=["uniform", "gaussian"], default="uniform",
                   help="direction sampling for hyperplane rounding")
    p.add_argument("--relaxation", choices=["sdp", "dnn"], default="dnn")
    p.add_argument("--eps-tol", dest="eps_tol", type=float, default=1e-5)
    p.add_argument("--max-iter", dest="max_iter", type=int, default=20000)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--time-limit", dest="time_limit", type=float, default=5.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lb", type=float, help="lower bound for the gap column")
    p.add_argument("--lb-csv", dest="lb_csv", help="read the lower bound from a solve CSV")
    p.add_argument("--out", help="append the result row to this CSV")
    p.add_argument("--detail-out", dest="detail_out",
                   help="append the samples/elapsed detail row here")
    p.set_defaults(func=cmd_heur)

    p = sub.add_parser("oracle", help="brute-force an instance; check a bound sandwich")
    add_common(p)
    p.add_argument("--instance", required=True)
    p.add_argument("--problem", choices=["keq", "gpkc"])
    p.add_argument("--k", type=int)
    p.add_argument("--lb", type=float)
    p.add_argument("--lb-csv", dest="lb_csv")
    p.add_argument("--ub", type=float)
    p.add_argument("--ub-csv", dest="ub_csv")
    p.add_argument("--out", help="append the oracle row to this CSV")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("report", help="merge result CSVs into a summary table")
    add_common(p)
    p.add_argument("--solve-csv", dest="solve_csv", nargs="*", default=[])
    p.add_argument("--heur-csv", dest="heur_csv", nargs="*", default=[])
    p.add_argument("--cert-csv", dest="cert_csv", nargs="*", default=[])
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        try:
            RunConfig.from_file(args.config).apply_to(args)
        except (OSError, ValueError) as exc:
            print(f"bad config: {exc}", file=sys.stderr)
            return EXIT_ERROR
    try:
        return args.func(args)
    except (InstanceFormatError, SpecValidationError) as exc:
        print(f"infeasible or malformed problem data: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except admm.SolverDivergedError as exc:
        print(f"solver diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except oracle.OracleSizeError as exc:
        print(f"instance too large for the oracle: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except SystemExit:
        raise
    except Exception as exc:  # surfaced with a stable exit code for scripts
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
