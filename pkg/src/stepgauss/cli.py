"""Command-line front end: selection, simulation studies, graphs, reports.

Every run echoes its fully resolved configuration (seed included) before
any result, so an output can always be regenerated.  Exit codes: 0 on
success, 2 for input or validation problems, 3 for numeric failures.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import replace

import numpy as np

from . import io as sgio
from .engine import RankDeficiencyError, standardize
from .glm import kl_select, nl_select, LOGISTIC
from .graph import build_graph
from .lsq import (
    Precondition,
    Rule,
    SelectorConfig,
    confidence_intervals,
    relevance_scan,
    run_selector,
)
from .robust import m_fit, initial_scale, robust_select
from .simulate import (
    builtin_scenario,
    outlier_flags,
    run_study,
    scenario_from_dict,
    scenario_to_dict,
)
from .special import ConvergenceError

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3

SLOW_Q_LIMIT = 5000  # larger candidate pools run only under --slow


def _alpha(value: str) -> float:
    a = float(value)
    if not (0.0 < a < 1.0):
        raise argparse.ArgumentTypeError(f"alpha must lie strictly inside (0, 1), got {a}")
    return a


def _gamma(value: str) -> float:
    g = float(value)
    if not (0.0 <= g < 1.0):
        raise argparse.ArgumentTypeError(f"coverage must lie in [0, 1), got {g}")
    return g


def _positive_int(value: str) -> int:
    v = int(value)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _add_table_flags(p: argparse.ArgumentParser, response: bool = True) -> None:
    p.add_argument("--data", required=True, help="delimited data file")
    if response:
        p.add_argument("--response", default="1",
                       help="response column: 1-based number, header name, or file path (default: 1)")
    p.add_argument("--delimiter", default=",", help="field delimiter (default: ,)")
    p.add_argument("--header", action="store_true", help="first row holds column names")
    p.add_argument("--transpose", action="store_true",
                   help="file is variables-by-samples; transpose after parsing")


def _resolve_response(raw: str) -> int | str:
    try:
        return int(raw)
    except ValueError:
        return raw


def _echo_config(args: argparse.Namespace, keys: list[str]) -> None:
    resolved = {k: getattr(args, k) for k in keys}
    print("config:", json.dumps(resolved, sort_keys=True, default=str))


def _load_dataset(args: argparse.Namespace, response: bool = True):
    src = sgio.TableSource(
        path=args.data,
        delimiter=args.delimiter,
        response_column=_resolve_response(args.response) if response else None,
        header=args.header,
        transpose=args.transpose,
    )
    return sgio.load(src)


def _print_trace(trace, names=None) -> None:
    print(f"method {trace.method}  n {trace.n}  q {trace.q}  alpha {trace.alpha:g}  "
          f"rule {trace.rule.value}")
    print(f"{'covariate':>12} {'ss-ratio':>12} {'p-value':>12}")
    base = trace.initial_ss if trace.initial_ss > 0 else 1.0
    for s in trace.steps:
        label = names[s.index] if names else str(s.index + 1)
        print(f"{label:>12} {s.ss / base:>12.4e} {s.p_value:>12.4e}")
    if not trace.steps:
        print("(no covariate included)")
    if trace.stop_candidate is not None:
        s = trace.stop_candidate
        label = names[s.index] if names else str(s.index + 1)
        print(f"stopped at {label}: p-value {s.p_value:.4e} exceeds alpha")
    print(f"stop reason: {trace.stop_reason.value}")
    print(f"joint relevance: {trace.joint_relevance:.6f}")


def _cmd_select(args: argparse.Namespace) -> int:
    _echo_config(args, ["data", "response", "method", "alpha", "rule", "precondition",
                        "max_steps", "pre2_candidate_alpha", "ci", "outliers", "out"])
    d_raw, _ = _load_dataset(args)
    ds = standardize(d_raw)
    cfg = SelectorConfig(
        alpha=args.alpha,
        rule=Rule(args.rule),
        max_steps=args.max_steps,
        precondition=Precondition(args.precondition),
        pre2_candidate_alpha=args.pre2_candidate_alpha,
    )
    if args.method != "lsq" and cfg.precondition is not Precondition.NONE:
        raise ValueError("--precondition applies to the lsq method only")
    if args.method == "lsq":
        trace = run_selector(ds, cfg)
    elif args.method == "huber":
        trace = robust_select(ds, cfg)
    elif args.method == "logit-ls":
        trace = nl_select(ds, cfg, LOGISTIC)
    else:
        trace = kl_select(ds, cfg)
    _print_trace(trace, d_raw.names)

    if args.ci is not None:
        ci = confidence_intervals(d_raw, trace.selected, args.ci)
        print(f"\nconfidence intervals (coverage {args.ci:g}) for the active set:")
        print(f"{'covariate':>12} {'estimate':>12} {'lower':>12} {'upper':>12}")
        for j in trace.selected:
            label = d_raw.names[j] if d_raw.names else str(j + 1)
            print(f"{label:>12} {ci.estimate[j]:>12.5f} {ci.lower[j]:>12.5f} "
                  f"{ci.upper[j]:>12.5f}")
    if args.outliers:
        if args.method == "huber":
            fit = m_fit(ds, trace.selected, initial_scale(ds.y))
            resid = fit.residuals
        else:
            a = d_raw.X[:, list(trace.selected)]
            if trace.selected:
                coef, _, _, _ = np.linalg.lstsq(a, d_raw.y, rcond=None)
                resid = d_raw.y - a @ coef
            else:
                resid = d_raw.y.copy()
        rep = outlier_flags(resid)
        if rep.flagged:
            print("\noutliers (observation: score):")
            for i in rep.flagged:
                print(f"  {i + 1}: {rep.scores[i]:.2f}")
        else:
            print("\nno outliers flagged")
    if args.out:
        sgio.save_trace(trace, args.out)
        print(f"trace written to {args.out}")
    return EXIT_OK


def _cmd_scan(args: argparse.Namespace) -> int:
    _echo_config(args, ["data", "response", "alpha", "rule", "max_steps", "out"])
    d_raw, _ = _load_dataset(args)
    ds = standardize(d_raw)
    cfg = SelectorConfig(alpha=args.alpha, rule=Rule(args.rule), max_steps=args.max_steps)
    traces = relevance_scan(ds, cfg)
    distinct: set[int] = set()
    for rnd, t in enumerate(traces, start=1):
        print(f"\nround {rnd}:")
        _print_trace(t, d_raw.names)
        distinct.update(t.selected)
    print(f"\npossibly relevant covariates: {len(distinct)}")
    if args.out:
        payload = {
            "schema": "relevance-scan/1",
            "rounds": [sgio.trace_to_dict(t) for t in traces],
            "possibly_relevant": sorted(i + 1 for i in distinct),
        }
        with open(args.out, "w") as fh:
            json.dump(payload, fh, indent=1, sort_keys=True)
            fh.write("\n")
        print(f"scan written to {args.out}")
    return EXIT_OK


def _cmd_simulate(args: argparse.Namespace) -> int:
    _echo_config(args, ["scenario", "procedure", "reps", "seed", "alpha", "threads",
                        "slow", "ci", "out"])
    if os.path.exists(args.scenario):
        with open(args.scenario) as fh:
            spec = scenario_from_dict(json.load(fh))
        spec = replace(spec, replications=args.reps, seed=args.seed)
    else:
        spec = builtin_scenario(args.scenario, n=args.n, q=args.q, s0=args.s0,
                                coef_hi=args.coef_hi, replications=args.reps,
                                seed=args.seed)
    if spec.q > SLOW_Q_LIMIT and not args.slow:
        raise ValueError(
            f"q={spec.q} exceeds {SLOW_Q_LIMIT}; rerun with --slow to allow it")
    print("scenario:", json.dumps(scenario_to_dict(spec), sort_keys=True))
    cfg = SelectorConfig(alpha=args.alpha)
    procedure = "logit-ls" if args.procedure == "lsq-logit" else args.procedure
    report = run_study(spec, procedure, cfg, threads=args.threads,
                       compute_ci=args.ci)
    print(report.text_table())
    if args.out:
        sgio.save_report(report, args.out)
        print(f"report written to {args.out}")
    return EXIT_OK


def _cmd_graph(args: argparse.Namespace) -> int:
    _echo_config(args, ["data", "alpha", "threads", "out"])
    d_raw, _ = _load_dataset(args, response=False)
    started = time.perf_counter()
    result = build_graph(d_raw, alpha=args.alpha, threads=args.threads)
    elapsed = time.perf_counter() - started
    print(f"nodes {result.nodes}  cutoff {result.cutoff:.3e}")
    print(f"edges ({len(result.edges)}):")
    for i, j in result.edges:
        srcs = ",".join(str(s + 1) for s in result.provenance[(i, j)])
        print(f"  {i + 1} -- {j + 1}   (from regression of {srcs})")
    if result.failures:
        print(f"failures: {result.failures}")
    print(f"edge count: {result.edge_count}")
    print(f"wall time: {elapsed:.2f}s")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(result.to_dict(), fh, indent=1, sort_keys=True)
            fh.write("\n")
        print(f"graph written to {args.out}")
    return EXIT_OK


def _cmd_report(args: argparse.Namespace) -> int:
    _echo_config(args, ["path"])
    with open(args.path) as fh:
        payload = json.load(fh)
    schema = payload.get("schema", "")
    if schema.startswith("metrics-report"):
        print(sgio.report_from_dict(payload).text_table())
    elif schema.startswith("selection-trace"):
        _print_trace(sgio.trace_from_dict(payload))
    elif schema.startswith("relevance-scan"):
        for rnd, t in enumerate(payload["rounds"], start=1):
            print(f"round {rnd}:")
            _print_trace(sgio.trace_from_dict(t))
        print(f"possibly relevant covariates: {len(payload['possibly_relevant'])}")
    elif "edges" in payload:
        print(f"nodes {payload['nodes']}  edges {payload['edge_count']}")
        for i, j in payload["edges"]:
            print(f"  {i} -- {j}")
    else:
        raise ValueError(f"unrecognized report schema in {args.path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stepgauss",
        description="Stepwise covariate selection against Gaussian-noise benchmarks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sel = sub.add_parser("select", help="run one stepwise selection on a data file")
    _add_table_flags(p_sel)
    p_sel.add_argument("--method", choices=["lsq", "huber", "logit-ls", "kl"],
                       default="lsq", help="fitting method (default: lsq)")
    p_sel.add_argument("--alpha", type=_alpha, default=0.01,
                       help="p-value cutoff (default: 0.01)")
    p_sel.add_argument("--rule", choices=["exact", "asymptotic"], default="exact",
                       help="stopping rule (default: exact)")
    p_sel.add_argument("--precondition", choices=["none", "pre1", "pre2"],
                       default="none", help="SVD preconditioning variant (default: none)")
    p_sel.add_argument("--max-steps", type=_positive_int, default=None,
                       help="inclusion cap (default: n-2)")
    p_sel.add_argument("--pre2-candidate-alpha", type=_alpha, default=0.5,
                       help="phase-1 cutoff of the pre2 variant (default: 0.5)")
    p_sel.add_argument("--ci", type=_gamma, default=None, metavar="GAMMA",
                       help="also print confidence intervals at this coverage")
    p_sel.add_argument("--outliers", action="store_true",
                       help="flag outliers of the final fit by the 5.2 rule")
    p_sel.add_argument("--out", default=None, help="write the trace as JSON")
    p_sel.set_defaults(func=_cmd_select)

    p_scan = sub.add_parser("scan", help="repeat selection with removal (relevance scan)")
    _add_table_flags(p_scan)
    p_scan.add_argument("--alpha", type=_alpha, default=0.01,
                        help="p-value cutoff (default: 0.01)")
    p_scan.add_argument("--rule", choices=["exact", "asymptotic"], default="exact",
                        help="stopping rule (default: exact)")
    p_scan.add_argument("--max-steps", type=_positive_int, default=None,
                        help="inclusion cap per round (default: n-2)")
    p_scan.add_argument("--out", default=None, help="write all rounds as JSON")
    p_scan.set_defaults(func=_cmd_scan)

    p_sim = sub.add_parser("simulate", help="run a replicated simulation study")
    p_sim.add_argument("--scenario", required=True,
                       help="built-in name (equicorr-T2, ar1-logit-T1, jia-T4, "
                            "toeplitz-logit-T5) or a JSON scenario file")
    p_sim.add_argument("--procedure", default="progau",
                       choices=["progau", "propre1", "propre2", "robust", "kl",
                                "logit-ls", "lsq-logit"],
                       help="selection procedure (default: progau; lsq-logit is "
                            "an alias for logit-ls)")
    p_sim.add_argument("--reps", type=_positive_int, default=100,
                       help="replication count (default: 100)")
    p_sim.add_argument("--seed", type=int, default=1, help="study seed (default: 1)")
    p_sim.add_argument("--alpha", type=_alpha, default=0.01,
                       help="p-value cutoff (default: 0.01)")
    p_sim.add_argument("--threads", type=_positive_int, default=1,
                       help="replication-level worker threads (default: 1)")
    p_sim.add_argument("--slow", action="store_true",
                       help=f"allow candidate pools larger than {SLOW_Q_LIMIT}")
    p_sim.add_argument("--ci", action="store_true",
                       help="also aggregate confidence-interval coverage and length")
    p_sim.add_argument("--n", type=_positive_int, default=None,
                       help="override the scenario sample size")
    p_sim.add_argument("--q", type=_positive_int, default=None,
                       help="override the scenario covariate count")
    p_sim.add_argument("--s0", type=_positive_int, default=None,
                       help="override the active-coefficient count (uniform signals)")
    p_sim.add_argument("--coef-hi", type=float, default=None,
                       help="override the coefficient upper bound (uniform signals)")
    p_sim.add_argument("--out", default=None, help="write the report as JSON")
    p_sim.set_defaults(func=_cmd_simulate)

    p_graph = sub.add_parser("graph", help="nodewise dependency graph over the columns")
    _add_table_flags(p_graph, response=False)
    p_graph.add_argument("--alpha", type=_alpha, default=0.05,
                         help="per-graph cutoff, applied as alpha/q per node (default: 0.05)")
    p_graph.add_argument("--threads", type=_positive_int, default=1,
                         help="nodewise worker threads (default: 1)")
    p_graph.add_argument("--out", default=None, help="write the edge list as JSON")
    p_graph.set_defaults(func=_cmd_graph)

    p_rep = sub.add_parser("report", help="render a saved JSON trace/report as text")
    p_rep.add_argument("path", help="JSON file written by select/scan/simulate/graph")
    p_rep.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConvergenceError, RankDeficiencyError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, sgio.ParseError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
