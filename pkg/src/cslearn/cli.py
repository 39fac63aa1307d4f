"""Command-line harness: run verified campaigns, print bound tables, or trace
a single run round by round."""

from __future__ import annotations

import argparse
import json
import sys

from .core import (
    FAMILIES,
    CoalitionStructure,
    bounds_report,
    graphical_round_lower_bound,
)
from .harness import (
    ExperimentConfig,
    TruthModel,
    emit,
    render_csv,
    report_to_json,
    run_campaign,
)
from .learners import run_learner, verify_report
from .oracle import AdversaryPolicy, HiddenOracle


def _add_run_parser(sub) -> None:
    p = sub.add_parser("run", help="run a verified campaign over a parameter grid")
    p.add_argument("--config", help="JSON config file; other flags override its fields")
    p.add_argument("--family", choices=FAMILIES)
    p.add_argument("--n", type=int, nargs="+", help="population sizes")
    p.add_argument("--d", type=int, nargs="+", default=None, help="degree limits (graphical)")
    p.add_argument("--truth-model", default=None, help="uniform | fixed:JSON | crp:THETA | max-coalition:C")
    p.add_argument("--reps", type=int, default=None, help="truths per grid point")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--policies", nargs="+", default=None, help="first | last | seeded:K")
    p.add_argument("--out", default=None, help="output file; stdout when omitted")
    p.add_argument("--format", choices=("csv", "json"), default=None)


def _add_bounds_parser(sub) -> None:
    p = sub.add_parser("bounds", help="print budget and lower-bound table")
    p.add_argument("--family", choices=FAMILIES, nargs="+", default=list(FAMILIES))
    p.add_argument("--n", type=int, nargs="+", required=True)
    p.add_argument("--d", type=int, nargs="+", default=[2], help="degree limits for graphical rows")
    p.add_argument("--c", type=int, nargs="+", default=[1], help="coalition caps for auction-bitwise rows")


def _add_trace_parser(sub) -> None:
    p = sub.add_parser("trace", help="run one instance and dump the transcript")
    p.add_argument("--family", choices=FAMILIES, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--truth", default=None, help="explicit truth as JSON, e.g. [[1,4],[2,3]]")
    p.add_argument("--truth-model", default="uniform")
    p.add_argument("--policy", default="first")
    p.add_argument("--seed", type=int, default=0)


def _config_from_args(args) -> ExperimentConfig:
    payload: dict = {}
    if args.config:
        with open(args.config) as fh:
            payload = json.load(fh)
    if args.family:
        payload["family"] = args.family
    if args.n:
        payload["n_range"] = args.n
    if args.d is not None:
        payload["d_values"] = args.d
    if args.truth_model is not None:
        payload["truth_model"] = args.truth_model
    if args.reps is not None:
        payload["repetitions"] = args.reps
    if args.seed is not None:
        payload["seed"] = args.seed
    if args.policies is not None:
        payload["policies"] = args.policies
    if args.out is not None:
        payload["output_path"] = args.out
    if "family" not in payload or "n_range" not in payload:
        raise SystemExit("run needs --family and --n (or a --config providing them)")
    return ExperimentConfig.from_json(payload)


def _cmd_run(args) -> int:
    cfg = _config_from_args(args)
    fmt = args.format or "csv"
    result = run_campaign(cfg)
    if cfg.output_path:
        emit(result, fmt, cfg.output_path)
        print(f"wrote {len(result.rows)} rows to {cfg.output_path}")
    else:
        text = render_csv(result) if fmt == "csv" else result.to_json() + "\n"
        sys.stdout.write(text)
    return 0


def _cmd_bounds(args) -> int:
    print("family,n,d,c,upper_bound,info_lower_bound,extra")
    for family in args.family:
        for n in args.n:
            if family == "graphical":
                for d in args.d:
                    if d > n or d % 2 != 0 or d < 2:
                        continue
                    rep = bounds_report(family, n, d=d)
                    extra = f"round_lb={graphical_round_lower_bound(n, d)}"
                    print(f"{family},{n},{d},,{rep.upper_bound},{rep.info_lower_bound},{extra}")
            elif family == "auction-bitwise":
                for c in args.c:
                    if c > n:
                        continue
                    rep = bounds_report(family, n, c=c)
                    print(f"{family},{n},,{c},{rep.upper_bound},{rep.info_lower_bound},")
            else:
                rep = bounds_report(family, n)
                print(f"{family},{n},,,{rep.upper_bound},{rep.info_lower_bound},")
    return 0


def _cmd_trace(args) -> int:
    import random

    if args.truth:
        truth = CoalitionStructure(json.loads(args.truth))
        if truth.n != args.n:
            raise SystemExit(f"--truth has {truth.n} agents but --n is {args.n}")
    else:
        model = TruthModel.parse(args.truth_model)
        truth = model.sample(args.n, random.Random(args.seed))
    policy = AdversaryPolicy.parse(args.policy)
    oracle = HiddenOracle(truth, policy)
    report = run_learner(args.family, oracle, d=args.d)
    print(report.transcript.to_jsonl())
    verdict = verify_report(report, truth, args.family, d=args.d)
    summary = report_to_json(report, args.family, {"d": args.d}, args.seed)
    summary["truth"] = json.loads(truth.to_json())
    summary["verified"] = verdict.ok
    if not verdict.ok:
        summary["failures"] = verdict.failures
    print(json.dumps(summary, sort_keys=True))
    return 0 if verdict.ok else 1


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="cslearn",
        description="Learn hidden coalition structures by designing games and observing deviations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_run_parser(sub)
    _add_bounds_parser(sub)
    _add_trace_parser(sub)
    args = parser.parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "bounds":
        return _cmd_bounds(args)
    return _cmd_trace(args)


if __name__ == "__main__":
    raise SystemExit(main())
