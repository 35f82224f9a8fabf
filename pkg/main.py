# main.py
"""
PPICOD toolkit command line.

    python main.py gen --uniform m=8 n=20 h=3 q=2 --seed 7 --out inst.json
    python main.py solve inst.json --alpha 1 0.5 --eta 3 --seeds 0 1 --post --check
    python main.py boundary inst.json --method 2 --out front.csv
    python main.py check inst.json code.json
    python main.py sweep --uniform m=8 n=20 h=3 --eta 3 --seed 1 --instances 200
    python main.py plot runs.csv --boundary front.csv --out fig.svg

Exit codes: 0 success, 1 validity failure, 2 usage, 3 budget refusal.
"""
import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional

from config import Config
from services.experiment_service import (
    DEFAULT_ALPHAS,
    ExperimentConfig,
    ExperimentError,
    ExperimentService,
    GeneratorSpec,
    aggregate,
    format_fraction,
    load_runs,
    parse_alpha,
    plot_alpha_trend,
    plot_runs,
    runs_to_frame,
)
from services.greedy_service import InfeasibleThresholdError
from services.instance_service import InstanceError, instance_to_json, load_instance, save_instance, summary
from services.oracle_service import (
    BudgetExceeded,
    DecodingError,
    LinearCode,
    OracleService,
    boundary_to_frame,
    decodability_report,
    evaluate_code,
)
from utils.fqlinalg import FieldError, FieldSpec, FqMatrix
from utils.logger import logger, set_level

EXIT_OK, EXIT_INVALID, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3


def _write_frame(df, out: Optional[str], append: bool = False):
    if out:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        if append and path.exists() and path.stat().st_size:
            with path.open(encoding="utf-8") as fh:
                header = fh.readline().strip()
            if header != ",".join(df.columns):
                raise ExperimentError(f"Cannot append to {out}: header is {header!r}")
            df.to_csv(path, mode="a", header=False, index=False)
            logger.info(f"Appended {len(df)} row(s) to {out}")
            return
        df.to_csv(path, index=False)
        logger.info(f"Wrote {len(df)} row(s) to {out}")
    else:
        df.to_csv(sys.stdout, index=False)


def _generator_from_args(args) -> Optional[GeneratorSpec]:
    if args.uniform is not None:
        return GeneratorSpec.parse("uniform", args.uniform)
    if args.biased is not None:
        return GeneratorSpec.parse("biased", args.biased)
    return None


def load_code(path: str, inst) -> FqMatrix:
    """Code file: {"q": 2, "A": [[0, 0, 1, 0, 0]]}"""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Code file not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ExperimentError(f"Code file is not valid JSON: {e}")
    if not isinstance(doc, dict) or "A" not in doc:
        raise ExperimentError("Code file must be an object with field 'A'")
    spec = FieldSpec(doc.get("q", inst.q))
    if spec != inst.field:
        raise ExperimentError(f"Code is over {spec}, instance over {inst.field}")
    return FqMatrix.from_rows(doc["A"], spec, cols=inst.m)


# --------------------------------------------------------------
# Commands

def cmd_gen(args) -> int:
    gen = _generator_from_args(args)
    try:
        inst = gen.build(args.seed)
    except InstanceError as e:
        raise ExperimentError(str(e))
    info = summary(inst)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        save_instance(inst, args.out)
        print(f"n={info['n']} m={info['m']} q={info['q']} h={info['h']}")
    else:
        print(instance_to_json(inst))
        logger.info(f"Generated {gen} seed={args.seed}: {info}")
    return EXIT_OK


def cmd_solve(args) -> int:
    inst = load_instance(args.instance)
    alphas = [parse_alpha(a) for a in args.alpha]
    service = ExperimentService(workers=1)
    records = service.solve(inst, alphas, args.eta, args.seeds, post=args.post, check=args.check)
    _write_frame(runs_to_frame(records), args.out, append=True)
    if args.check:
        print(f"check: all {len(records)} run(s) decode as claimed", file=sys.stderr)
    return EXIT_OK


def cmd_boundary(args) -> int:
    inst = load_instance(args.instance)
    oracle = OracleService(budget=args.budget, workers=args.workers, witness_limit=args.witnesses)
    run = oracle.method1(inst) if args.method == 1 else oracle.method2(inst)
    what = "decoding choices" if args.method == 1 else "nonzero subspaces"
    print(f"method {args.method}: enumerated {run.enumerated:,} {what}, {len(run.raw)} achievable pairs, front {[str(p) for p in run.front]}", file=sys.stderr)
    _write_frame(boundary_to_frame(run.front), args.out)
    return EXIT_OK


def cmd_check(args) -> int:
    inst = load_instance(args.instance)
    A = load_code(args.code, inst)
    LinearCode(A, label=Path(args.code).name).check_against(inst)
    report = decodability_report(A, inst)
    for i in inst.receivers():
        dec = sorted(report.decodable[i - 1])
        if report.best_message[i - 1] is None:
            print(f"receiver {i}: decodable {dec} UNSATISFIED")
        else:
            print(f"receiver {i}: decodable {dec} best X_{report.best_message[i - 1]} rank {format_fraction(report.best_rank[i - 1])}")
    point = evaluate_code(A, inst, length_mode=args.length)
    if point is None:
        logger.error(f"Receivers {report.unsatisfied()} decode no unknown message")
        print("UNSATISFIED")
        return EXIT_INVALID
    print(f"({point.ell}, {format_fraction(point.s)})")
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = ExperimentConfig(
        alphas=tuple(parse_alpha(a) for a in args.alpha),
        eta_spec=args.eta,
        seed=args.seed,
        instance_path=Path(args.instance) if args.instance else None,
        generator=_generator_from_args(args),
        instances=args.instances,
        seeds_per_instance=args.seeds_per_instance,
        post=args.post,
        check=args.check,
    )
    if args.boundary and not args.svg:
        raise ExperimentError("--boundary overlays the scatter and needs --svg")
    if args.boundary and not Path(args.boundary).exists():
        raise ExperimentError(f"Boundary file not found: {args.boundary}")

    service = ExperimentService(workers=args.workers)
    records, agg = service.sweep(config)
    if args.runs_out:
        Path(args.runs_out).parent.mkdir(parents=True, exist_ok=True)
        runs_to_frame(records).to_csv(args.runs_out, index=False)
    if args.svg:
        plot_runs(records, args.svg, args.boundary, title=args.title)
    if args.trend_svg:
        plot_alpha_trend(agg, args.trend_svg, title=args.title)
    _write_frame(agg, args.out)
    return EXIT_OK


def cmd_plot(args) -> int:
    records = load_runs(args.runs)
    if args.trend:
        plot_alpha_trend(aggregate(records), args.out, title=args.title)
    else:
        plot_runs(records, args.out, args.boundary, title=args.title)
    return EXIT_OK


# --------------------------------------------------------------
# Parser

def _add_generator_args(p, required: bool):
    group = p.add_mutually_exclusive_group(required=required)
    group.add_argument("--uniform", nargs="*", metavar="K=V", help="uniform generator, e.g. m=8 n=20 h=3 q=2")
    group.add_argument("--biased", nargs="*", metavar="K=V", help="two-group biased generator (m=8)")
    return group


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="ppicod",
        description="Preferential pliable index coding: greedy codes and exact Pareto boundaries.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    ap.add_argument("--log-level", default=None, help="override LOG_LEVEL")
    ap.add_argument("--show-config", action="store_true", help="print the resolved .env settings to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a random instance")
    _add_generator_args(p, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", help="instance file (stdout when omitted)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="run PrGrCov on an instance")
    p.add_argument("instance")
    p.add_argument("--alpha", nargs="+", required=True)
    p.add_argument("--eta", default="rowmax", help="scalar, comma list, 'min' or 'rowmax'")
    p.add_argument("--seeds", nargs="+", type=int, default=[0])
    p.add_argument("--post", action="store_true", help="apply row-space and best-decode post-processing")
    p.add_argument("--check", action="store_true", help="re-verify every claimed decode")
    p.add_argument("--out", help="run CSV, appended to when it exists (stdout when omitted)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("boundary", help="exact Pareto boundary by exhaustive search")
    p.add_argument("instance")
    p.add_argument("--method", type=int, choices=(1, 2), default=2, help="1 = decoding-centric, 2 = code-centric")
    p.add_argument("--budget", type=int, default=Config.ENUMERATION_BUDGET)
    p.add_argument("--workers", type=int, default=Config.WORKERS)
    p.add_argument("--witnesses", type=int, default=Config.WITNESS_LIMIT)
    p.add_argument("--out", help="front CSV (stdout when omitted)")
    p.set_defaults(func=cmd_boundary)

    p = sub.add_parser("check", help="audit a linear code against an instance")
    p.add_argument("instance")
    p.add_argument("code", help='JSON file {"q": 2, "A": [[...], ...]}')
    p.add_argument("--length", choices=("rank", "rows"), default="rank")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("sweep", help="alpha sweep over generated or fixed instances")
    src = _add_generator_args(p, required=True)
    src.add_argument("--instance", help="fixed instance file")
    p.add_argument("--alpha", nargs="+", default=list(DEFAULT_ALPHAS))
    p.add_argument("--eta", default="3")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--instances", type=int, default=200)
    p.add_argument("--seeds-per-instance", type=int, default=1)
    p.add_argument("--post", action="store_true")
    p.add_argument("--check", action="store_true")
    p.add_argument("--workers", type=int, default=Config.WORKERS)
    p.add_argument("--out", help="aggregate CSV (stdout when omitted)")
    p.add_argument("--runs-out", help="per-run CSV")
    p.add_argument("--svg", help="scatter of all runs")
    p.add_argument("--trend-svg", help="mean ell and s against alpha")
    p.add_argument("--boundary", help="front CSV drawn under the scatter")
    p.add_argument("--title", default="")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("plot", help="SVG from a run CSV")
    p.add_argument("runs")
    p.add_argument("--boundary", help="front CSV drawn under the scatter")
    p.add_argument("--trend", action="store_true", help="plot mean ell and s against alpha instead")
    p.add_argument("--out", required=True)
    p.add_argument("--title", default="")
    p.set_defaults(func=cmd_plot)
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    if args.log_level:
        set_level(args.log_level)
    try:
        Config.validate()
        if args.show_config:
            Config.print_config(sys.stderr)
        return args.func(args)
    except BudgetExceeded as e:
        logger.error(f"Budget refusal: {e}")
        print(f"refused: {e.what} count {e.count:,} exceeds budget {e.budget:,}", file=sys.stderr)
        return EXIT_BUDGET
    except (InstanceError, DecodingError, InfeasibleThresholdError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        for v in getattr(e, "violations", []):
            print(f"  {v}", file=sys.stderr)
        return EXIT_INVALID
    except RuntimeError as e:
        logger.error(f"Validity failure: {e}")
        return EXIT_INVALID
    except (ExperimentError, FieldError, FileNotFoundError, ValueError) as e:
        logger.error(f"Usage error: {e}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
