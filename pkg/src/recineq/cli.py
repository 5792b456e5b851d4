"""Command line entry point: ``recineq run | synth | inspect``.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import ConfigError, DataError
from .experiment import MODES, ExperimentSpec, run_experiment
from .ingest import DatasetConfig, filter_users, load_jester_csv, save_jester_csv
from .metrics import FULL, RECOMMENDED_ONLY, count_mean_regression, popularity_histogram
from .recommenders import DEFAULT_MF_RANK, METHODS
from .synthetic import RATING_MODELS, generate_synthetic

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_RUNTIME = 0, 2, 3, 4


def _csv_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in _csv_list(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="recineq", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate recommenders and measure Gini over time")
    run.add_argument("--dataset", required=True, help="Jester-format CSV/TSV")
    run.add_argument("--methods", type=_csv_list, default=list(METHODS))
    run.add_argument("--modes", type=_csv_list, default=list(MODES))
    run.add_argument("--train-size", type=int, default=500)
    run.add_argument("--test-size", type=int, default=4000)
    run.add_argument("--min-rated-frac", type=float, default=0.5)
    run.add_argument("--retrain-interval", type=int, default=100)
    run.add_argument("--gini-interval", type=int, default=100)
    run.add_argument("--fallback-depth", type=int, default=3)
    run.add_argument("--mf-rank", type=int, default=DEFAULT_MF_RANK)
    run.add_argument("--trials", type=int, default=5)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--gini-support", choices=[FULL, RECOMMENDED_ONLY], default=FULL)
    run.add_argument("--gauge-items", type=_int_list, default=None)
    run.add_argument("--jobs", type=int, default=1)
    run.add_argument("--out", required=True)

    synth = sub.add_parser("synth", help="write a synthetic Jester-format dataset")
    synth.add_argument("--users", type=int, default=1000)
    synth.add_argument("--items", type=int, default=100)
    synth.add_argument("--gauge-size", type=int, default=10)
    synth.add_argument("--model", choices=RATING_MODELS, default="long-tail")
    synth.add_argument("--density", type=float, default=0.75)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--out", required=True, help="output CSV path")

    inspect = sub.add_parser("inspect", help="popularity and count-vs-mean statistics of a raw dataset")
    inspect.add_argument("--dataset", required=True)
    inspect.add_argument("--min-rated-frac", type=float, default=0.0)
    inspect.add_argument("--top-k", type=int, default=5)
    inspect.add_argument("--out", default=None, help="directory for histogram CSV and regression JSON")
    return parser


def _cmd_run(args) -> None:
    spec = ExperimentSpec(
        dataset=DatasetConfig(args.dataset, args.min_rated_frac, args.train_size, args.test_size, args.seed),
        methods=args.methods,
        modes=args.modes,
        trials=args.trials,
        out=args.out,
        retrain_interval=args.retrain_interval,
        gini_interval=args.gini_interval,
        fallback_depth=args.fallback_depth,
        mf_rank=args.mf_rank,
        gini_support=args.gini_support,
        gauge_items=args.gauge_items,
        jobs=args.jobs,
    )
    summary = run_experiment(spec)
    for key, res in summary["results"].items():
        print(f"{key:18s} median final gini {res['final_gini_median']:.4f}")


def _cmd_synth(args) -> None:
    matrix = generate_synthetic(args.users, args.items, args.gauge_size, args.model, args.seed, args.density)
    save_jester_csv(matrix, args.out)
    print(f"wrote {matrix.n_users} users x {matrix.n_items} items to {args.out}")


def _cmd_inspect(args) -> None:
    if not 0.0 <= args.min_rated_frac <= 1.0:
        raise ConfigError("--min-rated-frac must lie in [0, 1]")
    matrix = filter_users(load_jester_csv(args.dataset), args.min_rated_frac)
    hist = popularity_histogram(matrix, args.top_k)
    reg = count_mean_regression(matrix)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        hist.to_csv(out / "popularity.csv")
        reg.to_json(out / "regression.json")
    print(json.dumps({
        "users": matrix.n_users,
        "items": matrix.n_items,
        "regression": reg.__dict__,
        "top_items": hist.ranked()[:10],
    }, indent=2))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": _cmd_run, "synth": _cmd_synth, "inspect": _cmd_inspect}[args.command]
    try:
        handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
