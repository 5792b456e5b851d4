"""Multi-trial experiments: every (method, mode, trial) run, medians, artifacts."""

from __future__ import annotations

import json
import logging
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError, NotEnoughUsers
from .ingest import DatasetConfig, derive_gauge_set, filter_users, gauge_from_ids, load_jester_csv, split_users
from .metrics import FULL, RECOMMENDED_ONLY, GiniSeries, PopularityHistogram, gini_series, popularity_histogram
from .recommenders import DEFAULT_MF_RANK, METHODS, make_recommender, recommendable_items
from .simulator import Mode, SimulationConfig, simulate
from .types import GaugeSet, RatingMatrix

log = logging.getLogger(__name__)

MODES = tuple(m.value for m in Mode)


@dataclass
class ExperimentSpec:
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    methods: Sequence[str] = METHODS
    modes: Sequence[str] = MODES
    trials: int = 5
    out: Optional[str] = None
    retrain_interval: int = 100
    gini_interval: int = 100
    fallback_depth: int = 3
    mf_rank: int = DEFAULT_MF_RANK
    gini_support: str = FULL
    gauge_items: Optional[Sequence[int]] = None
    jobs: int = 1

    def validate(self) -> None:
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not self.methods or not self.modes:
            raise ConfigError("methods and modes must be non-empty")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ConfigError(f"unknown methods {bad}; choose from {list(METHODS)}")
        bad = [m for m in self.modes if m not in MODES]
        if bad:
            raise ConfigError(f"unknown modes {bad}; choose from {list(MODES)}")
        if self.gini_support not in (FULL, RECOMMENDED_ONLY):
            raise ConfigError(f"gini support must be {FULL} or {RECOMMENDED_ONLY}")
        if self.mf_rank < 1 or self.jobs < 1:
            raise ConfigError("mf_rank and jobs must be >= 1")
        if not 0.0 <= self.dataset.min_rated_fraction <= 1.0:
            raise ConfigError("min_rated_fraction must lie in [0, 1]")
        if self.gauge_items is not None and len(set(self.gauge_items)) != len(self.gauge_items):
            raise ConfigError("gauge items must be distinct")
        SimulationConfig(Mode.DYNAMIC, self.retrain_interval, self.gini_interval, self.fallback_depth)


def _stable_key(text: str) -> int:
    return zlib.crc32(text.encode())


def split_seed(seed: int, trial: int) -> np.random.SeedSequence:
    """Seed for a trial's train/test split; depends only on ``(seed, trial)``."""
    return np.random.SeedSequence(seed, spawn_key=(trial,))


def method_seed(seed: int, trial: int, method: str, mode: str) -> np.random.SeedSequence:
    return np.random.SeedSequence(seed, spawn_key=(trial, _stable_key(method), _stable_key(mode)))


@dataclass
class TrialResult:
    method: str
    mode: str
    trial: int
    series: list
    counts: list
    no_rating: int
    served: int
    final_train_users: int


def run_trial(matrix: RatingMatrix, gauge: GaugeSet, spec: ExperimentSpec, method: str,
              mode: str, trial: int) -> TrialResult:
    ds = spec.dataset
    train, test = split_users(matrix, ds.train_size, ds.test_size,
                              np.random.default_rng(split_seed(ds.seed, trial)))
    config = SimulationConfig(mode, spec.retrain_interval, spec.gini_interval, spec.fallback_depth)
    recommender = make_recommender(method, truth=test, mf_rank=spec.mf_rank)
    rng = np.random.default_rng(method_seed(ds.seed, trial, method, mode))
    sim_log = simulate(train, test, gauge, recommender, config, rng)
    catalog = recommendable_items(matrix.item_ids, gauge)
    series = gini_series(sim_log, catalog, gauge, spec.gini_interval, spec.gini_support) if len(sim_log) else GiniSeries([])
    hist = popularity_histogram(sim_log, item_ids=catalog) if len(sim_log) else None
    if spec.out is not None:
        d = Path(spec.out) / f"{method}_{mode}" / f"trial{trial}"
        d.mkdir(parents=True, exist_ok=True)
        sim_log.to_csv(d / "log.csv")
        series.to_csv(d / "gini.csv")
    return TrialResult(
        method, mode, trial, series.checkpoints,
        [] if hist is None else hist.counts.tolist(),
        sim_log.no_rating_count, len(sim_log), sim_log.final_train_users,
    )


def _run_task(args):
    matrix, gauge, spec, method, mode, trial = args
    try:
        return run_trial(matrix, gauge, spec, method, mode, trial)
    except Exception as exc:
        raise RuntimeError(f"trial {trial} ({method}, {mode}) failed: {exc}") from exc


def prepare_dataset(spec: ExperimentSpec, matrix: Optional[RatingMatrix] = None) -> tuple[RatingMatrix, GaugeSet]:
    """Load, filter and pick the gauge set; checks the split sizes fit."""
    if matrix is None:
        if spec.dataset.path is None:
            raise ConfigError("no dataset path given")
        matrix = load_jester_csv(spec.dataset.path)
    filtered = filter_users(matrix, spec.dataset.min_rated_fraction)
    if spec.gauge_items is not None:
        gauge = gauge_from_ids(filtered, spec.gauge_items)
    else:
        gauge = derive_gauge_set(filtered)
    need = spec.dataset.train_size + spec.dataset.test_size
    if need > filtered.n_users:
        raise NotEnoughUsers(f"need {need} users after filtering, have {filtered.n_users}")
    return filtered, gauge


def _median_series(all_series: list[list]) -> list:
    common = set.intersection(*(set(s for s, _ in series) for series in all_series)) if all_series else set()
    out = []
    for step in sorted(common):
        vals = [dict(series)[step] for series in all_series]
        out.append([step, float(np.median(vals))])
    return out


def _late_slope(series: list) -> float:
    return GiniSeries([tuple(p) for p in series]).late_slope() if len(series) >= 2 else 0.0


def run_experiment(spec: ExperimentSpec, matrix: Optional[RatingMatrix] = None) -> dict:
    """Run every (method, mode, trial) and write artifacts under ``spec.out``.

    Layout: ``<out>/<method>_<mode>/trial<t>/{log.csv,gini.csv}``,
    ``<out>/<method>_<mode>/median_gini.csv``, ``<out>/distributions/*.csv``
    and ``<out>/summary.json``.
    """
    spec.validate()
    filtered, gauge = prepare_dataset(spec, matrix)
    tasks = [
        (filtered, gauge, spec, method, mode, trial)
        for method in spec.methods
        for mode in spec.modes
        for trial in range(spec.trials)
    ]
    if spec.jobs > 1:
        with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
            results = list(pool.map(_run_task, tasks))
    else:
        results = [_run_task(t) for t in tasks]

    catalog = recommendable_items(filtered.item_ids, gauge)
    out = Path(spec.out) if spec.out is not None else None
    if out is not None:
        (out / "distributions").mkdir(parents=True, exist_ok=True)
        popularity_histogram(filtered).to_csv(out / "distributions" / "original.csv")

    summary_results = {}
    for method in spec.methods:
        for mode in spec.modes:
            runs = [r for r in results if r.method == method and r.mode == mode]
            finals = [r.series[-1][1] for r in runs if r.series]
            median_series = _median_series([r.series for r in runs])
            key = f"{method}_{mode}"
            summary_results[key] = {
                "method": method,
                "mode": mode,
                "final_gini_median": float(np.median(finals)) if finals else None,
                "final_gini_trials": finals,
                "late_slope_median": float(np.median([_late_slope(r.series) for r in runs])),
                "median_series": median_series,
                "no_rating_rate_median": float(np.median([r.no_rating / max(r.served, 1) for r in runs])),
                "final_train_users": [r.final_train_users for r in runs],
            }
            if out is not None:
                counts = np.zeros(catalog.size, dtype=np.int64)
                for r in runs:
                    if r.counts:
                        counts += np.asarray(r.counts, dtype=np.int64)
                PopularityHistogram(catalog, counts).to_csv(out / "distributions" / f"{key}.csv")
                GiniSeries([tuple(p) for p in median_series]).to_csv(out / key / "median_gini.csv")

    summary = {
        "config": {
            **{k: v for k, v in asdict(spec).items() if k not in ("out", "jobs", "dataset")},
            "dataset": {k: v for k, v in asdict(spec.dataset).items() if k != "path"},
            "methods": list(spec.methods),
            "modes": list(spec.modes),
            "gauge_items": list(gauge.item_ids),
        },
        "n_users_filtered": filtered.n_users,
        "n_items": filtered.n_items,
        "results": summary_results,
    }
    if out is not None:
        (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary
