"""Robustness, regularization-sweep and prediction-export studies.

Each study trains one model per (variant, seed) through a shared
:class:`ExperimentContext`, which caches finished runs so that studies run in
the same process reuse models with identical settings.
"""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .dataset import Dataset, make_rng
from .model import CircuitLayout, ModelParams, OutputScaling, predict_batch
from .training import RunRecord, TrainingConfig, train


def default_epsilon_grid() -> tuple[float, ...]:
    return tuple(float(e) for e in np.logspace(np.log10(0.001), np.log10(0.5), 10))


DESK_SEEDS = (0, 1, 2, 3, 4)
DEFAULT_SWEEP_LAMBDAS = (0.0, 0.001, 0.002, 0.004, 0.008, 0.015, 0.03)


@dataclass(frozen=True)
class RobustnessConfig:
    epsilon_grid: tuple[float, ...] = field(default_factory=default_epsilon_grid)
    perturbation_rounds: int = 100
    seeds: tuple[int, ...] = DESK_SEEDS
    lambda_values: tuple[float, ...] = (0.0, 0.004, 0.03)
    include_fixed_encoding: bool = True
    perturbation_seed: int = 2025

    def __post_init__(self):
        object.__setattr__(self, "epsilon_grid", tuple(float(e) for e in self.epsilon_grid))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        object.__setattr__(self, "lambda_values", tuple(float(v) for v in self.lambda_values))
        if any(e < 0 for e in self.epsilon_grid):
            raise ValueError("epsilon values must be >= 0")
        if self.perturbation_rounds < 1:
            raise ValueError("perturbation_rounds must be >= 1")
        if any(v < 0 for v in self.lambda_values):
            raise ValueError("lambda values must be >= 0")


@dataclass(frozen=True)
class SweepConfig:
    lambda_grid: tuple[float, ...] = DEFAULT_SWEEP_LAMBDAS
    seeds: tuple[int, ...] = DESK_SEEDS

    def __post_init__(self):
        object.__setattr__(self, "lambda_grid", tuple(float(v) for v in self.lambda_grid))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if any(v < 0 for v in self.lambda_grid):
            raise ValueError("lambda values must be >= 0")


@dataclass(frozen=True)
class Variant:
    lam: float
    encoding_trainable: bool = True

    @property
    def label(self) -> str:
        return f"lambda={self.lam!r}" if self.encoding_trainable else "fixed"


def _train_job(args) -> RunRecord:
    layout, train_set, test_set, scaling, config = args
    return train(layout, train_set, test_set, scaling, config)


@dataclass(eq=False)
class ExperimentContext:
    layout: CircuitLayout
    scaling: OutputScaling
    train_set: Dataset
    test_set: Dataset
    training: TrainingConfig
    workers: int = 1
    cache: dict = field(default_factory=dict)

    def config_for(self, variant: Variant, seed: int) -> TrainingConfig:
        lam = variant.lam if variant.encoding_trainable else 0.0
        return replace(self.training, lam=lam, seed=seed, encoding_trainable=variant.encoding_trainable)

    def train_many(self, jobs: list[tuple[Variant, int]]) -> dict[tuple[Variant, int], RunRecord]:
        configs = {job: self.config_for(*job) for job in jobs}
        todo = sorted({c for c in configs.values() if c not in self.cache}, key=repr)
        payload = [(self.layout, self.train_set, self.test_set, self.scaling, c) for c in todo]
        if self.workers > 1 and len(payload) > 1:
            with ProcessPoolExecutor(self.workers) as pool:
                results = list(pool.map(_train_job, payload))
        else:
            results = [_train_job(p) for p in payload]
        self.cache.update(zip(todo, results))
        return {job: self.cache[c] for job, c in configs.items()}


@dataclass
class StudyResult:
    aggregate: list[dict]
    per_seed: list[dict]


def worst_case_mse(
    layout: CircuitLayout,
    params: ModelParams,
    scaling: OutputScaling,
    test_set: Dataset,
    epsilon: float,
    rounds: int = 100,
    seed: int = 0,
) -> float:
    """Max test MSE over ``rounds`` noisy copies of the test set.

    Round ``k`` draws its noise from the stream ``(seed, k)``, so the first
    ``m`` rounds are identical whatever the total round count.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    X = np.asarray(test_set.sequences, dtype=float)
    y = np.asarray(test_set.targets, dtype=float)
    if epsilon == 0:
        rounds = 1
    worst = -np.inf
    # evaluate in chunks of rounds to bound memory
    chunk = max(1, 20000 // max(1, X.shape[0]))
    for start in range(0, rounds, chunk):
        ks = range(start, min(rounds, start + chunk))
        noisy = np.concatenate(
            [X + make_rng((seed, k)).uniform(-epsilon, epsilon, X.shape) if epsilon else X for k in ks]
        )
        err = predict_batch(layout, params, scaling, noisy).reshape(len(ks), -1) - y
        worst = max(worst, float(np.max(np.mean(err * err, axis=1))))
    return worst


def _mean_std(values) -> tuple[float, float]:
    a = np.asarray(values, dtype=float)
    return float(np.mean(a)), float(np.std(a))


def _variants(cfg: RobustnessConfig) -> list[Variant]:
    out = [Variant(lam) for lam in cfg.lambda_values]
    if cfg.include_fixed_encoding:
        out.append(Variant(0.0, encoding_trainable=False))
    return out


def run_robustness_study(cfg: RobustnessConfig, ctx: ExperimentContext) -> StudyResult:
    variants = _variants(cfg)
    if not variants or not cfg.seeds:
        raise ValueError("robustness study needs at least one variant and one seed")
    runs = ctx.train_many([(v, s) for v in variants for s in cfg.seeds])
    per_seed = []
    aggregate = []
    for v in variants:
        for eps in cfg.epsilon_grid:
            wc, lip = [], []
            for s in cfg.seeds:
                rec = runs[(v, s)]
                value = worst_case_mse(
                    ctx.layout, rec.params, ctx.scaling, ctx.test_set, eps,
                    cfg.perturbation_rounds, cfg.perturbation_seed,
                )
                bound = rec.lipschitz_report.bound_raw
                wc.append(value)
                lip.append(bound)
                per_seed.append(
                    {
                        "variant": v.label,
                        "seed": s,
                        "epsilon": eps,
                        "worst_case_mse": value,
                        "lipschitz_bound": bound,
                        "lipschitz_bound_scaled": rec.lipschitz_report.bound_scaled,
                    }
                )
            m_wc, s_wc = _mean_std(wc)
            m_l, s_l = _mean_std(lip)
            aggregate.append(
                {
                    "variant": v.label,
                    "epsilon": eps,
                    "mean_worst_case_mse": m_wc,
                    "std_worst_case_mse": s_wc,
                    "mean_lipschitz_bound": m_l,
                    "std_lipschitz_bound": s_l,
                }
            )
    return StudyResult(aggregate, per_seed)


def run_generalization_sweep(cfg: SweepConfig, ctx: ExperimentContext) -> StudyResult:
    if len(cfg.lambda_grid) < 2:
        raise ValueError("the sweep needs at least two lambda values")
    lambdas = sorted(cfg.lambda_grid)
    runs = ctx.train_many([(Variant(lam), s) for lam in lambdas for s in cfg.seeds])
    per_seed, aggregate = [], []
    for lam in lambdas:
        cols = {"train_mse": [], "test_mse": [], "gap": [], "lipschitz_bound": []}
        for s in cfg.seeds:
            rec = runs[(Variant(lam), s)]
            row = {
                "lambda": lam,
                "seed": s,
                "train_mse": rec.gap.train_mse,
                "test_mse": rec.gap.test_mse,
                "gap": rec.gap.gap,
                "lipschitz_bound": rec.lipschitz_report.bound_raw,
            }
            per_seed.append(row)
            for k in cols:
                cols[k].append(row[k])
        agg = {"lambda": lam}
        for k, vals in cols.items():
            agg[f"mean_{k}"], agg[f"std_{k}"] = _mean_std(vals)
        aggregate.append(agg)
    return StudyResult(aggregate, per_seed)


def export_predictions(layout, params, scaling, train_set: Dataset, test_set: Dataset) -> list[tuple]:
    rows = []
    for name, ds in (("train", train_set), ("test", test_set)):
        pred = predict_batch(layout, params, scaling, ds.sequences)
        rows.extend((name, float(r), float(p)) for r, p in zip(ds.targets, pred))
    return rows


def median_run(records: list[RunRecord]) -> RunRecord:
    """Run with the median test MSE (lower median for an even count)."""
    order = sorted(range(len(records)), key=lambda i: (records[i].gap.test_mse, i))
    return records[order[(len(order) - 1) // 2]]


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_rows_csv(path, rows, header=None) -> None:
    """Write dict rows (keys as header) or tuple rows with an explicit header."""
    rows = list(rows)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if header is None:
            header = list(rows[0].keys()) if rows else []
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(row[k]) for k in header])
        else:
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
