"""Command-line entry point: ``robustqml <command> [--config PATH] [flags]``."""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .config import PAPER_SCALE, ConfigError, ExperimentConfig, config_from_dict, load_config
from .dataset import (
    bifurcation_table,
    generate_dataset,
    split,
    write_bifurcation_csv,
    write_dataset_csv,
)
from .gradients import GRADIENT_METHODS
from .harness import (
    ExperimentContext,
    Variant,
    export_predictions,
    median_run,
    run_generalization_sweep,
    run_robustness_study,
    write_rows_csv,
)
from .model import OutputScaling, build_logistic_circuit, load_model, save_model

COMMANDS = ("generate-data", "train", "robustness", "sweep", "predict-export", "bifurcation")


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="robustqml", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--out", help="output directory (default runs/<command>)")
        p.add_argument("--paper-scale", action="store_true", help="use the full-size study settings")
        p.add_argument("--workers", type=int)
        if name == "generate-data" or name == "bifurcation":
            continue
        p.add_argument("--epochs", type=int)
        p.add_argument("--gradient-method", choices=GRADIENT_METHODS)
        p.add_argument("--fixed-encoding", action="store_true")
        p.add_argument("--lambda", dest="lam", type=_float_list, help="value, or list for studies")
        if name == "train":
            p.add_argument("--seed", type=int)
        else:
            p.add_argument("--seeds", type=_int_list)
        if name == "robustness":
            p.add_argument("--epsilon-grid", type=_float_list)
        if name == "predict-export":
            p.add_argument("--model", help="model JSON written by `train`; skips training")
    return parser


def _single_lambda(values) -> float:
    if len(values) != 1:
        raise ConfigError("--lambda takes a single value for this command")
    return values[0]


def resolve_config(args) -> ExperimentConfig:
    cfg = load_config(args.config)
    if args.paper_scale:
        cfg = config_from_dict(PAPER_SCALE, cfg)
    if args.workers is not None:
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        cfg = replace(cfg, workers=args.workers)
    tr = {}
    if getattr(args, "epochs", None) is not None:
        tr["epochs"] = args.epochs
    if getattr(args, "gradient_method", None):
        tr["gradient_method"] = args.gradient_method
    if getattr(args, "seed", None) is not None:
        tr["seed"] = args.seed
    cmd = args.command
    lam = getattr(args, "lam", None)
    if cmd in ("train", "predict-export"):
        if lam is not None:
            tr["lam"] = _single_lambda(lam)
        if args.fixed_encoding:
            tr["encoding_trainable"] = False
    try:
        if tr:
            cfg = replace(cfg, training=replace(cfg.training, **tr))
        if cmd == "robustness":
            rob = {}
            if lam is not None:
                rob["lambda_values"] = lam
            if args.seeds is not None:
                rob["seeds"] = args.seeds
            if args.epsilon_grid is not None:
                rob["epsilon_grid"] = args.epsilon_grid
            if args.fixed_encoding:
                rob["include_fixed_encoding"] = True
            cfg = replace(cfg, robustness=replace(cfg.robustness, **rob))
        if cmd == "sweep":
            sw = {}
            if lam is not None:
                sw["lambda_grid"] = lam
            if args.seeds is not None:
                sw["seeds"] = args.seeds
            cfg = replace(cfg, sweep=replace(cfg.sweep, **sw))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def build_context(cfg: ExperimentConfig) -> ExperimentContext:
    d = cfg.data
    try:
        data = generate_dataset(d.count, d.r_min, d.r_max, d.x1, d.length)
        train_set, test_set = split(data, d.train_count, d.split_seed)
        layout = build_logistic_circuit(cfg.model.num_qubits, d.length)
        scaling = OutputScaling(cfg.model.offset, cfg.model.slope)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return ExperimentContext(layout, scaling, train_set, test_set, cfg.training, cfg.workers)


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")


def _seeds_for(cmd: str, cfg: ExperimentConfig, args) -> list[int]:
    if cmd == "robustness":
        return list(cfg.robustness.seeds)
    if cmd == "sweep":
        return list(cfg.sweep.seeds)
    if cmd == "predict-export" and args.seeds:
        return list(args.seeds)
    if cmd in ("train", "predict-export"):
        return [cfg.training.seed]
    return [cfg.data.split_seed]


def _cmd_generate_data(cfg, ctx, out, args):
    d = cfg.data
    full = generate_dataset(d.count, d.r_min, d.r_max, d.x1, d.length)
    write_dataset_csv(out / "dataset.csv", full)
    write_dataset_csv(out / "train.csv", ctx.train_set)
    write_dataset_csv(out / "test.csv", ctx.test_set)
    return f"generate-data: {len(full)} samples ({len(ctx.train_set)} train / {len(ctx.test_set)} test)"


def _cmd_train(cfg, ctx, out, args):
    rec = ctx.train_many([(Variant(cfg.training.lam, cfg.training.encoding_trainable), cfg.training.seed)])
    rec = next(iter(rec.values()))
    (out / "run_record.json").write_text(rec.to_json() + "\n")
    rec.write_trace_csv(out / "trace.csv")
    save_model(out / "model.json", ctx.layout, rec.params)
    return (
        f"train: lambda={cfg.training.lam} seed={cfg.training.seed} "
        f"train_mse={rec.gap.train_mse:.6g} test_mse={rec.gap.test_mse:.6g} "
        f"L={rec.lipschitz_report.bound_raw:.6g}"
    )


def _cmd_robustness(cfg, ctx, out, args):
    res = run_robustness_study(cfg.robustness, ctx)
    write_rows_csv(out / "robustness.csv", res.aggregate)
    write_rows_csv(out / "robustness_per_seed.csv", res.per_seed)
    eps = max(cfg.robustness.epsilon_grid)
    worst = {r["variant"]: r["mean_worst_case_mse"] for r in res.aggregate if r["epsilon"] == eps}
    summary = ", ".join(f"{k}:{v:.4g}" for k, v in worst.items())
    return f"robustness: {len(res.aggregate)} rows; mean worst-case MSE at eps={eps:.3g}: {summary}"


def _cmd_sweep(cfg, ctx, out, args):
    res = run_generalization_sweep(cfg.sweep, ctx)
    write_rows_csv(out / "sweep.csv", res.aggregate)
    write_rows_csv(out / "sweep_per_seed.csv", res.per_seed)
    best = min(res.aggregate, key=lambda r: r["mean_test_mse"])
    return f"sweep: {len(res.aggregate)} lambda values; best mean test MSE {best['mean_test_mse']:.4g} at lambda={best['lambda']}"


def _cmd_predict_export(cfg, ctx, out, args):
    if args.model:
        try:
            layout, params = load_model(args.model)
        except (OSError, ValueError, KeyError) as exc:
            raise ConfigError(f"cannot load model {args.model}: {exc}") from None
        if layout.sequence_length != ctx.layout.sequence_length:
            raise ConfigError("model sequence_length does not match data.length")
        source = args.model
    else:
        variant = Variant(cfg.training.lam, cfg.training.encoding_trainable)
        seeds = _seeds_for("predict-export", cfg, args)
        runs = ctx.train_many([(variant, s) for s in seeds])
        chosen = median_run([runs[(variant, s)] for s in seeds])
        layout, params = ctx.layout, chosen.params
        save_model(out / "model.json", layout, params)
        source = f"seed {chosen.config.seed} (median test MSE of {len(seeds)})"
    rows = export_predictions(layout, params, ctx.scaling, ctx.train_set, ctx.test_set)
    write_rows_csv(out / "predictions.csv", rows, header=["split", "r_true", "r_predicted"])
    return f"predict-export: {len(rows)} rows from {source}"


def _cmd_bifurcation(cfg, ctx, out, args):
    b = cfg.bifurcation
    r_values = np.linspace(b.r_min, b.r_max, b.num_r)
    rows = bifurcation_table(r_values, b.iterations, b.x1)
    write_bifurcation_csv(out / "bifurcation.csv", rows)
    return f"bifurcation: {len(rows)} rows ({b.num_r} r values x {b.iterations} iterations)"


_HANDLERS = {
    "generate-data": _cmd_generate_data,
    "train": _cmd_train,
    "robustness": _cmd_robustness,
    "sweep": _cmd_sweep,
    "predict-export": _cmd_predict_export,
    "bifurcation": _cmd_bifurcation,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    started = time.time()
    try:
        cfg = resolve_config(args)
        ctx = build_context(cfg)
        out = Path(args.out or Path("runs") / args.command)
        out.mkdir(parents=True, exist_ok=True)
        summary = _HANDLERS[args.command](cfg, ctx, out, args)
    except ConfigError as exc:
        print(f"robustqml {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"robustqml {args.command}: error: {exc}", file=sys.stderr)
        return 1
    _write_json(
        out / "manifest.json",
        {
            "command": args.command,
            "version": __version__,
            "config": cfg.to_dict(),
            "seeds": _seeds_for(args.command, cfg, args),
        },
    )
    _write_json(
        out / "metadata.json",
        {
            "finished_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "elapsed_seconds": round(time.time() - started, 3),
        },
    )
    print(summary)
    return 0


if __name__ == "__main__":
    sys.exit(main())
