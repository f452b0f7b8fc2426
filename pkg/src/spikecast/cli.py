"""Command-line entry point binding the library into reproducible experiments.

Commands: ``mg-gen`` (dataset pipeline), ``train``, ``eval``, ``regime``
(single-neuron lab), ``gradcheck`` (BPTT vs finite differences), ``bench``
(the three-model comparison).

Every command is a pure function of its flags, input files and seed: output
files carry no timestamps and re-runs overwrite byte-identically (with
``--threads 1`` bitwise determinism is guaranteed; the fixed accumulation
order keeps multi-threaded runs bitwise identical as well).

Exit codes: 0 success, 1 validation error, 2 numeric failure,
3 acceptance-assertion failure.
"""

from __future__ import annotations

import argparse
import json
import statistics
import subprocess
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .backprop import finite_diff_check
from .containers import (
    load_checkpoint,
    load_dataset,
    save_checkpoint,
    save_dataset,
    write_activity_csv,
    write_csv,
    write_json,
    write_jsonl,
    write_series_csv,
)
from .errors import ConfigError, NumericError, SpikecastError
from .mg import (
    MGConfig,
    ScalerParams,
    estimate_lyapunov,
    fit_scaler,
    generate_mg,
    window,
)
from .metrics import evaluate
from .network import (
    MODEL_ADLIF,
    MODEL_KINDS,
    MODEL_LIF,
    MODEL_MTC,
    NetworkConfig,
    forward,
    init_params,
)
from .neurons import AdLIFParams, LIFParams
from .presets import get_preset, preset_to_params
from .regimes import (
    StimulusProtocol,
    classify,
    detect_spikes,
    population_heterogeneity,
    simulate_population,
    spike_stats,
    tune_preset,
)
from .training import TrainConfig, split_dataset, train

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERIC = 2
EXIT_ASSERTION = 3

# Named experiment scales.  "paper" encodes the full protocol and is not
# CI-runnable; "desk" is the acceptance target.
SCALES = {
    "desk": {
        "hidden_size": 128, "t_x": 500, "n_samples": 256, "stride": 37,
        "epochs": 300, "batch_size": 32, "horizon": 675,
    },
    "paper": {
        "hidden_size": 1000, "t_x": 2000, "n_samples": 1500, "stride": 97,
        "epochs": 10000, "batch_size": 128, "horizon": 675,
    },
}

# Swept per-model learning-rate defaults (desk scale); override with --lr-max.
DEFAULT_LR = {MODEL_LIF: 0.02, MODEL_ADLIF: 0.02, MODEL_MTC: 0.05}

# Benchmark population ranges: membrane and adaptation time constants drawn
# uniformly per neuron.
LIF_TAU_M_RANGE = (1.0, 5.0)
ADLIF_TAU_M_RANGE = (1.0, 5.0)
ADLIF_TAU_W_RANGE = (60.0, 300.0)
ADLIF_A_RANGE = (0.0, 1.0)
ADLIF_B_RANGE = (0.0, 2.0)


class _Parser(argparse.ArgumentParser):
    """argparse with validation failures mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_VALIDATION)


def _git_describe() -> str:
    try:
        p = subprocess.run(["git", "describe", "--always", "--dirty"],
                           capture_output=True, text=True, check=False)
        out = p.stdout.strip()
        return out if p.returncode == 0 and out else "unknown"
    except OSError:
        return "unknown"


def _write_run_config(out_dir: Path, command: str, flags: dict) -> None:
    write_json(out_dir / "config.json", {
        "command": command,
        "flags": flags,
        "version": __version__,
        "build": _git_describe(),
    })


def _ensure_out_dir(path_str: str) -> Path:
    out = Path(path_str)
    if not out.parent.exists():
        raise ConfigError(f"parent of output directory does not exist: {out.parent}")
    out.mkdir(parents=True, exist_ok=True)
    return out


def build_population(model: str, n: int, seed: int, preset_file=None):
    """Benchmark populations: heterogeneous per-neuron intrinsic parameters."""
    rng = np.random.default_rng(seed)
    if model == MODEL_LIF:
        return LIFParams.create(
            tau_m=rng.uniform(*LIF_TAU_M_RANGE, size=n), u_th=1.0, u_rest=0.0)
    if model == MODEL_ADLIF:
        return AdLIFParams.create(
            tau_m=rng.uniform(*ADLIF_TAU_M_RANGE, size=n),
            tau_w=rng.uniform(*ADLIF_TAU_W_RANGE, size=n),
            a=rng.uniform(*ADLIF_A_RANGE, size=n),
            b=rng.uniform(*ADLIF_B_RANGE, size=n),
            u_th=1.0, u_rest=0.0)
    if model == MODEL_MTC:
        tonic = get_preset("tonic", preset_file)
        bursting = get_preset("bursting", preset_file)
        return population_heterogeneity(n, tonic, bursting, rng_seed=seed)
    raise ConfigError(f"unknown model {model!r}")


# ---------------------------------------------------------------------------
# mg-gen
# ---------------------------------------------------------------------------


def cmd_mg_gen(args) -> int:
    out_dir = _ensure_out_dir(args.out_dir)
    cfg = MGConfig(
        gamma=args.gamma, beta=args.beta, n=args.n_exp, tau_delay=args.tau,
        dt=args.dt, transient_steps=args.transient,
        total_steps=args.total_steps, initial_history=args.history,
    )
    series = generate_mg(cfg)
    write_series_csv(out_dir / "series.csv", series)

    lyap = None
    if args.lyapunov:
        lyap = estimate_lyapunov(series)
        write_json(out_dir / "lyapunov.json", {
            "lambda_per_time_unit": lyap,
            "lyapunov_time": (1.0 / lyap) if lyap > 0 else None,
            "embed_delay": 12, "embed_dim": 4,
        })

    scaler = fit_scaler(series, args.scale_min, args.scale_max)
    scaled = series
    scaled.values = scaler.apply(series.values)
    ds = window(scaled, t_x=args.t_x, horizon=args.horizon,
                n_samples=args.n_samples, stride=args.stride)
    save_dataset(out_dir / "dataset", ds, mg_config=cfg.to_dict(), scaler=scaler)
    _write_run_config(out_dir, "mg-gen", vars(args))
    print(f"wrote series.csv ({len(series)} steps) and dataset "
          f"({ds.n_samples} x {ds.window_len}, horizon {ds.horizon}) to {out_dir}")
    if lyap is not None:
        print(f"lyapunov estimate: {lyap:.6f} per time unit "
              f"(lyapunov time {1.0 / lyap:.1f})")
    return EXIT_OK


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------


def cmd_train(args) -> int:
    out_dir = _ensure_out_dir(args.out_dir)
    ds, sidecar = load_dataset(Path(args.dataset))
    n = args.hidden_size
    pop = build_population(args.model, n, args.seed,
                           Path(args.preset_file) if args.preset_file else None)
    net_cfg = NetworkConfig(
        hidden_size=n, model_kind=args.model, population=pop,
        filter_cutoff=args.filter_cutoff, loss_washout=args.washout,
    )
    lr_max = args.lr_max if args.lr_max is not None else DEFAULT_LR[args.model]
    train_cfg = TrainConfig(
        lr_max=lr_max, lr_min=args.lr_min, epochs=args.epochs,
        batch_size=args.batch_size, seed=args.seed,
        eval_every=args.eval_every, checkpoint_every=args.checkpoint_every,
        threads=args.threads, microbatch=args.microbatch,
    )

    history_path = out_dir / "history.jsonl"
    records = []

    def on_epoch(rec):
        records.append(rec)
        if args.verbose and (rec["epoch"] % 10 == 0 or rec["val_mse"] is not None):
            print(f"epoch {rec['epoch']}: train_mse {rec['train_mse']:.6f}"
                  + (f" val_mse {rec['val_mse']:.6f}" if rec["val_mse"] is not None else ""))

    def on_checkpoint(epoch, params):
        save_checkpoint(out_dir / f"checkpoint_{epoch:06d}.ckpt", net_cfg, params,
                        extra={"epoch": epoch, "seed": args.seed})

    run = train(ds, net_cfg, train_cfg, on_epoch=on_epoch, on_checkpoint=on_checkpoint)
    write_jsonl(history_path, records)
    final = save_checkpoint(out_dir / "checkpoint_final.ckpt", net_cfg, run.params,
                            extra={"epoch": train_cfg.epochs - 1, "seed": args.seed,
                                   "dataset_fingerprint": run.dataset_fingerprint})
    _write_run_config(out_dir, "train", vars(args))
    print(f"trained {args.model} for {train_cfg.epochs} epochs; "
          f"final val_mse {run.final_val_mse:.6f}; checkpoint {final}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------


def cmd_eval(args) -> int:
    out_dir = _ensure_out_dir(args.out_dir)
    net_cfg, params, header = load_checkpoint(Path(args.checkpoint))
    ds, sidecar = load_dataset(Path(args.dataset))
    if sidecar.get("scaler") is None:
        raise ConfigError("dataset sidecar lacks scaler parameters")
    scaler = ScalerParams.from_dict(sidecar["scaler"])

    if args.split == "val":
        _, part = split_dataset(ds, args.val_fraction)
    elif args.split == "train":
        part, _ = split_dataset(ds, args.val_fraction)
    else:
        part = ds

    result = evaluate(net_cfg, params, part, scaler, threads=args.threads)
    write_json(out_dir / "metrics.json", {
        "split": args.split,
        "checkpoint": str(args.checkpoint),
        "normalized": result.normalized.to_dict(),
        "original": result.original.to_dict(),
    })
    if args.activity:
        _, hidden, _ = forward(net_cfg, params, part.inputs)
        write_activity_csv(out_dir / "activity.csv.gz", hidden)
    _write_run_config(out_dir, "eval", vars(args))
    rep = result.original
    print(f"r2 {rep.r2:.4f}  smape {rep.smape:.2f}%  "
          f"s_comp {rep.s_comp:.4f}  s_comm {rep.s_comm:.6f}  [{args.split}]")
    return EXIT_OK


# ---------------------------------------------------------------------------
# regime
# ---------------------------------------------------------------------------


def _parse_sweep(specs):
    sweep = []
    for spec in specs or []:
        if "=" not in spec:
            raise ConfigError(f"sweep spec must look like name=v1,v2,... (got {spec!r})")
        name, values = spec.split("=", 1)
        sweep.append((name.strip(), [float(v) for v in values.split(",")]))
    if len(sweep) > 2:
        raise ConfigError("regime sweeps support at most two parameters")
    return sweep


def cmd_regime(args) -> int:
    out_dir = _ensure_out_dir(args.out_dir)
    preset = get_preset(args.preset, Path(args.preset_file) if args.preset_file else None)
    amplitudes = ([float(a) for a in args.amplitudes.split(",")]
                  if args.amplitudes else list(preset.get("current_band", [1.0])))
    duration = args.duration or int(preset.get("protocol_duration", 6000))
    settle = args.settle
    sweep = _parse_sweep(args.sweep)

    def run_one(overrides: dict):
        p = dict(preset)
        deltas = list(p["deltas"])
        for key, value in overrides.items():
            if key.startswith("delta_"):
                deltas[int(key.split("_")[1])] = value
            else:
                p[key] = value
        p["deltas"] = deltas
        pop = preset_to_params(p, n=len(amplitudes))
        total = settle + duration
        currents = np.zeros((total, len(amplitudes)))
        currents[settle:] = np.asarray(amplitudes)
        u_m, u_s, u_us, em = simulate_population(pop, currents, full_states=True)
        labels = {}
        for idx, amp in enumerate(amplitudes):
            protocol = StimulusProtocol("step", amp, total, onset=settle)
            spikes = detect_spikes(em[:, idx], args.min_separation)
            labels[amp] = classify(spike_stats(spikes, protocol), protocol)
        return labels, (u_m, u_s, u_us, em, currents)

    if not sweep:
        labels, (u_m, u_s, u_us, em, currents) = run_one({})
        write_json(out_dir / "labels.json", {
            "preset": args.preset,
            "labels": {str(a): lab for a, lab in labels.items()},
            "duration": duration, "settle": settle,
        })
        rows = []
        for t in range(u_m.shape[0]):
            rows.append([t, u_m[t, 0], u_s[t, 0], u_us[t, 0], em[t, 0],
                         currents[t, 0]])
        write_csv(out_dir / "trace.csv",
                  ["step", "u_m", "u_s", "u_us", "emission", "input"], rows)
        print("labels:", ", ".join(f"I={a}: {lab}" for a, lab in labels.items()))
    else:
        (p1, v1s) = sweep[0]
        (p2, v2s) = sweep[1] if len(sweep) > 1 else (None, [None])
        rows = []
        for v1 in v1s:
            for v2 in v2s:
                overrides = {p1: v1}
                if p2 is not None:
                    overrides[p2] = v2
                labels, _ = run_one(overrides)
                majority = sorted(labels.values())[len(labels) // 2]
                rows.append([v1, v2 if v2 is not None else "", majority])
        write_csv(out_dir / "regime_map.csv", [p1, p2 or "-", "label"], rows)
        print(f"wrote regime map with {len(rows)} grid points")

    _write_run_config(out_dir, "regime", vars(args))
    return EXIT_OK


# ---------------------------------------------------------------------------
# gradcheck
# ---------------------------------------------------------------------------


def cmd_gradcheck(args) -> int:
    out_dir = _ensure_out_dir(args.out_dir)
    if args.model != MODEL_MTC:
        raise ConfigError(
            "gradient checking is exact-mode only: surrogate backward passes "
            "are deliberately inconsistent with the spiking forward pass")
    if args.epsilon <= 0:
        raise ConfigError("--epsilon must be > 0")

    from .acceptance import gradcheck_instances  # local import: shares fixtures

    worst = 0.0
    reports = []
    for seed, rel_err in gradcheck_instances(
            n_seeds=args.seeds, n=args.hidden_size, t_len=args.t_x,
            epsilon=args.epsilon):
        reports.append({"seed": seed, "max_rel_error": rel_err})
        worst = max(worst, rel_err)
    passed = worst < args.threshold
    write_json(out_dir / "gradcheck.json", {
        "instances": reports,
        "worst_rel_error": worst,
        "threshold": args.threshold,
        "passed": passed,
    })
    _write_run_config(out_dir, "gradcheck", vars(args))
    print(f"gradcheck worst relative error {worst:.3e} over {args.seeds} seeds "
          f"(threshold {args.threshold:g}): {'PASS' if passed else 'FAIL'}")
    return EXIT_OK if passed else EXIT_ASSERTION


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------


def _bench_dataset(scale: dict, out_dir: Path):
    cfg = MGConfig(total_steps=(scale["n_samples"] - 1) * scale["stride"]
                   + scale["t_x"] + scale["horizon"])
    series = generate_mg(cfg)
    scaler = fit_scaler(series)
    series.values = scaler.apply(series.values)
    ds = window(series, t_x=scale["t_x"], horizon=scale["horizon"],
                n_samples=scale["n_samples"], stride=scale["stride"])
    save_dataset(out_dir / "dataset", ds, mg_config=cfg.to_dict(), scaler=scaler)
    return ds, scaler


def cmd_bench(args) -> int:
    out_dir = _ensure_out_dir(args.out_dir)
    if args.scale not in SCALES:
        raise ConfigError(f"unknown scale {args.scale!r}")
    scale = SCALES[args.scale]
    if args.scale == "paper":
        print("warning: the 'paper' scale trains 3 models x "
              f"{args.seeds} seeds at N={scale['hidden_size']}, "
              f"T_x={scale['t_x']}, {scale['epochs']} epochs; this is a "
              "multi-day CPU workload and is excluded from CI.")

    ds, scaler = _bench_dataset(scale, out_dir)
    _, val_ds = split_dataset(ds, 0.2)

    rows = []
    per_model: dict = {m: {"r2": [], "smape": [], "s_comp": [], "s_comm": []}
                       for m in MODEL_KINDS}
    for model in (MODEL_LIF, MODEL_ADLIF, MODEL_MTC):
        for seed in range(args.seeds):
            run_dir = out_dir / f"{model}_seed{seed}"
            run_dir.mkdir(exist_ok=True)
            pop = build_population(model, scale["hidden_size"], seed)
            net_cfg = NetworkConfig(hidden_size=scale["hidden_size"],
                                    model_kind=model, population=pop,
                                    filter_cutoff=args.filter_cutoff)
            train_cfg = TrainConfig(
                lr_max=args.lr_max if args.lr_max is not None else DEFAULT_LR[model],
                epochs=args.epochs if args.epochs is not None else scale["epochs"],
                batch_size=scale["batch_size"], seed=seed,
                eval_every=max(1, scale["epochs"] // 10),
                threads=args.threads,
            )
            records = []
            run = train(ds, net_cfg, train_cfg, on_epoch=records.append)
            write_jsonl(run_dir / "history.jsonl", records)
            save_checkpoint(run_dir / "checkpoint_final.ckpt", net_cfg, run.params,
                            extra={"seed": seed, "model": model})
            result = evaluate(net_cfg, run.params, val_ds, scaler,
                              threads=args.threads)
            rep = result.original
            rows.append([model, seed, rep.r2, rep.smape, rep.s_comp, rep.s_comm])
            for key, value in (("r2", rep.r2), ("smape", rep.smape),
                               ("s_comp", rep.s_comp), ("s_comm", rep.s_comm)):
                per_model[model][key].append(value)
            print(f"{model} seed {seed}: r2 {rep.r2:.4f} smape {rep.smape:.2f}% "
                  f"s_comp {rep.s_comp:.4f} s_comm {rep.s_comm:.6f}")

    write_csv(out_dir / "summary.csv",
              ["model", "seed", "r2", "smape", "s_comp", "s_comm"], rows)
    medians = {
        model: {key: statistics.median(vals) for key, vals in stats.items()}
        for model, stats in per_model.items()
    }
    write_csv(out_dir / "tradeoff.csv",
              ["model", "r2_median", "smape_median", "s_comp_median", "s_comm_median"],
              [[m, medians[m]["r2"], medians[m]["smape"], medians[m]["s_comp"],
                medians[m]["s_comm"]] for m in (MODEL_LIF, MODEL_ADLIF, MODEL_MTC)])

    assertions = {
        "r2_gap_mtc_vs_lif": medians[MODEL_MTC]["r2"] > medians[MODEL_LIF]["r2"] + 0.1,
        "r2_mtc_floor": medians[MODEL_MTC]["r2"] >= 0.8,
        "s_comm_mtc_below_third_of_adlif":
            medians[MODEL_MTC]["s_comm"] < medians[MODEL_ADLIF]["s_comm"] / 3.0,
        "s_comp_mtc_highest":
            medians[MODEL_MTC]["s_comp"] > medians[MODEL_LIF]["s_comp"]
            and medians[MODEL_MTC]["s_comp"] > medians[MODEL_ADLIF]["s_comp"],
    }
    write_json(out_dir / "assertions.json",
               {"medians": medians, "assertions": assertions})
    _write_run_config(out_dir, "bench", vars(args))

    for name, ok in assertions.items():
        print(f"assertion {name}: {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if all(assertions.values()) else EXIT_ASSERTION


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="spikecast",
                     description="Spiking forecasting networks on chaotic series")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mg-gen", help="generate a Mackey-Glass forecasting dataset")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--gamma", type=float, default=0.1)
    p.add_argument("--beta", type=float, default=0.2)
    p.add_argument("--n-exp", type=float, default=10.0,
                   help="nonlinearity exponent")
    p.add_argument("--tau", type=float, default=17.0, help="feedback delay")
    p.add_argument("--dt", type=float, default=0.2)
    p.add_argument("--transient", type=int, default=5000)
    p.add_argument("--total-steps", type=int, default=20000)
    p.add_argument("--history", type=float, default=1.2,
                   help="constant initial history value")
    p.add_argument("--scale-min", type=float, default=-0.5)
    p.add_argument("--scale-max", type=float, default=0.5)
    p.add_argument("--t-x", type=int, default=500, help="input window length")
    p.add_argument("--horizon", type=int, default=675)
    p.add_argument("--n-samples", type=int, default=256)
    p.add_argument("--stride", type=int, default=37)
    p.add_argument("--lyapunov", action="store_true",
                   help="also estimate the maximal Lyapunov exponent")
    p.set_defaults(func=cmd_mg_gen)

    p = sub.add_parser("train", help="train one model on a dataset")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--dataset", required=True,
                   help="dataset container base path (without extension)")
    p.add_argument("--model", choices=MODEL_KINDS, required=True)
    p.add_argument("--hidden-size", type=int, default=128)
    p.add_argument("--epochs", type=int, default=300)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--lr-max", type=float, default=None,
                   help="defaults to the per-model swept value")
    p.add_argument("--lr-min", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--filter-cutoff", type=float, default=0.02)
    p.add_argument("--washout", type=int, default=0)
    p.add_argument("--eval-every", type=int, default=10)
    p.add_argument("--checkpoint-every", type=int, default=0)
    p.add_argument("--microbatch", type=int, default=32)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--preset-file", default=None)
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a dataset split")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--split", choices=("val", "train", "all"), default="val")
    p.add_argument("--val-fraction", type=float, default=0.2)
    p.add_argument("--activity", action="store_true",
                   help="dump sparse hidden-activity CSV")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("regime", help="single-neuron stimulation lab")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--preset", required=True)
    p.add_argument("--preset-file", default=None)
    p.add_argument("--amplitudes", default=None,
                   help="comma-separated currents (default: preset band)")
    p.add_argument("--duration", type=int, default=None)
    p.add_argument("--settle", type=int, default=2000)
    p.add_argument("--min-separation", type=int, default=3)
    p.add_argument("--sweep", action="append", default=None,
                   help="name=v1,v2,... sweep over a preset field (max twice)")
    p.set_defaults(func=cmd_regime)

    p = sub.add_parser("gradcheck", help="verify BPTT against finite differences")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--model", choices=MODEL_KINDS, default=MODEL_MTC)
    p.add_argument("--hidden-size", type=int, default=8)
    p.add_argument("--t-x", type=int, default=50)
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--epsilon", type=float, default=1e-5)
    p.add_argument("--threshold", type=float, default=1e-4)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("bench", help="train and compare all three models")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--scale", choices=tuple(SCALES), default="desk")
    p.add_argument("--seeds", type=int, default=3)
    p.add_argument("--epochs", type=int, default=None,
                   help="override the scale's epoch count")
    p.add_argument("--lr-max", type=float, default=None,
                   help="override the per-model defaults")
    p.add_argument("--filter-cutoff", type=float, default=0.02)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_VALIDATION
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except SpikecastError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
