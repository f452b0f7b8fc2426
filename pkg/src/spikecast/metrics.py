"""Forecasting fidelity (R^2, SMAPE) and activity-sparsity metrics.

Computational sparsity counts neuron-timesteps whose emission is exactly
zero (the transduction guarantees exact zeros below threshold, so no
epsilon is involved); communication sparsity is the mean emission per
neuron-timestep.  For binary-spike models the two are exact complements.

SMAPE is unstable around zero-crossing signals, so ``evaluate`` reports
fidelity on both the normalized scale and the scaler-inverted original
scale (strictly positive for Mackey-Glass); the original scale is the
headline.  R^2 is invariant under the affine rescaling, so both scales
agree on it exactly.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError
from .mg import ScalerParams, WindowedDataset
from .network import NetworkConfig, NetworkParams, forward

SCALE_NORMALIZED = "normalized"
SCALE_ORIGINAL = "original"


@dataclass
class MetricsReport:
    r2: float
    smape: float
    s_comp: float
    s_comm: float
    n_neurons: int
    n_steps: int
    scale: str

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def r_squared(pred, target) -> float:
    """Coefficient of determination: 1 - SSE / variance-sum of the target."""
    pred = np.asarray(pred, dtype=np.float64).ravel()
    target = np.asarray(target, dtype=np.float64).ravel()
    if pred.shape != target.shape:
        raise ConfigError("pred and target must have equal lengths")
    if pred.size < 2:
        raise ConfigError("need at least two points")
    ss_tot = float(np.sum((target - target.mean()) ** 2))
    if ss_tot == 0.0:
        raise ConfigError("constant target: R^2 undefined")
    ss_res = float(np.sum((pred - target) ** 2))
    return 1.0 - ss_res / ss_tot


def smape(pred, target) -> float:
    """Symmetric mean absolute percentage error in percent, range [0, 200].

    Terms with |pred| + |target| == 0 contribute zero.
    """
    pred = np.asarray(pred, dtype=np.float64).ravel()
    target = np.asarray(target, dtype=np.float64).ravel()
    if pred.shape != target.shape:
        raise ConfigError("pred and target must have equal lengths")
    denom = np.abs(pred) + np.abs(target)
    num = 2.0 * np.abs(pred - target)
    terms = np.divide(num, denom, out=np.zeros_like(num), where=denom > 0)
    return float(100.0 * np.mean(terms))


def sparsity(hidden_activity) -> tuple:
    """(s_comp, s_comm) over a (T, N) or flattened activity grid.

    s_comp: fraction of entries exactly equal to zero.
    s_comm: mean entry value (average spike probability for binary models).
    """
    act = np.asarray(hidden_activity, dtype=np.float64)
    if act.size == 0:
        raise ConfigError("empty activity grid")
    if np.any(act < 0) or np.any(act > 1):
        raise ConfigError("activity values must lie in [0, 1]")
    s_comp = float(np.count_nonzero(act == 0.0)) / act.size
    s_comm = float(np.sum(act)) / act.size
    return s_comp, s_comm


def sparsity_bruteforce(hidden_activity) -> tuple:
    """Independent oracle for ``sparsity``: explicit double loop."""
    act = np.asarray(hidden_activity, dtype=np.float64)
    if act.size == 0:
        raise ConfigError("empty activity grid")
    flat = act.reshape(-1, act.shape[-1]) if act.ndim > 1 else act.reshape(-1, 1)
    zeros = 0
    total = 0.0
    count = 0
    for row in flat:
        for v in row:
            if v == 0.0:
                zeros += 1
            total += v
            count += 1
    return zeros / count, total / count


@dataclass
class EvaluationResult:
    normalized: MetricsReport
    original: MetricsReport

    def to_dict(self) -> dict:
        return {
            "normalized": self.normalized.to_dict(),
            "original": self.original.to_dict(),
        }


def evaluate(
    net_cfg: NetworkConfig,
    params: NetworkParams,
    dataset: WindowedDataset,
    scaler: ScalerParams,
    microbatch: int = 32,
    threads: int = 1,
    forward_fn: Optional[Callable] = None,
) -> EvaluationResult:
    """Run the network over a dataset split and compute all metrics.

    Predictions and targets are concatenated across samples; sparsity is
    measured on the raw hidden activity.  ``forward_fn`` may replace the
    network forward (same signature and return layout) to inject an oracle.
    """
    if forward_fn is None:
        if params.n != net_cfg.hidden_size:
            raise ConfigError("checkpoint/config mismatch: parameter size differs")
        forward_fn = lambda x: forward(net_cfg, params, x)  # noqa: E731

    slices = [slice(s, min(s + microbatch, dataset.n_samples))
              for s in range(0, dataset.n_samples, microbatch)]

    def run(sl):
        pred, hidden, _ = forward_fn(dataset.inputs[sl])
        zeros = int(np.count_nonzero(hidden == 0.0))
        return pred, float(np.sum(hidden)), zeros, hidden.size

    if threads > 1 and len(slices) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(run, slices))
    else:
        results = [run(sl) for sl in slices]

    preds = np.concatenate([r[0].ravel() for r in results])
    targets = dataset.targets.ravel()
    total_act = sum(r[1] for r in results)
    total_zero = sum(r[2] for r in results)
    total_size = sum(r[3] for r in results)
    s_comp = total_zero / total_size
    s_comm = total_act / total_size

    n_neurons = net_cfg.hidden_size
    n_steps = dataset.n_samples * dataset.window_len

    norm = MetricsReport(
        r2=r_squared(preds, targets),
        smape=smape(preds, targets),
        s_comp=s_comp, s_comm=s_comm,
        n_neurons=n_neurons, n_steps=n_steps,
        scale=SCALE_NORMALIZED,
    )
    pred_orig = scaler.invert(preds)
    target_orig = scaler.invert(targets)
    orig = MetricsReport(
        r2=r_squared(pred_orig, target_orig),
        smape=smape(pred_orig, target_orig),
        s_comp=s_comp, s_comm=s_comm,
        n_neurons=n_neurons, n_steps=n_steps,
        scale=SCALE_ORIGINAL,
    )
    return EvaluationResult(normalized=norm, original=orig)
