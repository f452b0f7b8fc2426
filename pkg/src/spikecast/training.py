"""MSE objective, Adam, cosine-annealing schedule, and the training loop.

Every run is fully determined by (seed, configs, dataset): parameter
initialization, epoch shuffles and optimizer state all derive from the
configured seed, batches are accumulated in a fixed order (also when the
batch is split across worker threads), and NaNs abort rather than being
clipped away.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .backprop import GradientSet, backward
from .errors import ConfigError, NumericError
from .mg import WindowedDataset
from .network import NetworkConfig, NetworkParams, default_scheme, forward, init_params


def mse_loss(pred: np.ndarray, target: np.ndarray, washout: int = 0) -> float:
    """Mean squared error over steps >= washout (time is the last axis)."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ConfigError(f"length mismatch: pred {pred.shape} vs target {target.shape}")
    if washout >= pred.shape[-1]:
        raise ConfigError("washout must be smaller than the sequence length")
    diff = pred[..., washout:] - target[..., washout:]
    return float(np.mean(diff * diff))


def mse_loss_grad(pred: np.ndarray, target: np.ndarray, washout: int = 0):
    """(loss, d_loss/d_pred) with the adjoint zero inside the washout."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ConfigError(f"length mismatch: pred {pred.shape} vs target {target.shape}")
    if washout >= pred.shape[-1]:
        raise ConfigError("washout must be smaller than the sequence length")
    diff = pred[..., washout:] - target[..., washout:]
    loss = float(np.mean(diff * diff))
    d_pred = np.zeros_like(pred)
    d_pred[..., washout:] = 2.0 * diff / diff.size
    return loss, d_pred


def cosine_lr(epoch: int, epochs: int, lr_max: float, lr_min: float = 0.0) -> float:
    """Cosine decay from lr_max (epoch 0) to lr_min (final epoch)."""
    if not (0 <= epoch < epochs):
        raise ConfigError("epoch must satisfy 0 <= epoch < epochs")
    if epochs == 1:
        return lr_max
    return lr_min + (lr_max - lr_min) * (1.0 + math.cos(math.pi * epoch / (epochs - 1))) / 2.0


@dataclass
class OptimizerState:
    m_w_in: np.ndarray
    v_w_in: np.ndarray
    m_w_out: np.ndarray
    v_w_out: np.ndarray
    step: int = 0

    @classmethod
    def zeros(cls, n: int) -> "OptimizerState":
        return cls(np.zeros(n), np.zeros(n), np.zeros(n), np.zeros(n), 0)


def adam_step(
    opt: OptimizerState,
    params: NetworkParams,
    grads: GradientSet,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> Tuple[OptimizerState, NetworkParams]:
    """Standard bias-corrected Adam update; pure (returns new state/params)."""
    if grads.d_w_in.shape != params.w_in.shape or grads.d_w_out.shape != params.w_out.shape:
        raise ConfigError("gradient shapes do not match parameters")
    step = opt.step + 1
    c1 = 1.0 - beta1 ** step
    c2 = 1.0 - beta2 ** step

    m_in = beta1 * opt.m_w_in + (1.0 - beta1) * grads.d_w_in
    v_in = beta2 * opt.v_w_in + (1.0 - beta2) * grads.d_w_in ** 2
    m_out = beta1 * opt.m_w_out + (1.0 - beta1) * grads.d_w_out
    v_out = beta2 * opt.v_w_out + (1.0 - beta2) * grads.d_w_out ** 2

    w_in = params.w_in - lr * (m_in / c1) / (np.sqrt(v_in / c2) + eps)
    w_out = params.w_out - lr * (m_out / c1) / (np.sqrt(v_out / c2) + eps)
    new_opt = OptimizerState(m_in, v_in, m_out, v_out, step)
    return new_opt, NetworkParams(w_in=w_in, w_out=w_out)


@dataclass
class TrainConfig:
    lr_max: float
    epochs: int = 10000
    batch_size: int = 128
    lr_min: float = 0.0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    checkpoint_every: int = 0        # 0: final checkpoint only
    eval_every: int = 10
    val_fraction: float = 0.2
    init_scheme: Optional[str] = None  # default per model kind
    init_gain: float = 1.0
    grad_clip: Optional[float] = None  # global-norm clip, off by default
    microbatch: int = 32               # tape memory bound; accumulation order fixed
    threads: int = 1

    def validate(self, n_train: int) -> None:
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if not (0 < self.batch_size <= n_train):
            raise ConfigError(
                f"batch_size must be in (0, {n_train}] (got {self.batch_size})"
            )
        if not (self.lr_max > self.lr_min >= 0.0):
            raise ConfigError("need lr_max > lr_min >= 0")
        if not (0.0 < self.val_fraction < 1.0):
            raise ConfigError("val_fraction must lie in (0, 1)")
        if self.microbatch < 1 or self.threads < 1:
            raise ConfigError("microbatch and threads must be >= 1")

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        return d


@dataclass
class TrainRun:
    train_cfg: TrainConfig
    history: List[dict]
    params: NetworkParams
    dataset_fingerprint: str
    checkpoints: List[object] = field(default_factory=list)

    @property
    def final_val_mse(self) -> float:
        for rec in reversed(self.history):
            if rec.get("val_mse") is not None:
                return rec["val_mse"]
        return math.nan


def split_dataset(dataset: WindowedDataset, val_fraction: float):
    """Contiguous-by-sample-index split into (train, validation)."""
    n = dataset.n_samples
    n_val = max(1, int(round(n * val_fraction)))
    n_train = n - n_val
    if n_train < 1:
        raise ConfigError("empty training split")
    return dataset.subset(0, n_train), dataset.subset(n_train, n)


def dataset_fingerprint(dataset: WindowedDataset) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(dataset.inputs).tobytes())
    h.update(np.ascontiguousarray(dataset.targets).tobytes())
    h.update(json.dumps({"horizon": dataset.horizon, "stride": dataset.stride}).encode())
    return h.hexdigest()[:16]


def _batch_grad(cfg, params, xb, yb, washout, microbatch, threads):
    """Loss and summed gradient over one batch, microbatch accumulation in order."""
    slices = [slice(s, min(s + microbatch, xb.shape[0]))
              for s in range(0, xb.shape[0], microbatch)]

    def run(sl):
        pred, _, tape = forward(cfg, params, xb[sl], record_tape=True)
        diff = pred[:, washout:] - yb[sl, washout:]
        sse = float(np.sum(diff * diff))
        d_pred = np.zeros_like(pred)
        d_pred[:, washout:] = 2.0 * diff
        return sse, backward(cfg, params, tape, d_pred)

    if threads > 1 and len(slices) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(run, slices))
    else:
        results = [run(sl) for sl in slices]

    denom = float(xb.shape[0] * (xb.shape[1] - washout))
    total_sse = 0.0
    grads = GradientSet(np.zeros(params.n), np.zeros(params.n))
    for sse, g in results:
        total_sse += sse
        grads += g
    grads = grads.scaled(1.0 / denom)
    return total_sse / denom, grads


def evaluate_mse(cfg, params, dataset, washout=0, microbatch=32, threads=1):
    """Forward-only MSE over a dataset split."""
    slices = [slice(s, min(s + microbatch, dataset.n_samples))
              for s in range(0, dataset.n_samples, microbatch)]

    def run(sl):
        pred, _, _ = forward(cfg, params, dataset.inputs[sl])
        diff = pred[:, washout:] - dataset.targets[sl, washout:]
        return float(np.sum(diff * diff)), diff.size

    if threads > 1 and len(slices) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(run, slices))
    else:
        results = [run(sl) for sl in slices]
    sse = sum(r[0] for r in results)
    cnt = sum(r[1] for r in results)
    return sse / cnt


def train(
    dataset: WindowedDataset,
    net_cfg: NetworkConfig,
    train_cfg: TrainConfig,
    on_epoch: Optional[Callable[[dict], None]] = None,
    on_checkpoint: Optional[Callable[[int, NetworkParams], None]] = None,
) -> TrainRun:
    """Mini-batch BPTT training with seeded shuffling and cosine-annealed Adam.

    ``on_epoch`` receives each epoch's history record (for JSONL streaming);
    ``on_checkpoint`` receives (epoch, params) at checkpoint epochs and at
    the end.  Aborts with NumericError on divergence, naming epoch and batch.
    """
    net_cfg.validate()
    train_ds, val_ds = split_dataset(dataset, train_cfg.val_fraction)
    train_cfg.validate(train_ds.n_samples)
    washout = net_cfg.loss_washout
    if washout >= dataset.window_len:
        raise ConfigError("loss_washout must be smaller than the window length")

    scheme = train_cfg.init_scheme or default_scheme(net_cfg.model_kind)
    params = init_params(net_cfg, scheme=scheme, gain=train_cfg.init_gain,
                         rng_seed=train_cfg.seed)
    opt = OptimizerState.zeros(net_cfg.hidden_size)
    shuffle_rng = np.random.default_rng(train_cfg.seed + 1)

    fingerprint = dataset_fingerprint(dataset)
    history: List[dict] = []
    n_train = train_ds.n_samples

    for epoch in range(train_cfg.epochs):
        lr = cosine_lr(epoch, train_cfg.epochs, train_cfg.lr_max, train_cfg.lr_min)
        perm = shuffle_rng.permutation(n_train)
        epoch_losses = []
        for b_idx, start in enumerate(range(0, n_train, train_cfg.batch_size)):
            idx = perm[start: start + train_cfg.batch_size]
            xb = train_ds.inputs[idx]
            yb = train_ds.targets[idx]
            loss, grads = _batch_grad(net_cfg, params, xb, yb, washout,
                                      train_cfg.microbatch, train_cfg.threads)
            if not math.isfinite(loss):
                raise NumericError(
                    f"training diverged: non-finite loss at epoch {epoch}, batch {b_idx}"
                )
            if train_cfg.grad_clip is not None:
                norm = math.sqrt(float(np.sum(grads.d_w_in ** 2) + np.sum(grads.d_w_out ** 2)))
                if norm > train_cfg.grad_clip:
                    grads = grads.scaled(train_cfg.grad_clip / norm)
            opt, params = adam_step(opt, params, grads, lr,
                                    train_cfg.beta1, train_cfg.beta2, train_cfg.eps)
            epoch_losses.append(loss)

        record = {
            "epoch": epoch,
            "lr": lr,
            "train_mse": float(np.mean(epoch_losses)),
            "val_mse": None,
        }
        last = epoch == train_cfg.epochs - 1
        if last or (train_cfg.eval_every > 0 and epoch % train_cfg.eval_every == 0):
            record["val_mse"] = evaluate_mse(
                net_cfg, params, val_ds, washout,
                train_cfg.microbatch, train_cfg.threads,
            )
        history.append(record)
        if on_epoch is not None:
            on_epoch(record)
        if on_checkpoint is not None and (
            last or (train_cfg.checkpoint_every > 0
                     and epoch % train_cfg.checkpoint_every == 0 and epoch > 0)
        ):
            on_checkpoint(epoch, params)

    return TrainRun(train_cfg=train_cfg, history=history, params=params,
                    dataset_fingerprint=fingerprint)


# ---------------------------------------------------------------------------
# Hyperparameter sweeps
# ---------------------------------------------------------------------------


def _grid_candidates(grid: dict) -> List[dict]:
    keys = list(grid.keys())
    out: List[dict] = [{}]
    for key in keys:
        out = [dict(c, **{key: v}) for c in out for v in grid[key]]
    return out


def _random_candidates(space: dict, draws: int, seed: int) -> List[dict]:
    rng = np.random.default_rng(seed)
    cands = []
    for _ in range(draws):
        cand = {}
        for key, spec in space.items():
            lo, hi = float(spec["low"]), float(spec["high"])
            if spec.get("log", False):
                cand[key] = float(np.exp(rng.uniform(np.log(lo), np.log(hi))))
            else:
                cand[key] = float(rng.uniform(lo, hi))
        cands.append(cand)
    return cands


def sweep(
    search_space: dict,
    budget: int,
    dataset: WindowedDataset,
    net_cfg: NetworkConfig,
    base_train_cfg: TrainConfig,
    seed: int = 0,
) -> List[Tuple[dict, float]]:
    """Evaluate candidate TrainConfig overrides and rank by validation MSE.

    ``search_space`` is either {"grid": {field: [values...]}} or
    {"random": {field: {"low":, "high":, "log":}}, "draws": K}; fields name
    TrainConfig attributes.  Candidates beyond ``budget`` are dropped in
    order.  Returns (override, val_mse) pairs, best first.
    """
    if budget < 1:
        raise ConfigError("sweep budget must be >= 1")
    if "grid" in search_space:
        if not search_space["grid"]:
            raise ConfigError("empty sweep space")
        candidates = _grid_candidates(search_space["grid"])
    elif "random" in search_space:
        if not search_space["random"]:
            raise ConfigError("empty sweep space")
        draws = int(search_space.get("draws", budget))
        candidates = _random_candidates(search_space["random"], draws, seed)
    else:
        raise ConfigError("search_space must contain 'grid' or 'random'")
    candidates = candidates[:budget]

    results = []
    for cand in candidates:
        cfg = replace(base_train_cfg, **cand)
        run = train(dataset, net_cfg, cfg)
        results.append((cand, run.final_val_mse))
    results.sort(key=lambda item: item[1])
    return results
