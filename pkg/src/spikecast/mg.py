"""Mackey-Glass data pipeline: generation, validation, scaling, windowing.

The delay differential equation

    dx/dt = beta * x(t - tau) / (1 + x(t - tau)^n) - gamma * x(t)

is integrated with Forward Euler at step ``dt``.  With the standard
parameters (gamma=0.1, beta=0.2, n=10, tau=17) the system is chaotic; the
maximal Lyapunov exponent of a generated series can be estimated with the
Rosenstein nearest-neighbour divergence method to validate the forecasting
horizon against the system's predictability limit.

The supervised forecasting task pairs an input window of length ``T_x``
with a target window of the same length displaced ``horizon`` steps into
the future.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from scipy.spatial import cKDTree

from .errors import ConfigError, NumericError

MG_DEFAULT_GAMMA = 0.1
MG_DEFAULT_BETA = 0.2
MG_DEFAULT_N = 10.0
MG_DEFAULT_TAU = 17.0
MG_DEFAULT_DT = 0.2
MG_DEFAULT_TRANSIENT = 5000
MG_DEFAULT_HISTORY = 1.2


@dataclass
class MGConfig:
    """Generation parameters for a Mackey-Glass series.

    ``initial_history`` seeds the delay buffer: either a scalar (constant
    history, the default 1.2 sits near the attractor) or a sequence with one
    value per delay step.  The transient discard makes the exact choice
    immaterial; fixing it keeps generation deterministic.
    """

    gamma: float = MG_DEFAULT_GAMMA
    beta: float = MG_DEFAULT_BETA
    n: float = MG_DEFAULT_N
    tau_delay: float = MG_DEFAULT_TAU
    dt: float = MG_DEFAULT_DT
    transient_steps: int = MG_DEFAULT_TRANSIENT
    total_steps: int = 10000
    initial_history: Union[float, Sequence[float]] = MG_DEFAULT_HISTORY

    @property
    def delay_steps(self) -> int:
        """Delay expressed in integration steps, D = round(tau/dt)."""
        return int(round(self.tau_delay / self.dt))

    def validate(self) -> None:
        if not (self.gamma > 0 and self.beta > 0):
            raise ConfigError("gamma and beta must be positive")
        if self.n < 1:
            raise ConfigError("nonlinearity exponent n must be >= 1")
        if not (self.tau_delay > 0 and self.dt > 0):
            raise ConfigError("tau_delay and dt must be positive")
        if self.delay_steps < 1:
            raise ConfigError(
                f"tau_delay ({self.tau_delay}) must be at least one step of dt ({self.dt})"
            )
        if self.total_steps < 1:
            raise ConfigError("total_steps must be >= 1")
        min_transient = math.ceil(self.tau_delay / self.dt)
        if self.transient_steps < min_transient:
            raise ConfigError(
                f"transient_steps ({self.transient_steps}) must be >= ceil(tau/dt) = "
                f"{min_transient} so the delay buffer is filled before emission"
            )
        if not np.isscalar(self.initial_history):
            hist = np.asarray(self.initial_history, dtype=float)
            if hist.ndim != 1 or hist.size != self.delay_steps:
                raise ConfigError(
                    f"initial_history sequence must have length {self.delay_steps}"
                )
            if not np.all(np.isfinite(hist)):
                raise ConfigError("initial_history must be finite")

    def to_dict(self) -> dict:
        hist = self.initial_history
        if not np.isscalar(hist):
            hist = [float(v) for v in hist]
        else:
            hist = float(hist)
        return {
            "gamma": self.gamma,
            "beta": self.beta,
            "n": self.n,
            "tau_delay": self.tau_delay,
            "dt": self.dt,
            "transient_steps": self.transient_steps,
            "total_steps": self.total_steps,
            "initial_history": hist,
        }


@dataclass
class TimeSeries:
    """Uniformly sampled scalar sequence with its step size in time units."""

    values: np.ndarray
    dt: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1 or self.values.size == 0:
            raise ConfigError("TimeSeries values must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(self.values)):
            raise ConfigError("TimeSeries values must be finite")
        if not self.dt > 0:
            raise ConfigError("TimeSeries dt must be positive")

    def __len__(self) -> int:
        return int(self.values.size)


def generate_mg(cfg: MGConfig) -> TimeSeries:
    """Integrate the Mackey-Glass equation and return the post-transient series.

    Forward Euler update: x[k+1] = x[k] + dt*(beta*x[k-D]/(1+x[k-D]^n) - gamma*x[k])
    with D = round(tau/dt).  The delay buffer occupies the D entries before the
    start state; a scalar history fills buffer and start state alike, a sequence
    history fills the buffer and the start state continues from its last value.

    Raises NumericError naming the step index if the integration diverges.
    """
    cfg.validate()
    d = cfg.delay_steps
    length = d + cfg.transient_steps + cfg.total_steps
    z = [0.0] * length
    if np.isscalar(cfg.initial_history):
        h = float(cfg.initial_history)
        for i in range(d + 1):
            z[i] = h
    else:
        hist = [float(v) for v in cfg.initial_history]
        z[:d] = hist
        z[d] = hist[-1]

    beta = float(cfg.beta)
    gamma = float(cfg.gamma)
    n = float(cfg.n)
    dt = float(cfg.dt)
    k = d
    try:
        for k in range(d, length - 1):
            xd = z[k - d]
            z[k + 1] = z[k] + dt * (beta * xd / (1.0 + xd ** n) - gamma * z[k])
    except OverflowError:
        raise NumericError(
            f"Mackey-Glass integration diverged at step {k - d}"
        ) from None

    values = np.asarray(z[d + cfg.transient_steps:], dtype=np.float64)
    if not np.all(np.isfinite(values)):
        # locate the first bad step in the full trajectory for the message
        full = np.asarray(z, dtype=np.float64)
        bad = int(np.flatnonzero(~np.isfinite(full))[0]) - d
        raise NumericError(f"Mackey-Glass integration diverged at step {bad}")
    return TimeSeries(values=values, dt=cfg.dt)


# ---------------------------------------------------------------------------
# Rosenstein maximal-Lyapunov-exponent estimate
# ---------------------------------------------------------------------------

LYAP_DEFAULT_EMBED_DELAY = 12
LYAP_DEFAULT_EMBED_DIM = 4
# Fit window of the mean log-divergence curve, in steps.  The window starts
# past the neighbour-alignment transient and the first pseudo-period of the
# attractor; earlier windows ride the transient and overestimate the exponent.
LYAP_DEFAULT_FIT_RANGE = (250, 1250)


def _delay_embed(x: np.ndarray, delay: int, dim: int) -> np.ndarray:
    m = x.size - (dim - 1) * delay
    out = np.empty((m, dim), dtype=np.float64)
    for j in range(dim):
        out[:, j] = x[j * delay: j * delay + m]
    return out


def estimate_lyapunov(
    series: TimeSeries,
    embed_delay: int = LYAP_DEFAULT_EMBED_DELAY,
    embed_dim: int = LYAP_DEFAULT_EMBED_DIM,
    fit_range: tuple = LYAP_DEFAULT_FIT_RANGE,
    theiler: int | None = None,
) -> float:
    """Estimate the maximal Lyapunov exponent (per time unit) of a series.

    Rosenstein's method: delay-embed the series, pair every point with its
    Euclidean nearest neighbour outside a Theiler window (default
    ``embed_delay * embed_dim`` steps), track the mean log separation of the
    pairs over ``fit_range`` steps, and return the slope of a linear fit to
    that curve divided by the sampling step.

    The pair set is restricted to points that can be followed over the whole
    fit horizon, and pairs with zero initial separation are dropped.
    """
    if embed_dim < 2:
        raise ConfigError("embed_dim must be >= 2")
    if embed_delay < 1:
        raise ConfigError("embed_delay must be >= 1")
    fit_lo, fit_hi = int(fit_range[0]), int(fit_range[1])
    if not (0 <= fit_lo < fit_hi):
        raise ConfigError("fit_range must satisfy 0 <= lo < hi")

    x = series.values
    if float(np.max(x) - np.min(x)) == 0.0:
        raise ConfigError("degenerate series: zero variance")

    m = x.size - (embed_dim - 1) * embed_delay
    if theiler is None:
        theiler = embed_delay * embed_dim
    min_points = fit_hi + 2 * theiler + 10
    if m <= min_points:
        raise ConfigError(
            f"too few embedding points ({m}); need more than {min_points} "
            f"for fit horizon {fit_hi} and Theiler window {theiler}"
        )

    y = _delay_embed(x, embed_delay, embed_dim)
    tree = cKDTree(y)
    # Among the 2*theiler + 2 nearest points, at most 2*theiler + 1 can sit
    # inside the temporal exclusion zone (self included), so one valid
    # neighbour is always present.
    k_query = 2 * theiler + 2
    _, idxs = tree.query(y, k=k_query, workers=-1)

    i_all = np.arange(m)
    valid = np.abs(idxs - i_all[:, None]) > theiler
    first = np.argmax(valid, axis=1)
    j_all = idxs[i_all, first]
    keep = valid[i_all, first] & (i_all <= m - 1 - fit_hi) & (j_all <= m - 1 - fit_hi)
    pairs_i = i_all[keep]
    pairs_j = j_all[keep]

    d0 = np.linalg.norm(y[pairs_i] - y[pairs_j], axis=1)
    # pairs whose initial separation is at rounding-noise level are exact
    # revisits (e.g. a periodic signal sampled commensurately); they carry no
    # geometric information and their "divergence" is floating-point noise
    noise_floor = 1e-9 * float(np.max(x) - np.min(x))
    usable = d0 > noise_floor
    pairs_i = pairs_i[usable]
    pairs_j = pairs_j[usable]
    if pairs_i.size < 10:
        raise ConfigError("too few usable neighbour pairs for divergence tracking")

    curve = np.empty(fit_hi + 1 - fit_lo, dtype=np.float64)
    for k in range(fit_lo, fit_hi + 1):
        d = np.linalg.norm(y[pairs_i + k] - y[pairs_j + k], axis=1)
        d = d[d > noise_floor]
        if d.size == 0:
            raise ConfigError("all neighbour pairs collapsed to zero distance")
        curve[k - fit_lo] = float(np.mean(np.log(d)))

    ks = np.arange(fit_lo, fit_hi + 1, dtype=np.float64)
    slope = float(np.polyfit(ks, curve, 1)[0])
    return slope / series.dt


# ---------------------------------------------------------------------------
# MinMax scaling
# ---------------------------------------------------------------------------


@dataclass
class ScalerParams:
    """Invertible affine map from [src_min, src_max] onto [dst_min, dst_max]."""

    src_min: float
    src_max: float
    dst_min: float
    dst_max: float

    def __post_init__(self):
        if not self.src_max > self.src_min:
            raise ConfigError("scaler requires src_max > src_min")
        if not self.dst_max > self.dst_min:
            raise ConfigError("scaler requires dst_max > dst_min")

    @property
    def scale(self) -> float:
        return (self.dst_max - self.dst_min) / (self.src_max - self.src_min)

    def apply(self, x):
        x = np.asarray(x, dtype=np.float64)
        return self.dst_min + (x - self.src_min) * self.scale

    def invert(self, y):
        y = np.asarray(y, dtype=np.float64)
        return self.src_min + (y - self.dst_min) / self.scale

    def to_dict(self) -> dict:
        return {
            "src_min": self.src_min,
            "src_max": self.src_max,
            "dst_min": self.dst_min,
            "dst_max": self.dst_max,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScalerParams":
        return cls(d["src_min"], d["src_max"], d["dst_min"], d["dst_max"])


def fit_scaler(series: TimeSeries, dst_min: float = -0.5, dst_max: float = 0.5) -> ScalerParams:
    """Fit the affine scaler mapping the series extrema onto [dst_min, dst_max]."""
    lo = float(np.min(series.values))
    hi = float(np.max(series.values))
    if hi == lo:
        raise ConfigError("degenerate range: constant series cannot be scaled")
    return ScalerParams(src_min=lo, src_max=hi, dst_min=dst_min, dst_max=dst_max)


# ---------------------------------------------------------------------------
# Supervised windowing
# ---------------------------------------------------------------------------


@dataclass
class WindowedDataset:
    """Paired input/target windows for direct multi-step-ahead forecasting.

    targets[k][t] is the source value exactly ``horizon`` steps after
    inputs[k][t]; sample k starts at source index k*stride.
    """

    inputs: np.ndarray   # (n_samples, T_x)
    targets: np.ndarray  # (n_samples, T_x)
    horizon: int
    stride: int

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=np.float64)
        self.targets = np.asarray(self.targets, dtype=np.float64)
        if self.inputs.shape != self.targets.shape or self.inputs.ndim != 2:
            raise ConfigError("inputs and targets must be matching 2-D arrays")
        if self.horizon < 1:
            raise ConfigError("horizon must be >= 1")

    @property
    def n_samples(self) -> int:
        return int(self.inputs.shape[0])

    @property
    def window_len(self) -> int:
        return int(self.inputs.shape[1])

    def subset(self, start: int, stop: int) -> "WindowedDataset":
        return WindowedDataset(
            inputs=self.inputs[start:stop],
            targets=self.targets[start:stop],
            horizon=self.horizon,
            stride=self.stride,
        )


def window(
    series: TimeSeries,
    t_x: int,
    horizon: int,
    n_samples: int,
    stride: int,
) -> WindowedDataset:
    """Slice a series into n_samples input/target window pairs.

    inputs[k][t] = series[k*stride + t], targets[k][t] = series[k*stride + t + horizon].
    """
    if horizon < 1:
        raise ConfigError("prediction horizon must be >= 1")
    if t_x < 1 or n_samples < 1 or stride < 1:
        raise ConfigError("t_x, n_samples and stride must all be >= 1")
    required = (n_samples - 1) * stride + t_x + horizon
    if len(series) < required:
        raise ConfigError(
            f"series too short: have {len(series)} steps, need at least {required} "
            f"for {n_samples} samples of length {t_x} at stride {stride} and horizon {horizon}"
        )
    x = series.values
    inputs = np.empty((n_samples, t_x), dtype=np.float64)
    targets = np.empty((n_samples, t_x), dtype=np.float64)
    for k in range(n_samples):
        start = k * stride
        inputs[k] = x[start: start + t_x]
        targets[k] = x[start + horizon: start + horizon + t_x]
    return WindowedDataset(inputs=inputs, targets=targets, horizon=horizon, stride=stride)
