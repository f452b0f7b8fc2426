"""Four-stage feedforward forecasting network.

Stages: scalar input projection (1 x N), a hidden layer of N independent
spiking neurons (no lateral or recurrent synapses), a linear readout
(N x 1), and a 4th-order low-pass reconstruction filter realized as a
cascade of four identical one-pole smoothers with unity DC gain.

``forward`` runs a window (or a batch of windows) from rest and optionally
records a ForwardTape holding everything the reverse pass needs.  All
temporal memory lives in the neuron state variables; the network itself is
stateless across windows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import ConfigError, NumericError
from .neurons import (
    AdLIFParams,
    LIFParams,
    MTCParams,
    RESET_SUBTRACT,
    RESET_TO_REST,
    TIMESCALE_FAST,
    TIMESCALE_SLOW,
    TIMESCALE_ULTRASLOW,
)

MODEL_LIF = "lif"
MODEL_ADLIF = "adlif"
MODEL_MTC = "mtc"
MODEL_KINDS = (MODEL_LIF, MODEL_ADLIF, MODEL_MTC)

SCHEME_HE_LECUN = "he_lecun"          # He-uniform input, LeCun-normal readout
SCHEME_SCALED_UNIFORM = "scaled_uniform"  # +-gain*sqrt(1/fan_in) on both layers

DEFAULT_FILTER_CUTOFF = 0.004  # cycles/step; period ~250 steps


@dataclass
class NetworkConfig:
    hidden_size: int
    model_kind: str
    population: Union[LIFParams, AdLIFParams, MTCParams]
    filter_cutoff: float = DEFAULT_FILTER_CUTOFF
    filter_order: int = 4
    loss_washout: int = 0

    def validate(self) -> None:
        if self.hidden_size < 1:
            raise ConfigError("hidden_size must be >= 1")
        if self.model_kind not in MODEL_KINDS:
            raise ConfigError(f"unknown model kind {self.model_kind!r}")
        if not (0.0 < self.filter_cutoff < 0.5):
            raise ConfigError("filter_cutoff must lie in (0, 0.5) cycles/step")
        if self.filter_order < 1:
            raise ConfigError("filter_order must be >= 1")
        if self.loss_washout < 0:
            raise ConfigError("loss_washout must be >= 0")
        expected = {
            MODEL_LIF: LIFParams,
            MODEL_ADLIF: AdLIFParams,
            MODEL_MTC: MTCParams,
        }[self.model_kind]
        if not isinstance(self.population, expected):
            raise ConfigError(
                f"population type {type(self.population).__name__} does not match "
                f"model kind {self.model_kind!r}"
            )
        if self.population.n != self.hidden_size:
            raise ConfigError("population size does not match hidden_size")
        self.population.validate()
        # one-pole cascade is stable for any cutoff > 0: pole magnitude < 1
        if not filter_pole(self.filter_cutoff) < 1.0:
            raise ConfigError("filter stage pole must have magnitude < 1")


@dataclass
class NetworkParams:
    w_in: np.ndarray
    w_out: np.ndarray

    def __post_init__(self):
        self.w_in = np.asarray(self.w_in, dtype=np.float64)
        self.w_out = np.asarray(self.w_out, dtype=np.float64)
        if self.w_in.shape != self.w_out.shape or self.w_in.ndim != 1:
            raise ConfigError("w_in and w_out must be 1-D arrays of equal length")
        if not (np.all(np.isfinite(self.w_in)) and np.all(np.isfinite(self.w_out))):
            raise ConfigError("network parameters must be finite")

    @property
    def n(self) -> int:
        return int(self.w_in.size)

    def copy(self) -> "NetworkParams":
        return NetworkParams(self.w_in.copy(), self.w_out.copy())


def init_params(cfg: NetworkConfig, scheme: str = SCHEME_HE_LECUN,
                gain: float = 1.0, rng_seed: int = 0) -> NetworkParams:
    """Draw initial weights for the two linear stages.

    ``he_lecun``: w_in ~ Uniform(+-sqrt(6/fan_in)) with fan_in = 1 (scalar
    input), w_out ~ Normal(0, 1/N).  ``scaled_uniform``: both layers
    ~ Uniform(+-gain*sqrt(1/fan_in)) with fan_in 1 and N respectively.
    """
    rng = np.random.default_rng(rng_seed)
    n = cfg.hidden_size
    if scheme == SCHEME_HE_LECUN:
        bound_in = math.sqrt(6.0 / 1.0)
        w_in = rng.uniform(-bound_in, bound_in, size=n)
        w_out = rng.normal(0.0, math.sqrt(1.0 / n), size=n)
    elif scheme == SCHEME_SCALED_UNIFORM:
        bound_in = gain * math.sqrt(1.0 / 1.0)
        bound_out = gain * math.sqrt(1.0 / n)
        w_in = rng.uniform(-bound_in, bound_in, size=n)
        w_out = rng.uniform(-bound_out, bound_out, size=n)
    else:
        raise ConfigError(f"unknown init scheme {scheme!r}")
    return NetworkParams(w_in=w_in, w_out=w_out)


def default_scheme(model_kind: str) -> str:
    return SCHEME_SCALED_UNIFORM if model_kind == MODEL_ADLIF else SCHEME_HE_LECUN


# ---------------------------------------------------------------------------
# Low-pass reconstruction filter
# ---------------------------------------------------------------------------


def filter_pole(cutoff: float) -> float:
    """Per-stage pole a = exp(-2*pi*cutoff); each stage is y <- a*y + (1-a)*x."""
    return math.exp(-2.0 * math.pi * cutoff)


@dataclass
class FilterState:
    """Memory of the one-pole cascade; stages[k] is the output of stage k."""

    stages: np.ndarray

    @classmethod
    def zeros(cls, order: int, batch: int | None = None) -> "FilterState":
        shape = (order,) if batch is None else (batch, order)
        return cls(stages=np.zeros(shape))


def lowpass_step(state: FilterState, x: Union[float, np.ndarray], cutoff: float):
    """Advance the cascade one step; returns (new_state, output).

    Unity DC gain by construction: every stage maps constant c to c.
    """
    if not (0.0 < cutoff < 0.5):
        raise ConfigError("cutoff must lie in (0, 0.5) cycles/step")
    a = filter_pole(cutoff)
    stages = state.stages.copy()
    order = stages.shape[-1]
    inp = np.asarray(x, dtype=np.float64)
    for k in range(order):
        stages[..., k] = a * stages[..., k] + (1.0 - a) * inp
        inp = stages[..., k]
    return FilterState(stages=stages), inp


def filter_gain(cutoff: float, freq: float, order: int = 4) -> float:
    """Closed-form magnitude response of the cascade at ``freq`` cycles/step."""
    a = filter_pole(cutoff)
    w = 2.0 * math.pi * freq
    one_pole = (1.0 - a) / abs(1.0 - a * complex(math.cos(w), -math.sin(w)))
    return one_pole ** order


# ---------------------------------------------------------------------------
# Forward pass
# ---------------------------------------------------------------------------


@dataclass
class ForwardTape:
    """Per-step record of a forward pass, consumed by the reverse sweep.

    State trajectories are time-major with shape (T+1, B, N) (index 0 is the
    rest state); emissions, readout and prediction cover steps 0..T-1.
    """

    model_kind: str
    x: np.ndarray                    # (B, T)
    emissions: np.ndarray            # (T, B, N)
    readout: np.ndarray              # (T, B)
    prediction: np.ndarray           # (T, B)
    states: dict = field(default_factory=dict)
    filter_cutoff: float = DEFAULT_FILTER_CUTOFF
    filter_order: int = 4

    @property
    def t_len(self) -> int:
        return int(self.x.shape[1])

    @property
    def batch(self) -> int:
        return int(self.x.shape[0])

    @property
    def n(self) -> int:
        return int(self.emissions.shape[2])


def _replay_readout_filter(tape: ForwardTape, w_out: np.ndarray) -> np.ndarray:
    """Recompute prediction from recorded emissions (readout + filter only)."""
    t_len, batch = tape.t_len, tape.batch
    a = filter_pole(tape.filter_cutoff)
    stages = np.zeros((batch, tape.filter_order))
    pred = np.empty((t_len, batch))
    for t in range(t_len):
        r = tape.emissions[t] @ w_out
        inp = r
        for k in range(tape.filter_order):
            stages[:, k] = a * stages[:, k] + (1.0 - a) * inp
            inp = stages[:, k]
        pred[t] = inp
    return pred


def forward(cfg: NetworkConfig, params: NetworkParams, input_window: np.ndarray,
            record_tape: bool = False):
    """Run windows through the network from rest.

    ``input_window`` is one window (T,) or a batch (B, T).  Returns
    (prediction, hidden_activity, tape-or-None) shaped (T,), (T, N) for a
    single window and (B, T), (B, T, N) for a batch.
    """
    cfg.validate()
    if params.n != cfg.hidden_size:
        raise ConfigError("params size does not match network config")
    x = np.asarray(input_window, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2:
        raise ConfigError("input_window must be 1-D or 2-D (batch, time)")
    if not np.all(np.isfinite(x)):
        raise ConfigError("input window contains non-finite values")

    pred, em, tape = _forward_batch(cfg, params, x, record_tape)

    hidden = np.transpose(em, (1, 0, 2))  # (B, T, N)
    if single:
        return pred[:, 0], hidden[0], tape
    return pred.T, hidden, tape


def _forward_batch(cfg: NetworkConfig, params: NetworkParams, x: np.ndarray,
                   record_tape: bool):
    batch, t_len = x.shape
    n = cfg.hidden_size
    pop = cfg.population
    w_in = params.w_in
    a = filter_pole(cfg.filter_cutoff)
    order = cfg.filter_order

    em = np.empty((t_len, batch, n))
    readout = np.empty((t_len, batch))
    pred = np.empty((t_len, batch))
    stages = np.zeros((batch, order))
    states: dict = {}

    if cfg.model_kind == MODEL_LIF:
        decay = np.exp(-1.0 / pop.tau_m)
        u_rest, u_th = pop.u_rest, pop.u_th
        subtract = pop.reset_mode == RESET_SUBTRACT
        u = np.broadcast_to(u_rest, (batch, n)).copy()
        if record_tape:
            states["pre"] = np.empty((t_len, batch, n))
        for t in range(t_len):
            drive = x[:, t, None] * w_in
            pre = u_rest + (u - u_rest) * decay + drive
            spikes = (pre >= u_th).astype(np.float64)
            if record_tape:
                states["pre"][t] = pre
            if subtract:
                u = pre - spikes * (u_th - u_rest)
            else:
                u = pre * (1.0 - spikes) + u_rest * spikes
            em[t] = spikes
            _filter_inline(spikes @ params.w_out, stages, a, order, readout, pred, t)

    elif cfg.model_kind == MODEL_ADLIF:
        a_m = np.exp(-1.0 / pop.tau_m)
        b_w = np.exp(-1.0 / pop.tau_w)
        u_rest, u_th = pop.u_rest, pop.u_th
        u = np.broadcast_to(u_rest, (batch, n)).copy()
        w_ad = np.zeros((batch, n))
        if record_tape:
            states["pre"] = np.empty((t_len, batch, n))
        for t in range(t_len):
            drive = x[:, t, None] * w_in
            pre = u_rest + (u - u_rest) * a_m + drive - (1.0 - a_m) * w_ad
            spikes = (pre >= u_th).astype(np.float64)
            if record_tape:
                states["pre"][t] = pre
            u = pre * (1.0 - spikes) + u_rest * spikes
            w_ad = b_w * w_ad + (1.0 - b_w) * pop.a * (u - u_rest) + pop.b * spikes
            em[t] = spikes
            _filter_inline(spikes @ params.w_out, stages, a, order, readout, pred, t)

    else:  # MTC
        if np.any(1.0 / pop.tau_m > 1.0):
            raise ConfigError("explicit-Euler stability guard requires dt/tau_m <= 1")
        km = 1.0 / pop.tau_m
        ks = 1.0 / pop.tau_s
        kus = 1.0 / pop.tau_us
        u_rest = pop.u_rest
        inv_ramp = 1.0 / (pop.u_sat - pop.u_th)
        fast_els = [e for e in pop.elements if e.timescale == TIMESCALE_FAST]
        slow_els = [e for e in pop.elements if e.timescale == TIMESCALE_SLOW]
        us_els = [e for e in pop.elements if e.timescale == TIMESCALE_ULTRASLOW]
        u_m = np.broadcast_to(u_rest, (batch, n)).copy()
        u_s = u_m.copy()
        u_us = u_m.copy()
        if record_tape:
            states["u_m"] = np.empty((t_len + 1, batch, n))
            states["u_s"] = np.empty((t_len + 1, batch, n))
            states["u_us"] = np.empty((t_len + 1, batch, n))
            states["u_m"][0] = u_m
            states["u_s"][0] = u_s
            states["u_us"][0] = u_us
        for t in range(t_len):
            drive = x[:, t, None] * w_in
            i_total = 0.0
            for el in fast_els:
                i_total = i_total + el.polarity * el.gain * np.tanh(u_m - el.delta)
            for el in slow_els:
                i_total = i_total + el.polarity * el.gain * np.tanh(u_s - el.delta)
            for el in us_els:
                i_total = i_total + el.polarity * el.gain * np.tanh(u_us - el.delta)
            new_s = u_s + ks * (u_m - u_s)
            new_us = u_us + kus * (u_m - u_us)
            new_m = u_m + km * (-u_m + u_rest + drive - i_total)
            u_m, u_s, u_us = new_m, new_s, new_us
            if record_tape:
                states["u_m"][t + 1] = u_m
                states["u_s"][t + 1] = u_s
                states["u_us"][t + 1] = u_us
            em[t] = np.minimum(np.maximum(u_m - pop.u_th, 0.0) * inv_ramp, 1.0)
            _filter_inline(em[t] @ params.w_out, stages, a, order, readout, pred, t)

    if not np.all(np.isfinite(pred[-1])) or not np.all(np.isfinite(em[-1])):
        bad = int(np.flatnonzero(~np.isfinite(pred).reshape(t_len, -1).all(axis=1))[0])
        raise NumericError(f"non-finite network state at step {bad}")

    tape = None
    if record_tape:
        tape = ForwardTape(
            model_kind=cfg.model_kind, x=x, emissions=em, readout=readout,
            prediction=pred, states=states, filter_cutoff=cfg.filter_cutoff,
            filter_order=cfg.filter_order,
        )
    return pred, em, tape


def _filter_inline(r, stages, a, order, readout, pred, t):
    readout[t] = r
    inp = r
    for k in range(order):
        stages[:, k] = a * stages[:, k] + (1.0 - a) * inp
        inp = stages[:, k]
    pred[t] = inp
