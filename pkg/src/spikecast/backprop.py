"""Reverse-mode backpropagation through time over the unrolled network.

The MTC model is differentiated exactly: tanh gates and the saturated-ReLU
transduction have well-defined derivatives everywhere (the two ramp kinks
use subgradient 0, keeping gradient sparsity aligned with emission
sparsity).  The spiking baselines replace the threshold indicator's
derivative with a surrogate in the backward pass only; the reset path is
handled straight-through (the reset indicator is treated as constant, so
the adjoint flows through the membrane term and the surrogate acts solely
on the spike output path).

``finite_diff_check`` is the verification oracle: central differences
against the analytic gradients, restricted to the exact (MTC) mode because
a surrogate backward is deliberately inconsistent with its forward.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConfigError
from .network import (
    ForwardTape,
    MODEL_ADLIF,
    MODEL_LIF,
    MODEL_MTC,
    NetworkConfig,
    NetworkParams,
    filter_pole,
    forward,
)
from .neurons import TIMESCALE_FAST, TIMESCALE_SLOW, TIMESCALE_ULTRASLOW

SURROGATE_ARCTAN = "arctan"
SURROGATE_SLAYER = "slayer"

DEFAULT_ARCTAN_WIDTH = 2.0
DEFAULT_SLAYER_ALPHA = 5.0


@dataclass
class SurrogateSpec:
    """Backward-pass stand-in derivative for the spike indicator.

    arctan: g(v) = 1 / (1 + (pi*k*v)^2) with width k.
    slayer: g(v) = exp(-alpha*|v|), normalized to g(0) = 1.
    """

    kind: str = SURROGATE_ARCTAN
    param: float = DEFAULT_ARCTAN_WIDTH

    def validate(self) -> None:
        if self.kind not in (SURROGATE_ARCTAN, SURROGATE_SLAYER):
            raise ConfigError(f"unknown surrogate kind {self.kind!r}")
        if not self.param > 0:
            raise ConfigError("surrogate width/smoothing parameter must be > 0")


def default_surrogate(model_kind: str) -> Optional[SurrogateSpec]:
    if model_kind == MODEL_LIF:
        return SurrogateSpec(SURROGATE_ARCTAN, DEFAULT_ARCTAN_WIDTH)
    if model_kind == MODEL_ADLIF:
        return SurrogateSpec(SURROGATE_SLAYER, DEFAULT_SLAYER_ALPHA)
    return None


def surrogate_derivative(spec: SurrogateSpec, v):
    """Evaluate the surrogate derivative at membrane-minus-threshold ``v``."""
    spec.validate()
    v = np.asarray(v, dtype=np.float64)
    if spec.kind == SURROGATE_ARCTAN:
        return 1.0 / (1.0 + (np.pi * spec.param * v) ** 2)
    return np.exp(-spec.param * np.abs(v))


@dataclass
class GradientSet:
    d_w_in: np.ndarray
    d_w_out: np.ndarray

    def scaled(self, c: float) -> "GradientSet":
        return GradientSet(self.d_w_in * c, self.d_w_out * c)

    def __iadd__(self, other: "GradientSet") -> "GradientSet":
        self.d_w_in += other.d_w_in
        self.d_w_out += other.d_w_out
        return self


def backward(cfg: NetworkConfig, params: NetworkParams, tape: ForwardTape,
             d_prediction: np.ndarray,
             surrogate: Optional[SurrogateSpec] = None) -> GradientSet:
    """Reverse sweep through filter, readout, emission and state recurrences.

    ``d_prediction`` carries the loss adjoint, shaped like the recorded
    prediction: (T,) for a single window or (T, B) / (B, T) for a batch.
    For LIF/AdLIF a missing ``surrogate`` falls back to the per-model
    default; for MTC the chain rule is exact and no surrogate is accepted.
    """
    if tape.model_kind != cfg.model_kind:
        raise ConfigError("tape model kind does not match network config")
    if params.n != cfg.hidden_size or tape.n != cfg.hidden_size:
        raise ConfigError("tape/params do not match the network size")

    t_len, batch, n = tape.t_len, tape.batch, tape.n
    d_pred = np.asarray(d_prediction, dtype=np.float64)
    if d_pred.ndim == 1:
        d_pred = d_pred[:, None]
    elif d_pred.shape == (batch, t_len) and batch != t_len:
        d_pred = d_pred.T
    if d_pred.shape != (t_len, batch):
        raise ConfigError("d_prediction shape does not match the tape")

    if cfg.model_kind == MODEL_MTC:
        if surrogate is not None:
            raise ConfigError("MTC backward is exact; no surrogate applies")
        return _backward_mtc(cfg, params, tape, d_pred)
    if surrogate is None:
        surrogate = default_surrogate(cfg.model_kind)
    surrogate.validate()
    if cfg.model_kind == MODEL_LIF:
        return _backward_lif(cfg, params, tape, d_pred, surrogate)
    return _backward_adlif(cfg, params, tape, d_pred, surrogate)


def _filter_adjoint_step(phi: np.ndarray, dy_t: np.ndarray, one_minus_a: float):
    """Push the prediction adjoint down the stage cascade; returns d_readout."""
    order = phi.shape[1]
    phi[:, order - 1] += dy_t
    for k in range(order - 1, 0, -1):
        phi[:, k - 1] += one_minus_a * phi[:, k]
    return one_minus_a * phi[:, 0]


def _backward_mtc(cfg, params, tape, d_pred):
    pop = cfg.population
    km = 1.0 / pop.tau_m
    ks = 1.0 / pop.tau_s
    kus = 1.0 / pop.tau_us
    inv_ramp = 1.0 / (pop.u_sat - pop.u_th)
    fast_els = [e for e in pop.elements if e.timescale == TIMESCALE_FAST]
    slow_els = [e for e in pop.elements if e.timescale == TIMESCALE_SLOW]
    us_els = [e for e in pop.elements if e.timescale == TIMESCALE_ULTRASLOW]

    u_m, u_s, u_us = tape.states["u_m"], tape.states["u_s"], tape.states["u_us"]
    a = filter_pole(tape.filter_cutoff)
    one_minus_a = 1.0 - a

    t_len, batch, n = tape.t_len, tape.batch, tape.n
    w_out = params.w_out
    d_w_in = np.zeros(n)
    d_w_out = np.zeros(n)
    lam_m = np.zeros((batch, n))
    lam_s = np.zeros((batch, n))
    lam_us = np.zeros((batch, n))
    phi = np.zeros((batch, tape.filter_order))

    for t in range(t_len - 1, -1, -1):
        d_r = _filter_adjoint_step(phi, d_pred[t], one_minus_a)
        d_w_out += tape.emissions[t].T @ d_r
        d_em = d_r[:, None] * w_out
        # emission taps the post-update membrane through the open ramp only
        m_next = u_m[t + 1]
        on_ramp = (m_next > pop.u_th) & (m_next < pop.u_sat)
        lam_m += d_em * inv_ramp * on_ramp

        # synchronous state update: gates read the step-t state
        dI_dm = 0.0
        for el in fast_els:
            th = np.tanh(u_m[t] - el.delta)
            dI_dm = dI_dm + el.polarity * el.gain * (1.0 - th * th)
        dI_ds = 0.0
        for el in slow_els:
            th = np.tanh(u_s[t] - el.delta)
            dI_ds = dI_ds + el.polarity * el.gain * (1.0 - th * th)
        dI_dus = 0.0
        for el in us_els:
            th = np.tanh(u_us[t] - el.delta)
            dI_dus = dI_dus + el.polarity * el.gain * (1.0 - th * th)

        d_drive = lam_m * km
        d_w_in += tape.x[:, t] @ d_drive

        new_lam_m = lam_m * (1.0 - km - km * dI_dm) + lam_s * ks + lam_us * kus
        new_lam_s = lam_s * (1.0 - ks) - lam_m * (km * dI_ds)
        new_lam_us = lam_us * (1.0 - kus) - lam_m * (km * dI_dus)
        lam_m, lam_s, lam_us = new_lam_m, new_lam_s, new_lam_us
        phi *= a

    return GradientSet(d_w_in=d_w_in, d_w_out=d_w_out)


def _backward_lif(cfg, params, tape, d_pred, surrogate):
    pop = cfg.population
    decay = np.exp(-1.0 / pop.tau_m)
    subtract = pop.reset_mode == "subtract"
    pre = tape.states["pre"]
    spikes = tape.emissions
    a = filter_pole(tape.filter_cutoff)
    one_minus_a = 1.0 - a

    t_len, batch, n = tape.t_len, tape.batch, tape.n
    w_out = params.w_out
    d_w_in = np.zeros(n)
    d_w_out = np.zeros(n)
    lam_u = np.zeros((batch, n))
    phi = np.zeros((batch, tape.filter_order))

    for t in range(t_len - 1, -1, -1):
        d_r = _filter_adjoint_step(phi, d_pred[t], one_minus_a)
        d_w_out += spikes[t].T @ d_r
        d_spike = d_r[:, None] * w_out
        g = surrogate_derivative(surrogate, pre[t] - pop.u_th)
        if subtract:
            d_pre = lam_u + d_spike * g
        else:
            d_pre = lam_u * (1.0 - spikes[t]) + d_spike * g
        d_w_in += tape.x[:, t] @ d_pre
        lam_u = d_pre * decay
        phi *= a

    return GradientSet(d_w_in=d_w_in, d_w_out=d_w_out)


def _backward_adlif(cfg, params, tape, d_pred, surrogate):
    pop = cfg.population
    a_m = np.exp(-1.0 / pop.tau_m)
    b_w = np.exp(-1.0 / pop.tau_w)
    pre = tape.states["pre"]
    spikes = tape.emissions
    a = filter_pole(tape.filter_cutoff)
    one_minus_a = 1.0 - a

    t_len, batch, n = tape.t_len, tape.batch, tape.n
    w_out = params.w_out
    d_w_in = np.zeros(n)
    d_w_out = np.zeros(n)
    lam_u = np.zeros((batch, n))
    lam_w = np.zeros((batch, n))
    phi = np.zeros((batch, tape.filter_order))

    for t in range(t_len - 1, -1, -1):
        d_r = _filter_adjoint_step(phi, d_pred[t], one_minus_a)
        d_w_out += spikes[t].T @ d_r
        # w[t+1] = b_w*w[t] + (1-b_w)*a*(u[t+1]-u_rest) + b*spike[t]
        d_spike = d_r[:, None] * w_out + lam_w * pop.b
        lam_u = lam_u + lam_w * ((1.0 - b_w) * pop.a)
        lam_w = lam_w * b_w
        # reset to rest, straight-through on the spike indicator
        g = surrogate_derivative(surrogate, pre[t] - pop.u_th)
        d_pre = lam_u * (1.0 - spikes[t]) + d_spike * g
        d_w_in += tape.x[:, t] @ d_pre
        lam_u = d_pre * a_m
        lam_w = lam_w - d_pre * (1.0 - a_m)
        phi *= a

    return GradientSet(d_w_in=d_w_in, d_w_out=d_w_out)


# ---------------------------------------------------------------------------
# Finite-difference verification oracle
# ---------------------------------------------------------------------------


@dataclass
class FDEntry:
    which: str
    index: int
    analytic: float
    numeric: float
    rel_error: float


@dataclass
class FDReport:
    entries: list
    max_rel_error: float
    mean_rel_error: float

    def to_dict(self) -> dict:
        return {
            "max_rel_error": self.max_rel_error,
            "mean_rel_error": self.mean_rel_error,
            "entries": [
                {
                    "param": e.which,
                    "index": e.index,
                    "analytic": e.analytic,
                    "numeric": e.numeric,
                    "rel_error": e.rel_error,
                }
                for e in self.entries
            ],
        }


def _rel_error(analytic: float, numeric: float, atol: float = 1e-7) -> float:
    # Central differences carry numerator noise ~ |L|*eps64/epsilon (~1e-12
    # here), so components below atol are measured against atol instead of
    # their own magnitude; a zero/zero pair counts as an exact match.
    denom = max(abs(analytic), abs(numeric), atol)
    return abs(analytic - numeric) / denom


def finite_diff_check(
    cfg: NetworkConfig,
    params: NetworkParams,
    input_window: np.ndarray,
    loss_fn: Callable[[np.ndarray], tuple],
    epsilon: float = 1e-5,
    indices: Optional[Sequence[tuple]] = None,
    atol: float = 1e-7,
) -> FDReport:
    """Compare BPTT gradients against central finite differences.

    ``loss_fn`` maps a prediction to (loss, d_prediction).  ``indices`` is an
    optional subset of parameters as (name, i) pairs with name in
    {"w_in", "w_out"}; by default every parameter is checked.  Zero analytic
    gradient together with zero numeric difference counts as an exact match;
    components below ``atol`` are compared at the ``atol`` scale because
    their finite-difference numerator is dominated by 64-bit roundoff.

    Restricted to the MTC model: the surrogate backward of the spiking
    baselines is deliberately inconsistent with their forward pass.
    """
    if cfg.model_kind != MODEL_MTC:
        raise ConfigError("finite_diff_check applies to the exact (MTC) mode only")
    if not epsilon > 0:
        raise ConfigError("epsilon must be > 0")

    pred, _, tape = forward(cfg, params, input_window, record_tape=True)
    _, d_pred = loss_fn(pred)
    grads = backward(cfg, params, tape, d_pred)

    if indices is None:
        indices = [("w_in", i) for i in range(params.n)] + [
            ("w_out", i) for i in range(params.n)
        ]

    entries = []
    for which, i in indices:
        analytic = float(getattr(grads, "d_" + which)[i])
        perturbed = params.copy()
        vec = getattr(perturbed, which)
        orig = vec[i]
        vec[i] = orig + epsilon
        pred_hi, _, _ = forward(cfg, perturbed, input_window)
        loss_hi, _ = loss_fn(pred_hi)
        vec[i] = orig - epsilon
        pred_lo, _, _ = forward(cfg, perturbed, input_window)
        loss_lo, _ = loss_fn(pred_lo)
        numeric = (loss_hi - loss_lo) / (2.0 * epsilon)
        entries.append(FDEntry(which, i, analytic, float(numeric),
                               _rel_error(analytic, float(numeric), atol)))

    rel = [e.rel_error for e in entries]
    return FDReport(entries=entries, max_rel_error=max(rel), mean_rel_error=sum(rel) / len(rel))
