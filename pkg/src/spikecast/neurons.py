"""Discrete-time neuron models: LIF, AdLIF, and multi-timescale conductance.

All parameters are stored as per-neuron vectors of length N so that
heterogeneous populations and single neurons (N=1) share one code path.
State arrays broadcast against parameters, so a batch of B independent
sequences can step a population with state shape (B, N).

Update rules, one network step per input sample:

* LIF (exponential Euler on the membrane, raw input add):
    u' = u_rest + (u - u_rest) * exp(-1/tau_m) + I
    spike when u' >= u_th, then subtract-reset (u' -= u_th - u_rest) or
    reset to rest.

* AdLIF (symplectic exponential Euler; the adaptation state w is updated
  from the post-reset membrane):
    u' = u_rest + (u - u_rest) * a_m + I - (1 - a_m) * w,  a_m = exp(-1/tau_m)
    spike/reset to rest, then
    w' = b_w * w + (1 - b_w) * a * (u' - u_rest) + b * spike

* MTC (explicit Euler forward, no reset).  Voltage-gated elements inject
  I_x = polarity * gain * tanh(gate - delta), where the gate is the current
  membrane for fast elements (instantaneous), or the lagged states u_s /
  u_us for slow / ultra-slow elements.  The communicated signal is a
  saturated-ReLU transduction of the membrane, exactly zero below u_th and
  exactly one above u_sat.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Sequence, Union

import numpy as np

from .errors import ConfigError, NumericError

RESET_SUBTRACT = "subtract"
RESET_TO_REST = "to_rest"

TIMESCALE_FAST = "fast"
TIMESCALE_SLOW = "slow"
TIMESCALE_ULTRASLOW = "ultraslow"
TIMESCALES = (TIMESCALE_FAST, TIMESCALE_SLOW, TIMESCALE_ULTRASLOW)

ArrayLike = Union[float, Sequence[float], np.ndarray]


def as_vector(x: ArrayLike, n: int | None = None) -> np.ndarray:
    """Coerce a scalar or sequence to a float64 vector, broadcasting scalars."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise ConfigError("per-neuron parameters must be scalars or 1-D")
    if n is not None and arr.size != n:
        if arr.size == 1:
            arr = np.full(n, float(arr[0]))
        else:
            raise ConfigError(f"parameter length {arr.size} does not match N={n}")
    return arr


def _check_finite(arr: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"non-finite values in {what}")


# ---------------------------------------------------------------------------
# Parameter containers
# ---------------------------------------------------------------------------


@dataclass
class LIFParams:
    tau_m: np.ndarray
    u_th: np.ndarray
    u_rest: np.ndarray
    reset_mode: str = RESET_SUBTRACT

    @classmethod
    def create(cls, tau_m: ArrayLike, u_th: ArrayLike = 1.0, u_rest: ArrayLike = 0.0,
               reset_mode: str = RESET_SUBTRACT, n: int | None = None) -> "LIFParams":
        tau_m = as_vector(tau_m, n)
        n = tau_m.size
        p = cls(tau_m=tau_m, u_th=as_vector(u_th, n), u_rest=as_vector(u_rest, n),
                reset_mode=reset_mode)
        p.validate()
        return p

    @property
    def n(self) -> int:
        return int(self.tau_m.size)

    def validate(self) -> None:
        if not np.all(self.tau_m > 0):
            raise ConfigError("tau_m must be positive")
        if not np.all(self.u_th > self.u_rest):
            raise ConfigError("u_th must exceed u_rest")
        if self.reset_mode not in (RESET_SUBTRACT, RESET_TO_REST):
            raise ConfigError(f"unknown reset mode {self.reset_mode!r}")


@dataclass
class AdLIFParams:
    tau_m: np.ndarray
    tau_w: np.ndarray
    a: np.ndarray
    b: np.ndarray
    u_th: np.ndarray
    u_rest: np.ndarray

    @classmethod
    def create(cls, tau_m: ArrayLike, tau_w: ArrayLike, a: ArrayLike = 0.0,
               b: ArrayLike = 0.0, u_th: ArrayLike = 1.0, u_rest: ArrayLike = 0.0,
               n: int | None = None) -> "AdLIFParams":
        tau_m = as_vector(tau_m, n)
        n = tau_m.size
        p = cls(tau_m=tau_m, tau_w=as_vector(tau_w, n), a=as_vector(a, n),
                b=as_vector(b, n), u_th=as_vector(u_th, n), u_rest=as_vector(u_rest, n))
        p.validate()
        return p

    @property
    def n(self) -> int:
        return int(self.tau_m.size)

    def validate(self) -> None:
        if not np.all(self.tau_m > 0):
            raise ConfigError("tau_m must be positive")
        if not np.all(self.tau_w > 0):
            raise ConfigError("tau_w must be positive")
        if not np.all(self.a >= 0):
            raise ConfigError("subthreshold coupling a must be >= 0")
        if not np.all(self.b >= 0):
            raise ConfigError("spike increment b must be >= 0")


@dataclass
class ConductanceElement:
    """One voltage-gated element: I = polarity * gain * tanh(gate - delta).

    The sign is carried solely by ``polarity``; gains are magnitudes.
    """

    timescale: str
    polarity: int
    gain: np.ndarray
    delta: np.ndarray

    @classmethod
    def create(cls, timescale: str, polarity: int, gain: ArrayLike,
               delta: ArrayLike, n: int | None = None) -> "ConductanceElement":
        gain = as_vector(gain, n)
        n = gain.size
        el = cls(timescale=timescale, polarity=int(polarity), gain=gain,
                 delta=as_vector(delta, n))
        el.validate()
        return el

    def validate(self) -> None:
        if self.timescale not in TIMESCALES:
            raise ConfigError(f"unknown timescale {self.timescale!r}")
        if self.polarity not in (-1, 1):
            raise ConfigError("polarity must be +1 or -1")
        if not np.all(self.gain >= 0):
            raise ConfigError("element gain must be >= 0 (sign lives in polarity)")


@dataclass
class MTCParams:
    tau_m: np.ndarray
    tau_s: np.ndarray
    tau_us: np.ndarray
    elements: List[ConductanceElement] = field(default_factory=list)
    u_rest: np.ndarray = None
    u_th: np.ndarray = None
    u_sat: np.ndarray = None

    @classmethod
    def create(cls, tau_m: ArrayLike, tau_s: ArrayLike, tau_us: ArrayLike,
               elements: Sequence[ConductanceElement] = (),
               u_rest: ArrayLike = 0.0, u_th: ArrayLike = 0.5,
               u_sat: ArrayLike = 1.5, n: int | None = None) -> "MTCParams":
        tau_m = as_vector(tau_m, n)
        n = tau_m.size
        els = [ConductanceElement.create(e.timescale, e.polarity, e.gain, e.delta, n)
               if isinstance(e, ConductanceElement)
               else ConductanceElement.create(*e, n=n)
               for e in elements]
        p = cls(tau_m=tau_m, tau_s=as_vector(tau_s, n), tau_us=as_vector(tau_us, n),
                elements=els, u_rest=as_vector(u_rest, n), u_th=as_vector(u_th, n),
                u_sat=as_vector(u_sat, n))
        p.validate()
        return p

    @property
    def n(self) -> int:
        return int(self.tau_m.size)

    def validate(self) -> None:
        if not np.all(self.tau_m > 0):
            raise ConfigError("tau_m must be positive")
        if not (np.all(self.tau_s > self.tau_m) and np.all(self.tau_us > self.tau_s)):
            raise ConfigError("timescale separation requires tau_us > tau_s > tau_m")
        if not np.all(self.u_sat > self.u_th):
            raise ConfigError("u_sat must exceed u_th")
        for el in self.elements:
            el.validate()
            if el.gain.size != self.n:
                raise ConfigError("element parameter length does not match population")


# ---------------------------------------------------------------------------
# State containers
# ---------------------------------------------------------------------------


@dataclass
class LIFState:
    u_m: np.ndarray

    @classmethod
    def rest(cls, params: LIFParams, batch: int | None = None) -> "LIFState":
        shape = (params.n,) if batch is None else (batch, params.n)
        return cls(u_m=np.broadcast_to(params.u_rest, shape).copy())


@dataclass
class AdLIFState:
    u_m: np.ndarray
    w: np.ndarray

    @classmethod
    def rest(cls, params: AdLIFParams, batch: int | None = None) -> "AdLIFState":
        shape = (params.n,) if batch is None else (batch, params.n)
        return cls(u_m=np.broadcast_to(params.u_rest, shape).copy(),
                   w=np.zeros(shape))


@dataclass
class MTCState:
    u_m: np.ndarray
    u_s: np.ndarray
    u_us: np.ndarray

    @classmethod
    def rest(cls, params: MTCParams, batch: int | None = None) -> "MTCState":
        shape = (params.n,) if batch is None else (batch, params.n)
        rest = np.broadcast_to(params.u_rest, shape)
        return cls(u_m=rest.copy(), u_s=rest.copy(), u_us=rest.copy())


# ---------------------------------------------------------------------------
# Step functions
# ---------------------------------------------------------------------------


def lif_step(params: LIFParams, state: LIFState, input_current: ArrayLike):
    """One LIF update; returns (new_state, spikes) with spikes in {0.0, 1.0}."""
    i_in = np.asarray(input_current, dtype=np.float64)
    decay = np.exp(-1.0 / params.tau_m)
    u = params.u_rest + (state.u_m - params.u_rest) * decay + i_in
    _check_finite(u, "LIF membrane")
    spikes = (u >= params.u_th).astype(np.float64)
    if params.reset_mode == RESET_SUBTRACT:
        u = u - spikes * (params.u_th - params.u_rest)
    else:
        u = u * (1.0 - spikes) + params.u_rest * spikes
    return LIFState(u_m=u), spikes


def adlif_step(params: AdLIFParams, state: AdLIFState, input_current: ArrayLike):
    """One AdLIF update; the adaptation state sees the post-reset membrane.

    The adaptation current enters scaled by (1 - exp(-1/tau_m)) while the
    input current enters unscaled, so disabling adaptation (a = b = 0,
    w = 0) reproduces a to-rest LIF bitwise on identical inputs.
    """
    i_in = np.asarray(input_current, dtype=np.float64)
    a_m = np.exp(-1.0 / params.tau_m)
    b_w = np.exp(-1.0 / params.tau_w)
    u = params.u_rest + (state.u_m - params.u_rest) * a_m + i_in - (1.0 - a_m) * state.w
    _check_finite(u, "AdLIF membrane")
    spikes = (u >= params.u_th).astype(np.float64)
    u = u * (1.0 - spikes) + params.u_rest * spikes
    w = b_w * state.w + (1.0 - b_w) * params.a * (u - params.u_rest) + params.b * spikes
    _check_finite(w, "AdLIF adaptation")
    return AdLIFState(u_m=u, w=w), spikes


def _element_gate(el: ConductanceElement, state: MTCState) -> np.ndarray:
    if el.timescale == TIMESCALE_FAST:
        return state.u_m
    if el.timescale == TIMESCALE_SLOW:
        return state.u_s
    return state.u_us


def mtc_step(params: MTCParams, state: MTCState, input_current: ArrayLike,
             dt: float = 1.0):
    """One explicit-Euler MTC update; returns (new_state, u_m).

    Element currents are evaluated from the pre-update state (synchronous
    update); fast elements read the membrane directly.
    """
    if np.any(dt / params.tau_m > 1.0):
        raise ConfigError("explicit-Euler stability guard requires dt/tau_m <= 1")
    i_in = np.asarray(input_current, dtype=np.float64)
    i_total = 0.0
    for el in params.elements:
        gate = _element_gate(el, state)
        i_total = i_total + el.polarity * el.gain * np.tanh(gate - el.delta)
    u_s = state.u_s + (dt / params.tau_s) * (state.u_m - state.u_s)
    u_us = state.u_us + (dt / params.tau_us) * (state.u_m - state.u_us)
    u_m = state.u_m + (dt / params.tau_m) * (
        -state.u_m + params.u_rest + i_in - i_total
    )
    _check_finite(u_m, "MTC membrane")
    return MTCState(u_m=u_m, u_s=u_s, u_us=u_us), u_m


def transduce(u_m: ArrayLike, u_th: ArrayLike, u_sat: ArrayLike) -> np.ndarray:
    """Saturated-ReLU transduction onto [0, 1].

    Exactly 0 at or below u_th, exactly 1 at or above u_sat, linear between.
    """
    u_m = np.asarray(u_m, dtype=np.float64)
    u_th = np.asarray(u_th, dtype=np.float64)
    u_sat = np.asarray(u_sat, dtype=np.float64)
    if np.any(u_sat <= u_th):
        raise ConfigError("transduction requires u_sat > u_th")
    return np.minimum(np.maximum(u_m - u_th, 0.0) / (u_sat - u_th), 1.0)


def iv_curves(params: MTCParams, voltage_grid: ArrayLike) -> dict:
    """Timescale-aggregate static I-V curves on a voltage grid.

    All gating voltages are held at the grid voltage (steady state).  The
    fast curve is leak plus fast elements; slow adds slow elements;
    ultraslow adds ultra-slow elements.  For a population of N neurons the
    returned arrays have shape (G, N); for N = 1 they are flattened to (G,).
    """
    grid = np.asarray(voltage_grid, dtype=np.float64)
    if grid.ndim != 1 or grid.size == 0:
        raise ConfigError("voltage grid must be a non-empty 1-D sequence")
    if grid.size > 1 and not (np.all(np.diff(grid) > 0) or np.all(np.diff(grid) < 0)):
        raise ConfigError("voltage grid must be monotone")

    u = grid[:, None]  # (G, 1) against (N,) parameters
    curves = {}
    acc = u - params.u_rest
    for ts in TIMESCALES:
        for el in params.elements:
            if el.timescale == ts:
                acc = acc + el.polarity * el.gain * np.tanh(u - el.delta)
        curves[ts] = acc.copy()
    if params.n == 1:
        curves = {k: v[:, 0] for k, v in curves.items()}
    return curves
