"""Single-neuron stimulation lab: firing-regime classification and tuning.

Spike events are threshold crossings of the transduced emission at the
ramp midpoint (0.5), merged within a minimum separation.  A spike train is
classified from its inter-spike-interval structure:

* Silent: no spikes.  Other: fewer than 3 spikes but not silent.
* Tonic* vs Phasic*: whether spikes persist into the last third of the
  stimulation period.
* *Bursting vs *Spiking: a deterministic 2-means split of log-ISIs with an
  inter/intra cluster ratio >= 5.

``tune_preset`` searches offset/transduction grids (conductance gains stay
fixed) for a configuration whose classification matches a target label
across a band of test currents; shipped presets are produced by exactly
this procedure and regression-tested against their labels.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigError, TuningError
from .neurons import (
    ConductanceElement,
    MTCParams,
    TIMESCALE_FAST,
    TIMESCALE_SLOW,
    TIMESCALE_ULTRASLOW,
)

CLASSIFIER_VERSION = 1

LABEL_SILENT = "Silent"
LABEL_TONIC_SPIKING = "TonicSpiking"
LABEL_TONIC_BURSTING = "TonicBursting"
LABEL_PHASIC_SPIKING = "PhasicSpiking"
LABEL_PHASIC_BURSTING = "PhasicBursting"
LABEL_OTHER = "Other"

BURST_RATIO_THRESHOLD = 5.0
SUSTAIN_WINDOW_FRACTION = 1.0 / 3.0  # spikes within the last third sustain

# Conductance gain sets: tonic circuit, and the heterogeneous circuit that
# adds a slow-negative and an ultra-slow positive element.
TONIC_GAINS = (
    (TIMESCALE_FAST, -1, 2.0),
    (TIMESCALE_SLOW, +1, 10.0),
)
HETERO_GAINS = TONIC_GAINS + (
    (TIMESCALE_SLOW, -1, 7.0),
    (TIMESCALE_ULTRASLOW, +1, 20.0),
)


@dataclass
class StimulusProtocol:
    """Input-current program for a single-neuron rollout.

    ``constant``: amplitude from step 0.  ``step``: baseline until onset,
    amplitude in [onset, offset).  ``pulse_train``: rectangular pulses of
    ``pulse_width`` every ``pulse_period`` starting at onset.
    """

    kind: str
    amplitude: float
    duration: int
    baseline: float = 0.0
    onset: int = 0
    offset: Optional[int] = None
    pulse_width: int = 0
    pulse_period: int = 0

    def validate(self) -> None:
        if self.kind not in ("constant", "step", "pulse_train"):
            raise ConfigError(f"unknown protocol kind {self.kind!r}")
        if self.duration < 1:
            raise ConfigError("protocol duration must be positive")
        if self.kind in ("step", "pulse_train"):
            off = self.offset if self.offset is not None else self.duration
            if not (0 <= self.onset < off):
                raise ConfigError("need onset < offset for step-like protocols")
        if self.kind == "pulse_train" and (self.pulse_width < 1 or self.pulse_period < 1):
            raise ConfigError("pulse_train needs pulse_width and pulse_period >= 1")

    def build(self) -> np.ndarray:
        self.validate()
        i = np.full(self.duration, self.baseline, dtype=np.float64)
        off = self.offset if self.offset is not None else self.duration
        if self.kind == "constant":
            i[:] = self.amplitude
        elif self.kind == "step":
            i[self.onset:off] = self.amplitude
        else:
            t = np.arange(self.duration)
            in_pulse = ((t - self.onset) % self.pulse_period) < self.pulse_width
            mask = (t >= self.onset) & (t < off) & in_pulse
            i[mask] = self.amplitude
        return i

    @property
    def stim_window(self) -> Tuple[int, int]:
        """(start, stop) of the driven period used by the sustain test."""
        if self.kind == "constant":
            return 0, self.duration
        return self.onset, self.offset if self.offset is not None else self.duration


def simulate_population(params: MTCParams, currents: np.ndarray,
                        full_states: bool = False):
    """Roll out N independent MTC neurons from rest under per-lane currents.

    ``currents`` has shape (T,) (shared) or (T, N).  Returns (u_m, emission)
    traces of shape (T, N); with ``full_states`` the slow and ultra-slow
    traces are appended: (u_m, u_s, u_us, emission).
    """
    currents = np.asarray(currents, dtype=np.float64)
    t_len = currents.shape[0]
    n = params.n
    if currents.ndim == 1:
        currents = np.broadcast_to(currents[:, None], (t_len, n))
    km = 1.0 / params.tau_m
    ks = 1.0 / params.tau_s
    kus = 1.0 / params.tau_us
    if np.any(km > 1.0):
        raise ConfigError("explicit-Euler stability guard requires dt/tau_m <= 1")
    inv_ramp = 1.0 / (params.u_sat - params.u_th)
    groups = {
        TIMESCALE_FAST: [e for e in params.elements if e.timescale == TIMESCALE_FAST],
        TIMESCALE_SLOW: [e for e in params.elements if e.timescale == TIMESCALE_SLOW],
        TIMESCALE_ULTRASLOW: [e for e in params.elements
                              if e.timescale == TIMESCALE_ULTRASLOW],
    }
    u_m = params.u_rest.copy()
    u_s = u_m.copy()
    u_us = u_m.copy()
    um_trace = np.empty((t_len, n))
    em_trace = np.empty((t_len, n))
    if full_states:
        us_trace = np.empty((t_len, n))
        uus_trace = np.empty((t_len, n))
    for t in range(t_len):
        i_total = 0.0
        for el in groups[TIMESCALE_FAST]:
            i_total = i_total + el.polarity * el.gain * np.tanh(u_m - el.delta)
        for el in groups[TIMESCALE_SLOW]:
            i_total = i_total + el.polarity * el.gain * np.tanh(u_s - el.delta)
        for el in groups[TIMESCALE_ULTRASLOW]:
            i_total = i_total + el.polarity * el.gain * np.tanh(u_us - el.delta)
        new_s = u_s + ks * (u_m - u_s)
        new_us = u_us + kus * (u_m - u_us)
        new_m = u_m + km * (-u_m + params.u_rest + currents[t] - i_total)
        u_m, u_s, u_us = new_m, new_s, new_us
        um_trace[t] = u_m
        em_trace[t] = np.minimum(np.maximum(u_m - params.u_th, 0.0) * inv_ramp, 1.0)
        if full_states:
            us_trace[t] = u_s
            uus_trace[t] = u_us
    if not np.all(np.isfinite(um_trace[-1])):
        raise ConfigError("single-neuron rollout diverged")
    if full_states:
        return um_trace, us_trace, uus_trace, em_trace
    return um_trace, em_trace


def simulate_neuron(params: MTCParams, protocol: StimulusProtocol):
    """Deterministic rollout of one neuron from rest; returns (u_m, emission)."""
    if params.n != 1:
        raise ConfigError("simulate_neuron expects a single-neuron parameter set")
    currents = protocol.build()
    um, em = simulate_population(params, currents[:, None])
    return um[:, 0], em[:, 0]


def detect_spikes(emission: np.ndarray, min_separation: int = 3) -> np.ndarray:
    """Indices of upward 0.5-crossings of the emission, merged within min_separation."""
    em = np.asarray(emission, dtype=np.float64)
    if em.ndim != 1:
        raise ConfigError("emission trace must be 1-D")
    above = em >= 0.5
    ups = np.flatnonzero(above[1:] & ~above[:-1]) + 1
    if above.size and above[0]:
        ups = np.concatenate(([0], ups))
    if ups.size == 0:
        return ups
    merged = [int(ups[0])]
    for u in ups[1:]:
        if u - merged[-1] >= min_separation:
            merged.append(int(u))
    return np.asarray(merged, dtype=np.int64)


def _log_isi_bimodality(isi: np.ndarray) -> float:
    """Inter/intra cluster mean ratio from a deterministic 2-means on log-ISIs."""
    li = np.log(isi.astype(np.float64))
    if li.max() - li.min() < 1e-12:
        return 1.0
    c_lo, c_hi = li.min(), li.max()
    assign = np.zeros(li.size, dtype=bool)
    for _ in range(100):
        new_assign = np.abs(li - c_lo) > np.abs(li - c_hi)
        if new_assign.all() or (~new_assign).all():
            return 1.0
        if (new_assign == assign).all() and _ > 0:
            break
        assign = new_assign
        c_lo = li[~assign].mean()
        c_hi = li[assign].mean()
    return float(np.exp(c_hi - c_lo))


@dataclass
class SpikeTrainStats:
    spike_times: np.ndarray
    isi_list: np.ndarray
    isi_cv: float
    burst_ratio: float
    sustained: bool

    @property
    def n_spikes(self) -> int:
        return int(self.spike_times.size)


def spike_stats(spike_times: np.ndarray, protocol: StimulusProtocol) -> SpikeTrainStats:
    """Summary statistics of a spike train under a given protocol.

    Spikes outside the stimulation window (e.g. fired while the circuit
    relaxes from the all-rest initial state during a pre-onset baseline)
    are excluded: the statistics describe the response to the stimulus.
    """
    st = np.asarray(spike_times, dtype=np.int64)
    if st.size and np.any(np.diff(st) <= 0):
        raise ConfigError("spike times must be strictly increasing")
    w_start, w_stop = protocol.stim_window
    st = st[(st >= w_start) & (st < w_stop)]
    isi = np.diff(st).astype(np.float64)
    cv = float(isi.std() / isi.mean()) if isi.size >= 2 and isi.mean() > 0 else 0.0
    ratio = _log_isi_bimodality(isi) if isi.size >= 2 else 1.0
    start, stop = protocol.stim_window
    sustain_from = stop - int((stop - start) * SUSTAIN_WINDOW_FRACTION)
    sustained = bool(np.any(st >= sustain_from))
    return SpikeTrainStats(spike_times=st, isi_list=isi, isi_cv=cv,
                           burst_ratio=ratio, sustained=sustained)


def classify(stats: SpikeTrainStats, protocol: StimulusProtocol) -> str:
    """Map spike-train statistics to a firing-regime label."""
    if protocol.kind not in ("constant", "step"):
        raise ConfigError("classification is defined for constant or step protocols")
    if stats.n_spikes == 0:
        return LABEL_SILENT
    if stats.n_spikes < 3:
        return LABEL_OTHER
    bursting = stats.burst_ratio >= BURST_RATIO_THRESHOLD
    if stats.sustained:
        return LABEL_TONIC_BURSTING if bursting else LABEL_TONIC_SPIKING
    return LABEL_PHASIC_BURSTING if bursting else LABEL_PHASIC_SPIKING


def classify_emission(emission: np.ndarray, protocol: StimulusProtocol,
                      min_separation: int = 3) -> str:
    spikes = detect_spikes(emission, min_separation)
    return classify(spike_stats(spikes, protocol), protocol)


# ---------------------------------------------------------------------------
# Preset construction
# ---------------------------------------------------------------------------


def build_mtc_params(
    gains: Sequence[Tuple[str, int, float]],
    deltas: Sequence[float],
    tau_m: float,
    tau_s: float,
    tau_us: float,
    u_th: float,
    u_sat: float,
    u_rest: float = 0.0,
    n: int = 1,
) -> MTCParams:
    """Assemble MTCParams from a gain set and matching per-element offsets."""
    if len(deltas) != len(gains):
        raise ConfigError("need one delta per conductance element")
    els = [ConductanceElement.create(ts, pol, gain, delta, n=n)
           for (ts, pol, gain), delta in zip(gains, deltas)]
    return MTCParams.create(tau_m=tau_m, tau_s=tau_s, tau_us=tau_us, elements=els,
                            u_rest=u_rest, u_th=u_th, u_sat=u_sat, n=n)


def tune_preset(
    target: str,
    search_space: Dict[str, Sequence[float]],
    gains: Sequence[Tuple[str, int, float]] = TONIC_GAINS,
    currents: Sequence[float] = (0.6, 1.0, 1.5, 2.5),
    duration: int = 6000,
    settle: int = 2000,
    budget: int = 500,
    min_matches: int = 3,
    require_silent_at_rest: bool = True,
    fixed: Optional[Dict[str, float]] = None,
) -> Tuple[dict, dict]:
    """Grid-search offsets and transduction bounds for a target regime label.

    ``search_space`` maps parameter names (``delta_0``..``delta_k`` per
    element, ``u_th``, ``u_sat``, ``tau_m``, ``tau_s``, ``tau_us``) to value
    grids, iterated in deterministic order; ``fixed`` supplies the rest.
    Candidates are driven with step protocols: ``settle`` baseline steps let
    the circuit relax from the all-rest initial state, then the test current
    holds for ``duration`` steps.  The first configuration (within
    ``budget``) whose classification equals ``target`` for at least
    ``min_matches`` of the test currents (and stays Silent at zero current,
    unless disabled) wins.  All candidate lanes are simulated as one
    vectorized population.

    Returns (preset dict, evidence dict).  Raises TuningError with the
    nearest candidates when the budget is exhausted.
    """
    defaults = {"tau_m": 5.0, "tau_s": 50.0, "tau_us": 2000.0,
                "u_th": 0.5, "u_sat": 1.5}
    for i in range(len(gains)):
        defaults[f"delta_{i}"] = 0.0
    if fixed:
        defaults.update(fixed)
    for key in search_space:
        if key not in defaults:
            raise ConfigError(f"unknown search parameter {key!r}")
    if not search_space:
        raise ConfigError("empty search space")

    keys = list(search_space.keys())
    combos = itertools.product(*(search_space[k] for k in keys))
    candidates = [dict(zip(keys, c)) for c in itertools.islice(combos, budget)]
    test_currents = list(currents)
    if require_silent_at_rest:
        all_currents = [0.0] + test_currents
    else:
        all_currents = test_currents

    # one lane per (candidate, current)
    lanes = []
    for cand in candidates:
        cfg = dict(defaults)
        cfg.update(cand)
        for amp in all_currents:
            lanes.append((cfg, amp))
    n_lanes = len(lanes)
    deltas = np.array([[cfg[f"delta_{i}"] for cfg, _ in lanes]
                       for i in range(len(gains))])
    pop = MTCParams.create(
        tau_m=np.array([cfg["tau_m"] for cfg, _ in lanes]),
        tau_s=np.array([cfg["tau_s"] for cfg, _ in lanes]),
        tau_us=np.array([cfg["tau_us"] for cfg, _ in lanes]),
        elements=[ConductanceElement.create(ts, pol, gain, deltas[i], n=n_lanes)
                  for i, (ts, pol, gain) in enumerate(gains)],
        u_th=np.array([cfg["u_th"] for cfg, _ in lanes]),
        u_sat=np.array([cfg["u_sat"] for cfg, _ in lanes]),
        n=n_lanes,
    )
    amps = np.array([amp for _, amp in lanes])
    total = settle + duration
    currents_matrix = np.zeros((total, n_lanes))
    currents_matrix[settle:] = amps
    _, em = simulate_population(pop, currents_matrix)

    per_current = len(all_currents)
    nearest = []
    for c_idx, cand in enumerate(candidates):
        base = c_idx * per_current
        protocol = lambda amp: StimulusProtocol(  # noqa: E731
            "step", amp, total, onset=settle)
        labels = {}
        for a_idx, amp in enumerate(all_currents):
            labels[amp] = classify_emission(em[:, base + a_idx], protocol(amp))
        if require_silent_at_rest and labels[0.0] != LABEL_SILENT:
            nearest.append({"candidate": cand, "labels": labels})
            continue
        matches = sum(1 for amp in test_currents if labels[amp] == target)
        if matches >= min_matches:
            cfg = dict(defaults)
            cfg.update(cand)
            preset = {
                "gains": [list(g) for g in gains],
                "deltas": [cfg[f"delta_{i}"] for i in range(len(gains))],
                "tau_m": cfg["tau_m"], "tau_s": cfg["tau_s"], "tau_us": cfg["tau_us"],
                "u_th": cfg["u_th"], "u_sat": cfg["u_sat"], "u_rest": 0.0,
            }
            evidence = {
                "target": target,
                "labels": {str(a): lab for a, lab in labels.items()},
                "matched_currents": [a for a in test_currents if labels[a] == target],
                "duration": duration,
                "settle": settle,
                "candidates_tried": c_idx + 1,
                "classifier_version": CLASSIFIER_VERSION,
            }
            return preset, evidence
        nearest.append({"candidate": cand,
                        "labels": labels,
                        "matches": sum(1 for a in test_currents if labels[a] == target)})

    nearest.sort(key=lambda item: -item.get("matches", 0))
    raise TuningError(
        f"no candidate matched {target!r} on >= {min_matches} currents "
        f"within budget {budget}",
        nearest=nearest[:5],
    )


def population_heterogeneity(
    n: int,
    tonic_preset: dict,
    hetero_preset: dict,
    fraction_tonic: float = 0.5,
    tau_s_range: Tuple[float, float] = (20.0, 125.0),
    tau_us_range: Tuple[float, float] = (2000.0, 4000.0),
    rng_seed: int = 0,
) -> MTCParams:
    """Mixed MTC population: a tonic-circuit half and a bursting-capable half.

    The first round(n * fraction_tonic) neurons carry the tonic gain set
    (slow-negative and ultra-slow gains zero), the rest the heterogeneous
    set; offsets and transduction bounds come from the respective presets.
    tau_s and tau_us are drawn uniformly per neuron from the given ranges.
    """
    if not (0.0 <= fraction_tonic <= 1.0):
        raise ConfigError("fraction_tonic must lie in [0, 1]")
    rng = np.random.default_rng(rng_seed)
    n_tonic = int(round(n * fraction_tonic))
    tau_s = rng.uniform(tau_s_range[0], tau_s_range[1], size=n)
    tau_us = rng.uniform(tau_us_range[0], tau_us_range[1], size=n)
    tonic_mask = np.arange(n) < n_tonic

    tau_m = np.where(tonic_mask, tonic_preset["tau_m"], hetero_preset["tau_m"])
    u_th = np.where(tonic_mask, tonic_preset["u_th"], hetero_preset["u_th"])
    u_sat = np.where(tonic_mask, tonic_preset["u_sat"], hetero_preset["u_sat"])
    u_rest = np.where(tonic_mask, tonic_preset.get("u_rest", 0.0),
                      hetero_preset.get("u_rest", 0.0))

    # element slots follow the heterogeneous gain set; tonic neurons zero the
    # slots their circuit does not contain
    elements = []
    hetero_gains = [tuple(g) for g in hetero_preset["gains"]]
    tonic_gains = [tuple(g) for g in tonic_preset["gains"]]
    for slot, (ts, pol, gain) in enumerate(hetero_gains):
        gain_vec = np.full(n, float(gain))
        delta_vec = np.full(n, float(hetero_preset["deltas"][slot]))
        match = [i for i, g in enumerate(tonic_gains) if g == (ts, pol, gain)]
        if match:
            delta_vec[tonic_mask] = float(tonic_preset["deltas"][match[0]])
        else:
            gain_vec[tonic_mask] = 0.0
        elements.append(ConductanceElement.create(ts, int(pol), gain_vec, delta_vec, n=n))

    return MTCParams.create(tau_m=tau_m, tau_s=tau_s, tau_us=tau_us,
                            elements=elements, u_rest=u_rest, u_th=u_th,
                            u_sat=u_sat, n=n)
