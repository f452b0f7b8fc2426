"""File formats: binary float containers, CSV emitters, checkpoints.

All binary payloads are 64-bit little-endian floats.  Two container
flavours:

* dataset container: a raw ``.bin`` payload with a JSON sidecar (same stem,
  ``.json``) holding the array manifest and the generation/scaling/windowing
  parameters;
* checkpoint: a single file, magic + header length + JSON header + payload,
  carrying the network configuration and all parameter arrays.

CSV output is round-trip exact (shortest repr of each float) and every file
is byte-stable across re-runs: keys are sorted, no timestamps are written,
and gzip members carry a zeroed mtime.
"""

from __future__ import annotations

import gzip
import json
import struct
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np

from .errors import ConfigError
from .mg import ScalerParams, TimeSeries, WindowedDataset
from .network import NetworkConfig, NetworkParams
from .neurons import AdLIFParams, ConductanceElement, LIFParams, MTCParams

CHECKPOINT_MAGIC = b"SPIKCST1"
FORMAT_VERSION = 1


def _json_bytes(obj: dict) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")


def _float_repr(v: float) -> str:
    # repr of a Python float is the shortest string that round-trips
    return repr(float(v))


# ---------------------------------------------------------------------------
# Raw array payloads
# ---------------------------------------------------------------------------


def _pack_arrays(arrays: Dict[str, np.ndarray]) -> Tuple[bytes, list]:
    manifest = []
    chunks = []
    offset = 0
    for name in sorted(arrays):
        arr = np.ascontiguousarray(arrays[name], dtype="<f8")
        manifest.append({"name": name, "shape": list(arr.shape), "offset": offset})
        chunks.append(arr.tobytes())
        offset += arr.size
    return b"".join(chunks), manifest


def _unpack_arrays(payload: bytes, manifest: list) -> Dict[str, np.ndarray]:
    flat = np.frombuffer(payload, dtype="<f8")
    out = {}
    for entry in manifest:
        shape = tuple(entry["shape"])
        size = int(np.prod(shape)) if shape else 1
        start = entry["offset"]
        out[entry["name"]] = flat[start: start + size].reshape(shape).copy()
    return out


# ---------------------------------------------------------------------------
# Dataset container (.bin + .json sidecar)
# ---------------------------------------------------------------------------


def save_dataset(path_base: Path, dataset: WindowedDataset,
                 mg_config: Optional[dict] = None,
                 scaler: Optional[ScalerParams] = None) -> Tuple[Path, Path]:
    """Write ``<base>.bin`` (float64 LE payload) and ``<base>.json`` sidecar."""
    base = Path(path_base)
    bin_path = base.with_suffix(".bin")
    json_path = base.with_suffix(".json")
    payload, manifest = _pack_arrays({
        "inputs": dataset.inputs,
        "targets": dataset.targets,
    })
    sidecar = {
        "format_version": FORMAT_VERSION,
        "arrays": manifest,
        "windowing": {
            "horizon": dataset.horizon,
            "stride": dataset.stride,
            "n_samples": dataset.n_samples,
            "t_x": dataset.window_len,
        },
        "mg_config": mg_config,
        "scaler": scaler.to_dict() if scaler is not None else None,
    }
    bin_path.write_bytes(payload)
    json_path.write_bytes(_json_bytes(sidecar) + b"\n")
    return bin_path, json_path


def load_dataset(path_base: Path):
    """Load a dataset container; returns (WindowedDataset, sidecar dict)."""
    base = Path(path_base)
    bin_path = base.with_suffix(".bin")
    json_path = base.with_suffix(".json")
    if not bin_path.exists() or not json_path.exists():
        raise ConfigError(f"dataset container incomplete at {base}")
    sidecar = json.loads(json_path.read_text(encoding="utf-8"))
    if sidecar.get("format_version") != FORMAT_VERSION:
        raise ConfigError("unsupported dataset format version")
    arrays = _unpack_arrays(bin_path.read_bytes(), sidecar["arrays"])
    win = sidecar["windowing"]
    ds = WindowedDataset(inputs=arrays["inputs"], targets=arrays["targets"],
                         horizon=win["horizon"], stride=win["stride"])
    return ds, sidecar


# ---------------------------------------------------------------------------
# Population (de)serialization
# ---------------------------------------------------------------------------


def population_to_arrays(pop) -> Tuple[dict, Dict[str, np.ndarray]]:
    """Split a population into a JSON-able descriptor and flat float arrays."""
    if isinstance(pop, LIFParams):
        meta = {"kind": "lif", "reset_mode": pop.reset_mode}
        arrays = {"tau_m": pop.tau_m, "u_th": pop.u_th, "u_rest": pop.u_rest}
    elif isinstance(pop, AdLIFParams):
        meta = {"kind": "adlif"}
        arrays = {"tau_m": pop.tau_m, "tau_w": pop.tau_w, "a": pop.a, "b": pop.b,
                  "u_th": pop.u_th, "u_rest": pop.u_rest}
    elif isinstance(pop, MTCParams):
        meta = {"kind": "mtc",
                "elements": [{"timescale": el.timescale, "polarity": el.polarity,
                              "slot": i} for i, el in enumerate(pop.elements)]}
        arrays = {"tau_m": pop.tau_m, "tau_s": pop.tau_s, "tau_us": pop.tau_us,
                  "u_rest": pop.u_rest, "u_th": pop.u_th, "u_sat": pop.u_sat}
        for i, el in enumerate(pop.elements):
            arrays[f"element_{i}_gain"] = el.gain
            arrays[f"element_{i}_delta"] = el.delta
    else:
        raise ConfigError(f"unknown population type {type(pop).__name__}")
    return meta, arrays


def population_from_arrays(meta: dict, arrays: Dict[str, np.ndarray]):
    kind = meta["kind"]
    if kind == "lif":
        return LIFParams(tau_m=arrays["tau_m"], u_th=arrays["u_th"],
                         u_rest=arrays["u_rest"], reset_mode=meta["reset_mode"])
    if kind == "adlif":
        return AdLIFParams(tau_m=arrays["tau_m"], tau_w=arrays["tau_w"],
                           a=arrays["a"], b=arrays["b"], u_th=arrays["u_th"],
                           u_rest=arrays["u_rest"])
    if kind == "mtc":
        elements = [
            ConductanceElement(timescale=e["timescale"], polarity=e["polarity"],
                               gain=arrays[f"element_{e['slot']}_gain"],
                               delta=arrays[f"element_{e['slot']}_delta"])
            for e in meta["elements"]
        ]
        return MTCParams(tau_m=arrays["tau_m"], tau_s=arrays["tau_s"],
                         tau_us=arrays["tau_us"], elements=elements,
                         u_rest=arrays["u_rest"], u_th=arrays["u_th"],
                         u_sat=arrays["u_sat"])
    raise ConfigError(f"unknown population kind {kind!r}")


# ---------------------------------------------------------------------------
# Checkpoints (single binary file with JSON header)
# ---------------------------------------------------------------------------


def save_checkpoint(path: Path, cfg: NetworkConfig, params: NetworkParams,
                    extra: Optional[dict] = None) -> Path:
    """Atomically write a checkpoint (write-temp-then-rename)."""
    pop_meta, pop_arrays = population_to_arrays(cfg.population)
    arrays = {"w_in": params.w_in, "w_out": params.w_out}
    arrays.update({f"pop_{k}": v for k, v in pop_arrays.items()})
    payload, manifest = _pack_arrays(arrays)
    header = {
        "format_version": FORMAT_VERSION,
        "model_kind": cfg.model_kind,
        "hidden_size": cfg.hidden_size,
        "filter_cutoff": cfg.filter_cutoff,
        "filter_order": cfg.filter_order,
        "loss_washout": cfg.loss_washout,
        "population": pop_meta,
        "arrays": manifest,
        "extra": extra or {},
    }
    header_bytes = _json_bytes(header)
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<Q", len(header_bytes)))
        fh.write(header_bytes)
        fh.write(payload)
    tmp.replace(path)
    return path


def load_checkpoint(path: Path):
    """Load a checkpoint; returns (NetworkConfig, NetworkParams, header dict)."""
    raw = Path(path).read_bytes()
    if raw[:8] != CHECKPOINT_MAGIC:
        raise ConfigError(f"{path} is not a checkpoint file")
    (header_len,) = struct.unpack("<Q", raw[8:16])
    header = json.loads(raw[16: 16 + header_len].decode("utf-8"))
    if header.get("format_version") != FORMAT_VERSION:
        raise ConfigError("unsupported checkpoint format version")
    arrays = _unpack_arrays(raw[16 + header_len:], header["arrays"])
    pop_arrays = {k[len("pop_"):]: v for k, v in arrays.items() if k.startswith("pop_")}
    population = population_from_arrays(header["population"], pop_arrays)
    cfg = NetworkConfig(
        hidden_size=header["hidden_size"],
        model_kind=header["model_kind"],
        population=population,
        filter_cutoff=header["filter_cutoff"],
        filter_order=header["filter_order"],
        loss_washout=header["loss_washout"],
    )
    params = NetworkParams(w_in=arrays["w_in"], w_out=arrays["w_out"])
    return cfg, params, header


# ---------------------------------------------------------------------------
# CSV / JSONL emitters
# ---------------------------------------------------------------------------


def write_series_csv(path: Path, series: TimeSeries) -> Path:
    """Two columns ``t,x``; full-precision decimal, round-trip exact."""
    lines = ["t,x"]
    for i, v in enumerate(series.values):
        lines.append(f"{_float_repr(i * series.dt)},{_float_repr(v)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return Path(path)


def read_series_csv(path: Path) -> TimeSeries:
    lines = Path(path).read_text(encoding="utf-8").strip().split("\n")
    if lines[0] != "t,x":
        raise ConfigError("series CSV must start with header 't,x'")
    ts = []
    xs = []
    for line in lines[1:]:
        t_str, x_str = line.split(",")
        ts.append(float(t_str))
        xs.append(float(x_str))
    if len(ts) >= 2:
        dt = ts[1] - ts[0]
    else:
        dt = 1.0
    return TimeSeries(values=np.asarray(xs), dt=dt)


def write_activity_csv(path: Path, hidden: np.ndarray) -> Path:
    """Sparse triplet dump ``sample,step,neuron,value`` of nonzero emissions.

    Written gzip-compressed with a zeroed mtime so re-runs are byte-identical.
    """
    hidden = np.asarray(hidden)
    if hidden.ndim == 2:
        hidden = hidden[None]
    path = Path(path)
    with gzip.GzipFile(filename="", mode="wb", fileobj=open(path, "wb"), mtime=0) as gz:
        gz.write(b"sample,step,neuron,value\n")
        samples, steps, neurons = np.nonzero(hidden)
        values = hidden[samples, steps, neurons]
        for s, t, i, v in zip(samples, steps, neurons, values):
            gz.write(f"{s},{t},{i},{_float_repr(v)}\n".encode("ascii"))
    return path


def write_jsonl(path: Path, records: list) -> Path:
    text = "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)
    Path(path).write_text(text, encoding="utf-8")
    return Path(path)


def write_json(path: Path, obj: dict) -> Path:
    Path(path).write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n",
                          encoding="utf-8")
    return Path(path)


def write_csv(path: Path, header: list, rows: list) -> Path:
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, float):
                cells.append(_float_repr(v))
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return Path(path)
