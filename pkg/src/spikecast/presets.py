"""Named MTC parameter presets: loading, saving, and the shipped file.

Preset files are YAML with an explicit schema version and embedded
provenance (the tuning search that produced each preset, its evidence
labels, and the classifier version they were validated against).  The
package ships one such file; ``regenerate_shipped_presets`` re-runs the
tuning procedure that created it.
"""

from __future__ import annotations

import importlib.resources
from pathlib import Path
from typing import Dict, Optional

import yaml

from .errors import ConfigError
from .neurons import MTCParams
from .regimes import (
    HETERO_GAINS,
    LABEL_PHASIC_SPIKING,
    LABEL_TONIC_BURSTING,
    LABEL_TONIC_SPIKING,
    TONIC_GAINS,
    build_mtc_params,
    tune_preset,
)

PRESET_SCHEMA_VERSION = 1
SHIPPED_PRESET_FILE = "presets.yaml"

_REQUIRED_FIELDS = ("gains", "deltas", "tau_m", "tau_s", "tau_us",
                    "u_th", "u_sat", "u_rest")


def validate_preset(preset: dict, name: str = "<preset>") -> None:
    for fieldname in _REQUIRED_FIELDS:
        if fieldname not in preset:
            raise ConfigError(f"preset {name!r} is missing field {fieldname!r}")
    if len(preset["gains"]) != len(preset["deltas"]):
        raise ConfigError(f"preset {name!r}: one delta per element required")


def preset_to_params(preset: dict, n: int = 1) -> MTCParams:
    """Instantiate MTCParams (optionally replicated to n neurons) from a preset."""
    validate_preset(preset)
    return build_mtc_params(
        gains=[tuple(g) for g in preset["gains"]],
        deltas=list(preset["deltas"]),
        tau_m=preset["tau_m"], tau_s=preset["tau_s"], tau_us=preset["tau_us"],
        u_th=preset["u_th"], u_sat=preset["u_sat"],
        u_rest=preset.get("u_rest", 0.0), n=n,
    )


def load_preset_file(path: Optional[Path] = None) -> dict:
    """Load a preset file; defaults to the file shipped with the package."""
    if path is None:
        ref = importlib.resources.files("spikecast").joinpath("data", SHIPPED_PRESET_FILE)
        text = ref.read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    doc = yaml.safe_load(text)
    if not isinstance(doc, dict) or "presets" not in doc:
        raise ConfigError("preset file must contain a 'presets' mapping")
    version = doc.get("schema_version")
    if version != PRESET_SCHEMA_VERSION:
        raise ConfigError(
            f"preset schema version {version!r} not supported "
            f"(expected {PRESET_SCHEMA_VERSION})"
        )
    for name, preset in doc["presets"].items():
        validate_preset(preset, name)
    return doc


def get_preset(name: str, path: Optional[Path] = None) -> dict:
    doc = load_preset_file(path)
    if name not in doc["presets"]:
        known = ", ".join(sorted(doc["presets"]))
        raise ConfigError(f"unknown preset {name!r}; shipped presets: {known}")
    return doc["presets"][name]


def save_preset_file(path: Path, presets: Dict[str, dict], provenance: dict) -> None:
    doc = {
        "schema_version": PRESET_SCHEMA_VERSION,
        "provenance": provenance,
        "presets": presets,
    }
    Path(path).write_text(
        yaml.safe_dump(doc, sort_keys=True, default_flow_style=False),
        encoding="utf-8",
    )


def regenerate_shipped_presets(path: Path) -> dict:
    """Re-run the tuning searches that produce the shipped preset file.

    The searches are deterministic grids, so the output is reproducible;
    each preset records the label evidence across its documented current
    band.
    """
    presets = {}
    provenance = {"tuning": {}}

    tonic, ev = tune_preset(
        LABEL_TONIC_SPIKING,
        {"delta_0": [0.6, 0.5, 0.7], "delta_1": [-0.4, -0.3, -0.5]},
        gains=TONIC_GAINS,
        currents=(1.0, 1.5, 2.0, 2.5),
        duration=5000, budget=9, min_matches=4,
        fixed={"tau_m": 5.0, "tau_s": 50.0, "tau_us": 3000.0,
               "u_th": 0.5, "u_sat": 1.5},
    )
    tonic["label"] = LABEL_TONIC_SPIKING
    tonic["current_band"] = [1.0, 1.5, 2.0, 2.5]
    tonic["protocol_duration"] = 5000
    presets["tonic"] = tonic
    provenance["tuning"]["tonic"] = ev

    burst, ev = tune_preset(
        LABEL_TONIC_BURSTING,
        {"delta_2": [0.60, 0.55, 0.65], "delta_3": [0.06, 0.04, 0.08]},
        gains=HETERO_GAINS,
        currents=(1.2, 2.0, 3.0, 4.0),
        duration=14000, budget=9, min_matches=3,
        fixed={"tau_m": 5.0, "tau_s": 50.0, "tau_us": 2000.0,
               "delta_0": 0.6, "delta_1": -0.4, "u_th": 0.5, "u_sat": 1.5},
    )
    burst["label"] = LABEL_TONIC_BURSTING
    burst["current_band"] = [2.0, 3.0, 4.0]
    burst["protocol_duration"] = 14000
    presets["bursting"] = burst
    provenance["tuning"]["bursting"] = ev

    phasic, ev = tune_preset(
        LABEL_PHASIC_SPIKING,
        {"delta_2": [0.2, 0.6, 1.0, 1.4, 1.8],
         "delta_3": [-0.3, -0.2, -0.1, 0.0, 0.1, 0.2],
         "tau_us": [500.0, 1000.0, 2000.0],
         "u_th": [0.5, 1.0]},
        gains=HETERO_GAINS,
        currents=(1.0, 1.5, 2.0, 2.5, 3.0),
        duration=6000, budget=200, min_matches=3,
        fixed={"tau_m": 5.0, "tau_s": 50.0, "delta_0": 0.6, "delta_1": -0.4,
               "u_sat": 2.0},
    )
    phasic["label"] = LABEL_PHASIC_SPIKING
    phasic["current_band"] = [2.0, 2.5, 3.0]
    phasic["protocol_duration"] = 6000
    presets["phasic"] = phasic
    provenance["tuning"]["phasic"] = ev

    save_preset_file(path, presets, provenance)
    return {"presets": presets, "provenance": provenance}
