"""Experiment configuration files (TOML).

Layout::

    [device]             DeviceConfig scalars (seed, scale, noise, wake-up)
    [device.ensemble]    EnsembleConfig (its seed follows device.seed)
    [device.stack]       DeviceStack
    [device.pulse_rule]  PulseRule
    [experiment]         name = "<protocol>"
    [experiment.params]  protocol parameters
    [output]             directory, formats

Unknown keys anywhere are rejected.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
import tomli_w

from .domains import EnsembleConfig
from .electrostatics import DeviceStack
from .instrument import DeviceConfig, PulseRule

FORMATS = ("csv", "json", "svg")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    device: DeviceConfig
    experiment: str
    params: dict
    output_dir: str
    formats: list
    raw: dict  # fully resolved nested dict

    @property
    def seed(self) -> int:
        return self.device.seed

    def config_hash(self) -> str:
        return config_hash(self.raw)

    def to_toml(self) -> str:
        return tomli_w.dumps(self.raw)


def preset_device(name: str, seed: int = 0) -> DeviceConfig:
    from .experiments import EXPERIMENTS

    exp = EXPERIMENTS.get(name)
    if exp is not None and exp.preset == "synapse":
        return synapse_device(seed)
    return capacitor_device(seed)


def default_raw(name: str = "") -> dict:
    """Fully populated config for experiment ``name`` with its device preset."""
    dev = preset_device(name)
    scalars = {k: v for k, v in asdict(dev).items()
               if k not in ("ensemble", "stack", "pulse_rule")}
    ens = asdict(dev.ensemble)
    ens.pop("seed")
    return {
        "device": {**scalars, "ensemble": ens, "stack": asdict(dev.stack),
                   "pulse_rule": asdict(dev.pulse_rule)},
        "experiment": {"name": name, "params": {}},
        "output": {"directory": "", "formats": ["csv"]},
    }


def _merge(base: dict, new: dict, path: str, errors: list[str]) -> None:
    for key, val in new.items():
        where = f"{path}.{key}" if path else key
        if key not in base:
            errors.append(f"unknown key '{where}'")
            continue
        if isinstance(base[key], dict) and where != "experiment.params":
            if not isinstance(val, dict):
                errors.append(f"'{where}' must be a table")
                continue
            _merge(base[key], val, where, errors)
        elif where == "experiment.params":
            if not isinstance(val, dict):
                errors.append(f"'{where}' must be a table")
                continue
            base[key] = dict(val)
        else:
            problem = _type_problem(base[key], val)
            if problem:
                errors.append(f"'{where}' {problem}")
                continue
            base[key] = val


def _type_problem(default, value) -> str:
    if isinstance(default, bool):
        return "" if isinstance(value, bool) else "must be true or false"
    if isinstance(default, (int, float)):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            return "must be a number"
        if isinstance(default, int) and not isinstance(value, int):
            return "must be an integer"
        return ""
    if isinstance(default, str):
        return "" if isinstance(value, str) else "must be a string"
    if isinstance(default, list):
        return "" if isinstance(value, list) else "must be a list"
    return ""


def set_path(raw: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    node = raw
    for k in keys[:-1]:
        if not isinstance(node.get(k), dict):
            raise ConfigError(f"unknown key '{dotted}'")
        node = node[k]
    if keys[0] != "experiment" and keys[-1] not in node:
        raise ConfigError(f"unknown key '{dotted}'")
    if keys[-1] in node and not isinstance(node[keys[-1]], dict) and dotted != "experiment.name":
        problem = _type_problem(node[keys[-1]], value)
        if problem:
            raise ConfigError(f"'{dotted}' {problem}")
    node[keys[-1]] = value


def parse_override(text: str) -> tuple[str, object]:
    if "=" not in text:
        raise ConfigError(f"override '{text}' must look like key=value")
    key, val = text.split("=", 1)
    key = key.strip()
    try:
        value = tomllib.loads(f"v = {val.strip()}")["v"]
    except tomllib.TOMLDecodeError:
        value = val.strip()
    return key, value


def resolve(doc: dict, overrides=(), seed: int | None = None,
            out: str | None = None) -> tuple[dict, list[str]]:
    name = doc.get("experiment", {}).get("name", "") if isinstance(doc.get("experiment"), dict) else ""
    for key, value in overrides:
        if key == "experiment.name":
            name = value
    raw = default_raw(name if isinstance(name, str) else "")
    errors: list[str] = []
    _merge(raw, doc, "", errors)
    for key, value in overrides:
        try:
            set_path(raw, key, value)
        except ConfigError as exc:
            errors.append(str(exc))
    if seed is not None:
        raw["device"]["seed"] = seed
    if out is not None:
        raw["output"]["directory"] = out
    return raw, errors


def _coerce_floats(d: dict, cls) -> dict:
    out = {}
    types = {f.name: f.type for f in fields(cls)}
    for k, v in d.items():
        if types.get(k) in ("float", float) and isinstance(v, int) and not isinstance(v, bool):
            v = float(v)
        out[k] = v
    return out


def device_from_raw(dev: dict) -> DeviceConfig:
    d = copy.deepcopy(dev)
    ens = EnsembleConfig(**_coerce_floats(d.pop("ensemble"), EnsembleConfig), seed=d["seed"])
    stack = DeviceStack(**_coerce_floats(d.pop("stack"), DeviceStack))
    rule = PulseRule(**_coerce_floats(d.pop("pulse_rule"), PulseRule))
    return DeviceConfig(ensemble=ens, stack=stack, pulse_rule=rule,
                        **_coerce_floats(d, DeviceConfig))


def check(raw: dict) -> list[str]:
    """All schema and invariant violations of a resolved config."""
    from .experiments import EXPERIMENTS, params_violations

    errors = []
    try:
        dev = device_from_raw(raw["device"])
    except TypeError as exc:
        return [f"device section: {exc}"]
    errors += dev.violations()
    if not isinstance(dev.seed, int) or isinstance(dev.seed, bool):
        errors.append("device.seed must be an integer")
    name = raw["experiment"]["name"]
    if name not in EXPERIMENTS:
        errors.append(f"experiment.name must be one of {sorted(EXPERIMENTS)} (got {name!r})")
    else:
        errors += params_violations(name, raw["experiment"]["params"])
    fmts = raw["output"]["formats"]
    if not isinstance(fmts, list) or any(f not in FORMATS for f in fmts):
        errors.append(f"output.formats entries must be in {FORMATS}")
    return errors


def build(raw: dict) -> ExperimentConfig:
    errors = check(raw)
    if errors:
        raise ConfigError("; ".join(errors))
    from .experiments import resolved_params

    name = raw["experiment"]["name"]
    raw["experiment"]["params"] = resolved_params(name, raw["experiment"]["params"])
    fmts = list(raw["output"]["formats"])
    if "csv" not in fmts:
        fmts.insert(0, "csv")
    raw["output"]["formats"] = fmts
    return ExperimentConfig(device_from_raw(raw["device"]), name,
                            raw["experiment"]["params"], raw["output"]["directory"],
                            fmts, raw)


def read_toml(path) -> dict:
    p = Path(path)
    try:
        with p.open("rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def load(path, overrides=(), seed=None, out=None) -> ExperimentConfig:
    raw, errors = resolve(read_toml(path), overrides, seed, out)
    if errors:
        raise ConfigError("; ".join(errors))
    return build(raw)


def config_hash(raw: dict) -> str:
    """Hash of everything except the output location."""
    body = {k: v for k, v in raw.items() if k != "output"}
    text = json.dumps(body, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


# -- presets -------------------------------------------------------------------

def capacitor_device(seed: int = 0, **changes) -> DeviceConfig:
    """MSFM capacitor / thickness-series calibration (P-V, C-V, on/off vs d_WOx)."""
    cfg = DeviceConfig(seed=seed, ensemble=EnsembleConfig(seed=seed))
    return _replace(cfg, changes)


def synapse_device(seed: int = 0, **changes) -> DeviceConfig:
    """20 x 5 um FeFET synapse calibration (R-V loops, retention, pulse trains)."""
    ens = EnsembleConfig(mean_v_up=1.61, mean_v_down=-1.97, sigma_c=0.85, seed=seed)
    cfg = DeviceConfig(seed=seed, ensemble=ens, scale=0.15)
    return _replace(cfg, changes)


def _replace(cfg: DeviceConfig, changes: dict) -> DeviceConfig:
    from dataclasses import replace
    return replace(cfg, **changes) if changes else cfg
