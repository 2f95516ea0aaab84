"""Experiment configuration: schema, loading and construction of run objects.

Configuration files are JSON or YAML with the same data model.  Every
section is optional and falls back to the defaults of the corresponding
library type.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Optional

import jsonschema
import yaml

from ..devices import DeviceParams, QndParams
from ..estimate import EstimateInputs
from ..protocol import Geometry, ProtocolConfig
from ..strategies import STRATEGY_NAMES, StrategySpec
from ..verdict import MODELS, BoundParams, SecureRegion

EXPERIMENTS = ("simulate", "bounds", "estimate", "verify-lemmas", "sweep")
DEVICE_PRESETS = ("ideal", "qnd")
ENGINES = ("fast", "scalar")
ANALYTIC = ("none", "detection_nonadaptive", "chernoff_floor", "attacker_ceiling")

_NUM = {"type": "number"}
_PROB = {"type": "number", "minimum": 0, "maximum": 1}
_POS_INT = {"type": "integer", "minimum": 1}
_POINT = {"type": "array", "items": _PROB, "minItems": 3, "maxItems": 3}


def _obj(props: dict, required=()) -> dict:
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


SCHEMA = _obj(
    {
        "experiment": {"enum": list(EXPERIMENTS)},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "trials": _POS_INT,
        "engine": {"enum": list(ENGINES)},
        "protocol": _obj(
            {
                "n": _POS_INT,
                "m": {"type": "integer", "minimum": 2},
                "f_seed": {"type": "integer", "minimum": 0},
                "delay": {"type": "number", "minimum": 0},
                "mode": {"enum": ["plain", "commit"]},
                "r": _POS_INT,
                "k": {"type": ["integer", "null"], "minimum": 2},
                "max_rounds": {"type": ["integer", "null"], "minimum": 1},
                "geometry": _obj(
                    {
                        "v0": _NUM,
                        "p": _NUM,
                        "v1": _NUM,
                        "quantum_speed": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                        "tolerance": {"type": "number", "minimum": 0},
                        "alice": {"type": ["number", "null"]},
                        "bob": {"type": ["number", "null"]},
                    }
                ),
            }
        ),
        "devices": _obj(
            {
                "preset": {"enum": list(DEVICE_PRESETS)},
                **{f: _PROB for f in ("eta_v", "eta_det", "p_dc", "eta_det_qnd", "p_dc_qnd", "eta_surv", "eta_equip", "delay_survival", "fidelity")},
                "presence_mode": {"enum": ["qnd", "bsm"]},
            }
        ),
        "strategy": _obj({"name": {"enum": list(STRATEGY_NAMES)}, "params": {"type": "object"}}, required=["name"]),
        "bounds": _obj(
            {
                "p_attack": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "p_err": _PROB,
                "eta_p": _PROB,
                "delta_margin": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "k": {"type": "integer", "minimum": 2},
                "model": {"enum": list(MODELS)},
                "r": {"type": ["integer", "null"], "minimum": 1},
                "rate_sigma": {"type": "number", "exclusiveMinimum": 0},
                "region": {"oneOf": [{"type": "null"}, _obj({"curve": {"type": "array", "items": _POINT, "minItems": 2}, "honest_point": _POINT}, required=["curve", "honest_point"])]},
                "alphas": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0, "maximum": 1}},
                "detection_r": {"type": "number", "exclusiveMinimum": 0},
            }
        ),
        "estimate": _obj(
            {
                **{f.name: _NUM for f in fields(EstimateInputs)},
                "k": {"type": "integer", "minimum": 2},
                "sweeps": {"type": "object", "additionalProperties": {"type": "array", "items": _NUM, "minItems": 1}},
            }
        ),
        "lemmas": _obj({"sizes": {"type": "object", "additionalProperties": _POS_INT}, "edge_removal_samples": _POS_INT}),
        "sweep": _obj(
            {
                "parameter": {"type": "string", "pattern": r"^[a-z_]+(\.[a-z_]+)+$"},
                "values": {"type": "array", "minItems": 1},
                "analytic": {"enum": list(ANALYTIC)},
            },
            required=["parameter", "values"],
        ),
        "outputs": _obj({"out_dir": {"type": "string"}, "transcript_trials": {"type": "integer", "minimum": 0}}),
    }
)


class ConfigValidationError(ValueError):
    """Configuration could not be parsed or failed validation."""

    def __init__(self, messages: list[str]):
        super().__init__("\n".join(messages))
        self.messages = messages


def _location(err: jsonschema.ValidationError) -> str:
    return "/".join(str(p) for p in err.absolute_path) or "<root>"


def validate(data: dict) -> dict:
    """Check ``data`` against the schema and the library constructors."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        raise ConfigValidationError([f"{_location(e)}: {e.message}" for e in errors])
    cfg = ExperimentConfig(data)
    problems = []
    for section, build in (
        ("protocol", cfg.protocol_config),
        ("devices", cfg.device_params),
        ("strategy", cfg.strategy_spec),
        ("bounds", cfg.bound_params),
        ("bounds/region", cfg.region),
        ("estimate", cfg.estimate_inputs),
    ):
        try:
            obj = build()
            if section == "strategy":
                obj.build(cfg.device_params())
        except (ValueError, TypeError) as exc:
            problems.append(f"{section}: {exc}")
    if problems:
        raise ConfigValidationError(problems)
    return data


def load_config(path: str | Path) -> dict:
    """Parse a JSON or YAML file; errors carry line numbers where available."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigValidationError([f"{path}: {exc.strerror}"]) from None
    try:
        if path.suffix == ".json":
            data = json.loads(text)
        else:
            data = yaml.safe_load(text)
    except json.JSONDecodeError as exc:
        raise ConfigValidationError([f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}"]) from None
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{path}:{mark.line + 1}:{mark.column + 1}" if mark else str(path)
        raise ConfigValidationError([f"{where}: {getattr(exc, 'problem', None) or exc}"]) from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigValidationError([f"{path}: top level must be a mapping"])
    return data


def config_hash(data: dict) -> str:
    """SHA-256 of the canonical JSON form, ignoring where artifacts go."""
    data = copy.deepcopy(data)
    (data.get("outputs") or {}).pop("out_dir", None)
    canon = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def set_dotted(data: dict, dotted: str, value: Any) -> dict:
    """Copy of ``data`` with ``a.b.c`` set to ``value``."""
    out = copy.deepcopy(data)
    node = out
    keys = dotted.split(".")
    for key in keys[:-1]:
        node = node.setdefault(key, {})
        if not isinstance(node, dict):
            raise ConfigValidationError([f"{dotted}: {key} is not a section"])
    node[keys[-1]] = value
    return out


@dataclass
class ExperimentConfig:
    """Typed view on a validated configuration mapping."""

    data: dict

    def _section(self, name: str) -> dict:
        return dict(self.data.get(name) or {})

    @property
    def seed(self) -> int:
        return int(self.data.get("seed", 0))

    @property
    def trials(self) -> int:
        return int(self.data.get("trials", 100))

    @property
    def engine(self) -> str:
        return self.data.get("engine", "fast")

    @property
    def transcript_trials(self) -> int:
        return int(self._section("outputs").get("transcript_trials", 10))

    def protocol_config(self) -> ProtocolConfig:
        p = self._section("protocol")
        geom = Geometry(**p.pop("geometry", {}))
        return ProtocolConfig(geometry=geom, seed=self.seed, **p)

    def device_params(self) -> DeviceParams:
        d = self._section("devices")
        preset = d.pop("preset", "ideal")
        if preset == "qnd":
            return QndParams().device_params(**d)
        return DeviceParams(**d)

    def strategy_spec(self) -> StrategySpec:
        s = self._section("strategy") or {"name": "honest"}
        return StrategySpec(s["name"], dict(s.get("params") or {}))

    def bound_params(self) -> BoundParams:
        b = self._section("bounds")
        keep = {f.name for f in fields(BoundParams)}
        b.setdefault("p_attack", 0.8)
        return BoundParams(**{k: v for k, v in b.items() if k in keep})

    def bounds_extra(self) -> dict:
        b = self._section("bounds")
        return {
            "r": b.get("r"),
            "rate_sigma": b.get("rate_sigma", 4.0),
            "alphas": tuple(b.get("alphas", (0.01, 0.02, 0.05))),
            "detection_r": b.get("detection_r", 20.0),
        }

    def region(self) -> Optional[SecureRegion]:
        reg = self._section("bounds").get("region")
        if not reg:
            return None
        return SecureRegion(tuple(map(tuple, reg["curve"])), tuple(reg["honest_point"]))

    def estimate_inputs(self) -> EstimateInputs:
        e = self._section("estimate")
        e.pop("sweeps", None)
        return EstimateInputs(**e)

    def estimate_sweeps(self) -> dict:
        return dict(self._section("estimate").get("sweeps") or {})

    def lemma_sizes(self) -> dict:
        return dict(self._section("lemmas").get("sizes") or {})

    def edge_removal_samples(self) -> int:
        return int(self._section("lemmas").get("edge_removal_samples", 1000))

    def sweep(self) -> dict:
        s = self._section("sweep")
        s.setdefault("analytic", "none")
        return s
