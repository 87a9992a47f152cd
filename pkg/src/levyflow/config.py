"""Experiment configuration: strict schema, round-trip serialization, hashing.

Configs are YAML files with fixed sections (experiment, model, drift,
function, numerics, seed, output).  Unknown keys are rejected so typos fail
loudly; parse -> serialize -> parse is the identity on the canonical form,
and the config hash covers every numeric field.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import yaml

from .errors import ConfigError
from .models import (
    CylindricalStable,
    IsotropicStable,
    ModulatedKappa,
    RelativisticSubordinator,
    StableSubordinator,
    StableTypeDensity,
    SubordinateBM,
    SumOfPowersKappa,
    TruncatedStable,
)
from .pde import CappedPowerDrift, ClippedLinearDrift, ZeroDrift
from .semigroup import CappedPower, Constant, Sinusoid, SmoothedIndicator

__all__ = [
    "ExperimentConfig",
    "load_config",
    "parse_config",
    "serialize_config",
    "config_hash",
    "build_model",
    "build_drift",
    "build_function",
    "EXPERIMENT_KINDS",
]

EXPERIMENT_KINDS = (
    "sample",
    "semigroup-scaling",
    "negmoment",
    "holder",
    "pde",
    "zvonkin-flow",
    "bismut",
    "uniqueness",
    "decay",
)

_SECTION_KEYS = {
    "experiment": None,  # scalar
    "model": {"family", "alpha", "alpha1", "alpha2", "dim", "intensity", "eta",
              "subordinator", "blocks", "kappa", "m"},
    "drift": {"kind", "beta", "amplitude", "center", "sign", "time_mod",
              "slope", "box"},
    "function": {"kind", "beta", "freq", "phase", "amplitude", "center",
                 "radius", "width", "value"},
    "numerics": {"n_steps", "n_replicas", "n_samples", "half_period", "n_x",
                 "gamma", "lambda_override", "r0_override", "t_values", "x",
                 "fd_step", "p_values", "beta_values", "t_min_exp",
                 "t_max_exp", "rho", "levels", "threads", "chunk"},
    "seed": {"master_seed"},
    "output": {"dir", "formats"},
}

_SUB_KEYS = {"kind", "rho", "scale", "alpha", "m"}
_KAPPA_KEYS = {"kind", "terms", "base", "alpha", "m"}


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    model: dict = field(default_factory=dict)
    drift: dict = field(default_factory=dict)
    function: dict = field(default_factory=dict)
    numerics: dict = field(default_factory=dict)
    master_seed: int = 0
    out_dir: str = "out"
    formats: tuple = ("csv", "json")

    def canonical(self) -> dict:
        return {
            "experiment": self.kind,
            "model": dict(self.model),
            "drift": dict(self.drift),
            "function": dict(self.function),
            "numerics": dict(self.numerics),
            "seed": {"master_seed": self.master_seed},
            "output": {"dir": self.out_dir, "formats": list(self.formats)},
        }


def _check_keys(section: str, data: dict):
    allowed = _SECTION_KEYS[section]
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in [{section}]: {sorted(unknown)}")


def parse_config(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    unknown = set(raw) - set(_SECTION_KEYS)
    if unknown:
        raise ConfigError(f"unknown sections: {sorted(unknown)}")
    kind = raw.get("experiment")
    if kind not in EXPERIMENT_KINDS:
        raise ConfigError(f"experiment must be one of {EXPERIMENT_KINDS}, got {kind!r}")
    for sec in ("model", "drift", "function", "numerics", "seed", "output"):
        if sec in raw:
            if not isinstance(raw[sec], dict):
                raise ConfigError(f"[{sec}] must be a mapping")
            _check_keys(sec, raw[sec])
    model = dict(raw.get("model", {}))
    if "subordinator" in model:
        bad = set(model["subordinator"]) - _SUB_KEYS
        if bad:
            raise ConfigError(f"unknown subordinator keys: {sorted(bad)}")
    if "kappa" in model:
        bad = set(model["kappa"]) - _KAPPA_KEYS
        if bad:
            raise ConfigError(f"unknown kappa keys: {sorted(bad)}")
    seed = raw.get("seed", {})
    out = raw.get("output", {})
    cfg = ExperimentConfig(
        kind=kind,
        model=model,
        drift=dict(raw.get("drift", {})),
        function=dict(raw.get("function", {})),
        numerics=dict(raw.get("numerics", {})),
        master_seed=int(seed.get("master_seed", 0)),
        out_dir=str(out.get("dir", "out")),
        formats=tuple(out.get("formats", ["csv", "json"])),
    )
    # eager validation of the referenced objects
    if cfg.model:
        build_model(cfg.model)
    if cfg.drift:
        build_drift(cfg.drift)
    if cfg.function:
        build_function(cfg.function)
    return cfg


def load_config(path: str) -> ExperimentConfig:
    with open(path) as fh:
        try:
            raw = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return parse_config(raw)


def serialize_config(cfg: ExperimentConfig) -> str:
    return yaml.safe_dump(cfg.canonical(), sort_keys=True)


def config_hash(cfg: ExperimentConfig) -> str:
    blob = json.dumps(cfg.canonical(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# Factories
# ---------------------------------------------------------------------------


def _subordinator_from(data: dict):
    kind = data.get("kind", "stable")
    if kind == "stable":
        return StableSubordinator(rho=float(data["rho"]),
                                  scale=float(data.get("scale", 1.0)))
    if kind == "relativistic":
        return RelativisticSubordinator(alpha=float(data["alpha"]), m=float(data["m"]))
    raise ConfigError(f"unknown subordinator kind {kind!r}")


def _kappa_from(data: dict, dim: int):
    kind = data.get("kind", "sum_of_powers")
    if kind == "sum_of_powers":
        terms = tuple((float(c), float(a), bool(tr)) for c, a, tr in data["terms"])
        return SumOfPowersKappa(dim=dim, terms=terms)
    if kind == "modulated":
        return ModulatedKappa(dim=dim, base=float(data["base"]),
                              alpha=float(data["alpha"]), m=float(data["m"]))
    raise ConfigError(f"unknown kappa kind {kind!r}")


def build_model(data: dict):
    family = data.get("family")
    eta = tuple(float(v) for v in data.get("eta", ()))
    try:
        if family == "isotropic_stable":
            return IsotropicStable(alpha=float(data["alpha"]), dim=int(data.get("dim", 1)),
                                   intensity=data.get("intensity"), eta=eta)
        if family == "subordinate_bm":
            return SubordinateBM(_subordinator_from(data["subordinator"]),
                                 dim=int(data.get("dim", 1)), eta=eta)
        if family == "relativistic_stable":
            return SubordinateBM(RelativisticSubordinator(alpha=float(data["alpha"]),
                                                          m=float(data["m"])),
                                 dim=int(data.get("dim", 1)), eta=eta)
        if family == "cylindrical_stable":
            blocks = tuple((float(a), int(d)) for a, d in data["blocks"])
            return CylindricalStable(blocks=blocks, eta=eta)
        if family == "stable_type":
            dim = int(data.get("dim", 1))
            return StableTypeDensity(kappa=_kappa_from(data["kappa"], dim), dim=dim, eta=eta)
        if family == "truncated_stable":
            return TruncatedStable(alpha=float(data["alpha"]), dim=int(data.get("dim", 1)),
                                   intensity=data.get("intensity"), eta=eta)
    except KeyError as exc:
        raise ConfigError(f"model section missing key {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"invalid model parameters: {exc}") from exc
    raise ConfigError(f"unknown model family {family!r}")


def build_drift(data: dict):
    kind = data.get("kind", "zero")
    try:
        if kind == "zero":
            return ZeroDrift()
        if kind == "capped_power":
            tm = data.get("time_mod")
            return CappedPowerDrift(
                beta=float(data["beta"]), amplitude=float(data.get("amplitude", 1.0)),
                center=float(data.get("center", 0.0)), sign=float(data.get("sign", 1.0)),
                time_mod=tuple(float(v) for v in tm) if tm else None,
            )
        if kind == "clipped_linear":
            return ClippedLinearDrift(slope=float(data.get("slope", 1.0)),
                                      box=float(data.get("box", 2.0)),
                                      center=float(data.get("center", 0.0)))
    except KeyError as exc:
        raise ConfigError(f"drift section missing key {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"invalid drift parameters: {exc}") from exc
    raise ConfigError(f"unknown drift kind {kind!r}")


def build_function(data: dict):
    kind = data.get("kind", "sinusoid")
    try:
        if kind == "sinusoid":
            freq = data.get("freq", [1.0])
            if not isinstance(freq, (list, tuple)):
                freq = [freq]
            return Sinusoid(freq=tuple(float(v) for v in freq),
                            phase=float(data.get("phase", 0.0)),
                            amplitude=float(data.get("amplitude", 1.0)))
        if kind == "capped_power":
            center = data.get("center", [0.0])
            if not isinstance(center, (list, tuple)):
                center = [center]
            return CappedPower(beta=float(data["beta"]),
                               center=tuple(float(v) for v in center),
                               amplitude=float(data.get("amplitude", 1.0)))
        if kind == "smoothed_indicator":
            center = data.get("center", [0.0])
            if not isinstance(center, (list, tuple)):
                center = [center]
            return SmoothedIndicator(center=tuple(float(v) for v in center),
                                     radius=float(data.get("radius", 0.5)),
                                     width=float(data.get("width", 0.5)),
                                     amplitude=float(data.get("amplitude", 1.0)))
        if kind == "constant":
            return Constant(value=float(data.get("value", 1.0)))
    except KeyError as exc:
        raise ConfigError(f"function section missing key {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"invalid function parameters: {exc}") from exc
    raise ConfigError(f"unknown function kind {kind!r}")
