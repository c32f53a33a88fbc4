"""YAML scenario and experiment files.

Scenario file (schema_version 1)::

    schema_version: 1
    domain: isrs            # or target_monitor
    params: {...}           # keyword arguments of IsrsSpec / TmSpec

Experiment file (schema_version 1)::

    schema_version: 1
    scenario: isrs_8_5.yaml  # path relative to this file, or an inline scenario mapping
    scenarios: 10            # initial conditions (scenario seeds 0..scenarios-1)
    repetitions: 20          # seeded runs per initial condition
    seed: 0
    max_steps: null          # null keeps the domain default
    planners:
      - {kind: PBD, depth: 3, samples: 10}
    output: results/isrs     # optional, relative to this file
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

import yaml

from ..domains.isrs import IsrsDomain, IsrsSpec
from ..domains.target_monitor import TargetMonitorDomain, TmSpec
from ..errors import ConfigError, InvalidInput
from ..planner.search import PlannerConfig, PlannerKind

SCHEMA_VERSION = 1

_DOMAINS = {
    "isrs": (IsrsSpec, IsrsDomain),
    "target_monitor": (TmSpec, TargetMonitorDomain),
}
_SCENARIO_KEYS = {"schema_version", "domain", "params"}
_EXPERIMENT_KEYS = {"schema_version", "scenario", "scenarios", "repetitions", "seed", "max_steps", "planners", "output"}
_PLANNER_KEYS = {"kind", "depth", "samples", "gamma"}


def _read(path: Path) -> dict:
    try:
        data = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path} is not valid YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return data


def _check_keys(data: dict, allowed: set, where: str) -> None:
    extra = set(data) - allowed
    if extra:
        raise ConfigError(f"{where}: unknown keys {sorted(extra)}")
    if data.get("schema_version") != SCHEMA_VERSION and "schema_version" in allowed:
        raise ConfigError(f"{where}: schema_version must be {SCHEMA_VERSION}, got {data.get('schema_version')!r}")


def domain_from_mapping(data: dict, where: str = "scenario"):
    _check_keys(data, _SCENARIO_KEYS, where)
    name = data.get("domain")
    if name not in _DOMAINS:
        raise ConfigError(f"{where}: domain must be one of {sorted(_DOMAINS)}, got {name!r}")
    spec_cls, dom_cls = _DOMAINS[name]
    params = data.get("params") or {}
    if not isinstance(params, dict):
        raise ConfigError(f"{where}: params must be a mapping")
    known = {f.name for f in fields(spec_cls)}
    extra = set(params) - known
    if extra:
        raise ConfigError(f"{where}: unknown {name} parameters {sorted(extra)}")
    try:
        spec = spec_cls(**params)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    return dom_cls(spec)


def load_scenario(path) -> Any:
    path = Path(path)
    return domain_from_mapping(_read(path), str(path))


@dataclass
class ExperimentConfig:
    domain: Any
    planners: list
    scenarios: int = 1
    repetitions: int = 1
    seed: int = 0
    max_steps: int | None = None
    output: Path | None = None
    source: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.scenarios < 1 or self.repetitions < 1:
            raise ConfigError("scenarios and repetitions must be at least 1")
        if self.max_steps is not None and self.max_steps < 0:
            raise ConfigError("max_steps must be non-negative")
        if not self.planners:
            raise ConfigError("need at least one planner")
        for p in self.planners:
            check_planner_for_domain(p, self.domain)

    @property
    def episodes(self) -> int:
        return self.scenarios * self.repetitions


def check_planner_for_domain(cfg: PlannerConfig, domain) -> None:
    if cfg.kind is PlannerKind.MAD and not isinstance(domain, IsrsDomain):
        raise ConfigError("MAD is only available on the ISRS domain")
    if cfg.kind in (PlannerKind.WT_SINGLE, PlannerKind.WT_MACRO) and not isinstance(domain, TargetMonitorDomain):
        raise ConfigError("worst-target planners need a domain with targets")


def planner_from_mapping(data: dict, domain, where: str = "planner") -> PlannerConfig:
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: must be a mapping")
    extra = set(data) - _PLANNER_KEYS
    if extra:
        raise ConfigError(f"{where}: unknown keys {sorted(extra)}")
    try:
        return PlannerConfig(
            kind=data.get("kind", "PBD"),
            gamma=float(data.get("gamma", domain.gamma)),
            depth=int(data.get("depth", 2)),
            samples=int(data.get("samples", 10)),
        )
    except (InvalidInput, TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def experiment_from_mapping(data: dict, base: Path = Path("."), where: str = "experiment") -> ExperimentConfig:
    _check_keys(data, _EXPERIMENT_KEYS, where)
    scen = data.get("scenario")
    if isinstance(scen, str):
        domain = load_scenario(base / scen)
    elif isinstance(scen, dict):
        domain = domain_from_mapping(scen, f"{where}: scenario")
    else:
        raise ConfigError(f"{where}: scenario must be a file path or a mapping")
    planners = data.get("planners")
    if not isinstance(planners, list):
        raise ConfigError(f"{where}: planners must be a list")
    cfgs = [planner_from_mapping(p, domain, f"{where}: planners[{i}]") for i, p in enumerate(planners)]
    out = data.get("output")
    try:
        return ExperimentConfig(
            domain=domain,
            planners=cfgs,
            scenarios=int(data.get("scenarios", 1)),
            repetitions=int(data.get("repetitions", 1)),
            seed=int(data.get("seed", 0)),
            max_steps=None if data.get("max_steps") is None else int(data["max_steps"]),
            output=None if out is None else base / out,
            source=data,
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{where}: {exc}") from exc


def load_experiment(path) -> ExperimentConfig:
    path = Path(path)
    return experiment_from_mapping(_read(path), path.parent, str(path))
