"""Loading and validating the JSON analysis configuration."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .core import NoiseSpec, PSDError
from .markov import GridSpec
from .pipeline import EstimatorSettings
from .systems import (
    HopperParams,
    HopperSystem,
    LinearGaussianSystem,
    QuadraticSystem,
    ReturnMapSystem,
    SurrogateSystem,
)

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Invalid configuration; ``errors`` lists one diagnostic per problem."""

    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


def load_schema() -> dict:
    text = resources.files("metastable").joinpath("schema/config.schema.json").read_text("utf-8")
    return json.loads(text)


@dataclass(frozen=True)
class AnalysisConfig:
    system_name: str
    system_params: dict
    grid: GridSpec
    noise: NoiseSpec
    estimator: EstimatorSettings
    indicator_index: int | None = None
    base_state: tuple[float, ...] | None = None
    threads: int = 1
    output_dir: str = "out"
    sweep: tuple[float, ...] = ()
    reduction: dict = field(default_factory=dict)
    simulate: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    def build_system(self) -> ReturnMapSystem:
        p = dict(self.system_params)
        if self.system_name == "hopper":
            p.setdefault("lo", self.grid.lo)
            p.setdefault("hi", self.grid.hi)
            return HopperSystem(HopperParams(**p))
        if self.system_name == "linear_gaussian":
            return LinearGaussianSystem(**p)
        if self.system_name == "quadratic":
            return QuadraticSystem(**p)
        kw = {} if self.indicator_index is None else {"indicator_index": self.indicator_index}
        return SurrogateSystem(A=p.get("A"), B=p.get("B"), **kw)

    def with_overrides(self, seed=None, threads=None, output_dir=None) -> "AnalysisConfig":
        cfg = self
        if seed is not None:
            cfg = replace(cfg, estimator=replace(cfg.estimator, seed=int(seed)))
        if threads is not None:
            cfg = replace(cfg, threads=int(threads))
        if output_dir is not None:
            cfg = replace(cfg, output_dir=str(output_dir))
        return cfg


_NOISE_DIMS = {"hopper": 1, "linear_gaussian": 1, "quadratic": 1, "surrogate": 2}
_STATE_DIMS = {"hopper": 1, "linear_gaussian": 1, "quadratic": 1, "surrogate": 4}


def parse_config(raw: dict) -> AnalysisConfig:
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        raise ConfigError(
            [f"{'/'.join(map(str, e.absolute_path)) or '<root>'}: {e.message}" for e in errors]
        )

    problems = []
    name = raw["system"]["name"]
    g = raw["grid"]
    if not g["lo"] < g["hi"]:
        problems.append("grid: lo must be below hi")
    m = _NOISE_DIMS[name]
    noise_raw = raw["noise"]
    noise = None
    try:
        if "variance" in noise_raw:
            noise = NoiseSpec.isotropic(noise_raw["variance"], m)
        else:
            cov = np.array(noise_raw["covariance"], dtype=float)
            if cov.shape != (m, m):
                problems.append(f"noise: covariance must be {m}x{m} for {name}")
            else:
                noise = NoiseSpec(cov)
    except (PSDError, ValueError) as exc:
        problems.append(f"noise: {exc}")

    sweep = tuple(raw.get("sweep", {}).get("sigmas", ()))
    if any(b < a for a, b in zip(sweep, sweep[1:])):
        problems.append("sweep: sigmas must be ascending")
    base = raw["system"].get("base_state")
    if base is not None and len(base) != _STATE_DIMS[name]:
        problems.append(f"system: base_state must have {_STATE_DIMS[name]} entries")
    idx = raw["system"].get("indicator_index")
    if idx is not None and idx >= _STATE_DIMS[name]:
        problems.append(f"system: indicator_index out of range for {name}")
    if name == "linear_gaussian":
        p = raw["system"].get("params", {})
        if not p.get("lo", -1.0) < p.get("hi", 1.0):
            problems.append("system: linear_gaussian needs lo < hi")
    if name == "hopper":
        r0 = raw["system"].get("params", {}).get("rest_length", HopperParams.rest_length)
        if g["lo"] <= r0:
            problems.append(f"grid: hopper apex heights must exceed the rest length {r0}")
    if problems:
        raise ConfigError(problems)

    est = raw.get("estimator", {})
    settings = EstimatorSettings(
        method=est.get("method", "ut"),
        w0=est.get("w0", EstimatorSettings.w0),
        epsilon=est.get("epsilon"),
        n_samples=est.get("n_samples", EstimatorSettings.n_samples),
        jacobian_step=est.get("jacobian_step"),
        seed=raw.get("seed", 0),
    )
    try:
        cfg = AnalysisConfig(
            system_name=name,
            system_params=dict(raw["system"].get("params", {})),
            grid=GridSpec(g["lo"], g["hi"], g["n_cells"]),
            noise=noise,
            estimator=settings,
            indicator_index=idx,
            base_state=tuple(base) if base is not None else None,
            threads=raw.get("threads", 1),
            output_dir=raw.get("output_dir", "out"),
            sweep=sweep,
            reduction=dict(raw.get("reduction", {})),
            simulate=dict(raw.get("simulate", {})),
            raw=raw,
        )
        cfg.build_system()
    except (TypeError, ValueError) as exc:
        raise ConfigError([f"system: {exc}"]) from exc
    return cfg


def load_config(path) -> AnalysisConfig:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError([f"cannot read {path}: {exc}"]) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path} is not valid JSON: {exc}"]) from exc
    return parse_config(raw)
