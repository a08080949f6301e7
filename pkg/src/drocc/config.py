"""JSON experiment configuration."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .ambiguity import AmbiguitySpec
from .errors import ConfigError
from .geometry import SupportBox
from .problem import (FiniteCandidates, ProblemInstance, make_portfolio_instance,
                      make_synthetic_1d_instance)

COMMANDS = ("solve", "bounds", "converge", "beta-study", "coverage")
TOP_KEYS = frozenset({"command", "instance", "spec", "omega_sizes", "seeds", "alpha", "M",
                      "M_prime", "output_path", "grid_per_dim"})

# knobs shared by every instance payload
COMMON_KNOBS = {"reference_count": 4096, "reference_seed": 0, "pool_factor": 4,
                "sampling": ["uniform"]}
INSTANCE_KEYS = {
    "synthetic1d": {"theta", "grid_points", "kappa_theta", "C_P"},
    "portfolio": {"return_bounds", "loss_threshold", "theta", "steps", "kappa_theta", "C_P"},
    "box": {"lower", "upper"},
}
SAMPLING_MODES = ("uniform", "quantizer")

# sizes and seeds used when the config omits them
COMMAND_DEFAULTS = {
    "solve": ((32, 128, 512), tuple(range(20))),
    "bounds": ((32, 128, 512), tuple(range(20))),
    "converge": ((32, 128, 512), tuple(range(20))),
    "beta-study": (tuple(2 ** k for k in range(7, 14)), tuple(range(20))),
    "coverage": ((64,), tuple(range(100))),
}


def default_spec(instance_name: str) -> AmbiguitySpec:
    if instance_name == "synthetic1d":
        return AmbiguitySpec.moment_box(mu0=[0.5], gamma_L=0.05, gamma_R=0.05)
    return AmbiguitySpec.simplex()


@dataclass(frozen=True)
class InstanceSettings:
    name: str
    params: dict
    reference_count: int = 4096
    reference_seed: int = 0
    pool_factor: int = 4
    sampling: tuple[str, ...] = ("uniform",)


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    instance: InstanceSettings
    spec: AmbiguitySpec
    omega_sizes: tuple[int, ...] = (32, 128, 512)
    seeds: tuple[int, ...] = tuple(range(20))
    alpha: float = 0.05
    M: int = 10
    M_prime: int = 10
    output_path: str | None = None
    grid_per_dim: int = 401
    _built: dict = field(default_factory=dict, repr=False, compare=False)

    def support(self) -> SupportBox:
        return self.problem().support

    def problem(self) -> ProblemInstance:
        if "problem" not in self._built:
            self._built["problem"] = build_instance(self.instance)
        return self._built["problem"]


def _int_list(value, key: str) -> tuple[int, ...]:
    if not isinstance(value, list) or not all(isinstance(v, int) and not isinstance(v, bool)
                                              for v in value):
        raise ConfigError(f"{key} must be a list of integers")
    return tuple(value)


def _positive_int(value, key: str, minimum: int = 1) -> int:
    if not isinstance(value, int) or isinstance(value, bool) or value < minimum:
        raise ConfigError(f"{key} must be an integer >= {minimum}")
    return value


def parse_instance(payload) -> InstanceSettings:
    if payload is None:
        payload = {"name": "synthetic1d"}
    if not isinstance(payload, dict) or payload.get("name") not in INSTANCE_KEYS:
        raise ConfigError(f"instance.name must be one of {sorted(INSTANCE_KEYS)}")
    name = payload["name"]
    extra = set(payload) - {"name"} - INSTANCE_KEYS[name] - set(COMMON_KNOBS)
    if extra:
        raise ConfigError(f"unknown instance keys for {name}: {sorted(extra)}")
    knobs = {k: payload.get(k, v) for k, v in COMMON_KNOBS.items()}
    sampling = knobs["sampling"]
    if isinstance(sampling, str):
        sampling = [sampling]
    if not sampling or any(s not in SAMPLING_MODES for s in sampling):
        raise ConfigError(f"sampling must be drawn from {SAMPLING_MODES}")
    params = {k: v for k, v in payload.items() if k in INSTANCE_KEYS[name]}
    return InstanceSettings(
        name, params,
        reference_count=_positive_int(knobs["reference_count"], "reference_count", 1024),
        reference_seed=_positive_int(knobs["reference_seed"], "reference_seed", 0),
        pool_factor=_positive_int(knobs["pool_factor"], "pool_factor", 1),
        sampling=tuple(dict.fromkeys(sampling)),
    )


def build_instance(settings: InstanceSettings) -> ProblemInstance:
    p = settings.params
    try:
        if settings.name == "synthetic1d":
            return make_synthetic_1d_instance(**p)
        if settings.name == "portfolio":
            return make_portfolio_instance(**p)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad {settings.name} parameters: {exc}") from exc
    # a bare box carries no decision problem; only the support is meaningful
    try:
        support = SupportBox(p.get("lower", [0.0, 0.0]), p.get("upper", [1.0, 1.0]))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad box parameters: {exc}") from exc
    zero = lambda x, pts: np.zeros(pts.shape[0])  # noqa: E731
    return ProblemInstance(zero, zero, FiniteCandidates(support.center.reshape(1, -1)), 1.0,
                           support, name="box")


def parse_config(obj) -> ExperimentConfig:
    if not isinstance(obj, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(obj) - TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    command = obj.get("command")
    if command not in COMMANDS:
        raise ConfigError(f"command must be one of {COMMANDS}")
    instance = parse_instance(obj.get("instance"))
    try:
        spec = AmbiguitySpec.from_json(obj["spec"]) if "spec" in obj else default_spec(instance.name)
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(f"bad spec: {exc}") from exc

    sizes, seeds = COMMAND_DEFAULTS[command]
    kw = {"omega_sizes": sizes, "seeds": seeds}
    if "omega_sizes" in obj:
        sizes = _int_list(obj["omega_sizes"], "omega_sizes")
        if not sizes or any(s < 1 for s in sizes) or any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise ConfigError("omega_sizes must be positive and strictly increasing")
        kw["omega_sizes"] = sizes
    if "seeds" in obj:
        seeds = _int_list(obj["seeds"], "seeds")
        if not seeds:
            raise ConfigError("seeds must be nonempty")
        if len(set(seeds)) != len(seeds) or any(s < 0 for s in seeds):
            raise ConfigError("seeds must be distinct nonnegative integers")
        kw["seeds"] = seeds
    if "alpha" in obj:
        alpha = obj["alpha"]
        if not isinstance(alpha, (int, float)) or isinstance(alpha, bool) \
                or not math.isfinite(alpha) or not 0.0 < alpha < 1.0:
            raise ConfigError("alpha must lie in (0, 1)")
        kw["alpha"] = float(alpha)
    for key in ("M", "M_prime"):
        if key in obj:
            kw[key] = _positive_int(obj[key], key, 2)
    if "grid_per_dim" in obj:
        kw["grid_per_dim"] = _positive_int(obj["grid_per_dim"], "grid_per_dim", 2)
    if "output_path" in obj:
        if obj["output_path"] is not None and not isinstance(obj["output_path"], str):
            raise ConfigError("output_path must be a string")
        kw["output_path"] = obj["output_path"]
    cfg = ExperimentConfig(command, instance, spec, **kw)
    if command != "beta-study" and instance.name == "box":
        raise ConfigError("the 'box' instance only supports beta-study")
    if command == "coverage" and len(cfg.omega_sizes) != 1:
        raise ConfigError("coverage runs take exactly one omega size")
    return cfg


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return parse_config(obj)
