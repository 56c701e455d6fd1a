"""Run configuration: every tunable of a run in one JSON document.

A file only needs the keys it changes; everything else comes from the
defaults below.  Unknown keys (at any nesting level) are rejected so a typo
cannot silently fall back to a default.  :meth:`RunConfig.resolved` is the
fully populated form that commands write next to their outputs.
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field, fields

from .env import EpisodeConfig, ObservationScales
from .ppo import PpoConfig
from .reward import RewardWeights
from .vestibular import VestibularCoefficients
from .washout import DEFAULT_BOUNDS, NAMES


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class WashoutConfig:
    w1: float = 1.0
    w2: float = 1.0
    x_max: float = 1.0
    n_starts: int = 64
    maxfev: int = 400
    bounds: dict = field(default_factory=lambda: {k: list(v) for k, v in DEFAULT_BOUNDS.items()})

    def __post_init__(self):
        if set(self.bounds) != set(NAMES):
            raise ConfigError(f"washout.bounds needs exactly the keys {', '.join(NAMES)}")
        for name, (lo, hi) in self.bounds.items():
            if not lo < hi:
                raise ConfigError(f"washout.bounds.{name}: lower bound must be below upper bound")

    def bounds_tuples(self) -> dict:
        return {k: (float(v[0]), float(v[1])) for k, v in self.bounds.items()}


@dataclass(frozen=True)
class EvalConfig:
    trajectory: str | None = None  # CSV path; None means the ISO double lane change
    iso_speed: float = 10.0


_SECTIONS = {
    "reward": RewardWeights,
    "env": EpisodeConfig,
    "ppo": PpoConfig,
    "vestibular": VestibularCoefficients,
    "washout": WashoutConfig,
    "eval": EvalConfig,
}
_TOP = ("seed", "out_dir", *_SECTIONS)
_TUPLE_FIELDS = {"t_start_range", "displacement_range", "peak_range"}


def _defaults(cls) -> dict:
    out = {}
    for f in fields(cls):
        v = getattr(cls(), f.name)
        if isinstance(v, ObservationScales):
            v = {g.name: getattr(v, g.name) for g in fields(v)}
        elif isinstance(v, tuple):
            v = list(v)
        out[f.name] = copy.deepcopy(v)
    return out


def default_dict() -> dict:
    d = {"seed": 0, "out_dir": "runs/default"}
    for name, cls in _SECTIONS.items():
        d[name] = _defaults(cls)
    return d


def _merge(base: dict, override: dict, path: str):
    for key, val in override.items():
        where = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(f"unknown configuration key: {where}")
        if isinstance(base[key], dict) and key != "bounds":
            if not isinstance(val, dict):
                raise ConfigError(f"{where} must be an object")
            _merge(base[key], val, where)
        elif key == "bounds":
            if not isinstance(val, dict):
                raise ConfigError(f"{where} must be an object")
            for name, pair in val.items():
                if name not in base[key]:
                    raise ConfigError(f"unknown configuration key: {where}.{name}")
                base[key][name] = list(pair)
        else:
            base[key] = val


@dataclass(frozen=True)
class RunConfig:
    seed: int
    out_dir: str
    reward: RewardWeights
    env: EpisodeConfig
    ppo: PpoConfig
    vestibular: VestibularCoefficients
    washout: WashoutConfig
    eval: EvalConfig
    raw: dict

    @classmethod
    def from_dict(cls, override: dict | None = None) -> "RunConfig":
        d = default_dict()
        _merge(d, override or {}, "")
        try:
            env = dict(d["env"])
            env["scales"] = ObservationScales(**env["scales"])
            for k in _TUPLE_FIELDS:
                env[k] = tuple(env[k])
            return cls(
                seed=int(d["seed"]), out_dir=str(d["out_dir"]),
                reward=RewardWeights(**d["reward"]), env=EpisodeConfig(**env), ppo=PpoConfig(**d["ppo"]),
                vestibular=VestibularCoefficients(**d["vestibular"]), washout=WashoutConfig(**d["washout"]),
                eval=EvalConfig(**d["eval"]), raw=d,
            )
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid configuration: {exc}") from exc

    @classmethod
    def load(cls, path: str | None = None, **overrides) -> "RunConfig":
        """Read ``path`` (if any) over the defaults, then apply top-level ``overrides``."""
        data = {}
        if path is not None:
            try:
                with open(path) as fh:
                    data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
            if not isinstance(data, dict):
                raise ConfigError(f"{path}: top level must be an object")
        for key, val in overrides.items():
            if val is None:
                continue
            section, _, name = key.partition(".")
            if name:
                data.setdefault(section, {})[name] = val
            else:
                data[key] = val
        return cls.from_dict(data)

    def resolved(self) -> dict:
        return copy.deepcopy(self.raw)

    def write(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.resolved(), fh, indent=2, sort_keys=True)
            fh.write("\n")
