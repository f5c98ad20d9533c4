# hybrid/runtime/config.py
import os
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional

from ..errors import ConfigError

DEFAULT_PARTICLES = 1000
DEFAULT_RESAMPLE_THRESHOLD = 0.5
DEFAULT_LOG_LEVEL = "WARNING"


class Engine(str, Enum):
    SSI = "ssi"
    DS = "ds"
    EXACT = "exact"  # enumeration oracle: no symbolic-branch fallback, scripted choices


def _env_int(name: str, default: Optional[int]) -> Optional[int]:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{name}={raw!r} is not an integer") from None


def _env_float(name: str, default: float) -> float:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{name}={raw!r} is not a number") from None


def get_config() -> dict:
    """Resolved defaults from the environment (.env is loaded on package import)."""
    return {
        "seed": _env_int("HYBRID_INFER_SEED", 0),
        "particles": _env_int("HYBRID_INFER_PARTICLES", DEFAULT_PARTICLES),
        "resample_threshold": _env_float("HYBRID_INFER_RESAMPLE_THRESHOLD", DEFAULT_RESAMPLE_THRESHOLD),
        "log_level": os.getenv("HYBRID_INFER_LOG_LEVEL", DEFAULT_LOG_LEVEL).upper(),
    }


@dataclass(frozen=True)
class RunConfig:
    particles: int = DEFAULT_PARTICLES
    seed: int = 0
    resample_threshold: float = DEFAULT_RESAMPLE_THRESHOLD
    engine: Engine = Engine.SSI
    n_override: Optional[int] = None
    consts: Dict[str, int] = field(default_factory=dict)
    workers: int = 1

    def __post_init__(self):
        if not isinstance(self.particles, int) or self.particles < 1:
            raise ConfigError(f"particles must be a positive integer, got {self.particles!r}")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError(f"seed must fit in 64 unsigned bits, got {self.seed}")
        if not 0.0 <= self.resample_threshold <= 1.0:
            raise ConfigError(f"resample threshold must be in [0, 1], got {self.resample_threshold}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        object.__setattr__(self, "engine", Engine(self.engine))

    @classmethod
    def from_env(cls, **overrides) -> "RunConfig":
        """Environment defaults, with explicit (non-None) keyword overrides on top."""
        env = get_config()
        values = {k: env[k] for k in ("seed", "particles", "resample_threshold")}
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def const_overrides(self) -> Dict[str, int]:
        merged = dict(self.consts)
        if self.n_override is not None:
            merged["N"] = self.n_override
        return merged
