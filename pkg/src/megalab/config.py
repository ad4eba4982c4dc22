"""Run configuration and the flat ``key = value`` config-file format."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

from .density import FIT_SAMPLE_CAP, Kernel
from .replay import parse_ratios
from .select import STRATEGIES


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    env: str = "spiral10"
    strategy: str = "mega"
    seed: int = 0
    total_steps: int = 200_000
    horizon: int = 0  # 0 = the layout's default horizon
    episodes_per_eval: int = 50
    eval_episodes: int = 50
    batch_size: int = 256
    learning_rate: float = 0.5
    gamma: float = 0.98
    q_init: float = -50.0
    epsilon: float = 0.1
    go_bonus: float = 0.1
    rfaab: str = "1_4_3_1_1"
    warmup_random_steps: int = 1000
    warmup_relabel_steps: int = 5000
    bandwidth: float = 0.1
    kernel: str = "gaussian"
    fit_sample_cap: int = FIT_SAMPLE_CAP
    num_candidates: int = 100
    b: float = -3.0
    kl_samples: int = 100
    use_cutoff: bool = True

    def validate(self) -> RunConfig:
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"strategy must be one of {', '.join(STRATEGIES)}; got {self.strategy!r}")
        if self.strategy == "eg-oracle":
            raise ConfigError("eg-oracle needs a known conditional and only runs in the toy experiment")
        positive = (
            "total_steps", "episodes_per_eval", "eval_episodes", "batch_size",
            "fit_sample_cap", "num_candidates", "kl_samples", "bandwidth",
        )
        for name in positive:
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        for name in ("horizon", "warmup_random_steps", "warmup_relabel_steps"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be nonnegative")
        if not 0.0 < self.gamma < 1.0:
            raise ConfigError("gamma must lie in (0, 1)")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ConfigError("learning_rate must lie in (0, 1]")
        if not -1.0 / (1.0 - self.gamma) - 1e-9 <= self.q_init <= 0.0:
            raise ConfigError("q_init must lie inside the Bellman clip range")
        for name in ("epsilon", "go_bonus"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1]")
        if self.b > 1.0:
            raise ConfigError("b must be at most 1")
        try:
            parse_ratios(self.rfaab)
            Kernel(self.kernel)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return self

    def replace(self, **changes) -> RunConfig:
        return dataclasses.replace(self, **changes)


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def coerce(value: str, like):
    """Convert a config-file string to the type of ``like``."""
    if isinstance(like, bool):
        low = value.strip().lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        raise ConfigError(f"not a boolean: {value!r}")
    if isinstance(like, int):
        return int(value.replace("_", ""))
    if isinstance(like, float):
        return float(value)
    return value.strip()


def read_kv_file(path) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment, blank lines are skipped."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


_ALIASES = {"steps": "total_steps", "lr": "learning_rate"}


def apply_overrides(config: RunConfig, overrides: dict) -> RunConfig:
    fields = {f.name: f for f in dataclasses.fields(RunConfig)}
    changes = {}
    for key, value in overrides.items():
        name = _ALIASES.get(key, key)
        if name not in fields:
            raise ConfigError(f"unknown config key {key!r}")
        default = getattr(config, name)
        try:
            changes[name] = coerce(value, default) if isinstance(value, str) else value
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {value!r}") from exc
    return config.replace(**changes)


def load_config(path=None, **overrides) -> RunConfig:
    """Defaults, then the config file, then explicit overrides (e.g. CLI flags)."""
    merged = read_kv_file(path) if path is not None else {}
    merged.update({k: v for k, v in overrides.items() if v is not None})
    config = apply_overrides(RunConfig(), merged)
    if not {_ALIASES.get(k, k) for k in merged} & {"total_steps"}:
        config = config.replace(total_steps=default_steps(config.env))
    return config.validate()


def default_steps(env: str) -> int:
    return {"spiral10": 200_000, "ucorridor": 600_000}.get(env, 200_000)
