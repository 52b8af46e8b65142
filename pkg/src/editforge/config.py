"""Run configuration: defaults, JSON config file, env var, flag overrides.

Precedence, lowest to highest: built-in defaults, --config file,
EDITFORGE_SEED (seed only), command-line flags.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .captions import CaptionConfig
from .errors import ConfigError
from .filtering import FilterConfig

SEED_ENV_VAR = "EDITFORGE_SEED"


@dataclass(frozen=True)
class RunConfig:
    seed: int = 1984
    stride_s: float = 0.1
    split1_s: float = 3.0
    split2_s: float = 7.0
    stage1_fraction: float = 0.30
    stage2_quality_min: float = 3.4
    stage3_top_k: int = 30000
    per_task: bool = True
    scorer: str = "stub"
    endpoint: str | None = None
    scores_path: str | None = None
    bearer_token: str | None = None
    workers: int = 1

    def caption_config(self) -> CaptionConfig:
        try:
            return CaptionConfig(self.split1_s, self.split2_s, self.seed)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def filter_config(self) -> FilterConfig:
        try:
            return FilterConfig(
                self.stage1_fraction, self.stage2_quality_min,
                self.stage3_top_k, self.per_task,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


_FIELD_NAMES = {f.name for f in fields(RunConfig)}


def load_run_config(path: str | None) -> RunConfig:
    """RunConfig from a JSON file; unknown keys are configuration errors."""
    cfg = RunConfig()
    if path is None:
        return _apply_env(cfg)
    try:
        raw = json.loads(Path(path).read_text("utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    unknown = sorted(set(raw) - _FIELD_NAMES)
    if unknown:
        raise ConfigError(f"config {path} has unknown keys: {unknown}")
    try:
        cfg = replace(cfg, **raw)
    except TypeError as exc:
        raise ConfigError(f"config {path}: {exc}") from exc
    return _apply_env(cfg)


def _apply_env(cfg: RunConfig) -> RunConfig:
    env_seed = os.environ.get(SEED_ENV_VAR)
    if env_seed is None:
        return cfg
    try:
        return replace(cfg, seed=int(env_seed))
    except ValueError as exc:
        raise ConfigError(f"{SEED_ENV_VAR}={env_seed!r} is not an integer") from exc


def apply_flag_overrides(cfg: RunConfig, args) -> RunConfig:
    """Overlay parsed argparse flags; only flags the user set (non-None) win."""
    mapping = {
        "seed": "seed",
        "stride": "stride_s",
        "split1": "split1_s",
        "split2": "split2_s",
        "stage1_fraction": "stage1_fraction",
        "quality_min": "stage2_quality_min",
        "top_k": "stage3_top_k",
        "scorer": "scorer",
        "endpoint": "endpoint",
        "scores": "scores_path",
        "workers": "workers",
    }
    overrides = {}
    for flag, field_name in mapping.items():
        value = getattr(args, flag, None)
        if value is not None:
            overrides[field_name] = value
    return replace(cfg, **overrides) if overrides else cfg
