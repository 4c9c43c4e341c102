"""Flat key=value pipeline configuration with command-line overrides.

A config file is diff-friendly text: one `key = value` per line, lists
comma-separated, `#` comments and blank lines ignored. Every key can be
overridden by a command-line flag, and the command line wins. Defaults
mirror the reference experiment setup: patch shape (32, 512, 512), three
random initial picks, budgets 0, 8, 16, 32, 64, 128, 256, 512, 1024.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ConfigError

DEFAULT_BUDGETS = (0, 8, 16, 32, 64, 128, 256, 512, 1024)


@dataclass
class PipelineConfig:
    """Every knob consumed by the CLI commands.

    Path fields stay None until supplied by file or flag; each command
    checks that the paths it consumes are set and exist before writing
    anything.
    """

    patch_shape: tuple[int, int, int] = (32, 512, 512)
    pad_mode: str = "reflect"
    connectivity: str = "full26"
    iou_threshold: float = 0.5
    k_init: int = 3
    budgets: tuple[int, ...] = DEFAULT_BUDGETS
    rng_seed: int = 0
    method: str = "coreset"
    surpass_fraction: float = 0.9
    budget: int | None = None
    volume: str | None = None
    volume_name: str | None = None
    slices_dir: str | None = None
    mask: str | None = None
    embeddings: str | None = None
    pred: str | None = None
    gt: str | None = None
    metrics_dir: str | None = None
    out: str | None = None
    out_dir: str | None = None


def parse_shape(text: str) -> tuple[int, int, int]:
    """Parse "Z,Y,X" into a positive integer triple."""
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 3 or not all(p.isdigit() for p in parts):
        raise ConfigError(f"expected Z,Y,X positive integers, got {text!r}")
    shape = tuple(int(p) for p in parts)
    if any(c < 1 for c in shape):
        raise ConfigError(f"shape components must be positive, got {text!r}")
    return shape


def parse_budgets(text: str) -> tuple[int, ...]:
    """Parse a comma-separated budget list of non-negative integers."""
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts or not all(p.isdigit() for p in parts):
        raise ConfigError(f"expected comma-separated budgets, got {text!r}")
    budgets = tuple(int(p) for p in parts)
    if len(set(budgets)) != len(budgets):
        raise ConfigError(f"duplicate budgets in {text!r}")
    return budgets


def parse_connectivity(text: str) -> str:
    mapping = {"6": "face6", "26": "full26", "face6": "face6", "full26": "full26"}
    if text not in mapping:
        raise ConfigError(f"connectivity must be 6 or 26, got {text!r}")
    return mapping[text]


def _parse_int(text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"expected an integer, got {text!r}") from None


def _parse_float(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"expected a number, got {text!r}") from None


def _parse_pad_mode(text: str) -> str:
    if text not in ("zero", "reflect"):
        raise ConfigError(f"pad_mode must be zero or reflect, got {text!r}")
    return text


def _parse_method(text: str) -> str:
    if text not in ("coreset", "random"):
        raise ConfigError(f"method must be coreset or random, got {text!r}")
    return text


_PARSERS = {
    "patch_shape": parse_shape,
    "pad_mode": _parse_pad_mode,
    "connectivity": parse_connectivity,
    "iou_threshold": _parse_float,
    "k_init": _parse_int,
    "budgets": parse_budgets,
    "rng_seed": _parse_int,
    "method": _parse_method,
    "surpass_fraction": _parse_float,
    "budget": _parse_int,
    "volume": str,
    "volume_name": str,
    "slices_dir": str,
    "mask": str,
    "embeddings": str,
    "pred": str,
    "gt": str,
    "metrics_dir": str,
    "out": str,
    "out_dir": str,
}


def load_config(path: str | Path) -> PipelineConfig:
    """Parse a config file into a PipelineConfig over the defaults.

    Raises:
        FileNotFoundError: If the file does not exist.
        ConfigError: On an unknown key or unparsable value.
    """
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"config file not found: {p}")
    cfg = PipelineConfig()
    for lineno, raw in enumerate(p.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not sep or not key:
            raise ConfigError(f"{p}:{lineno}: expected key = value, got {raw!r}")
        if key not in _PARSERS:
            raise ConfigError(f"{p}:{lineno}: unknown config key {key!r}")
        setattr(cfg, key, _PARSERS[key](value))
    return cfg


def apply_overrides(cfg: PipelineConfig, overrides: dict[str, object]) -> PipelineConfig:
    """Apply already-parsed command-line values over a config; flags win."""
    for key, value in overrides.items():
        if key not in _PARSERS:
            raise ConfigError(f"unknown override key {key!r}")
        if value is not None:
            setattr(cfg, key, value)
    return cfg


def resolved_lines(cfg: PipelineConfig) -> str:
    """Render the fully resolved config as canonical sorted key=value text.

    The rendering is the hashing surface for run manifests: two runs with
    the same effective configuration produce the same text regardless of
    how values were supplied.
    """
    lines = []
    for f in sorted(fields(cfg), key=lambda f: f.name):
        value = getattr(cfg, f.name)
        if value is None:
            rendered = ""
        elif isinstance(value, tuple):
            rendered = ",".join(str(v) for v in value)
        elif isinstance(value, float):
            rendered = repr(value)
        else:
            rendered = str(value)
        lines.append(f"{f.name}={rendered}")
    return "\n".join(lines) + "\n"
