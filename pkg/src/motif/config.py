"""Shared tunable constants and the flat ``key=value`` config file format."""

from __future__ import annotations

import os
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .errors import ConfigError

RGB = tuple[int, int, int]

DEFAULT_PALETTE: tuple[RGB, ...] = (
    (255, 0, 0),
    (255, 128, 0),
    (255, 255, 0),
    (128, 255, 0),
    (0, 255, 0),
    (0, 255, 128),
    (0, 255, 255),
    (0, 128, 255),
    (0, 0, 255),
    (128, 0, 255),
    (255, 0, 255),
    (255, 0, 128),
)

DIRECTIONS_8 = ("up", "down", "left", "right", "up-left", "up-right", "down-left", "down-right")


@dataclass(frozen=True)
class Config:
    # analyzer
    theta: float = 0.7
    n_analysis: int = 256
    smooth_window: int = 5
    turn_threshold_deg: float = 60.0
    turn_sustain: int = 3
    min_segment_frac: float = 0.05
    eps_amp: float = 0.02
    eps_slope: float = 0.01
    ground_margin: float = 0.02
    surplus_penalty: float = 0.8
    mismatch_decay: float = 0.5
    straight_low: float = 0.9
    straight_high: float = 0.98
    roundness_gain: float = 2.0
    curve_full_bulge: float = 0.1
    short_frac: float = 0.35
    forward: str = "up"
    # renderer
    line_width: int = 4
    endpoint_radius: int = 6
    start_color: RGB = (255, 255, 255)
    end_color: RGB = (0, 255, 0)
    endpoint_color: RGB = (255, 0, 0)
    overlay_samples: int = 64
    kmeans_max_iter: int = 100
    kmeans_tol: float = 1e-6
    # control loop / dataset
    theta_loop: float = 0.9
    n_neg: int = 10
    min_efficiency: float = 0.3

    def validate(self) -> "Config":
        problems = []
        for name in ("theta", "theta_loop", "eps_amp", "eps_slope", "ground_margin",
                     "surplus_penalty", "mismatch_decay", "min_segment_frac", "short_frac", "min_efficiency"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                problems.append(f"{name} must lie in [0, 1], got {value}")
        if not 0.0 < self.straight_low < self.straight_high <= 1.0:
            problems.append("need 0 < straight_low < straight_high <= 1")
        if self.n_analysis < 16:
            problems.append("n_analysis must be >= 16")
        if self.smooth_window < 1 or self.turn_sustain < 1:
            problems.append("smooth_window and turn_sustain must be >= 1")
        if not 0.0 < self.turn_threshold_deg < 180.0:
            problems.append("turn_threshold_deg must lie in (0, 180)")
        if self.line_width < 1 or self.endpoint_radius < 0:
            problems.append("line_width must be >= 1 and endpoint_radius >= 0")
        if self.overlay_samples != 0 and self.overlay_samples < 2:
            problems.append("overlay_samples must be 0 (raw samples) or >= 2")
        if self.n_neg < 1:
            problems.append("n_neg must be >= 1")
        if self.forward not in DIRECTIONS_8:
            problems.append(f"forward must be one of {DIRECTIONS_8}")
        for name in ("start_color", "end_color", "endpoint_color"):
            color = getattr(self, name)
            if len(color) != 3 or any(not 0 <= c <= 255 for c in color):
                problems.append(f"{name} must be three integers in [0, 255]")
        if problems:
            raise ConfigError("; ".join(problems))
        return self


DEFAULT = Config()


def _coerce(name: str, raw: str, current):
    raw = raw.strip()
    try:
        if isinstance(current, tuple):
            parts = tuple(int(p) for p in raw.split(","))
            if len(parts) != 3:
                raise ValueError
            return parts
        if isinstance(current, bool):
            return raw.lower() in ("1", "true", "yes")
        if isinstance(current, int):
            return int(raw)
        if isinstance(current, float):
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"bad value for {name}: {raw!r}") from None


def parse_config_text(text: str, base: Config = DEFAULT) -> Config:
    known = {f.name for f in fields(Config)}
    updates = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in known:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        updates[key] = _coerce(key, value, getattr(base, key))
    return replace(base, **updates).validate()


def load_config(path: str | os.PathLike | None = None) -> Config:
    """Load overrides from ``path``, falling back to ``$MOTIF_CONFIG``."""
    if path is None:
        path = os.environ.get("MOTIF_CONFIG")
    if not path:
        return DEFAULT
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config_text(text)
