"""Run and training configuration.

All pipeline knobs live in :class:`RunConfig` so every ablation (alignment
on/off, pyramid level, lowpass vs bandpass temporal filter, RoI vs full-image
features) can be driven from a config file or command-line flags without code
changes.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

from .errors import DataError

FILTER_KINDS = ("lowpass", "bandpass")
ZSCORE_SCOPES = ("video", "frame")
EDGE_POLICIES = ("truncate", "strict")


@dataclass
class RunConfig:
    """Spotting pipeline configuration.

    ``accum_frames`` is the motion accumulation span in frames, normally half
    the mean micro-expression length of the target data (6 at 30 fps, 47 at
    200 fps).  ``peak_frac`` controls the adaptive peak threshold
    ``H = mean + peak_frac * (max - mean)``.
    """

    pyramid_level: int = 3
    accum_frames: int = 6
    cutoff_hz: float = 10.0
    bandpass_low_hz: float = 2.0
    peak_frac: float = 0.7
    min_peak_distance: int | None = None  # defaults to accum_frames
    use_alignment: bool = True
    use_roi: bool = True
    filter_kind: str = "lowpass"
    zscore_scope: str = "video"
    edge_policy: str = "truncate"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.pyramid_level < 1:
            raise DataError("pyramid_level must be >= 1")
        if self.accum_frames < 1:
            raise DataError("accum_frames must be >= 1")
        if self.cutoff_hz <= 0:
            raise DataError("cutoff_hz must be positive")
        if not 0.0 <= self.peak_frac <= 1.0:
            raise DataError("peak_frac must lie in [0, 1]")
        if self.min_peak_distance is not None and self.min_peak_distance < 1:
            raise DataError("min_peak_distance must be >= 1")
        if self.filter_kind not in FILTER_KINDS:
            raise DataError(f"filter_kind must be one of {FILTER_KINDS}")
        if self.zscore_scope not in ZSCORE_SCOPES:
            raise DataError(f"zscore_scope must be one of {ZSCORE_SCOPES}")
        if self.edge_policy not in EDGE_POLICIES:
            raise DataError(f"edge_policy must be one of {EDGE_POLICIES}")

    @property
    def peak_distance(self) -> int:
        return self.accum_frames if self.min_peak_distance is None else self.min_peak_distance


@dataclass
class TrainConfig:
    """SGD training configuration for the spotting network."""

    learning_rate: float = 1e-3
    epochs: int = 20
    batch_size: int = 256
    momentum: float = 0.9
    positive_oversample_ratio: float = 0.25  # target positives : negatives = 1 : 4
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("learning_rate", "epochs", "batch_size", "positive_oversample_ratio"):
            if getattr(self, name) <= 0:
                raise DataError(f"{name} must be positive")
        if self.momentum < 0:
            raise DataError("momentum must be >= 0")


_BOOL_WORDS = {"true": True, "1": True, "yes": True, "false": False, "0": False, "no": False}


def _coerce(raw: str, target_type):
    raw = raw.strip()
    if target_type is bool:
        try:
            return _BOOL_WORDS[raw.lower()]
        except KeyError:
            raise DataError(f"expected a boolean, got {raw!r}") from None
    if target_type is int:
        return int(raw)
    if target_type is float:
        return float(raw)
    return raw


def parse_config_file(path: str | Path) -> dict[str, str]:
    """Parse a flat ``key=value`` config file; '#' starts a comment."""
    out: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DataError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _apply(cfg, values: dict[str, str], used: set[str]):
    kwargs = {}
    by_name = {f.name: f for f in fields(cfg)}
    for key, raw in values.items():
        f = by_name.get(key)
        if f is None:
            continue
        used.add(key)
        target = f.type
        if key == "min_peak_distance":
            kwargs[key] = None if raw.lower() in ("none", "") else int(raw)
            continue
        base = {"int": int, "float": float, "bool": bool, "str": str}.get(
            target if isinstance(target, str) else getattr(target, "__name__", "str"), str
        )
        try:
            kwargs[key] = _coerce(raw, base)
        except ValueError as exc:
            raise DataError(f"config key {key}: {exc}") from exc
    return replace(cfg, **kwargs)


def load_configs(path: str | Path | None, overrides: dict[str, str] | None = None
                 ) -> tuple[RunConfig, TrainConfig]:
    """Build (RunConfig, TrainConfig) from an optional file plus overrides.

    Unknown keys raise :class:`DataError` so typos do not silently run with
    defaults.  Training keys share the namespace; ``seed`` applies to both.
    """
    values: dict[str, str] = {}
    if path is not None:
        values.update(parse_config_file(path))
    if overrides:
        values.update({k: v for k, v in overrides.items() if v is not None})
    used: set[str] = set()
    run = _apply(RunConfig(), values, used)
    train = _apply(TrainConfig(), values, used)
    unknown = set(values) - used
    if unknown:
        raise DataError(f"unknown config keys: {sorted(unknown)}")
    return run, train
