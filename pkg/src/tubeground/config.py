"""Pipeline configuration: defaults, JSON loading and a stable content hash."""
from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from .core import ConfigurationError
from .curriculum import Direction
from .grounding import InferenceMode, InferenceParams, ScorerKind
from .tracking import TrackerParams

WORKERS_ENV = "TUBEGROUND_WORKERS"

DENOISE_STRATEGIES = ("none", "switch_dropping", "switch_addition")


@dataclass(frozen=True)
class SLFParams:
    enabled: bool = True
    variability_min: float = 0.3
    lexicon_path: Optional[str] = None
    at_inference: bool = False

    def __post_init__(self):
        if not 0.0 <= self.variability_min <= 1.0:
            raise ConfigurationError(f"variability_min must be in [0, 1], got {self.variability_min}")


@dataclass(frozen=True)
class DenoiseParams:
    strategy: str = "switch_dropping"
    min_duration_s: float = 1.0

    def __post_init__(self):
        if self.strategy not in DENOISE_STRATEGIES:
            raise ConfigurationError(f"denoise strategy must be one of {DENOISE_STRATEGIES}")
        if not self.min_duration_s > 0:
            raise ConfigurationError("min_duration_s must be > 0")


@dataclass(frozen=True)
class CurriculumParams:
    cgs_stages: int = 5
    cgs_delta: float = 0.2
    cgs_direction: Direction = Direction.HIGH_TO_LOW
    cgs_cumulative: bool = True
    satcl_stages: int = 4
    satcl_cumulative: bool = True
    congestion_after_slf: bool = True

    def __post_init__(self):
        object.__setattr__(self, "cgs_direction", Direction(self.cgs_direction))
        if self.cgs_stages < 1 or not self.cgs_delta > 0 or self.cgs_stages * self.cgs_delta > 1 + 1e-9:
            raise ConfigurationError("need cgs_stages >= 1, cgs_delta > 0, cgs_stages*cgs_delta <= 1")
        if self.satcl_stages < 1:
            raise ConfigurationError("satcl_stages must be >= 1")


@dataclass(frozen=True)
class PipelineConfig:
    detection_stride: int = 5
    video_fps: float = 25.0
    confidence_floor: float = 0.4
    tracker: TrackerParams = field(default_factory=TrackerParams)
    denoise: DenoiseParams = field(default_factory=DenoiseParams)
    slf: SLFParams = field(default_factory=SLFParams)
    curriculum: CurriculumParams = field(default_factory=CurriculumParams)
    inference: InferenceParams = field(default_factory=InferenceParams)
    scorer: ScorerKind = ScorerKind.MEAN_CONFIDENCE
    # not part of the hash: output never depends on it
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "scorer", ScorerKind(self.scorer))
        if self.detection_stride < 1:
            raise ConfigurationError("detection_stride must be >= 1")
        if not self.video_fps > 0:
            raise ConfigurationError("video_fps must be > 0")
        if not 0.0 <= self.confidence_floor <= 1.0:
            raise ConfigurationError("confidence_floor must be in [0, 1]")
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")

    @property
    def default_fps_sampled(self) -> float:
        """Sampled-frame rate used for videos without a metadata record."""
        return self.video_fps / self.detection_stride

    def to_dict(self) -> dict:
        return _plain(dataclasses.asdict(self))

    def effective_dict(self) -> dict:
        d = self.to_dict()
        d.pop("workers")
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.effective_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    @classmethod
    def from_dict(cls, d: dict) -> PipelineConfig:
        nested = {
            "tracker": TrackerParams,
            "denoise": DenoiseParams,
            "slf": SLFParams,
            "curriculum": CurriculumParams,
            "inference": InferenceParams,
        }
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        kwargs: dict[str, Any] = {}
        for key, value in d.items():
            if key in nested:
                sub = nested[key]
                sub_known = {f.name for f in dataclasses.fields(sub)}
                if not isinstance(value, dict) or set(value) - sub_known:
                    raise ConfigurationError(f"bad {key!r} section: {value!r}")
                try:
                    kwargs[key] = sub(**value)
                except (TypeError, ValueError) as exc:
                    raise ConfigurationError(f"{key}: {exc}") from None
            else:
                kwargs[key] = value
        try:
            return cls(**kwargs)
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(str(exc)) from None

    @classmethod
    def from_json(cls, path: str | Path) -> PipelineConfig:
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigurationError(f"{path}: config must be a JSON object")
        return cls.from_dict(data)

    def with_workers_from_env(self) -> PipelineConfig:
        raw = os.environ.get(WORKERS_ENV)
        if raw is None:
            return self
        try:
            n = int(raw)
        except ValueError:
            raise ConfigurationError(f"{WORKERS_ENV}={raw!r} is not an integer") from None
        return dataclasses.replace(self, workers=n)


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (ScorerKind, InferenceMode, Direction)):
        return obj.value
    return obj
