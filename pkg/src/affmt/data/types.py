"""Domain types for per-frame affect annotations.

Every frame may carry up to three label families: a continuous
valence/arousal pair, a binary occurrence vector over 8 action units,
and one of seven basic expression categories. Any family may be absent
(encoded as None).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

from affmt.errors import ValidationError

# Action units handled by the pipeline, in fixed order.
AU_IDS: Tuple[int, ...] = (1, 2, 4, 6, 12, 15, 20, 25)
NUM_AUS = len(AU_IDS)


class Expression(Enum):
    """The seven basic expression categories (mutually exclusive)."""

    ANGER = "anger"
    DISGUST = "disgust"
    FEAR = "fear"
    HAPPINESS = "happiness"
    SADNESS = "sadness"
    SURPRISE = "surprise"
    NEUTRAL = "neutral"


EXPRESSIONS: Tuple[Expression, ...] = tuple(Expression)
EXPRESSION_NAMES: Tuple[str, ...] = tuple(e.value for e in Expression)


@dataclass(frozen=True)
class VAPair:
    """Valence/arousal point, both components in [-1, 1]."""

    valence: float
    arousal: float

    def __post_init__(self):
        for name, v in (("valence", self.valence), ("arousal", self.arousal)):
            if not isinstance(v, (int, float)) or not (-1.0 <= v <= 1.0):
                raise ValidationError(f"{name} {v!r} outside [-1, 1]")


@dataclass(frozen=True)
class AUVector:
    """Occurrence bits for the 8 action units, ordered as AU_IDS."""

    bits: Tuple[bool, ...]

    def __post_init__(self):
        if len(self.bits) != NUM_AUS:
            raise ValidationError(f"expected {NUM_AUS} AU bits, got {len(self.bits)}")
        object.__setattr__(self, "bits", tuple(bool(b) for b in self.bits))

    @classmethod
    def from_active(cls, active_ids) -> "AUVector":
        active = set(active_ids)
        unknown = active - set(AU_IDS)
        if unknown:
            raise ValidationError(f"unknown AU ids: {sorted(unknown)}")
        return cls(tuple(au in active for au in AU_IDS))

    @classmethod
    def zeros(cls) -> "AUVector":
        return cls((False,) * NUM_AUS)

    def active_ids(self) -> Tuple[int, ...]:
        return tuple(au for au, b in zip(AU_IDS, self.bits) if b)

    def __getitem__(self, au_id: int) -> bool:
        return self.bits[AU_IDS.index(au_id)]


@dataclass(frozen=True)
class AnnotationRecord:
    """One annotator's labels for one frame. Absent families are None."""

    video_id: str
    frame_index: int
    annotator_id: str
    va: Optional[VAPair] = None
    aus: Optional[AUVector] = None
    expression: Optional[Expression] = None

    def __post_init__(self):
        if self.frame_index < 0:
            raise ValidationError(f"negative frame index {self.frame_index}")
        if not self.video_id or not self.annotator_id:
            raise ValidationError("video_id and annotator_id must be non-empty")


@dataclass(frozen=True)
class ConsolidatedFrame:
    """Post-agreement ground truth for one frame.

    VA is always present (frames without an agreed VA are dropped during
    consolidation); AU and expression families may be absent.
    """

    video_id: str
    frame_index: int
    va: VAPair
    aus: Optional[AUVector] = None
    expression: Optional[Expression] = None

    def __post_init__(self):
        if self.frame_index < 0:
            raise ValidationError(f"negative frame index {self.frame_index}")


@dataclass(frozen=True)
class VideoMeta:
    video_id: str
    subject_id: str
    frame_count: int
    fps: float = 30.0

    def __post_init__(self):
        if self.frame_count <= 0:
            raise ValidationError(f"frame_count must be positive, got {self.frame_count}")
        if self.fps <= 0:
            raise ValidationError(f"fps must be positive, got {self.fps}")

    def to_dict(self) -> dict:
        return {
            "video_id": self.video_id,
            "subject_id": self.subject_id,
            "frame_count": self.frame_count,
            "fps": self.fps,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "VideoMeta":
        return cls(
            video_id=d["video_id"],
            subject_id=d["subject_id"],
            frame_count=int(d["frame_count"]),
            fps=float(d.get("fps", 30.0)),
        )


@dataclass(frozen=True)
class SplitManifest:
    """Train/validation/test partition of video ids."""

    train: frozenset
    validation: frozenset
    test: frozenset

    def __post_init__(self):
        object.__setattr__(self, "train", frozenset(self.train))
        object.__setattr__(self, "validation", frozenset(self.validation))
        object.__setattr__(self, "test", frozenset(self.test))
        pairs = (
            (self.train, self.validation),
            (self.train, self.test),
            (self.validation, self.test),
        )
        if any(a & b for a, b in pairs):
            raise ValidationError("split sets are not pairwise disjoint")

    def subset(self, name: str) -> frozenset:
        key = {"train": "train", "val": "validation", "validation": "validation",
               "test": "test"}.get(name)
        if key is None:
            raise ValidationError(f"unknown split subset {name!r}")
        return getattr(self, key)

    def to_dict(self) -> dict:
        return {
            "train": sorted(self.train),
            "val": sorted(self.validation),
            "test": sorted(self.test),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SplitManifest":
        return cls(
            train=frozenset(d["train"]),
            validation=frozenset(d["val"]),
            test=frozenset(d["test"]),
        )
