"""Synthetic desk-scale corpus: procedurally rendered schematic faces.

Each frame is drawn from four pose parameters (brow raise/lower, mouth
curvature, mouth opening, lip stretch). The same parameters drive both
the rendered geometry and the labels, so every label is an exact,
learnable function of what is visible:

* brow raised -> AU1 (and AU2 when strong), brow lowered -> AU4
* mouth corners up -> AU12 (AU6 when strong) and positive valence,
  corners down -> AU15 and negative valence
* mouth open -> AU25 and higher arousal
* lips stretched -> AU20

The corpus is written in the same on-disk layout as real data (per-video
PNG frame directories, JSON-lines annotations per annotator, VideoMeta
index), so downstream modules cannot tell real and synthetic data apart.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence

import numpy as np

from affmt.data.io import serialize_annotations
from affmt.data.types import (
    AnnotationRecord,
    AUVector,
    Expression,
    VAPair,
    VideoMeta,
)
from affmt.errors import ValidationError
from affmt.preprocessing.image import assert_image_range, encode_png

DEFAULT_ANNOTATORS = ("expert1", "expert2", "expert3")


@dataclass(frozen=True)
class FaceParams:
    """Pose parameters for one frame; all are label-determining."""

    brow: float = 0.0     # [-1, 1]: positive raises, negative lowers
    smile: float = 0.0    # [-1, 1]: positive pulls corners up
    open: float = 0.0     # [0, 1]: mouth opening
    stretch: float = 0.0  # [0, 1]: horizontal lip stretch


@dataclass(frozen=True)
class Identity:
    """Per-subject appearance, constant over all of a subject's videos."""

    scale: float
    aspect: float
    skin: float
    eye_dx: float
    eye_y: float
    mouth_y: float
    mouth_w: float
    tint: tuple


def labels_from_params(p: FaceParams) -> tuple:
    """Exact label mapping (VAPair, AUVector, Expression)."""
    aus = AUVector.from_active(
        [au for au, active in (
            (1, p.brow > 0.35),
            (2, p.brow > 0.55),
            (4, p.brow < -0.35),
            (6, p.smile > 0.6),
            (12, p.smile > 0.35),
            (15, p.smile < -0.35),
            (20, p.stretch > 0.5),
            (25, p.open > 0.3),
        ) if active]
    )

    valence = float(np.clip(0.85 * p.smile, -1.0, 1.0))
    arousal = float(
        np.clip(0.55 * p.open + 0.3 * abs(p.brow) + 0.15 * p.stretch, -1.0, 1.0)
    )

    if p.smile > 0.5:
        expr = Expression.HAPPINESS
    elif p.smile < -0.5:
        expr = Expression.SADNESS
    elif p.brow > 0.5 and p.open > 0.4:
        expr = Expression.SURPRISE
    elif p.brow > 0.5 and p.stretch > 0.5:
        expr = Expression.FEAR
    elif p.brow < -0.5 and p.open < 0.2:
        expr = Expression.ANGER
    elif p.brow < -0.5:
        expr = Expression.DISGUST
    else:
        expr = Expression.NEUTRAL
    return VAPair(valence, arousal), aus, expr


# Archetype pose targets used to steer parameter trajectories so every
# expression class actually occurs in the corpus.
_ARCHETYPES = (
    FaceParams(0.0, 0.0, 0.0, 0.0),        # neutral
    FaceParams(0.15, 0.8, 0.25, 0.15),     # happiness
    FaceParams(-0.15, -0.8, 0.05, 0.05),   # sadness
    FaceParams(0.8, 0.0, 0.8, 0.2),        # surprise
    FaceParams(0.8, -0.1, 0.1, 0.8),       # fear
    FaceParams(-0.8, -0.2, 0.05, 0.1),     # anger
    FaceParams(-0.8, -0.1, 0.45, 0.1),     # disgust
)


def _soft_band(dist: np.ndarray, soft: float) -> np.ndarray:
    return np.clip(0.5 - dist / soft, 0.0, 1.0)


def render_face(p: FaceParams, identity: Identity, resolution: int) -> np.ndarray:
    """Render one frame as HxWx3 uint8."""
    r = resolution
    ys, xs = np.mgrid[0:r, 0:r]
    # normalized coordinates in [-1, 1], y increasing downwards
    x = (xs + 0.5) / r * 2.0 - 1.0
    y = (ys + 0.5) / r * 2.0 - 1.0
    soft = 2.0 / r

    canvas = np.full((r, r), 0.08)

    # head
    rx = 0.78 * identity.scale * identity.aspect
    ry = 0.88 * identity.scale
    head = np.sqrt((x / rx) ** 2 + (y / ry) ** 2) - 1.0
    canvas = np.where(_soft_band(head, soft * 2) > 0.5, identity.skin, canvas)

    def paint(mask, value):
        return canvas * (1 - mask) + value * mask

    # eyes
    for sx in (-1.0, 1.0):
        d = np.sqrt(((x - sx * identity.eye_dx) / 0.085) ** 2
                    + ((y - identity.eye_y) / 0.06) ** 2) - 1.0
        canvas = paint(_soft_band(d * 0.07, soft), 0.05)

    # brows: horizontal bars whose height tracks the brow parameter
    brow_y = identity.eye_y - 0.17 - 0.14 * p.brow
    for sx in (-1.0, 1.0):
        in_x = np.abs(x - sx * identity.eye_dx) < 0.16
        d = np.abs(y - brow_y) - 0.035
        canvas = paint(_soft_band(d, soft) * in_x, 0.12)

    # mouth: curved band; corners rise with smile, height with opening,
    # width with stretch
    w = identity.mouth_w * (1.0 + 0.35 * p.stretch)
    h = 0.035 + 0.22 * p.open
    u = x / w
    in_u = np.abs(u) < 1.0
    center = identity.mouth_y - 0.16 * p.smile * (u ** 2)
    taper = np.sqrt(np.clip(1.0 - 0.55 * u ** 2, 0.0, 1.0))
    d = np.abs(y - center) - h * taper
    canvas = paint(_soft_band(d, soft) * in_u, 0.15)

    canvas = np.clip(canvas, 0.0, 1.0)
    rgb = np.stack([canvas * t for t in identity.tint], axis=-1)
    return np.round(np.clip(rgb, 0, 1) * 255).astype(np.uint8)


def _identity_for(rng: np.random.Generator) -> Identity:
    # ranges stay narrow enough that a model trained on a handful of
    # subjects can transfer to unseen ones at 32x32
    return Identity(
        scale=float(rng.uniform(0.86, 0.98)),
        aspect=float(rng.uniform(0.86, 0.98)),
        skin=float(rng.uniform(0.6, 0.8)),
        eye_dx=float(rng.uniform(0.28, 0.34)),
        eye_y=float(rng.uniform(-0.28, -0.2)),
        mouth_y=float(rng.uniform(0.4, 0.48)),
        mouth_w=float(rng.uniform(0.32, 0.4)),
        tint=tuple(float(v) for v in rng.uniform(0.9, 1.0, size=3)),
    )


def _param_track(rng: np.random.Generator, n_frames: int) -> List[FaceParams]:
    """Segment-based trajectory: ease towards a random archetype, hold, repeat."""
    params: List[FaceParams] = []
    current = np.zeros(4)
    while len(params) < n_frames:
        target = _ARCHETYPES[rng.integers(0, len(_ARCHETYPES))]
        jitter = rng.uniform(-0.08, 0.08, size=4)
        tgt = np.array([target.brow, target.smile, target.open, target.stretch])
        tgt = tgt + jitter
        tgt[0] = np.clip(tgt[0], -1, 1)
        tgt[1] = np.clip(tgt[1], -1, 1)
        tgt[2:] = np.clip(tgt[2:], 0, 1)
        # short eases keep label-threshold crossings rare while the hold
        # phase provides stable, unambiguous frames
        ease = int(rng.integers(3, 6))
        hold = int(rng.integers(14, 29))
        for k in range(ease):
            t = (k + 1) / ease
            v = current * (1 - t) + tgt * t
            params.append(FaceParams(*[float(c) for c in v]))
        for _ in range(hold):
            params.append(FaceParams(*[float(c) for c in tgt]))
        current = tgt
    return params[:n_frames]


def synth_corpus(
    out_dir,
    n_subjects: int,
    frames_per_subject: int,
    resolution: int = 32,
    seed: int = 0,
    videos_per_subject: int = 1,
    annotators: Sequence[str] = DEFAULT_ANNOTATORS,
    fps: float = 30.0,
) -> List[VideoMeta]:
    """Write a synthetic corpus and return its video index."""
    if resolution not in (32, 96):
        raise ValidationError(f"resolution must be 32 or 96, got {resolution}")
    if n_subjects < 1 or frames_per_subject < 1 or videos_per_subject < 1:
        raise ValidationError("corpus dimensions must be positive")

    out = Path(out_dir)
    metas: List[VideoMeta] = []
    frames_per_video = frames_per_subject // videos_per_subject
    if frames_per_video < 1:
        raise ValidationError("frames_per_subject too small for videos_per_subject")

    for s in range(n_subjects):
        subject_id = f"subj{s:03d}"
        id_rng = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence((seed, s, 0xFACE)))
        )
        identity = _identity_for(id_rng)
        for v in range(videos_per_subject):
            video_id = f"{subject_id}_v{v}"
            rng = np.random.Generator(
                np.random.PCG64(np.random.SeedSequence((seed, s, v)))
            )
            track = _param_track(rng, frames_per_video)
            meta = VideoMeta(
                video_id=video_id,
                subject_id=subject_id,
                frame_count=frames_per_video,
                fps=fps,
            )
            metas.append(meta)

            frame_dir = out / "videos" / video_id / "frames"
            frame_dir.mkdir(parents=True, exist_ok=True)
            (out / "videos" / video_id / "meta.json").write_text(
                json.dumps(meta.to_dict(), sort_keys=True) + "\n"
            )

            records = {a: [] for a in annotators}
            for idx, p in enumerate(track):
                img = render_face(p, identity, resolution)
                assert_image_range(img.astype(np.float32) / 127.5 - 1.0, "synth frame")
                (frame_dir / f"{idx:06d}.png").write_bytes(encode_png(img))
                va, aus, expr = labels_from_params(p)
                for a in annotators:
                    records[a].append(
                        AnnotationRecord(
                            video_id=video_id,
                            frame_index=idx,
                            annotator_id=a,
                            va=va,
                            aus=aus,
                            expression=expr,
                        )
                    )

            ann_dir = out / "annotations" / video_id
            ann_dir.mkdir(parents=True, exist_ok=True)
            for a in annotators:
                (ann_dir / f"{a}.jsonl").write_bytes(
                    serialize_annotations(records[a])
                )
                (ann_dir / f"{a}.version").write_text(
                    json.dumps({"version": 1}) + "\n"
                )

    metas.sort(key=lambda m: m.video_id)
    (out / "index.json").write_text(
        json.dumps([m.to_dict() for m in metas], indent=2, sort_keys=True) + "\n"
    )
    return metas
