"""Corpus loading and deterministic batch construction.

Batch content is a pure function of (corpus, sizes, seed, step): samplers
address batches by step index, so training can resume mid-stream and two
runs with the same seed see identical data order.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from affmt.data.consolidate import consolidate
from affmt.data.io import (
    parse_annotations,
    read_consolidated_csv,
    write_consolidated_csv,
)
from affmt.data.types import ConsolidatedFrame, Expression, VideoMeta
from affmt.errors import ValidationError
from affmt.preprocessing.image import decode_image

logger = logging.getLogger(__name__)

_EXPR_INDEX = {e: i for i, e in enumerate(Expression)}


def load_index(corpus_dir) -> List[VideoMeta]:
    path = Path(corpus_dir) / "index.json"
    if not path.exists():
        raise ValidationError(
            f"no corpus index at {path}; generate one with the synth-data command"
        )
    return [VideoMeta.from_dict(d) for d in json.loads(path.read_text())]


def consolidate_corpus(corpus_dir, required_annotators: int = 3) -> Dict[str, List[ConsolidatedFrame]]:
    """Consolidate every video's annotations, writing consolidated CSVs."""
    corpus = Path(corpus_dir)
    out: Dict[str, List[ConsolidatedFrame]] = {}
    for meta in load_index(corpus):
        ann_dir = corpus / "annotations" / meta.video_id
        records = []
        if ann_dir.is_dir():
            for f in sorted(ann_dir.glob("*.jsonl")):
                records.extend(parse_annotations(f.read_bytes()))
        frames = consolidate(records, required_annotators=required_annotators)
        out[meta.video_id] = frames
        cons_dir = corpus / "consolidated"
        cons_dir.mkdir(exist_ok=True)
        (cons_dir / f"{meta.video_id}.csv").write_text(write_consolidated_csv(frames))
    return out


@dataclass
class VideoData:
    meta: VideoMeta
    images: np.ndarray        # (N, H, W, 3) uint8
    frame_indices: np.ndarray  # (N,) consolidated frame indices, ascending
    va: np.ndarray            # (N, 2) float32
    aus: np.ndarray           # (N, 8) float32, NaN row where family absent
    expr: np.ndarray          # (N,) int64, -1 where absent
    frames: List[ConsolidatedFrame] = None


class Corpus:
    """In-memory view of a corpus directory restricted to consolidated frames."""

    def __init__(self, videos: List[VideoData]):
        self.videos = sorted(videos, key=lambda v: v.meta.video_id)
        self.by_id = {v.meta.video_id: v for v in self.videos}
        if self.videos:
            shape = self.videos[0].images.shape[1:]
            for v in self.videos:
                if v.images.shape[1:] != shape:
                    raise ValidationError("videos have inconsistent frame shapes")

    @property
    def resolution(self) -> int:
        return int(self.videos[0].images.shape[1]) if self.videos else 0

    def subset(self, video_ids) -> "Corpus":
        wanted = set(video_ids)
        return Corpus([v for v in self.videos if v.meta.video_id in wanted])

    def all_frames(self) -> List[ConsolidatedFrame]:
        return [f for v in self.videos for f in v.frames]

    def all_images(self) -> np.ndarray:
        return np.concatenate([v.images for v in self.videos])

    def frame_lookup(self) -> Dict[Tuple[str, int], ConsolidatedFrame]:
        return {
            (v.meta.video_id, f.frame_index): f
            for v in self.videos
            for f in v.frames
        }


def load_corpus(
    corpus_dir,
    video_ids: Optional[Sequence[str]] = None,
    required_annotators: int = 3,
) -> Corpus:
    """Load frames and consolidated labels for the given videos.

    Uses consolidated CSVs when present; otherwise consolidates from the
    raw annotation files on the fly.
    """
    corpus = Path(corpus_dir)
    metas = load_index(corpus)
    if video_ids is not None:
        wanted = set(video_ids)
        metas = [m for m in metas if m.video_id in wanted]

    videos: List[VideoData] = []
    for meta in metas:
        csv_path = corpus / "consolidated" / f"{meta.video_id}.csv"
        if csv_path.exists():
            frames = read_consolidated_csv(csv_path.read_text())
        else:
            ann_dir = corpus / "annotations" / meta.video_id
            records = []
            if ann_dir.is_dir():
                for f in sorted(ann_dir.glob("*.jsonl")):
                    records.extend(parse_annotations(f.read_bytes()))
            frames = consolidate(records, required_annotators=required_annotators)
        if not frames:
            continue
        frames.sort(key=lambda f: f.frame_index)

        imgs = []
        for f in frames:
            p = corpus / "videos" / meta.video_id / "frames" / f"{f.frame_index:06d}.png"
            imgs.append(decode_image(p.read_bytes()))
        images = np.stack(imgs)
        va = np.array([[f.va.valence, f.va.arousal] for f in frames], dtype=np.float32)
        aus = np.full((len(frames), 8), np.nan, dtype=np.float32)
        expr = np.full(len(frames), -1, dtype=np.int64)
        for i, f in enumerate(frames):
            if f.aus is not None:
                aus[i] = np.array(f.aus.bits, dtype=np.float32)
            if f.expression is not None:
                expr[i] = _EXPR_INDEX[f.expression]
        videos.append(
            VideoData(
                meta=meta,
                images=images,
                frame_indices=np.array([f.frame_index for f in frames]),
                va=va,
                aus=aus,
                expr=expr,
                frames=frames,
            )
        )
    return Corpus(videos)


def _to_unit(images_uint8: np.ndarray) -> np.ndarray:
    return (images_uint8.astype(np.float32) / 127.5) - 1.0


def _nchw(images_uint8: np.ndarray) -> np.ndarray:
    return np.transpose(_to_unit(images_uint8), (0, 3, 1, 2))


@dataclass
class SequenceBatch:
    """S sequences of T consecutive frames with per-frame targets."""

    images: np.ndarray    # (S, T, 3, H, W) float32 in [-1, 1]
    va: np.ndarray        # (S, T, 2) float32
    expr: np.ndarray      # (S, T) int64, -1 = unlabeled
    aus: np.ndarray       # (S, T, 8) float32, NaN = absent
    video_ids: Tuple[str, ...]
    starts: Tuple[int, ...]

    @property
    def n_sequences(self) -> int:
        return self.images.shape[0]

    @property
    def seq_length(self) -> int:
        return self.images.shape[1]


def _consecutive_runs(frame_indices: np.ndarray) -> List[Tuple[int, int]]:
    """(start_position, length) of maximal consecutive-index runs."""
    runs = []
    start = 0
    for i in range(1, len(frame_indices) + 1):
        if i == len(frame_indices) or frame_indices[i] != frame_indices[i - 1] + 1:
            runs.append((start, i - start))
            start = i
    return runs


class SequenceSampler:
    """Deterministic sampler over non-overlapping T-frame windows.

    Windows tile each video's consecutive annotated runs; within one
    epoch each window appears at most once. Epoch order is a seeded
    shuffle, and batch(step) is a pure function of the constructor args.
    """

    def __init__(self, corpus: Corpus, n_sequences: int, seq_length: int, seed: int = 0):
        if n_sequences < 1 or seq_length < 1:
            raise ValidationError("n_sequences and seq_length must be positive")
        self.corpus = corpus
        self.n_sequences = n_sequences
        self.seq_length = seq_length
        self.seed = seed
        self.windows: List[Tuple[str, int]] = []  # (video_id, start position)
        for v in corpus.videos:
            for run_start, run_len in _consecutive_runs(v.frame_indices):
                for k in range(run_len // seq_length):
                    self.windows.append((v.meta.video_id, run_start + k * seq_length))
        self.windows.sort()
        if not self.windows:
            logger.warning(
                "no video contributes a full window of %d consecutive frames",
                seq_length,
            )

    @property
    def batches_per_epoch(self) -> int:
        return len(self.windows) // self.n_sequences

    def _epoch_order(self, epoch: int) -> List[Tuple[str, int]]:
        order = list(self.windows)
        random.Random((self.seed << 20) + epoch).shuffle(order)
        return order

    def batch(self, step: int) -> SequenceBatch:
        bpe = self.batches_per_epoch
        if bpe == 0:
            raise ValidationError(
                "corpus has too few windows for even one batch"
            )
        epoch, idx = divmod(step, bpe)
        chosen = self._epoch_order(epoch)[idx * self.n_sequences:(idx + 1) * self.n_sequences]

        images, va, expr, aus = [], [], [], []
        for video_id, pos in chosen:
            v = self.corpus.by_id[video_id]
            sl = slice(pos, pos + self.seq_length)
            images.append(_nchw(v.images[sl]))
            va.append(v.va[sl])
            expr.append(v.expr[sl])
            aus.append(v.aus[sl])
        return SequenceBatch(
            images=np.stack(images),
            va=np.stack(va),
            expr=np.stack(expr),
            aus=np.stack(aus),
            video_ids=tuple(c[0] for c in chosen),
            starts=tuple(c[1] for c in chosen),
        )

    def epoch_batches(self, epoch: int = 0) -> Iterator[SequenceBatch]:
        for i in range(self.batches_per_epoch):
            yield self.batch(epoch * self.batches_per_epoch + i)


def make_sequence_batches(
    corpus: Corpus, n_sequences: int = 10, seq_length: int = 80, seed: int = 0,
    epochs: int = 1,
) -> Iterator[SequenceBatch]:
    """Stream of sequence batches (default 10 x 80 = 800 frames per batch)."""
    sampler = SequenceSampler(corpus, n_sequences, seq_length, seed)
    for epoch in range(epochs):
        yield from sampler.epoch_batches(epoch)


@dataclass
class FrameBatch:
    """Single-frame batch for GAN training (images + VA + AU targets)."""

    images: np.ndarray  # (B, 3, H, W) float32 in [-1, 1]
    va: np.ndarray      # (B, 2) float32
    aus: np.ndarray     # (B, 8) float32


class FrameSampler:
    """Deterministic sampler over AU-labelled single frames."""

    def __init__(self, corpus: Corpus, batch_size: int, seed: int = 0):
        if batch_size < 1:
            raise ValidationError("batch_size must be positive")
        self.corpus = corpus
        self.batch_size = batch_size
        self.seed = seed
        self.frames: List[Tuple[str, int]] = []
        for v in corpus.videos:
            labelled = np.where(~np.isnan(v.aus[:, 0]))[0]
            self.frames.extend((v.meta.video_id, int(i)) for i in labelled)
        self.frames.sort()
        if not self.frames:
            logger.warning("corpus has no AU-labelled frames")

    @property
    def batches_per_epoch(self) -> int:
        return len(self.frames) // self.batch_size

    def batch(self, step: int) -> FrameBatch:
        bpe = self.batches_per_epoch
        if bpe == 0:
            raise ValidationError("corpus has too few frames for one batch")
        epoch, idx = divmod(step, bpe)
        order = list(self.frames)
        random.Random((self.seed << 20) + epoch).shuffle(order)
        chosen = order[idx * self.batch_size:(idx + 1) * self.batch_size]

        images, va, aus = [], [], []
        for video_id, pos in chosen:
            v = self.corpus.by_id[video_id]
            images.append(_nchw(v.images[pos:pos + 1])[0])
            va.append(v.va[pos])
            aus.append(v.aus[pos])
        return FrameBatch(
            images=np.stack(images),
            va=np.stack(va),
            aus=np.stack(aus),
        )
