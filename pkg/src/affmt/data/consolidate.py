"""Unanimity consolidation of multi-annotator records.

An AU bit is kept only when every contributing annotator set it; an
expression survives only with 100% agreement. VA is fused as the
arithmetic mean of the annotators' values, clamped to [-1, 1]. A label
family is emitted only when at least ``required_annotators`` annotators
contributed it; frames whose VA family does not reach that threshold are
dropped entirely (consolidated frames always carry VA).
"""

from __future__ import annotations

from collections import defaultdict
from typing import Iterable, List

from affmt.data.types import (
    NUM_AUS,
    AnnotationRecord,
    AUVector,
    ConsolidatedFrame,
    VAPair,
)
from affmt.errors import ValidationError


def _clamp(v: float) -> float:
    return max(-1.0, min(1.0, v))


def consolidate(
    records: Iterable[AnnotationRecord], required_annotators: int = 3
) -> List[ConsolidatedFrame]:
    """Fuse per-annotator records into consolidated ground truth.

    Disagreement is data, not an error: disputed AUs come out inactive
    and disputed expressions come out absent.
    """
    if required_annotators < 1:
        raise ValidationError("required_annotators must be positive")

    grouped = defaultdict(list)
    for rec in records:
        grouped[(rec.video_id, rec.frame_index)].append(rec)

    out: List[ConsolidatedFrame] = []
    for (video_id, frame_index) in sorted(grouped):
        group = grouped[(video_id, frame_index)]

        va_votes = [r.va for r in group if r.va is not None]
        if len(va_votes) < required_annotators:
            continue
        va = VAPair(
            _clamp(sum(v.valence for v in va_votes) / len(va_votes)),
            _clamp(sum(v.arousal for v in va_votes) / len(va_votes)),
        )

        au_votes = [r.aus for r in group if r.aus is not None]
        if len(au_votes) < required_annotators:
            aus = None
        else:
            aus = AUVector(
                tuple(
                    all(v.bits[i] for v in au_votes) for i in range(NUM_AUS)
                )
            )

        expr_votes = [r.expression for r in group if r.expression is not None]
        if len(expr_votes) < required_annotators:
            expression = None
        elif all(e == expr_votes[0] for e in expr_votes):
            expression = expr_votes[0]
        else:
            expression = None

        out.append(
            ConsolidatedFrame(
                video_id=video_id,
                frame_index=frame_index,
                va=va,
                aus=aus,
                expression=expression,
            )
        )
    return out
