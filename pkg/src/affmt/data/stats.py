"""Dataset statistics over consolidated frames."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List

import numpy as np

from affmt.data.types import AU_IDS, ConsolidatedFrame, EXPRESSION_NAMES
from affmt.errors import ValidationError


@dataclass
class DatasetStats:
    n_frames: int
    n_frames_with_aus: int          # frames carrying an AU vector
    n_au_active_frames: int         # frames with at least one AU set
    au_counts: Dict[int, int]       # AU id -> frames where the bit is set
    expression_counts: Dict[str, int]
    va_bin_edges: List[float]
    valence_histogram: List[int]
    arousal_histogram: List[int]

    def to_dict(self) -> dict:
        return {
            "n_frames": self.n_frames,
            "n_frames_with_aus": self.n_frames_with_aus,
            "n_au_active_frames": self.n_au_active_frames,
            "au_counts": {str(k): v for k, v in self.au_counts.items()},
            "expression_counts": dict(self.expression_counts),
            "va_bin_edges": list(self.va_bin_edges),
            "valence_histogram": list(self.valence_histogram),
            "arousal_histogram": list(self.arousal_histogram),
        }


def dataset_stats(
    frames: Iterable[ConsolidatedFrame], va_bins: int = 20
) -> DatasetStats:
    """Per-AU counts, per-expression counts, and VA histograms."""
    if va_bins < 1:
        raise ValidationError("va_bins must be positive")
    frames = list(frames)

    au_counts = {au: 0 for au in AU_IDS}
    expr_counts = {name: 0 for name in EXPRESSION_NAMES}
    n_with_aus = 0
    n_active = 0
    valences = []
    arousals = []
    for f in frames:
        valences.append(f.va.valence)
        arousals.append(f.va.arousal)
        if f.aus is not None:
            n_with_aus += 1
            if any(f.aus.bits):
                n_active += 1
            for au, bit in zip(AU_IDS, f.aus.bits):
                if bit:
                    au_counts[au] += 1
        if f.expression is not None:
            expr_counts[f.expression.value] += 1

    edges = np.linspace(-1.0, 1.0, va_bins + 1)
    if valences:
        val_hist, _ = np.histogram(np.asarray(valences), bins=edges)
        aro_hist, _ = np.histogram(np.asarray(arousals), bins=edges)
    else:
        val_hist = np.zeros(va_bins, dtype=int)
        aro_hist = np.zeros(va_bins, dtype=int)

    return DatasetStats(
        n_frames=len(frames),
        n_frames_with_aus=n_with_aus,
        n_au_active_frames=n_active,
        au_counts=au_counts,
        expression_counts=expr_counts,
        va_bin_edges=[float(e) for e in edges],
        valence_histogram=[int(c) for c in val_hist],
        arousal_histogram=[int(c) for c in aro_hist],
    )
