import random

import pytest

from affmt.data import (
    AU_IDS,
    AUVector,
    ConsolidatedFrame,
    Expression,
    VAPair,
    VideoMeta,
    dataset_stats,
    split_frame_counts,
    split_subject_independent,
)
from affmt.errors import InfeasibleSplitError, ValidationError


def synthetic_videos(n_subjects, seed=0, max_videos=3):
    rng = random.Random(seed)
    videos = []
    for s in range(n_subjects):
        for v in range(rng.randint(1, max_videos)):
            videos.append(
                VideoMeta(
                    video_id=f"s{s:03d}_v{v}",
                    subject_id=f"s{s:03d}",
                    frame_count=rng.randint(50, 2000),
                )
            )
    return videos


def test_split_deterministic_per_seed():
    videos = synthetic_videos(30, seed=1)
    a = split_subject_independent(videos, (0.6, 0.2, 0.2), seed=7)
    b = split_subject_independent(videos, (0.6, 0.2, 0.2), seed=7)
    assert a == b
    c = split_subject_independent(videos, (0.6, 0.2, 0.2), seed=8)
    # different seed is allowed to differ (and usually does)
    assert c.train | c.validation | c.test == a.train | a.validation | a.test


def test_split_subject_disjointness_random_corpora():
    for trial in range(200):
        videos = synthetic_videos(random.Random(trial).randint(3, 25), seed=trial)
        manifest = split_subject_independent(videos, (0.6, 0.2, 0.2), seed=trial)
        subj = {v.video_id: v.subject_id for v in videos}
        subjects = {
            name: {subj[i] for i in ids}
            for name, ids in (
                ("train", manifest.train),
                ("val", manifest.validation),
                ("test", manifest.test),
            )
        }
        assert not (subjects["train"] & subjects["val"])
        assert not (subjects["train"] & subjects["test"])
        assert not (subjects["val"] & subjects["test"])
        assert manifest.train | manifest.validation | manifest.test == set(subj)


def test_split_proportions_roughly_match():
    videos = synthetic_videos(40, seed=3)
    manifest = split_subject_independent(videos, (0.6, 0.2, 0.2), seed=0)
    counts = split_frame_counts(videos, manifest)
    total = sum(counts.values())
    assert counts["train"] / total == pytest.approx(0.6, abs=0.1)
    assert counts["validation"] / total == pytest.approx(0.2, abs=0.1)
    assert counts["test"] / total == pytest.approx(0.2, abs=0.1)


def test_split_infeasible_with_single_subject():
    videos = [
        VideoMeta(video_id=f"v{i}", subject_id="only", frame_count=100)
        for i in range(5)
    ]
    with pytest.raises(InfeasibleSplitError):
        split_subject_independent(videos, (0.6, 0.2, 0.2), seed=0)


def test_split_rejects_bad_fractions():
    videos = synthetic_videos(5)
    with pytest.raises(ValidationError):
        split_subject_independent(videos, (0.5, 0.5, 0.5), seed=0)
    with pytest.raises(ValidationError):
        split_subject_independent(videos, (0.8, 0.2, -0.0), seed=0)


def random_frames(n, seed=0):
    rng = random.Random(seed)
    frames = []
    exprs = list(Expression) + [None]
    for i in range(n):
        has_aus = rng.random() < 0.8
        frames.append(
            ConsolidatedFrame(
                video_id=f"v{rng.randint(0, 3)}",
                frame_index=i,
                va=VAPair(rng.uniform(-1, 1), rng.uniform(-1, 1)),
                aus=AUVector(tuple(rng.random() < 0.3 for _ in AU_IDS))
                if has_aus
                else None,
                expression=rng.choice(exprs),
            )
        )
    return frames


def test_stats_empty_input():
    stats = dataset_stats([])
    assert stats.n_frames == 0
    assert all(v == 0 for v in stats.au_counts.values())
    assert all(v == 0 for v in stats.expression_counts.values())
    assert sum(stats.valence_histogram) == 0


def test_stats_match_independent_tally():
    frames = random_frames(100, seed=42)
    stats = dataset_stats(frames, va_bins=10)

    # independent single-pass tally
    for pos, au in enumerate(AU_IDS):
        expected = sum(
            1 for f in frames if f.aus is not None and f.aus.bits[pos]
        )
        assert stats.au_counts[au] == expected
    for expr in Expression:
        expected = sum(1 for f in frames if f.expression == expr)
        assert stats.expression_counts[expr.value] == expected
    assert stats.n_au_active_frames == sum(
        1 for f in frames if f.aus is not None and any(f.aus.bits)
    )
    assert sum(stats.valence_histogram) == len(frames)
    assert sum(stats.arousal_histogram) == len(frames)

    # histogram counts equal a manual binning pass
    edges = stats.va_bin_edges
    for b in range(10):
        lo, hi = edges[b], edges[b + 1]
        if b == 9:
            manual = sum(1 for f in frames if lo <= f.va.valence <= hi)
        else:
            manual = sum(1 for f in frames if lo <= f.va.valence < hi)
        assert stats.valence_histogram[b] == manual
