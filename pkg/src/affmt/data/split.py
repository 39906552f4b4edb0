"""Subject-independent train/validation/test splitting.

All videos of one subject land in the same split, so greedy bin-packing
over subjects is used: subjects are shuffled (seeded), stably sorted by
total frame count descending (the shuffle breaks frame-count ties), and
each is assigned to the split with the largest remaining frame deficit
relative to its target fraction.
"""

from __future__ import annotations

import random
from collections import defaultdict
from typing import List, Sequence, Tuple

from affmt.data.types import SplitManifest, VideoMeta
from affmt.errors import InfeasibleSplitError, ValidationError

_SPLITS = ("train", "validation", "test")


def split_subject_independent(
    videos: Sequence[VideoMeta],
    fractions: Tuple[float, float, float] = (0.6, 0.2, 0.2),
    seed: int = 0,
) -> SplitManifest:
    if len(fractions) != 3 or any(f <= 0 for f in fractions):
        raise ValidationError("fractions must be three positive reals")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValidationError(f"fractions must sum to 1, got {sum(fractions)}")

    by_subject = defaultdict(list)
    for v in videos:
        by_subject[v.subject_id].append(v)
    if len(by_subject) < 3:
        raise InfeasibleSplitError(
            f"need at least 3 subjects for a 3-way subject-independent split, "
            f"got {len(by_subject)}"
        )

    subject_frames = {
        s: sum(v.frame_count for v in vids) for s, vids in by_subject.items()
    }
    total = sum(subject_frames.values())

    # Canonical order first so the seeded shuffle is reproducible
    # regardless of input ordering.
    order = sorted(by_subject)
    random.Random(seed).shuffle(order)
    order.sort(key=lambda s: -subject_frames[s])  # stable: ties keep shuffle order

    targets = [f * total for f in fractions]
    assigned = [0, 0, 0]
    members: List[List[str]] = [[], [], []]
    for subject in order:
        # Largest remaining deficit relative to target; ties favor
        # train < validation < test.
        deficits = [(targets[i] - assigned[i]) / targets[i] for i in range(3)]
        slot = max(range(3), key=lambda i: (deficits[i], -i))
        assigned[slot] += subject_frames[subject]
        members[slot].append(subject)

    if any(not m for m in members):
        raise InfeasibleSplitError("a split received no subjects")

    sets = []
    for slot in range(3):
        chosen = set(members[slot])
        sets.append(
            frozenset(
                v.video_id for v in videos if v.subject_id in chosen
            )
        )
    return SplitManifest(train=sets[0], validation=sets[1], test=sets[2])


def split_frame_counts(
    videos: Sequence[VideoMeta], manifest: SplitManifest
) -> dict:
    """Frame totals per split, for reporting how close the split landed."""
    counts = {name: 0 for name in _SPLITS}
    by_id = {v.video_id: v for v in videos}
    for name, ids in (
        ("train", manifest.train),
        ("validation", manifest.validation),
        ("test", manifest.test),
    ):
        counts[name] = sum(by_id[i].frame_count for i in ids if i in by_id)
    return counts
