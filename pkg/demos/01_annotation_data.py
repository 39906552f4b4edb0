"""Annotation data layer walkthrough.

Builds a few per-annotator records by hand, shows the JSON-lines wire
format, consolidates them under the unanimity rule, and prints dataset
statistics.
"""

from affmt.data import (
    AnnotationRecord,
    AUVector,
    Expression,
    VAPair,
    consolidate,
    dataset_stats,
    parse_annotations,
    serialize_annotations,
    write_consolidated_csv,
)

# Three annotators label the same two frames of one video. They agree on
# AU12+AU25 for frame 0; annotator c sees frame 1 differently.
records = []
for annotator in ("a", "b", "c"):
    records.append(
        AnnotationRecord(
            video_id="demo", frame_index=0, annotator_id=annotator,
            va=VAPair(0.38, 0.35),
            aus=AUVector.from_active([12, 25]),
            expression=Expression.HAPPINESS,
        )
    )
records.append(
    AnnotationRecord(
        video_id="demo", frame_index=1, annotator_id="a",
        va=VAPair(-0.6, 0.9), aus=AUVector.from_active([1, 25]),
        expression=Expression.SURPRISE,
    )
)
records.append(
    AnnotationRecord(
        video_id="demo", frame_index=1, annotator_id="b",
        va=VAPair(-0.5, 0.8), aus=AUVector.from_active([1, 25]),
        expression=Expression.SURPRISE,
    )
)
records.append(
    AnnotationRecord(
        video_id="demo", frame_index=1, annotator_id="c",
        va=VAPair(-0.4, 0.7), aus=AUVector.from_active([1]),  # no AU25 vote
        expression=Expression.FEAR,                            # disagrees
    )
)

wire = serialize_annotations(records)
print("JSON-lines wire format:")
print(wire.decode(), end="")

assert parse_annotations(wire) == records  # byte-exact round trip

frames = consolidate(records, required_annotators=3)
print("\nconsolidated (AU bit needs all three; expression needs 100% agreement):")
print(write_consolidated_csv(frames), end="")
# frame 1: AU25 lost one vote -> off; expressions split -> absent;
# VA is the clamped mean of the three annotators.

stats = dataset_stats(frames, va_bins=4)
print("\nper-AU counts:", {k: v for k, v in stats.au_counts.items() if v})
print("expression counts:", {k: v for k, v in stats.expression_counts.items() if v})
print("valence histogram:", stats.valence_histogram)
