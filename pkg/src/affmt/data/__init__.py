"""Annotation data management: types, file I/O, consolidation, splits, stats."""

from affmt.data.consolidate import consolidate
from affmt.data.io import (
    CSV_HEADER,
    parse_annotations,
    read_consolidated_csv,
    serialize_annotations,
    write_consolidated_csv,
)
from affmt.data.split import split_frame_counts, split_subject_independent
from affmt.data.stats import DatasetStats, dataset_stats
from affmt.data.types import (
    AU_IDS,
    EXPRESSION_NAMES,
    EXPRESSIONS,
    NUM_AUS,
    AnnotationRecord,
    AUVector,
    ConsolidatedFrame,
    Expression,
    SplitManifest,
    VAPair,
    VideoMeta,
)

__all__ = [
    "AU_IDS",
    "NUM_AUS",
    "EXPRESSIONS",
    "EXPRESSION_NAMES",
    "VAPair",
    "AUVector",
    "Expression",
    "AnnotationRecord",
    "ConsolidatedFrame",
    "VideoMeta",
    "SplitManifest",
    "parse_annotations",
    "serialize_annotations",
    "write_consolidated_csv",
    "read_consolidated_csv",
    "CSV_HEADER",
    "consolidate",
    "split_subject_independent",
    "split_frame_counts",
    "dataset_stats",
    "DatasetStats",
]
