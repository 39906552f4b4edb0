"""Preprocessing: crops, normalization, synthetic data, batch construction."""

from affmt.preprocessing.batches import (
    Corpus,
    FrameBatch,
    FrameSampler,
    SequenceBatch,
    SequenceSampler,
    consolidate_corpus,
    load_corpus,
    load_index,
    make_sequence_batches,
)
from affmt.preprocessing.image import (
    FullFrameCropProvider,
    assert_image_range,
    bilinear_resize,
    crop_and_resize,
    decode_image,
    encode_png,
    from_unit_range,
    full_frame_box,
    to_unit_range,
)
from affmt.preprocessing.synth import (
    FaceParams,
    Identity,
    labels_from_params,
    render_face,
    synth_corpus,
)

__all__ = [
    "crop_and_resize",
    "bilinear_resize",
    "decode_image",
    "encode_png",
    "to_unit_range",
    "from_unit_range",
    "assert_image_range",
    "full_frame_box",
    "FullFrameCropProvider",
    "FaceParams",
    "Identity",
    "labels_from_params",
    "render_face",
    "synth_corpus",
    "Corpus",
    "load_corpus",
    "load_index",
    "consolidate_corpus",
    "SequenceBatch",
    "SequenceSampler",
    "make_sequence_batches",
    "FrameBatch",
    "FrameSampler",
]
