"""Model specs (layer tables) and their torch materializations."""

from affmt.models.build import (
    DISC_HEADS,
    LATENT_DIM,
    build_discriminator_c1,
    build_discriminator_c2,
    build_generator_c1,
    build_generator_c2,
    build_multitask_cnn_rnn,
)
from affmt.models.nets import (
    DiscriminatorNet,
    DiscriminatorOutput,
    GeneratorNet,
    MultiTaskNet,
    MultiTaskOutput,
    TrailingAttention,
    freeze,
    init_parameters,
    materialize,
    set_mode,
    trainable_parameters,
)
from affmt.models.spec import (
    LayerSpec,
    ModelSpec,
    count_parameters,
    head_width,
    infer_shapes,
    render_table,
)

__all__ = [
    "LayerSpec",
    "ModelSpec",
    "infer_shapes",
    "count_parameters",
    "head_width",
    "render_table",
    "build_generator_c1",
    "build_discriminator_c1",
    "build_generator_c2",
    "build_discriminator_c2",
    "build_multitask_cnn_rnn",
    "LATENT_DIM",
    "DISC_HEADS",
    "materialize",
    "init_parameters",
    "GeneratorNet",
    "DiscriminatorNet",
    "MultiTaskNet",
    "MultiTaskOutput",
    "DiscriminatorOutput",
    "TrailingAttention",
    "set_mode",
    "freeze",
    "trainable_parameters",
]
