"""Architecture builders.

Two GAN configurations plus the multi-task CNN-RNN:

* Configuration 1 (32x32): the generator maps a 100-d latent drawn
  uniformly from [-1, 1] through four fractionally-strided convolutions
  with filters 2/4/4/6 and strides 1/2/2/2. With those filters and
  strides only VALID padding composes to a 32x32x3 output
  (1 -> 2 -> 6 -> 14 -> 32), so VALID is used for the whole chain.
* Configuration 2 (96x96): a fully-connected projection to 6x6x1024
  followed by four stride-2 SAME transposed convolutions
  (6 -> 12 -> 24 -> 48 -> 96), with a 5x5 or 7x7 kernel variant.
* Both discriminators end in a fully-connected layer of 2+8+1 = 11
  outputs: linear valence/arousal, sigmoid for the eight AUs, sigmoid for
  the fake class.
* The multi-task network runs a per-frame CNN, a GRU over each sequence,
  additive attention over the trailing window of GRU states, and a
  9-output head (linear VA, softmax over 7 expressions).
"""

from __future__ import annotations

from affmt.errors import ConfigurationError
from affmt.models.spec import (
    ModelSpec,
    activation,
    attention,
    batch_norm,
    conv,
    conv_transpose,
    fully_connected,
    gru,
    max_pool,
    reshape,
)

LATENT_DIM = 100
DISC_HEADS = {"va": 2, "aus": 8, "fake": 1}
DISC_HEAD_ACTIVATIONS = {"va": "linear", "aus": "sigmoid", "fake": "sigmoid"}
MT_HEADS = {"va": 2, "expr": 7}
MT_HEAD_ACTIVATIONS = {"va": "linear", "expr": "softmax"}


def build_generator_c1() -> ModelSpec:
    """Configuration-1 generator: latent 100 -> 32x32x3 image."""
    layers = [
        reshape((1, 1, LATENT_DIM)),
        conv_transpose((2, 2, LATENT_DIM, 384), (1, 1, 1, 1), "valid"),
        batch_norm(),
        activation("relu"),
        conv_transpose((4, 4, 384, 128), (1, 2, 2, 1), "valid"),
        batch_norm(),
        activation("relu"),
        conv_transpose((4, 4, 128, 64), (1, 2, 2, 1), "valid"),
        batch_norm(),
        activation("relu"),
        conv_transpose((6, 6, 64, 3), (1, 2, 2, 1), "valid"),
        activation("tanh"),
    ]
    return ModelSpec(
        name="generator_c1",
        input_shape=(LATENT_DIM,),
        layers=tuple(layers),
        output_heads={"image": (32, 32, 3)},
        extra={"latent_dim": LATENT_DIM, "resolution": 32},
    )


def build_discriminator_c1() -> ModelSpec:
    """Configuration-1 discriminator: 32x32x3 -> 11 outputs."""
    layers = [
        conv((5, 5, 3, 64), (1, 2, 2, 1), "same"),
        batch_norm(),
        activation("leaky-relu", slope=0.2),
        conv((5, 5, 64, 128), (1, 2, 2, 1), "same"),
        batch_norm(),
        activation("leaky-relu", slope=0.2),
        conv((5, 5, 128, 256), (1, 2, 2, 1), "same"),
        batch_norm(),
        activation("leaky-relu", slope=0.2),
        fully_connected(11),
    ]
    return ModelSpec(
        name="discriminator_c1",
        input_shape=(32, 32, 3),
        layers=tuple(layers),
        output_heads=dict(DISC_HEADS),
        head_activations=dict(DISC_HEAD_ACTIVATIONS),
        extra={"resolution": 32},
    )


def _check_kernel(kernel: int) -> None:
    if kernel not in (5, 7):
        raise ConfigurationError(f"configuration-2 kernel must be 5 or 7, got {kernel}")


def build_generator_c2(kernel: int = 5) -> ModelSpec:
    """Configuration-2 generator: latent 100 -> 96x96x3 image."""
    _check_kernel(kernel)
    k = kernel
    layers = [
        fully_connected(1 * 6 * 6 * 1024),
        reshape((6, 6, 1024)),
        batch_norm(),
        activation("relu"),
        conv_transpose((k, k, 1024, 512), (1, 2, 2, 1), "same"),
        batch_norm(),
        activation("relu"),
        conv_transpose((k, k, 512, 256), (1, 2, 2, 1), "same"),
        batch_norm(),
        activation("relu"),
        conv_transpose((k, k, 256, 128), (1, 2, 2, 1), "same"),
        batch_norm(),
        activation("relu"),
        conv_transpose((k, k, 128, 3), (1, 2, 2, 1), "same"),
        activation("tanh"),
    ]
    return ModelSpec(
        name=f"generator_c2_k{k}",
        input_shape=(LATENT_DIM,),
        layers=tuple(layers),
        output_heads={"image": (96, 96, 3)},
        extra={"latent_dim": LATENT_DIM, "resolution": 96, "kernel": k},
    )


def build_discriminator_c2(kernel: int = 5) -> ModelSpec:
    """Configuration-2 discriminator: 96x96x3 -> 11 outputs."""
    _check_kernel(kernel)
    k = kernel
    layers = []
    channels = [3, 64, 128, 256, 512]
    for cin, cout in zip(channels, channels[1:]):
        layers.append(conv((k, k, cin, cout), (1, 2, 2, 1), "same"))
        layers.append(batch_norm())
        layers.append(activation("leaky-relu", slope=0.2))
    layers.append(fully_connected(11))
    return ModelSpec(
        name=f"discriminator_c2_k{k}",
        input_shape=(96, 96, 3),
        layers=tuple(layers),
        output_heads=dict(DISC_HEADS),
        head_activations=dict(DISC_HEAD_ACTIVATIONS),
        extra={"resolution": 96, "kernel": k},
    )


def _tiny_backbone(resolution: int) -> list:
    layers = []
    channels = [3, 16, 32, 64]
    for cin, cout in zip(channels, channels[1:]):
        layers.append(conv((3, 3, cin, cout), (1, 2, 2, 1), "same"))
        layers.append(batch_norm())
        layers.append(activation("relu"))
    return layers


def _vgg_backbone() -> list:
    """VGG-16-shaped conv stack (no pretrained weights)."""
    cfg = [64, 64, "M", 128, 128, "M", 256, 256, 256, "M",
           512, 512, 512, "M", 512, 512, 512, "M"]
    layers = []
    cin = 3
    for item in cfg:
        if item == "M":
            layers.append(max_pool(2, 2, "same"))
        else:
            layers.append(conv((3, 3, cin, item), (1, 1, 1, 1), "same"))
            layers.append(activation("relu"))
            cin = item
    return layers


def build_multitask_cnn_rnn(
    backbone: str = "tiny",
    gru_units: int = 128,
    attention_length: int = 32,
    resolution: int = 96,
    feature_dim: int = 256,
) -> ModelSpec:
    """CNN -> GRU -> trailing-window additive attention -> 9 outputs."""
    if attention_length < 1:
        raise ConfigurationError("attention_length must be positive")
    if resolution not in (32, 96):
        raise ConfigurationError("resolution must be 32 or 96")
    if backbone == "tiny":
        layers = _tiny_backbone(resolution)
    elif backbone == "vgg-style":
        layers = _vgg_backbone()
        feature_dim = max(feature_dim, 4096)
    else:
        raise ConfigurationError(f"unknown backbone {backbone!r}")
    layers = layers + [
        fully_connected(feature_dim),
        activation("relu"),
        gru(gru_units),
        attention(attention_length),
        fully_connected(9),
    ]
    return ModelSpec(
        name=f"multitask_{backbone.replace('-', '_')}",
        input_shape=(resolution, resolution, 3),
        layers=tuple(layers),
        output_heads=dict(MT_HEADS),
        head_activations=dict(MT_HEAD_ACTIVATIONS),
        extra={
            "backbone": backbone,
            "gru_units": gru_units,
            "attention_length": attention_length,
            "resolution": resolution,
            "feature_dim": feature_dim,
        },
    )
