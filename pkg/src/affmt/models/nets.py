"""Materialize ModelSpecs as torch modules.

Spatial semantics mirror the tables: SAME convolutions pad asymmetrically
(extra row/column at the bottom/right when the total padding is odd), so
output sizes are ceil(n/s) for convolutions and n*s for transposed
convolutions. Padding amounts are precomputed from the statically
inferred shapes.

Weight initialization is seed-deterministic: truncated normal (std 0.02,
cut at 2 std) for conv/linear weights, uniform +-1/sqrt(hidden) for GRU
matrices, zeros for biases, ones for batch-norm scales.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import torch
from torch import nn

from affmt.errors import ConfigurationError, ShapeError
from affmt.losses import DiscriminatorHeads
from affmt.models.spec import LayerSpec, ModelSpec, infer_shapes

DiscriminatorOutput = DiscriminatorHeads


@dataclass
class MultiTaskOutput:
    """Per-frame multi-task predictions: 2 linear VA + 7-way softmax."""

    va: torch.Tensor           # (S, T, 2)
    expr_logits: torch.Tensor  # (S, T, 7)

    @property
    def expr_probs(self) -> torch.Tensor:
        return torch.softmax(self.expr_logits, dim=-1)


class ReshapeToNCHW(nn.Module):
    """Flat features -> NCHW image tensor for an HWC target shape."""

    def __init__(self, hwc: Tuple[int, int, int]):
        super().__init__()
        self.hwc = hwc

    def forward(self, x):
        h, w, c = self.hwc
        return x.reshape(x.shape[0], h, w, c).permute(0, 3, 1, 2).contiguous()

    def extra_repr(self):
        return f"hwc={self.hwc}"


def _same_pad_amounts(n: int, k: int, s: int) -> Tuple[int, int]:
    out = math.ceil(n / s)
    total = max((out - 1) * s + k - n, 0)
    lo = total // 2
    return lo, total - lo


def _conv_layer(layer: LayerSpec, in_hw: Tuple[int, int], bias: bool) -> nn.Module:
    kh, kw, cin, cout = layer.filter_shape
    _, sh, sw, _ = layer.stride
    if layer.padding == "same":
        pt, pb = _same_pad_amounts(in_hw[0], kh, sh)
        pl, pr = _same_pad_amounts(in_hw[1], kw, sw)
        conv = nn.Conv2d(cin, cout, (kh, kw), (sh, sw), padding=0, bias=bias)
        if (pt, pb, pl, pr) == (0, 0, 0, 0):
            return conv
        return nn.Sequential(nn.ZeroPad2d((pl, pr, pt, pb)), conv)
    return nn.Conv2d(cin, cout, (kh, kw), (sh, sw), padding=0, bias=bias)


def _conv_transpose_layer(layer: LayerSpec, bias: bool) -> nn.Module:
    kh, kw, cin, cout = layer.filter_shape
    _, sh, sw, _ = layer.stride
    if layer.padding == "same":
        def params(k, s):
            if k < s:
                raise ConfigurationError(
                    f"SAME transposed conv needs kernel >= stride (k={k}, s={s})"
                )
            op = (k - s) % 2
            if op >= s:
                raise ConfigurationError(
                    f"SAME transposed conv with k={k}, s={s} is not expressible"
                )
            return (k - s + op) // 2, op

        ph, oph = params(kh, sh)
        pw, opw = params(kw, sw)
        return nn.ConvTranspose2d(
            cin, cout, (kh, kw), (sh, sw),
            padding=(ph, pw), output_padding=(oph, opw), bias=bias,
        )
    return nn.ConvTranspose2d(cin, cout, (kh, kw), (sh, sw), padding=0, bias=bias)


def _activation_layer(layer: LayerSpec) -> nn.Module:
    name = layer.activation
    if name == "relu":
        return nn.ReLU()
    if name == "leaky-relu":
        return nn.LeakyReLU(layer.slope if layer.slope is not None else 0.2)
    if name == "tanh":
        return nn.Tanh()
    if name == "sigmoid":
        return nn.Sigmoid()
    if name == "softmax":
        return nn.Softmax(dim=1)
    return nn.Identity()


def _build_stack(
    spec: ModelSpec, layers: Tuple[LayerSpec, ...], start_shape: Tuple[int, ...]
) -> Tuple[nn.Sequential, Tuple[int, ...]]:
    """Interpret a run of table layers as a torch Sequential."""
    shape = tuple(start_shape)
    modules: List[nn.Module] = []
    for i, layer in enumerate(layers):
        next_bn = i + 1 < len(layers) and layers[i + 1].kind == "batch-norm"
        if layer.kind == "reshape":
            modules.append(ReshapeToNCHW(layer.shape))
            shape = tuple(layer.shape)
        elif layer.kind == "conv":
            modules.append(_conv_layer(layer, shape[:2], bias=not next_bn))
            kh, kw, _, cout = layer.filter_shape
            _, sh, sw, _ = layer.stride
            h = math.ceil(shape[0] / sh) if layer.padding == "same" else (shape[0] - kh) // sh + 1
            w = math.ceil(shape[1] / sw) if layer.padding == "same" else (shape[1] - kw) // sw + 1
            shape = (h, w, cout)
        elif layer.kind == "conv-transpose":
            modules.append(_conv_transpose_layer(layer, bias=not next_bn))
            kh, kw, _, cout = layer.filter_shape
            _, sh, sw, _ = layer.stride
            h = shape[0] * sh if layer.padding == "same" else (shape[0] - 1) * sh + kh
            w = shape[1] * sw if layer.padding == "same" else (shape[1] - 1) * sw + kw
            shape = (h, w, cout)
        elif layer.kind == "max-pool":
            kh, kw = layer.filter_shape[:2]
            _, sh, sw, _ = layer.stride
            modules.append(nn.MaxPool2d((kh, kw), (sh, sw)))
            shape = (math.ceil(shape[0] / sh), math.ceil(shape[1] / sw), shape[2])
        elif layer.kind == "batch-norm":
            if len(shape) == 3:
                modules.append(nn.BatchNorm2d(shape[2]))
            else:
                modules.append(nn.BatchNorm1d(shape[0]))
        elif layer.kind == "activation":
            modules.append(_activation_layer(layer))
        elif layer.kind == "fully-connected":
            modules.append(nn.Flatten())
            modules.append(nn.Linear(math.prod(shape), layer.units))
            shape = (layer.units,)
        else:
            raise ConfigurationError(
                f"layer kind {layer.kind!r} is not part of a plain stack"
            )
    return nn.Sequential(*modules), shape


class GeneratorNet(nn.Module):
    """Latent vector -> image in [-1, 1] (NCHW)."""

    def __init__(self, spec: ModelSpec):
        super().__init__()
        infer_shapes(spec)
        self.spec = spec
        self.latent_dim = int(spec.extra.get("latent_dim", 100))
        self.resolution = int(spec.extra["resolution"])
        self.trunk, _ = _build_stack(spec, spec.layers, spec.input_shape)

    def forward(self, z: torch.Tensor) -> torch.Tensor:
        if z.ndim != 2 or z.shape[1] != self.latent_dim:
            raise ShapeError(
                f"expected latent batch (N, {self.latent_dim}), got {tuple(z.shape)}"
            )
        return self.trunk(z)

    def sample_latent(self, n: int, generator: Optional[torch.Generator] = None):
        """Z drawn uniformly from [-1, 1]."""
        u = torch.rand(n, self.latent_dim, generator=generator)
        return u * 2.0 - 1.0


class DiscriminatorNet(nn.Module):
    """Image -> 11 outputs: linear VA, sigmoid AUs, sigmoid fake."""

    def __init__(self, spec: ModelSpec):
        super().__init__()
        infer_shapes(spec)
        self.spec = spec
        self.resolution = int(spec.extra["resolution"])
        self.trunk, final = _build_stack(spec, spec.layers, spec.input_shape)
        if final != (11,):
            raise ShapeError(f"discriminator must end in 11 units, got {final}")

    def forward(self, images: torch.Tensor) -> DiscriminatorOutput:
        if images.ndim != 4 or images.shape[1] != 3:
            raise ShapeError(f"expected NCHW image batch, got {tuple(images.shape)}")
        raw = self.trunk(images)
        return DiscriminatorOutput(
            va=raw[:, 0:2],
            aus=torch.sigmoid(raw[:, 2:10]),
            fake=torch.sigmoid(raw[:, 10]),
        )


class TrailingAttention(nn.Module):
    """Additive-score softmax pooling over the last ``length`` GRU states.

    For each timestep t the context is a convex combination of the hidden
    states in [t - length + 1, t]; earlier timesteps use the shorter
    window that exists.
    """

    def __init__(self, hidden: int, length: int):
        super().__init__()
        self.length = length
        self.proj = nn.Linear(hidden, hidden)
        self.score = nn.Linear(hidden, 1, bias=False)

    def forward(self, h: torch.Tensor) -> torch.Tensor:
        s, t, hidden = h.shape
        window = self.length
        scores = self.score(torch.tanh(self.proj(h))).squeeze(-1)  # (S, T)
        neg_inf = torch.finfo(h.dtype).min
        padded_scores = nn.functional.pad(
            scores, (window - 1, 0), value=neg_inf
        ).unfold(1, window, 1)                      # (S, T, L)
        weights = torch.softmax(padded_scores, dim=-1)
        padded_h = nn.functional.pad(h, (0, 0, window - 1, 0)).unfold(1, window, 1)
        # padded_h: (S, T, H, L)
        return torch.einsum("stl,sthl->sth", weights, padded_h)


class MultiTaskNet(nn.Module):
    """Per-frame CNN -> GRU over the sequence -> attention -> 9 outputs."""

    def __init__(self, spec: ModelSpec):
        super().__init__()
        infer_shapes(spec)
        self.spec = spec
        self.resolution = int(spec.extra["resolution"])
        self.attention_length = int(spec.extra["attention_length"])
        gru_units = int(spec.extra["gru_units"])
        feature_dim = int(spec.extra["feature_dim"])

        kinds = [l.kind for l in spec.layers]
        gru_pos = kinds.index("gru")
        self.cnn, cnn_out = _build_stack(spec, spec.layers[:gru_pos], spec.input_shape)
        if cnn_out != (feature_dim,):
            raise ShapeError(f"feature stack produced {cnn_out}, expected {feature_dim}")
        self.gru = nn.GRU(feature_dim, gru_units, batch_first=True)
        self.attention = TrailingAttention(gru_units, self.attention_length)
        self.head = nn.Linear(gru_units, 9)

    def forward(self, images: torch.Tensor) -> MultiTaskOutput:
        if images.ndim != 5:
            raise ShapeError(
                f"expected (S, T, 3, H, W) sequence batch, got {tuple(images.shape)}"
            )
        s, t = images.shape[:2]
        if self.attention_length > t:
            raise ConfigurationError(
                f"attention_length {self.attention_length} exceeds sequence "
                f"length {t}"
            )
        feats = self.cnn(images.reshape(s * t, *images.shape[2:]))
        h, _ = self.gru(feats.reshape(s, t, -1))
        ctx = self.attention(h)
        out = self.head(ctx)
        return MultiTaskOutput(va=out[..., 0:2], expr_logits=out[..., 2:9])


def init_parameters(module: nn.Module, seed: int) -> None:
    """Deterministic init: same seed -> bit-identical parameters."""
    g = torch.Generator().manual_seed(seed)
    for name, p in module.named_parameters():
        with torch.no_grad():
            if "weight_ih" in name or "weight_hh" in name:
                hidden = p.shape[0] // 3
                bound = 1.0 / math.sqrt(hidden)
                p.uniform_(-bound, bound, generator=g)
            elif p.ndim >= 2:
                nn.init.trunc_normal_(p, std=0.02, a=-0.04, b=0.04, generator=g)
            elif name.endswith("weight"):
                p.fill_(1.0)  # batch-norm scale
            else:
                p.zero_()


def materialize(spec: ModelSpec, seed: int = 0) -> nn.Module:
    """Build and deterministically initialize the module for a spec."""
    heads = set(spec.output_heads)
    if heads == {"image"}:
        net = GeneratorNet(spec)
    elif heads == {"va", "aus", "fake"}:
        net = DiscriminatorNet(spec)
    elif heads == {"va", "expr"}:
        net = MultiTaskNet(spec)
    else:
        raise ConfigurationError(f"cannot materialize heads {sorted(heads)}")
    init_parameters(net, seed)
    return net


def set_mode(model: nn.Module, mode: str) -> nn.Module:
    """train: batch-norm uses batch statistics; inference: running stats."""
    if mode == "train":
        return model.train()
    if mode == "inference":
        return model.eval()
    raise ConfigurationError(f"mode must be train or inference, got {mode!r}")


def freeze(model: nn.Module, cnn_backbone: bool = True) -> nn.Module:
    """Exclude (or re-include) the CNN feature stack from optimization."""
    if not isinstance(model, MultiTaskNet):
        raise ConfigurationError("freeze targets the multi-task CNN backbone")
    for p in model.cnn.parameters():
        p.requires_grad_(not cnn_backbone)
    return model


def trainable_parameters(model: nn.Module) -> List[torch.nn.Parameter]:
    return [p for p in model.parameters() if p.requires_grad]
