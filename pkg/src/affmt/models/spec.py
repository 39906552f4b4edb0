"""Declarative layer tables with static shape checking.

A ModelSpec is a data-only description of a network: ordered LayerSpecs
plus named output heads. Shapes compose statically via infer_shapes, so a
bad table fails before any parameter is allocated, and render_table prints
the table in the same layer/filter/stride/padding layout used to document
the architectures, which makes review diffs trivial.

Filter shapes follow the (height, width, in_channels, out_channels)
convention and strides are 4-tuples (1, s, s, 1); spatial arithmetic uses
the usual SAME/VALID rules (SAME: ceil(n/s) for conv, n*s for transposed
conv; VALID: (n-k)//s+1 and (n-1)*s+k respectively).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

from affmt.errors import ShapeError, ValidationError

KINDS = (
    "conv",
    "conv-transpose",
    "fully-connected",
    "batch-norm",
    "activation",
    "max-pool",
    "reshape",
    "gru",
    "attention",
)

ACTIVATIONS = ("relu", "leaky-relu", "tanh", "sigmoid", "linear", "softmax")


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    filter_shape: Optional[Tuple[int, int, int, int]] = None
    stride: Optional[Tuple[int, int, int, int]] = None
    padding: Optional[str] = None
    units: Optional[int] = None
    activation: Optional[str] = None
    shape: Optional[Tuple[int, ...]] = None
    length: Optional[int] = None
    slope: Optional[float] = None  # leaky-relu negative slope

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown layer kind {self.kind!r}")
        needs = {
            "conv": ("filter_shape", "stride", "padding"),
            "conv-transpose": ("filter_shape", "stride", "padding"),
            "max-pool": ("stride", "padding"),
            "fully-connected": ("units",),
            "activation": ("activation",),
            "reshape": ("shape",),
            "gru": ("units",),
            "attention": ("length",),
            "batch-norm": (),
        }[self.kind]
        allowed = set(needs)
        if self.kind == "max-pool":
            allowed.add("filter_shape")
        if self.kind == "activation":
            allowed.add("slope")
        for name in ("filter_shape", "stride", "padding", "units",
                     "activation", "shape", "length", "slope"):
            value = getattr(self, name)
            if name in needs and value is None:
                raise ValidationError(f"{self.kind} layer requires {name}")
            if value is not None and name not in allowed:
                raise ValidationError(
                    f"{name} is meaningless for a {self.kind} layer"
                )
        if self.padding is not None and self.padding not in ("same", "valid"):
            raise ValidationError(f"padding must be same/valid, got {self.padding!r}")
        if self.activation is not None and self.activation not in ACTIVATIONS:
            raise ValidationError(f"unknown activation {self.activation!r}")


def conv(filter_shape, stride, padding) -> LayerSpec:
    return LayerSpec("conv", filter_shape=tuple(filter_shape),
                     stride=tuple(stride), padding=padding)


def conv_transpose(filter_shape, stride, padding) -> LayerSpec:
    return LayerSpec("conv-transpose", filter_shape=tuple(filter_shape),
                     stride=tuple(stride), padding=padding)


def fully_connected(units) -> LayerSpec:
    return LayerSpec("fully-connected", units=int(units))


def batch_norm() -> LayerSpec:
    return LayerSpec("batch-norm")


def activation(name, slope=None) -> LayerSpec:
    return LayerSpec("activation", activation=name, slope=slope)


def max_pool(size, stride, padding="same") -> LayerSpec:
    return LayerSpec("max-pool", filter_shape=(size, size, 0, 0),
                     stride=(1, stride, stride, 1), padding=padding)


def reshape(shape) -> LayerSpec:
    return LayerSpec("reshape", shape=tuple(shape))


def gru(units) -> LayerSpec:
    return LayerSpec("gru", units=int(units))


def attention(length) -> LayerSpec:
    return LayerSpec("attention", length=int(length))


@dataclass(frozen=True)
class ModelSpec:
    name: str
    input_shape: Tuple[int, ...]
    layers: Tuple[LayerSpec, ...]
    output_heads: Dict[str, Union[int, Tuple[int, ...]]]
    head_activations: Dict[str, str] = field(default_factory=dict)
    extra: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        infer_shapes(self)  # composition must be statically valid


Shape = Tuple[int, ...]


def _spatial_out(n: int, k: int, s: int, padding: str, transpose: bool) -> int:
    if transpose:
        if padding == "same":
            return n * s
        return (n - 1) * s + k
    if padding == "same":
        return math.ceil(n / s)
    if n < k:
        raise ShapeError(f"valid conv: input {n} smaller than kernel {k}")
    return (n - k) // s + 1


def infer_shapes(spec: ModelSpec) -> List[Shape]:
    """Output shape after every layer; raises ShapeError on a mismatch."""
    shape: Shape = tuple(spec.input_shape)
    out: List[Shape] = []
    for i, layer in enumerate(spec.layers):
        where = f"{spec.name} layer {i} ({layer.kind})"
        if layer.kind in ("conv", "conv-transpose"):
            if len(shape) != 3:
                raise ShapeError(f"{where}: needs HxWxC input, got {shape}")
            h, w, c = shape
            kh, kw, cin, cout = layer.filter_shape
            if cin != c:
                raise ShapeError(
                    f"{where}: filter expects {cin} channels, input has {c}"
                )
            _, sh, sw, _ = layer.stride
            shape = (
                _spatial_out(h, kh, sh, layer.padding, layer.kind == "conv-transpose"),
                _spatial_out(w, kw, sw, layer.padding, layer.kind == "conv-transpose"),
                cout,
            )
        elif layer.kind == "max-pool":
            if len(shape) != 3:
                raise ShapeError(f"{where}: needs HxWxC input, got {shape}")
            h, w, c = shape
            kh, kw = layer.filter_shape[0], layer.filter_shape[1]
            _, sh, sw, _ = layer.stride
            shape = (
                _spatial_out(h, kh, sh, layer.padding, False),
                _spatial_out(w, kw, sw, layer.padding, False),
                c,
            )
        elif layer.kind == "fully-connected":
            shape = (layer.units,)
        elif layer.kind in ("batch-norm", "activation"):
            pass
        elif layer.kind == "reshape":
            if math.prod(shape) != math.prod(layer.shape):
                raise ShapeError(
                    f"{where}: cannot reshape {shape} "
                    f"({math.prod(shape)} values) to {layer.shape}"
                )
            shape = tuple(layer.shape)
        elif layer.kind == "gru":
            if len(shape) != 1:
                raise ShapeError(f"{where}: needs flat features, got {shape}")
            shape = (layer.units,)
        elif layer.kind == "attention":
            if len(shape) != 1:
                raise ShapeError(f"{where}: needs flat features, got {shape}")
        out.append(shape)

    _check_heads(spec, shape)
    return out


def _check_heads(spec: ModelSpec, final: Shape) -> None:
    heads = spec.output_heads
    if not heads:
        raise ShapeError(f"{spec.name}: no output heads declared")
    values = list(heads.values())
    if len(heads) == 1 and isinstance(values[0], tuple):
        if tuple(values[0]) != final:
            raise ShapeError(
                f"{spec.name}: head {values[0]} != final layer output {final}"
            )
        return
    if any(not isinstance(v, int) for v in values):
        raise ShapeError(f"{spec.name}: multi-head sizes must be integers")
    if len(final) != 1 or sum(values) != final[0]:
        raise ShapeError(
            f"{spec.name}: heads sum to {sum(values)} but final layer "
            f"produces {final}"
        )


def head_width(spec: ModelSpec) -> int:
    """Total scalar outputs across all heads."""
    total = 0
    for v in spec.output_heads.values():
        total += math.prod(v) if isinstance(v, tuple) else v
    return total


def count_parameters(spec: ModelSpec) -> int:
    """Parameter count implied by the table.

    Conv-family layers immediately followed by batch normalization carry
    no bias; fully-connected layers always do. GRU/attention counts match
    the runtime implementation (3 gate matrices with two bias vectors;
    additive attention with one hidden projection and a score vector).
    """
    total = 0
    shape = tuple(spec.input_shape)
    shapes = infer_shapes(spec)
    for i, layer in enumerate(spec.layers):
        next_bn = i + 1 < len(spec.layers) and spec.layers[i + 1].kind == "batch-norm"
        if layer.kind in ("conv", "conv-transpose"):
            kh, kw, cin, cout = layer.filter_shape
            total += kh * kw * cin * cout + (0 if next_bn else cout)
        elif layer.kind == "batch-norm":
            total += 2 * shape[-1]
        elif layer.kind == "fully-connected":
            total += math.prod(shape) * layer.units + layer.units
        elif layer.kind == "gru":
            n_in, h = math.prod(shape), layer.units
            total += 3 * (n_in * h + h * h) + 6 * h
        elif layer.kind == "attention":
            h = shape[0]
            total += h * h + h + h  # projection weight+bias, score vector
        shape = shapes[i]
    return total


_KIND_LABEL = {
    "conv": "conv2d",
    "conv-transpose": "conv2d transpose",
    "fully-connected": "fully connected",
    "batch-norm": "batch normalization",
    "max-pool": "max pool",
    "reshape": "reshape",
    "gru": "gru",
    "attention": "attention",
}


def render_table(spec: ModelSpec) -> str:
    """Layer table as aligned text, one row per layer."""
    rows = [("Layer", "filter", "stride", "padding", "units")]
    counters: Dict[str, int] = {}
    for layer in spec.layers:
        if layer.kind == "activation":
            label = layer.activation if layer.slope is None else (
                f"{layer.activation}({layer.slope})"
            )
            rows.append((label, "", "", "", ""))
            continue
        base = _KIND_LABEL[layer.kind]
        if layer.kind in ("conv", "conv-transpose"):
            counters[base] = counters.get(base, 0) + 1
            label = f"{base} {counters[base]}"
            rows.append((
                label,
                str(list(layer.filter_shape)),
                str(list(layer.stride)),
                layer.padding.upper(),
                "",
            ))
        elif layer.kind == "max-pool":
            rows.append((base, f"{layer.filter_shape[0]}x{layer.filter_shape[1]}",
                         str(list(layer.stride)), layer.padding.upper(), ""))
        elif layer.kind == "fully-connected":
            rows.append((base, "", "", "", str(layer.units)))
        elif layer.kind == "reshape":
            rows.append((base, "", "", "", "x".join(map(str, layer.shape))))
        elif layer.kind == "gru":
            rows.append((base, "", "", "", str(layer.units)))
        elif layer.kind == "attention":
            rows.append((base, "", "", "", f"length {layer.length}"))
        else:
            rows.append((base, "", "", "", ""))

    widths = [max(len(r[c]) for r in rows) for c in range(5)]
    lines = [
        " | ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip()
        for row in rows
    ]
    heads = ", ".join(
        f"{name}={v if isinstance(v, int) else 'x'.join(map(str, v))}"
        + (f" ({spec.head_activations[name]})" if name in spec.head_activations else "")
        for name, v in spec.output_heads.items()
    )
    header = f"{spec.name}: input {'x'.join(map(str, spec.input_shape))}"
    return "\n".join([header, *lines, f"heads: {heads}"]) + "\n"
