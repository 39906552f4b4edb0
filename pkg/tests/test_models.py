import pytest
import torch

from affmt.errors import ConfigurationError, ShapeError, ValidationError
from affmt.models import (
    LayerSpec,
    ModelSpec,
    build_discriminator_c1,
    build_discriminator_c2,
    build_generator_c1,
    build_generator_c2,
    build_multitask_cnn_rnn,
    count_parameters,
    freeze,
    head_width,
    infer_shapes,
    materialize,
    render_table,
    set_mode,
)
from affmt.models.nets import TrailingAttention
from affmt.models.spec import conv, fully_connected


def test_generator_c1_shape_chain():
    spec = build_generator_c1()
    shapes = infer_shapes(spec)
    spatial = [s for s in shapes if len(s) == 3]
    assert spatial[0] == (1, 1, 100)
    # transposed-conv chain 1 -> 2 -> 6 -> 14 -> 32
    assert (2, 2, 384) in spatial
    assert (6, 6, 128) in spatial
    assert (14, 14, 64) in spatial
    assert shapes[-1] == (32, 32, 3)


def test_generator_c2_doubling_chain():
    for k in (5, 7):
        spec = build_generator_c2(kernel=k)
        shapes = infer_shapes(spec)
        spatial = [
            s[0]
            for layer, s in zip(spec.layers, shapes)
            if layer.kind in ("reshape", "conv-transpose")
        ]
        # 6 -> 12 -> 24 -> 48 -> 96
        assert spatial == [6, 12, 24, 48, 96]
        assert shapes[-1] == (96, 96, 3)


def test_c2_kernel_variants_differ_only_in_filters():
    s5, s7 = build_generator_c2(5), build_generator_c2(7)
    for l5, l7 in zip(s5.layers, s7.layers):
        if l5.kind == "conv-transpose":
            assert l5.filter_shape[:2] == (5, 5)
            assert l7.filter_shape[:2] == (7, 7)
            assert l5.filter_shape[2:] == l7.filter_shape[2:]
            assert l5.stride == l7.stride
        else:
            assert l5 == l7


def test_c2_rejects_other_kernels():
    with pytest.raises(ConfigurationError):
        build_generator_c2(kernel=3)
    with pytest.raises(ConfigurationError):
        build_discriminator_c2(kernel=4)


def test_discriminator_head_cardinality():
    for spec in (build_discriminator_c1(), build_discriminator_c2(5),
                 build_discriminator_c2(7)):
        assert head_width(spec) == 11
        assert spec.output_heads == {"va": 2, "aus": 8, "fake": 1}


def test_multitask_head_cardinality():
    spec = build_multitask_cnn_rnn(backbone="tiny", resolution=32,
                                   attention_length=4)
    assert head_width(spec) == 9
    assert spec.output_heads == {"va": 2, "expr": 7}


def test_corrupted_spec_fails_statically():
    with pytest.raises(ShapeError):
        ModelSpec(
            name="broken",
            input_shape=(32, 32, 3),
            layers=(
                conv((5, 5, 3, 64), (1, 2, 2, 1), "same"),
                conv((5, 5, 128, 256), (1, 2, 2, 1), "same"),  # wrong in-channels
                fully_connected(11),
            ),
            output_heads={"va": 2, "aus": 8, "fake": 1},
        )
    with pytest.raises(ShapeError):
        ModelSpec(
            name="bad_heads",
            input_shape=(8, 8, 3),
            layers=(fully_connected(10),),
            output_heads={"va": 2, "aus": 8, "fake": 1},  # sums to 11, not 10
        )


def test_layer_spec_field_discipline():
    with pytest.raises(ValidationError):
        LayerSpec("batch-norm", units=4)
    with pytest.raises(ValidationError):
        LayerSpec("conv", filter_shape=(3, 3, 1, 8))  # stride/padding missing
    with pytest.raises(ValidationError):
        LayerSpec("activation", activation="swish")


def test_generator_c1_forward_shapes_and_range():
    net = materialize(build_generator_c1(), seed=0)
    set_mode(net, "inference")
    for batch in (1, 7, 64):
        z = net.sample_latent(batch, torch.Generator().manual_seed(1))
        with torch.no_grad():
            out = net(z)
        assert out.shape == (batch, 3, 32, 32)
        assert float(out.min()) >= -1.0 and float(out.max()) <= 1.0


def test_generator_c1_deterministic_forward():
    net = materialize(build_generator_c1(), seed=0)
    set_mode(net, "inference")
    z = net.sample_latent(4, torch.Generator().manual_seed(2))
    a = net(z)
    b = net(z)
    assert torch.equal(a, b)


def test_generator_c2_forward_both_kernels():
    for k in (5, 7):
        net = materialize(build_generator_c2(k), seed=0)
        set_mode(net, "inference")
        z = net.sample_latent(2, torch.Generator().manual_seed(0))
        with torch.no_grad():
            out = net(z)
        assert out.shape == (2, 3, 96, 96)
        assert float(out.abs().max()) <= 1.0


def test_discriminator_c1_forward_heads():
    net = materialize(build_discriminator_c1(), seed=0)
    set_mode(net, "inference")
    for batch in (1, 7, 64):
        x = torch.rand(batch, 3, 32, 32) * 2 - 1
        out = net(x)
        assert out.va.shape == (batch, 2)
        assert out.aus.shape == (batch, 8)
        assert out.fake.shape == (batch,)
        assert torch.all((out.aus > 0) & (out.aus < 1))
        assert torch.all((out.fake > 0) & (out.fake < 1))


def test_discriminator_c2_forward():
    net = materialize(build_discriminator_c2(5), seed=0)
    set_mode(net, "inference")
    out = net(torch.rand(2, 3, 96, 96) * 2 - 1)
    assert out.va.shape == (2, 2) and out.aus.shape == (2, 8)


def test_discriminator_c1_parameter_count_matches_table_arithmetic():
    spec = build_discriminator_c1()
    # hand arithmetic over the layer table (conv weights, batch-norm
    # scale+shift, final fully-connected with bias; convs feeding a
    # batch-norm carry no bias)
    conv1 = 5 * 5 * 3 * 64
    conv2 = 5 * 5 * 64 * 128
    conv3 = 5 * 5 * 128 * 256
    bn = 2 * 64 + 2 * 128 + 2 * 256
    fc = 4 * 4 * 256 * 11 + 11
    expected = conv1 + conv2 + conv3 + bn + fc
    assert count_parameters(spec) == expected
    net = materialize(spec, seed=0)
    assert sum(p.numel() for p in net.parameters()) == expected


def test_generator_c1_parameter_count_matches_torch():
    spec = build_generator_c1()
    net = materialize(spec, seed=0)
    assert count_parameters(spec) == sum(p.numel() for p in net.parameters())


def test_config2_parameter_counts_match_torch():
    for spec in (build_generator_c2(5), build_generator_c2(7),
                 build_discriminator_c2(5), build_discriminator_c2(7)):
        net = materialize(spec, seed=0)
        assert count_parameters(spec) == sum(
            p.numel() for p in net.parameters()
        ), spec.name


def test_multitask_parameter_count_matches_torch():
    spec = build_multitask_cnn_rnn(backbone="tiny", resolution=32,
                                   gru_units=32, attention_length=4,
                                   feature_dim=64)
    net = materialize(spec, seed=0)
    assert count_parameters(spec) == sum(p.numel() for p in net.parameters())


def test_seed_deterministic_init():
    a = materialize(build_generator_c1(), seed=42)
    b = materialize(build_generator_c1(), seed=42)
    c = materialize(build_generator_c1(), seed=43)
    for (na, pa), (_, pb) in zip(a.named_parameters(), b.named_parameters()):
        assert torch.equal(pa, pb), na
    assert any(
        not torch.equal(pa, pc)
        for (_, pa), (_, pc) in zip(a.named_parameters(), c.named_parameters())
    )


def test_multitask_forward_contract():
    spec = build_multitask_cnn_rnn(backbone="tiny", resolution=32,
                                   gru_units=32, attention_length=4,
                                   feature_dim=64)
    net = materialize(spec, seed=0)
    set_mode(net, "inference")
    x = torch.rand(2, 8, 3, 32, 32) * 2 - 1
    out = net(x)
    assert out.va.shape == (2, 8, 2)
    assert out.expr_logits.shape == (2, 8, 7)
    sums = out.expr_probs.sum(dim=-1)
    assert torch.all((sums - 1.0).abs() < 1e-6)


def test_multitask_attention_longer_than_sequence_rejected():
    spec = build_multitask_cnn_rnn(backbone="tiny", resolution=32,
                                   gru_units=16, attention_length=10,
                                   feature_dim=32)
    net = materialize(spec, seed=0)
    with pytest.raises(ConfigurationError):
        net(torch.zeros(1, 4, 3, 32, 32))


def test_multitask_vgg_style_builds_and_runs():
    spec = build_multitask_cnn_rnn(backbone="vgg-style", resolution=96,
                                   gru_units=32, attention_length=2)
    net = materialize(spec, seed=0)
    set_mode(net, "inference")
    out = net(torch.zeros(1, 2, 3, 96, 96))
    assert out.va.shape == (1, 2, 2)


def test_trailing_attention_matches_window_oracle():
    torch.manual_seed(0)
    att = TrailingAttention(hidden=6, length=3).double()
    h = torch.randn(2, 5, 6, dtype=torch.float64)
    got = att(h)
    scores = att.score(torch.tanh(att.proj(h))).squeeze(-1)
    for s in range(2):
        for t in range(5):
            lo = max(0, t - 2)
            w = torch.softmax(scores[s, lo:t + 1], dim=0)
            want = (w.unsqueeze(-1) * h[s, lo:t + 1]).sum(dim=0)
            assert torch.allclose(got[s, t], want, atol=1e-12)


def test_freeze_marks_backbone_parameters():
    spec = build_multitask_cnn_rnn(backbone="tiny", resolution=32,
                                   gru_units=16, attention_length=2,
                                   feature_dim=32)
    net = materialize(spec, seed=0)
    freeze(net, cnn_backbone=True)
    assert all(not p.requires_grad for p in net.cnn.parameters())
    assert all(p.requires_grad for p in net.gru.parameters())
    freeze(net, cnn_backbone=False)
    assert all(p.requires_grad for p in net.cnn.parameters())


def test_batchnorm_mode_switch():
    net = materialize(build_discriminator_c1(), seed=0)
    bn = [m for m in net.modules() if isinstance(m, torch.nn.BatchNorm2d)][0]
    before = bn.running_mean.clone()
    set_mode(net, "train")
    net(torch.rand(8, 3, 32, 32) * 2 - 1)
    assert not torch.equal(bn.running_mean, before)
    # inference mode leaves stats alone and is repeatable
    set_mode(net, "inference")
    stats = bn.running_mean.clone()
    x = torch.rand(4, 3, 32, 32)
    a, b = net(x), net(x)
    assert torch.equal(a.va, b.va)
    assert torch.equal(bn.running_mean, stats)


def test_render_table_mirrors_layers():
    text = render_table(build_generator_c1())
    assert "conv2d transpose 1" in text
    assert "[2, 2, 100, 384]" in text
    assert "VALID" in text
    assert "heads: image=32x32x3" in text
    text2 = render_table(build_discriminator_c1())
    assert "fully connected" in text2 and "11" in text2
    assert "va=2 (linear)" in text2
