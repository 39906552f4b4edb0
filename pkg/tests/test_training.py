import numpy as np
import pytest
import torch

from affmt.errors import CheckpointError, ConfigurationError
from affmt.losses import FAKE_AU_TARGET, FAKE_CLASS_TARGET, FAKE_VA_TARGET
from affmt.preprocessing import FrameSampler
from affmt.training import (
    Adam,
    GANTrainConfig,
    GANTrainer,
    MTTrainConfig,
    MultiTaskTrainer,
    clip_global_norm,
    load_checkpoint,
    save_checkpoint,
)


def small_gan_config(**overrides):
    base = dict(configuration=1, batch=8, steps=10, seed=0)
    base.update(overrides)
    return GANTrainConfig(**base)


def small_mt_config(**overrides):
    base = dict(
        lr=1e-3, n_sequences=2, seq_length=8, attention_length=4,
        backbone="tiny", gru_units=32, feature_dim=64, resolution=32,
        steps=5, seed=0,
    )
    base.update(overrides)
    return MTTrainConfig(**base)


# --- optimizer ---------------------------------------------------------------

def test_adam_matches_torch_reference():
    torch.manual_seed(0)
    shapes = [(4, 3), (7,), (2, 2, 3)]
    ours = [torch.nn.Parameter(torch.randn(s, dtype=torch.float64)) for s in shapes]
    theirs = [torch.nn.Parameter(p.detach().clone()) for p in ours]
    mine = Adam([(f"p{i}", p) for i, p in enumerate(ours)],
                lr=1e-2, beta1=0.5, beta2=0.999, eps=1e-8)
    ref = torch.optim.Adam(theirs, lr=1e-2, betas=(0.5, 0.999), eps=1e-8)
    for step in range(7):
        g = [torch.randn_like(p) for p in ours]
        for p, gp in zip(ours, g):
            p.grad = gp.clone()
        for p, gp in zip(theirs, g):
            p.grad = gp.clone()
        mine.step()
        ref.step()
        for a, b in zip(ours, theirs):
            assert torch.allclose(a, b, atol=1e-12), f"diverged at step {step}"


def test_adam_skips_frozen_parameters():
    p_free = torch.nn.Parameter(torch.ones(3))
    p_frozen = torch.nn.Parameter(torch.ones(3))
    p_frozen.requires_grad_(False)
    opt = Adam([("a", p_free), ("b", p_frozen)], lr=0.1)
    p_free.grad = torch.ones(3)
    opt.step()
    assert not torch.equal(p_free, torch.ones(3))
    assert torch.equal(p_frozen, torch.ones(3))


def test_clip_global_norm():
    p1 = torch.nn.Parameter(torch.zeros(4))
    p2 = torch.nn.Parameter(torch.zeros(9))
    # grads with global norm 40
    p1.grad = torch.full((4,), 40.0 / np.sqrt(13.0))
    p2.grad = torch.full((9,), 40.0 / np.sqrt(13.0))
    pre, post = clip_global_norm([p1, p2], 20.0)
    assert pre == pytest.approx(40.0, rel=1e-6)
    assert post == pytest.approx(20.0, rel=1e-4)
    assert post <= 20.0 + 1e-9
    # below the threshold nothing changes
    p1.grad = torch.full((4,), 0.1)
    p2.grad = torch.full((9,), 0.1)
    pre, post = clip_global_norm([p1, p2], 20.0)
    assert pre == post


# --- GAN loop ----------------------------------------------------------------

def test_gan_update_schedule(corpus32):
    trainer = GANTrainer(small_gan_config(gen_steps_per_disc_step=5))
    reports = trainer.run(corpus32, steps=10)
    assert trainer.gen_steps == 10
    assert trainer.disc_steps == 2
    updated = [r.disc is not None for r in reports]
    assert updated == [False, False, False, False, True] * 2


def test_gan_clipping_invariant(corpus32):
    trainer = GANTrainer(small_gan_config())
    for report in trainer.run(corpus32, steps=8):
        assert report.gen_grad_norm[1] <= 20.0 + 1e-9
        if report.disc_grad_norm is not None:
            assert report.disc_grad_norm[1] <= 20.0 + 1e-9


def test_gan_label_smoothing_instrumented(corpus32):
    trainer = GANTrainer(small_gan_config(gen_steps_per_disc_step=1))
    sampler = FrameSampler(corpus32, 8, seed=0)
    report = trainer.train_step(sampler.batch(0))
    targets = report.disc.targets
    assert torch.all(targets["fake_va"] == FAKE_VA_TARGET)
    assert targets["fake_va"].shape == (8, 2)
    assert torch.all(targets["fake_au"] == FAKE_AU_TARGET)
    assert targets["fake_au"].shape == (8, 8)
    assert torch.all(targets["fake_fake"] == FAKE_CLASS_TARGET)
    assert torch.all(targets["real_fake"] == 0.0)


def test_gan_update_partitioning(corpus32):
    # bitwise check on one sampled call that performs both updates
    trainer = GANTrainer(small_gan_config(gen_steps_per_disc_step=1))
    sampler = FrameSampler(corpus32, 8, seed=0)
    gen_before = [p.detach().clone() for p in trainer.generator.parameters()]
    captured = {}
    original_gen_step = trainer.gen_opt.step

    def capture_then_step():
        # runs after the discriminator update, before the generator update
        captured["gen"] = [p.detach().clone() for p in trainer.generator.parameters()]
        captured["disc"] = [p.detach().clone() for p in trainer.discriminator.parameters()]
        original_gen_step()

    trainer.gen_opt.step = capture_then_step
    trainer.train_step(sampler.batch(0))
    # discriminator's update left every generator parameter untouched
    for before, mid in zip(gen_before, captured["gen"]):
        assert torch.equal(before, mid)
    # generator's update left every discriminator parameter untouched
    for mid, after in zip(captured["disc"], trainer.discriminator.parameters()):
        assert torch.equal(mid, after)


def test_gan_determinism(corpus32):
    losses = []
    for _ in range(2):
        trainer = GANTrainer(small_gan_config(seed=3))
        reports = trainer.run(corpus32, steps=6)
        losses.append([float(r.gen.total) for r in reports])
    assert losses[0] == losses[1]


def test_gan_rejects_wrong_resolution(corpus32):
    trainer = GANTrainer(GANTrainConfig(configuration=2, batch=4, seed=0))
    sampler = FrameSampler(corpus32, 4, seed=0)
    from affmt.errors import ValidationError
    with pytest.raises(ValidationError):
        trainer.train_step(sampler.batch(0))


# --- multi-task loop ---------------------------------------------------------

def test_mt_single_task_reduction_zeroes_head_gradients(corpus32):
    trainer = MultiTaskTrainer(small_mt_config(alpha=1.0, beta=0.0))
    sampler = trainer.sampler(corpus32)
    trainer.train_step(sampler.batch(0))
    head = trainer.model.head
    # rows 2..9 of the 9-output head belong to the expression task
    assert torch.all(head.weight.grad[2:9] == 0.0)
    assert torch.all(head.bias.grad[2:9] == 0.0)
    assert torch.any(head.weight.grad[0:2] != 0.0)

    trainer = MultiTaskTrainer(small_mt_config(alpha=0.0, beta=1.0))
    sampler = trainer.sampler(corpus32)
    trainer.train_step(sampler.batch(0))
    head = trainer.model.head
    assert torch.all(head.weight.grad[0:2] == 0.0)
    assert torch.any(head.weight.grad[2:9] != 0.0)


def test_mt_freeze_cnn_keeps_backbone_bitwise_identical(corpus32):
    trainer = MultiTaskTrainer(small_mt_config(freeze_cnn=True))
    before = [p.detach().clone() for p in trainer.model.cnn.parameters()]
    sampler = trainer.sampler(corpus32)
    for step in range(3):
        trainer.train_step(sampler.batch(step))
    for b, p in zip(before, trainer.model.cnn.parameters()):
        assert torch.equal(b, p)
    # the rest of the network did move
    assert any(
        p.grad is not None and torch.any(p.grad != 0)
        for p in trainer.model.gru.parameters()
    )


def test_mt_loss_decreases_on_small_corpus(corpus32):
    trainer = MultiTaskTrainer(small_mt_config(steps=40))
    reports = trainer.run(corpus32)
    first = float(reports[0].bundle.total)
    last = float(np.median([float(r.bundle.total) for r in reports[-5:]]))
    assert last < first


def test_mt_config_validation():
    with pytest.raises(ConfigurationError):
        MTTrainConfig(seq_length=8, attention_length=16)
    with pytest.raises(ConfigurationError):
        MTTrainConfig(alpha=2.0)


# --- checkpointing -----------------------------------------------------------

def test_checkpoint_roundtrip_gan(tmp_path, corpus32):
    trainer = GANTrainer(small_gan_config())
    trainer.run(corpus32, steps=4)
    save_checkpoint(trainer, tmp_path / "ck")
    restored = load_checkpoint(tmp_path / "ck")
    a = trainer.named_tensors()
    b = restored.named_tensors()
    assert set(a) == set(b)
    for k in a:
        assert torch.equal(a[k], b[k]), k
    assert restored.counters() == trainer.counters()
    assert restored.rng_state() == trainer.rng_state()


def test_checkpoint_resume_reproduces_run(tmp_path, corpus32):
    # uninterrupted run
    full = GANTrainer(small_gan_config(seed=9))
    full_losses = [float(r.gen.total) for r in full.run(corpus32, steps=14)]

    part = GANTrainer(small_gan_config(seed=9))
    part.run(corpus32, steps=7)
    save_checkpoint(part, tmp_path / "ck")
    resumed = load_checkpoint(tmp_path / "ck")
    tail = [float(r.gen.total) for r in resumed.run(corpus32, steps=7)]
    for a, b in zip(full_losses[7:], tail):
        assert abs(a - b) <= 1e-10 * max(1.0, abs(a))


def test_checkpoint_resume_multitask(tmp_path, corpus32):
    full = MultiTaskTrainer(small_mt_config(seed=2))
    full_losses = [float(r.bundle.total) for r in full.run(corpus32, steps=10)]

    part = MultiTaskTrainer(small_mt_config(seed=2))
    part.run(corpus32, steps=5)
    save_checkpoint(part, tmp_path / "ck")
    resumed = load_checkpoint(tmp_path / "ck")
    tail = [float(r.bundle.total) for r in resumed.run(corpus32, steps=5)]
    for a, b in zip(full_losses[5:], tail):
        assert abs(a - b) <= 1e-10 * max(1.0, abs(a))


def test_checkpoint_fingerprint_refusal(tmp_path, corpus32):
    trainer = GANTrainer(small_gan_config(seed=1))
    save_checkpoint(trainer, tmp_path / "ck")
    other = small_gan_config(seed=2)
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "ck", config=other)
    # matching config loads fine
    load_checkpoint(tmp_path / "ck", config=small_gan_config(seed=1))


def test_checkpoint_integrity_error(tmp_path):
    trainer = MultiTaskTrainer(small_mt_config())
    save_checkpoint(trainer, tmp_path / "ck")
    blob_path = tmp_path / "ck" / "tensors.bin"
    data = bytearray(blob_path.read_bytes())
    data[10] ^= 0xFF
    blob_path.write_bytes(bytes(data))
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "ck")
