"""Random fixtures for finite-difference gradient checks of every loss.

Each builder returns (fn, inputs): a scalar function of float tensors and
the tensors to differentiate. Probabilities are sampled well inside the
clipping range so perturbations never cross a clamp boundary.
"""

import numpy as np
import torch

from affmt.losses import (
    DiscriminatorHeads,
    au_bce_loss,
    ccc,
    ccc_va_loss,
    discriminator_loss,
    expression_loss,
    fake_bce_loss,
    generator_loss,
    huber,
    mse_va_loss,
    multitask_loss,
)


def _t(a):
    return torch.tensor(np.asarray(a), dtype=torch.float64)


def ccc_fixture(rng):
    n = int(rng.integers(3, 12))
    return ccc, [_t(rng.uniform(-1, 1, n)), _t(rng.uniform(-1, 1, n))]


def ccc_va_fixture(rng):
    n = int(rng.integers(3, 10))
    return ccc_va_loss, [_t(rng.uniform(-1, 1, (n, 2))), _t(rng.uniform(-1, 1, (n, 2)))]


def mse_va_fixture(rng):
    n = int(rng.integers(2, 10))
    return mse_va_loss, [_t(rng.uniform(-1, 1, (n, 2))), _t(rng.uniform(-1, 1, (n, 2)))]


def au_bce_fixture(rng):
    n = int(rng.integers(2, 8))
    pred = rng.uniform(0.05, 0.95, (n, 8))
    soft = rng.random() < 0.5
    target = (
        rng.uniform(0.05, 0.95, (n, 8))
        if soft
        else rng.integers(0, 2, (n, 8)).astype(float)
    )
    if soft:
        return au_bce_loss, [_t(pred), _t(target)]
    frozen = _t(target)
    return (lambda p: au_bce_loss(p, frozen)), [_t(pred)]


def fake_bce_fixture(rng):
    n = int(rng.integers(2, 10))
    pred = rng.uniform(0.05, 0.95, n)
    target = rng.uniform(0.05, 0.95, n)
    return fake_bce_loss, [_t(pred), _t(target)]


def huber_fixture(rng):
    n = int(rng.integers(4, 20))
    vals = rng.uniform(-3, 3, n)
    return (lambda r: huber(r, delta=1.0).mean()), [_t(vals)]


def generator_fixture(rng):
    n = int(rng.integers(2, 5))
    shape = (n, 3, 4, 4)
    w = float(rng.uniform(0.0, 1.0))

    def fn(x, fake_imgs, real_imgs):
        return generator_loss(x, fake_imgs, real_imgs, recon_weight=w).total

    return fn, [
        _t(rng.uniform(0.05, 0.95, n)),
        _t(rng.uniform(-1, 1, shape)),
        _t(rng.uniform(-1, 1, shape)),
    ]


def discriminator_fixture(rng, va_mode="ccc", heads="joint"):
    n = int(rng.integers(3, 6))

    def fn(rva, raus, rfake, va_t, au_t, fva, faus, ffake):
        bundle = discriminator_loss(
            DiscriminatorHeads(rva, raus, rfake),
            va_t,
            au_t,
            DiscriminatorHeads(fva, faus, ffake),
            va_mode=va_mode,
            heads=heads,
        )
        return bundle.total

    return fn, [
        _t(rng.uniform(-1, 1, (n, 2))),
        _t(rng.uniform(0.05, 0.95, (n, 8))),
        _t(rng.uniform(0.05, 0.95, n)),
        _t(rng.uniform(-1, 1, (n, 2))),
        _t(rng.integers(0, 2, (n, 8)).astype(float)),
        _t(rng.uniform(-1, 1, (n, 2))),
        _t(rng.uniform(0.05, 0.95, (n, 8))),
        _t(rng.uniform(0.05, 0.95, n)),
    ]


def expression_fixture(rng, mode="xent"):
    n = int(rng.integers(3, 8))
    labels = torch.tensor(rng.integers(0, 7, n), dtype=torch.int64)

    def fn(logits):
        return expression_loss(logits, labels, mode)

    return fn, [_t(rng.normal(size=(n, 7)))]


def multitask_fixture(rng, va_mode="ccc", expr_mode="xent"):
    n = int(rng.integers(3, 8))
    alpha = float(rng.uniform(0.1, 1.0))
    beta = float(rng.uniform(0.1, 1.0))
    labels = torch.tensor(rng.integers(0, 7, n), dtype=torch.int64)
    labels[rng.integers(0, n)] = -1  # exercise the mask

    def fn(va_pred, logits, va_t):
        return multitask_loss(
            va_pred, logits, va_t, labels, alpha, beta, va_mode, expr_mode
        ).total

    return fn, [
        _t(rng.uniform(-1, 1, (n, 2))),
        _t(rng.normal(size=(n, 7))),
        _t(rng.uniform(-1, 1, (n, 2))),
    ]


def all_fixture_builders():
    """Name -> builder(rng) for the full gradient suite."""
    builders = {
        "ccc": ccc_fixture,
        "ccc_va_loss": ccc_va_fixture,
        "mse_va_loss": mse_va_fixture,
        "au_bce_loss": au_bce_fixture,
        "fake_bce_loss": fake_bce_fixture,
        "huber": huber_fixture,
        "generator_loss": generator_fixture,
        "discriminator_loss[ccc]": lambda rng: discriminator_fixture(rng, "ccc"),
        "discriminator_loss[mse]": lambda rng: discriminator_fixture(rng, "mse"),
        "expression_loss[xent]": lambda rng: expression_fixture(rng, "xent"),
        "expression_loss[mse_pre]": lambda rng: expression_fixture(rng, "mse_pre"),
        "expression_loss[mse_post]": lambda rng: expression_fixture(rng, "mse_post"),
    }
    for va_mode in ("ccc", "mse"):
        for expr_mode in ("xent", "mse_pre", "mse_post"):
            key = f"multitask_loss[{va_mode},{expr_mode}]"
            builders[key] = (
                lambda rng, v=va_mode, e=expr_mode: multitask_fixture(rng, v, e)
            )
    return builders
