"""Training objectives with per-component reporting.

All functions are pure torch expressions, dtype-agnostic, and autograd
friendly, so the same code runs in float64 for finite-difference checks
and float32 for training.

Discriminator label-smoothing constants: a fake image is targeted with
0.01 for valence, arousal and each of the eight AUs, and 0.9 for the
fake class; a real image keeps its true VA/AU targets with a fake-class
target of exactly 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict

import torch

from affmt.errors import ValidationError

PROB_EPS = 1e-7

FAKE_VA_TARGET = 0.01
FAKE_AU_TARGET = 0.01
FAKE_CLASS_TARGET = 0.9
REAL_FAKE_CLASS_TARGET = 0.0

VA_MODES = ("ccc", "mse")
EXPR_MODES = ("xent", "mse_pre", "mse_post")
HEAD_MODES = ("joint", "va", "au")


@dataclass
class LossBundle:
    """Scalar loss plus its named components (all 0-dim tensors).

    ``targets`` carries the detached target tensors a loss actually used,
    so instrumented training steps can be audited.
    """

    total: torch.Tensor
    components: Dict[str, torch.Tensor]
    extras: Dict[str, float] = field(default_factory=dict)
    targets: Dict[str, torch.Tensor] = field(default_factory=dict)

    def component_floats(self) -> Dict[str, float]:
        return {k: float(v) for k, v in self.components.items()}

    def detach(self) -> "LossBundle":
        return LossBundle(
            total=self.total.detach(),
            components={k: v.detach() for k, v in self.components.items()},
            extras=dict(self.extras),
            targets=dict(self.targets),
        )

    def __float__(self) -> float:
        return float(self.total)


@dataclass
class DiscriminatorHeads:
    """Raw discriminator outputs: linear VA, sigmoid AUs, sigmoid fake."""

    va: torch.Tensor    # (N, 2)
    aus: torch.Tensor   # (N, 8), probabilities
    fake: torch.Tensor  # (N,), probability of being fake


@dataclass
class SmoothedTarget:
    """Label-smoothing constants for one fake-image batch."""

    va: float = FAKE_VA_TARGET
    au: float = FAKE_AU_TARGET
    fake: float = FAKE_CLASS_TARGET

    def tensors(self, batch: int, *, dtype=torch.float32, device=None):
        kw = {"dtype": dtype, "device": device}
        return (
            torch.full((batch, 2), self.va, **kw),
            torch.full((batch, 8), self.au, **kw),
            torch.full((batch,), self.fake, **kw),
        )


def _as_1d(x: torch.Tensor, name: str) -> torch.Tensor:
    x = torch.as_tensor(x)
    if x.ndim != 1:
        x = x.reshape(-1)
    if x.numel() < 2:
        raise ValidationError(f"{name} needs at least 2 elements")
    return x


def ccc(pred, target) -> torch.Tensor:
    """Concordance correlation: 2*cov / (var_p + var_t + (mean_p - mean_t)^2).

    Population statistics (divide by N). When both sequences are constant
    with equal means the ratio is 0/0; 0 is returned by convention.
    """
    pred = _as_1d(pred, "pred")
    target = _as_1d(target, "target")
    if pred.shape != target.shape:
        raise ValidationError(
            f"length mismatch: {pred.numel()} vs {target.numel()}"
        )
    mean_p, mean_t = pred.mean(), target.mean()
    dp, dt = pred - mean_p, target - mean_t
    cov = (dp * dt).mean()
    var_p = (dp * dp).mean()
    var_t = (dt * dt).mean()
    denom = var_p + var_t + (mean_p - mean_t) ** 2
    if float(denom.detach()) == 0.0:
        return torch.zeros((), dtype=pred.dtype, device=pred.device)
    out = 2.0 * cov / denom
    # With a constant sequence on either side the covariance is zero by
    # construction; subtracting the detached value pins the result to an
    # exact 0 without cutting the autograd graph.
    if bool(torch.all(pred == pred[0])) or bool(torch.all(target == target[0])):
        return out - out.detach()
    return out


def ccc_va_loss(pred, target) -> torch.Tensor:
    """1 - (ccc_valence + ccc_arousal) / 2 over a batch of VA pairs."""
    pred = torch.as_tensor(pred).reshape(-1, 2)
    target = torch.as_tensor(target).reshape(-1, 2)
    rho_v = ccc(pred[:, 0], target[:, 0])
    rho_a = ccc(pred[:, 1], target[:, 1])
    return 1.0 - (rho_a + rho_v) / 2.0


def mse_va_loss(pred, target) -> torch.Tensor:
    """Average of the valence MSE and the arousal MSE."""
    pred = torch.as_tensor(pred).reshape(-1, 2)
    target = torch.as_tensor(target).reshape(-1, 2)
    if pred.shape != target.shape:
        raise ValidationError("pred/target shape mismatch")
    mse_v = ((pred[:, 0] - target[:, 0]) ** 2).mean()
    mse_a = ((pred[:, 1] - target[:, 1]) ** 2).mean()
    return (mse_v + mse_a) / 2.0


def va_loss(pred, target, mode: str) -> torch.Tensor:
    if mode == "ccc":
        return ccc_va_loss(pred, target)
    if mode == "mse":
        return mse_va_loss(pred, target)
    raise ValidationError(f"unknown va loss mode {mode!r}")


def _bce(probs: torch.Tensor, targets: torch.Tensor) -> torch.Tensor:
    p = torch.clamp(probs, PROB_EPS, 1.0 - PROB_EPS)
    return -(targets * torch.log(p) + (1.0 - targets) * torch.log(1.0 - p))


def au_bce_loss(pred, target) -> torch.Tensor:
    """Cross entropy averaged across the batch and all eight AUs.

    Targets may be hard 0/1 bits or smoothed reals.
    """
    pred = torch.as_tensor(pred).reshape(-1, 8)
    target = torch.as_tensor(target).reshape(-1, 8).to(pred.dtype)
    return _bce(pred, target).mean()


def fake_bce_loss(pred, target) -> torch.Tensor:
    """Cross entropy on the single fake-class head."""
    pred = torch.as_tensor(pred).reshape(-1)
    target = torch.as_tensor(target, dtype=pred.dtype, device=pred.device)
    target = target.expand_as(pred) if target.ndim == 0 else target.reshape(-1)
    return _bce(pred, target).mean()


def discriminator_loss(
    real: DiscriminatorHeads,
    real_va_target: torch.Tensor,
    real_au_target: torch.Tensor,
    fake: DiscriminatorHeads,
    va_mode: str = "ccc",
    heads: str = "joint",
    smoothed: SmoothedTarget = SmoothedTarget(),
) -> LossBundle:
    """Real-batch loss plus the structurally identical fake-batch loss.

    Real images: true VA/AU targets, fake-class target 0. Fake images:
    smoothed targets. ``heads`` selects which supervised heads contribute
    (the fake head always does).
    """
    if heads not in HEAD_MODES:
        raise ValidationError(f"unknown heads mode {heads!r}")
    dtype, device = real.fake.dtype, real.fake.device
    fake_va_t, fake_au_t, fake_fake_t = smoothed.tensors(
        fake.fake.shape[0], dtype=dtype, device=device
    )
    real_fake_t = torch.full_like(real.fake, REAL_FAKE_CLASS_TARGET)

    components: Dict[str, torch.Tensor] = {}
    if heads in ("joint", "va"):
        components["va"] = va_loss(real.va, real_va_target, va_mode) + va_loss(
            fake.va, fake_va_t, va_mode
        )
    if heads in ("joint", "au"):
        components["au"] = au_bce_loss(real.aus, real_au_target) + au_bce_loss(
            fake.aus, fake_au_t
        )
    components["fake"] = fake_bce_loss(real.fake, real_fake_t) + fake_bce_loss(
        fake.fake, fake_fake_t
    )

    total = sum(components.values())
    return LossBundle(
        total=total,
        components=components,
        targets={
            "real_va": torch.as_tensor(real_va_target).detach().clone(),
            "real_au": torch.as_tensor(real_au_target).detach().clone(),
            "real_fake": real_fake_t.detach().clone(),
            "fake_va": fake_va_t.detach().clone(),
            "fake_au": fake_au_t.detach().clone(),
            "fake_fake": fake_fake_t.detach().clone(),
        },
    )


def huber(residual: torch.Tensor, delta: float = 1.0) -> torch.Tensor:
    """Elementwise Huber: quadratic below delta, linear above."""
    a = torch.abs(residual)
    return torch.where(
        a <= delta, 0.5 * residual ** 2, delta * (a - 0.5 * delta)
    )


def generator_loss(
    fake_class_prob: torch.Tensor,
    fake_images: torch.Tensor,
    real_images: torch.Tensor,
    recon_weight: float,
) -> LossBundle:
    """log x plus an annealed Huber reconstruction term.

    x is the discriminator's fake-class probability for a generated
    image; pushing it down fools the discriminator. The Huber term
    (delta=1) pairs each generated image with the real image at the same
    batch index and averages over all pixels.
    """
    if recon_weight < 0:
        raise ValidationError("recon_weight must be non-negative")
    if fake_images.shape != real_images.shape:
        raise ValidationError(
            f"fake/real image shape mismatch: {tuple(fake_images.shape)} "
            f"vs {tuple(real_images.shape)}"
        )
    x = torch.clamp(
        torch.as_tensor(fake_class_prob).reshape(-1),
        PROB_EPS,
        1.0 - PROB_EPS,
    )
    log_term = torch.log(x).mean()
    recon = huber(real_images - fake_images, delta=1.0).mean()
    total = log_term + recon_weight * recon
    return LossBundle(
        total=total,
        components={"gen": log_term, "recon": recon},
        extras={"recon_weight": float(recon_weight)},
    )


@dataclass(frozen=True)
class AnnealSchedule:
    """Linear decay of the reconstruction weight: initial -> floor over horizon."""

    initial: float = 1.0
    floor: float = 0.0
    horizon: int = 10_000

    def __post_init__(self):
        if self.horizon <= 0:
            raise ValidationError("horizon must be positive")
        if self.floor > self.initial:
            raise ValidationError("floor must not exceed the initial value")


def anneal_weight(step: int, schedule: AnnealSchedule = AnnealSchedule()) -> float:
    if step < 0:
        raise ValidationError("step must be non-negative")
    frac = min(step / schedule.horizon, 1.0)
    return schedule.floor + (schedule.initial - schedule.floor) * (1.0 - frac)


def expression_loss(
    logits: torch.Tensor,
    target: torch.Tensor,
    mode: str,
) -> torch.Tensor:
    """Expression loss over labelled frames only (target -1 = unlabeled).

    ``xent`` is cross entropy on the softmax probabilities; the MSE modes
    compare one-hot targets with either the pre-softmax scores or the
    softmax output.
    """
    if mode not in EXPR_MODES:
        raise ValidationError(f"unknown expression loss mode {mode!r}")
    logits = torch.as_tensor(logits).reshape(-1, 7)
    target = torch.as_tensor(target).reshape(-1).long()
    mask = target >= 0
    if not torch.any(mask):
        return torch.zeros((), dtype=logits.dtype, device=logits.device)
    logits = logits[mask]
    labels = target[mask]
    if mode == "xent":
        log_probs = torch.log_softmax(logits, dim=1)
        return -log_probs[torch.arange(labels.numel()), labels].mean()
    one_hot = torch.zeros_like(logits)
    one_hot[torch.arange(labels.numel()), labels] = 1.0
    scores = logits if mode == "mse_pre" else torch.softmax(logits, dim=1)
    return ((scores - one_hot) ** 2).mean()


def multitask_loss(
    va_pred: torch.Tensor,
    expr_logits: torch.Tensor,
    va_target: torch.Tensor,
    expr_target: torch.Tensor,
    alpha: float,
    beta: float,
    va_mode: str = "ccc",
    expr_mode: str = "xent",
) -> LossBundle:
    """alpha * VA loss + beta * expression loss.

    alpha=0 or beta=0 drops that term from the total's autograd graph
    entirely, so the unused head receives exactly zero gradient; the
    component values are still reported.
    """
    if not (0.0 <= alpha <= 1.0) or not (0.0 <= beta <= 1.0):
        raise ValidationError("alpha and beta must lie in [0, 1]")
    l_va = va_loss(va_pred.reshape(-1, 2), va_target.reshape(-1, 2), va_mode)
    l_expr = expression_loss(expr_logits, expr_target, expr_mode)
    terms = []
    if alpha > 0:
        terms.append(alpha * l_va)
    if beta > 0:
        terms.append(beta * l_expr)
    if terms:
        total = terms[0]
        for t in terms[1:]:
            total = total + t
    else:
        total = torch.zeros((), dtype=l_va.dtype, device=l_va.device)
    return LossBundle(
        total=total,
        components={"va": l_va, "expr": l_expr},
        extras={"alpha": alpha, "beta": beta},
    )
