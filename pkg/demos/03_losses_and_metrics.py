"""Loss and metric walkthrough.

Shows the CCC-based VA loss against MSE, the label-smoothing constants
of the discriminator objective, the annealed reconstruction weight, and
a metric report in the table layout.
"""

import numpy as np
import torch

from affmt.losses import (
    AnnealSchedule,
    DiscriminatorHeads,
    anneal_weight,
    ccc,
    ccc_va_loss,
    discriminator_loss,
    generator_loss,
    mse_va_loss,
    multitask_loss,
)
from affmt.metrics import evaluate
from affmt.data import AUVector, ConsolidatedFrame, Expression, VAPair

torch.manual_seed(0)

# CCC rewards agreement in mean and variance, not just small residuals:
# a prediction that collapses to the target's mean has zero CCC even
# though its MSE looks decent.
target = torch.sin(torch.linspace(0, 6, 50)).unsqueeze(1).repeat(1, 2)
collapsed = torch.zeros_like(target)
tracking = 0.8 * target + 0.05
print("prediction    ccc_va_loss  mse_va_loss")
for name, pred in (("collapsed", collapsed), ("tracking", tracking)):
    print(f"{name:<12}  {float(ccc_va_loss(pred, target)):.4f}       "
          f"{float(mse_va_loss(pred, target)):.4f}")

print("\nccc(x, x) =", float(ccc(target[:, 0], target[:, 0])))

# discriminator loss with smoothed fake targets
n = 8
real = DiscriminatorHeads(
    va=torch.rand(n, 2) * 2 - 1,
    aus=torch.rand(n, 8) * 0.9 + 0.05,
    fake=torch.rand(n) * 0.9 + 0.05,
)
fake = DiscriminatorHeads(
    va=torch.rand(n, 2) * 2 - 1,
    aus=torch.rand(n, 8) * 0.9 + 0.05,
    fake=torch.rand(n) * 0.9 + 0.05,
)
bundle = discriminator_loss(
    real, torch.rand(n, 2) * 2 - 1, (torch.rand(n, 8) > 0.5).float(), fake,
    va_mode="mse",
)
print("\ndiscriminator bundle components:", bundle.component_floats())
print("fake-batch VA target (smoothed):", bundle.targets["fake_va"][0].tolist())
print("fake-class targets: fake batch", float(bundle.targets["fake_fake"][0]),
      "real batch", float(bundle.targets["real_fake"][0]))

# generator objective: log x plus annealed Huber reconstruction
imgs = torch.rand(n, 3, 8, 8) * 2 - 1
gen = generator_loss(fake.fake, imgs, imgs + 0.3, recon_weight=anneal_weight(0))
print("\ngenerator bundle:", gen.component_floats(), "w_r:", gen.extras)
sched = AnnealSchedule(initial=1.0, floor=0.0, horizon=10_000)
print("annealed weight at steps 0/5000/10000:",
      [anneal_weight(s, sched) for s in (0, 5_000, 10_000)])

# multi-task combination collapses to single-task at the corners
va_pred, logits = torch.rand(6, 2) * 2 - 1, torch.randn(6, 7)
va_t, expr_t = torch.rand(6, 2) * 2 - 1, torch.randint(0, 7, (6,))
for a, b in ((1.0, 0.0), (0.0, 1.0), (0.5, 0.5)):
    mt = multitask_loss(va_pred, logits, va_t, expr_t, a, b)
    print(f"alpha={a} beta={b}: total={float(mt.total):.4f} "
          f"components={mt.component_floats()}")

# metric report in the evaluation-table layout
frames = [
    ConsolidatedFrame("v", i, VAPair(float(v), float(a)),
                      AUVector.from_active([12] if v > 0 else []),
                      Expression.HAPPINESS if v > 0.5 else Expression.NEUTRAL)
    for i, (v, a) in enumerate(np.random.default_rng(1).uniform(-1, 1, (40, 2)))
]
preds = {
    "va": np.array([[f.va.valence * 0.9, f.va.arousal * 0.9] for f in frames]),
    "aus": np.array([[0.9 if b else 0.1 for b in f.aus.bits] for f in frames]),
}
report = evaluate(preds, frames, task="joint")
print("\n" + report.to_text())
