"""Adam with fully external state, so checkpoints can serialize it as
plain tensors, and global-norm gradient clipping."""

from __future__ import annotations

import math
from typing import Dict, Iterable, List, Tuple

import torch


class Adam:
    """Standard Adam over an ordered list of named parameters.

    Parameters whose requires_grad is False (or whose grad is unset) are
    skipped, which is how frozen subnetworks stay out of the update set.
    """

    def __init__(self, named_params, lr: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.names: List[str] = [n for n, _ in named_params]
        self.params: List[torch.nn.Parameter] = [p for _, p in named_params]
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = [torch.zeros_like(p) for p in self.params]
        self.v = [torch.zeros_like(p) for p in self.params]
        self.t = 0

    def zero_grad(self):
        for p in self.params:
            p.grad = None

    def step(self):
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        with torch.no_grad():
            for p, m, v in zip(self.params, self.m, self.v):
                if not p.requires_grad or p.grad is None:
                    continue
                g = p.grad
                m.mul_(self.beta1).add_(g, alpha=1.0 - self.beta1)
                v.mul_(self.beta2).addcmul_(g, g, value=1.0 - self.beta2)
                denom = (v / bc2).sqrt_().add_(self.eps)
                p.addcdiv_(m / bc1, denom, value=-self.lr)

    def state_tensors(self, prefix: str) -> Dict[str, torch.Tensor]:
        out = {}
        for name, m, v in zip(self.names, self.m, self.v):
            out[f"{prefix}.{name}.m"] = m
            out[f"{prefix}.{name}.v"] = v
        return out

    def load_state_tensors(self, prefix: str, tensors: Dict[str, torch.Tensor]):
        for i, name in enumerate(self.names):
            self.m[i].copy_(tensors[f"{prefix}.{name}.m"])
            self.v[i].copy_(tensors[f"{prefix}.{name}.v"])


def clip_global_norm(
    params: Iterable[torch.nn.Parameter], max_norm: float
) -> Tuple[float, float]:
    """Scale gradients so their global L2 norm is at most max_norm.

    The scale undershoots by 1e-5 relative so float32 rounding of the
    scaled gradients cannot push the norm back above the bound.

    Returns (pre_clip_norm, post_clip_norm).
    """
    grads = [p.grad for p in params if p.grad is not None]
    if not grads:
        return 0.0, 0.0
    with torch.no_grad():
        total = math.sqrt(sum(float(g.double().pow(2).sum()) for g in grads))
        if total > max_norm and total > 0:
            scale = max_norm / total * (1.0 - 1e-5)
            for g in grads:
                g.mul_(scale)
            post = math.sqrt(sum(float(g.double().pow(2).sum()) for g in grads))
        else:
            post = total
    return total, post
