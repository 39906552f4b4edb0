"""Central finite-difference gradient checking used across the loss tests."""

import torch

FD_STEP = 1e-5
REL_TOL = 1e-4


def finite_difference_grads(fn, inputs, eps=FD_STEP):
    """Central differences of a scalar function w.r.t. every input entry."""
    grads = []
    for x in inputs:
        g = torch.zeros_like(x)
        flat = x.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.numel()):
            orig = flat[i].item()
            flat[i] = orig + eps
            f_plus = float(fn(*inputs))
            flat[i] = orig - eps
            f_minus = float(fn(*inputs))
            flat[i] = orig
            gflat[i] = (f_plus - f_minus) / (2.0 * eps)
        grads.append(g)
    return grads


def max_relative_error(fn, inputs, eps=FD_STEP):
    """Worst relative disagreement between autograd and finite differences.

    All inputs are promoted to float64 leaves; entries where both gradients
    are below 1e-6 in magnitude are compared against that floor instead.
    """
    leaves = [
        torch.as_tensor(x).detach().double().clone().requires_grad_(True)
        for x in inputs
    ]
    out = fn(*leaves)
    analytic = torch.autograd.grad(out, leaves, allow_unused=True)
    analytic = [
        torch.zeros_like(l) if a is None else a for a, l in zip(analytic, leaves)
    ]
    with torch.no_grad():
        frozen = [l.detach().clone() for l in leaves]
        numeric = finite_difference_grads(fn, frozen, eps=eps)
    worst = 0.0
    for a, n in zip(analytic, numeric):
        floor = torch.full_like(a, 1e-6)
        denom = torch.maximum(torch.maximum(a.abs(), n.abs()), floor)
        worst = max(worst, float(((a - n).abs() / denom).max()))
    return worst


def assert_gradients_match(fn, inputs, rtol=REL_TOL, eps=FD_STEP):
    err = max_relative_error(fn, inputs, eps=eps)
    assert err < rtol, f"gradient mismatch: max relative error {err:.3e} >= {rtol}"
    return err
