"""Shared test helpers: finite differences and deterministic loss evaluation."""

import numpy as np

from denet import model
from denet.losses import pass_losses


def rel_err(a, b, floor=1e-6):
    """Guarded elementwise relative error, reduced with max."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return float((np.abs(a - b) / denom).max())


def numeric_grad(f, x, h=1e-6):
    """Central finite differences of scalar f() w.r.t. array x (in place)."""
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        plus = f()
        flat[i] = orig - h
        minus = f()
        flat[i] = orig
        gflat[i] = (plus - minus) / (2 * h)
    return grad


def randomize_params(params, rng, scale=0.4):
    """Replace every tensor with float64 noise (LayerNorm gains stay near 1)."""
    out = {}
    for name, p in params.items():
        if ".ln" in name and name.endswith(".g"):
            out[name] = 1.0 + 0.2 * rng.standard_normal(p.shape)
        else:
            out[name] = scale * rng.standard_normal(p.shape)
    return out


def total_loss(params, Xa, Xn, Xe_all, weights, cfg, want_grads=False):
    """Deterministic two-pass loss on a fixed batch with frozen erasure.

    The erased features are an input, not recomputed, mirroring how the
    erase decision is held constant within a training iteration. Both
    passes run as one stacked forward (videos are independent, so batching
    them is exact); this roughly halves the cost of the finite-difference
    sweeps built on top. Returns (loss, grads); grads is None unless
    requested.
    """
    half = Xa.shape[0]
    per_pass = 2 * half
    stacked = np.concatenate([Xa, Xn] + ([Xe_all] if Xe_all is not None else []))
    grads = model.zero_grads(params) if want_grads else None
    scores, xhat, cache = model.forward(params, stacked, cfg)
    seeds_s = []
    seeds_x = []
    pass_values = []
    lams = [weights.lambda1] + ([weights.lambda2] if Xe_all is not None else [])
    for k, lam in enumerate(lams):
        lo = k * per_pass
        l_score, l_fea, dsa, dsn, dxa, dxn = pass_losses(
            scores[lo:lo + half], scores[lo + half:lo + per_pass],
            xhat[lo:lo + half], xhat[lo + half:lo + per_pass],
            coef_score=lam * weights.alpha1 if want_grads else 0.0,
            coef_fea=lam * weights.alpha2 if want_grads else 0.0)
        seeds_s += [dsa, dsn]
        seeds_x += [dxa, dxn]
        pass_values.append(weights.alpha1 * l_score + weights.alpha2 * l_fea)
    if want_grads:
        model.backward(params, grads, np.concatenate(seeds_s),
                       np.concatenate(seeds_x), cache)
    l_u = pass_values[0]
    l_e = pass_values[1] if Xe_all is not None else 0.0
    return weights.lambda1 * l_u + weights.lambda2 * l_e, grads
