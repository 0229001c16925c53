"""Scratch: finite-difference check of the full loss gradient (dev only)."""
import time

import numpy as np

from denet import ModelConfig, LossWeights
from denet import model
from denet.losses import pass_losses
from denet.erasing import apply_batch


def randomize(params, rng):
    out = {}
    for name, p in params.items():
        if ".ln" in name and name.endswith(".g"):
            out[name] = (1.0 + 0.2 * rng.standard_normal(p.shape)).astype(np.float64)
        else:
            out[name] = (0.4 * rng.standard_normal(p.shape)).astype(np.float64)
    return out


def total_loss_and_grads(params, Xa, Xn, Xe_all, weights, cfg, want_grads=False):
    P = Xa.shape[0]
    X_all = np.concatenate([Xa, Xn])
    grads = model.zero_grads(params) if want_grads else None
    scores_u, xhat_u, cache_u = model.forward(params, X_all, cfg)
    ls_u, lf_u, dsa, dsn, dxa, dxn = pass_losses(
        scores_u[:P], scores_u[P:], xhat_u[:P], xhat_u[P:],
        coef_score=weights.lambda1 * weights.alpha1 if want_grads else 0.0,
        coef_fea=weights.lambda1 * weights.alpha2 if want_grads else 0.0)
    if want_grads:
        model.backward(params, grads, np.concatenate([dsa, dsn]),
                       np.concatenate([dxa, dxn]), cache_u)
    scores_e, xhat_e, cache_e = model.forward(params, Xe_all, cfg)
    ls_e, lf_e, dsa_e, dsn_e, dxa_e, dxn_e = pass_losses(
        scores_e[:P], scores_e[P:], xhat_e[:P], xhat_e[P:],
        coef_score=weights.lambda2 * weights.alpha1 if want_grads else 0.0,
        coef_fea=weights.lambda2 * weights.alpha2 if want_grads else 0.0)
    if want_grads:
        model.backward(params, grads, np.concatenate([dsa_e, dsn_e]),
                       np.concatenate([dxa_e, dxn_e]), cache_e)
    l_u = weights.alpha1 * ls_u + weights.alpha2 * lf_u
    l_e = weights.alpha1 * ls_e + weights.alpha2 * lf_e
    total = weights.lambda1 * l_u + weights.lambda2 * l_e
    return total, grads


def main():
    rng = np.random.default_rng(42)
    cfg = ModelConfig(T=8, D=16, S=2, heads=8, dropout=0.0, clf_dropout=0.0)
    weights = LossWeights(alpha1=1.0, alpha2=0.05, lambda1=1.0, lambda2=0.7)
    params = randomize(model.init_params(cfg, rng, dtype=np.float64), rng)
    P = 2
    Xa = rng.standard_normal((P, cfg.T, cfg.D))
    Xn = rng.standard_normal((P, cfg.T, cfg.D))

    scores_det, _, _ = model.forward(params, np.concatenate([Xa, Xn]), cfg)
    abn = [(f"a{i}", Xa[i], scores_det[i]) for i in range(P)]
    nrm = [(f"n{i}", Xn[i], scores_det[P + i]) for i in range(P)]
    erased, decisions = apply_batch(abn, nrm, delta=0.5)
    print("decisions:", [(d.era_m, d.erased_indices) for d in decisions])
    Xe_all = np.concatenate([np.stack(erased), Xn])

    t0 = time.time()
    total, grads = total_loss_and_grads(params, Xa, Xn, Xe_all, weights, cfg, True)
    print(f"total loss {total:.6f}, analytic grads in {time.time()-t0:.2f}s")

    h = 1e-5
    t0 = time.time()
    n_evals = 0
    worst = (0.0, None)
    for name, p in params.items():
        fd = np.zeros_like(p)
        flat = p.reshape(-1)
        fdf = fd.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            lp, _ = total_loss_and_grads(params, Xa, Xn, Xe_all, weights, cfg)
            flat[i] = orig - h
            lm, _ = total_loss_and_grads(params, Xa, Xn, Xe_all, weights, cfg)
            flat[i] = orig
            fdf[i] = (lp - lm) / (2 * h)
            n_evals += 2
        g = grads[name]
        denom = np.maximum(np.maximum(np.abs(g), np.abs(fd)), 1e-6)
        rel = np.abs(g - fd) / denom
        m = float(rel.max())
        if m > worst[0]:
            worst = (m, name)
        print(f"{name:28s} max rel err {m:.3e}")
    print(f"worst: {worst[1]} {worst[0]:.3e}; {n_evals} evals in {time.time()-t0:.1f}s")


if __name__ == "__main__":
    main()
