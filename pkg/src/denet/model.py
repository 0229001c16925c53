"""Full model: multi-scale temporal features followed by the scoring head."""

from __future__ import annotations

import numpy as np

from .classifier import (classifier_backward, classifier_forward,
                         classifier_param_shapes, init_classifier_params)
from .config import ModelConfig
from .mstm import init_mstm_params, mstm_backward, mstm_forward, mstm_param_shapes


def param_shapes(cfg: ModelConfig) -> dict[str, tuple[int, ...]]:
    shapes = mstm_param_shapes(cfg)
    shapes.update(classifier_param_shapes(cfg.D))
    return shapes


def init_params(cfg: ModelConfig, rng: np.random.Generator,
                dtype=np.float32) -> dict[str, np.ndarray]:
    params = init_mstm_params(cfg, rng, dtype)
    params.update(init_classifier_params(cfg.D, rng, dtype))
    return params


def zero_grads(params) -> dict[str, np.ndarray]:
    return {name: np.zeros_like(p) for name, p in params.items()}


def decay_mask(params) -> dict[str, bool]:
    """Weight matrices get decoupled weight decay; biases, LayerNorm
    parameters, and positional encodings do not."""
    return {name: name.endswith(".w") for name in params}


def forward(params, x, cfg: ModelConfig, rng=None, train=False):
    """(B, T, D) -> per-segment scores (B, T), features (B, T, D), cache."""
    xhat, mstm_cache = mstm_forward(params, x, cfg, rng=rng, train=train)
    scores, clf_cache = classifier_forward(params, xhat, cfg, rng=rng, train=train)
    return scores, xhat, (mstm_cache, clf_cache)


def backward(params, grads, dscores, dxhat, cache):
    """Accumulate parameter gradients for upstream gradients on both the
    scores and (directly) the aggregated features."""
    mstm_cache, clf_cache = cache
    dxhat_total = classifier_backward(params, grads, dscores, clf_cache)
    if dxhat is not None:
        dxhat_total = dxhat_total + dxhat
    return mstm_backward(params, grads, dxhat_total, mstm_cache)


def score_video(params, X, cfg: ModelConfig) -> np.ndarray:
    """Deterministic per-segment scores for one (T, D) video."""
    scores, _, _ = forward(params, X[None], cfg)
    return scores[0]
