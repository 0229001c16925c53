"""Per-segment anomaly scoring head.

Three affine layers (D -> 512 -> 32 -> 1) applied independently to each
segment row: ReLU after the first layer, dropout after the first activation
and after the second layer (training mode only), sigmoid on the final unit.
Scores therefore lie in (0, 1) and each segment's score depends only on its
own row of the input.
"""

from __future__ import annotations

import math

import numpy as np

from .config import ModelConfig
from .layers import (affine_backward, affine_forward, dropout_backward,
                     dropout_forward, relu_backward, relu_forward,
                     sigmoid_backward, sigmoid_forward)
from .mstm import init_affine

CLASSIFIER_WIDTHS = (512, 32, 1)


def classifier_param_shapes(D: int) -> dict[str, tuple[int, ...]]:
    dims = (D,) + CLASSIFIER_WIDTHS
    shapes: dict[str, tuple[int, ...]] = {}
    for i in range(3):
        shapes[f"clf.fc{i + 1}.w"] = (dims[i], dims[i + 1])
        shapes[f"clf.fc{i + 1}.b"] = (dims[i + 1],)
    return shapes


def init_classifier_params(D: int, rng: np.random.Generator,
                           dtype=np.float32) -> dict[str, np.ndarray]:
    dims = (D,) + CLASSIFIER_WIDTHS
    p: dict[str, np.ndarray] = {}
    for i in range(3):
        init_affine(p, rng, dtype, f"clf.fc{i + 1}.w", f"clf.fc{i + 1}.b",
                    dims[i], dims[i + 1])
    return p


def classifier_forward(params, xhat, cfg: ModelConfig, rng=None, train=False):
    """(B, T, D) features -> (B, T) scores in (0, 1), plus cache."""
    if xhat.shape[-1] != params["clf.fc1.w"].shape[0]:
        raise ValueError(f"feature width {xhat.shape[-1]} does not match classifier "
                         f"input {params['clf.fc1.w'].shape[0]}")
    h1, c1 = affine_forward(xhat, params["clf.fc1.w"], params["clf.fc1.b"])
    r1, rmask = relu_forward(h1)
    d1, m1 = dropout_forward(r1, cfg.clf_dropout, rng, train)
    h2, c2 = affine_forward(d1, params["clf.fc2.w"], params["clf.fc2.b"])
    d2, m2 = dropout_forward(h2, cfg.clf_dropout, rng, train)
    h3, c3 = affine_forward(d2, params["clf.fc3.w"], params["clf.fc3.b"])
    scores, smax = sigmoid_forward(h3)
    return scores[..., 0], (c1, rmask, m1, c2, m2, c3, smax)


def classifier_backward(params, grads, dscores, cache):
    """Accumulate parameter gradients into ``grads``; returns d(features)."""
    c1, rmask, m1, c2, m2, c3, smax = cache
    d3 = sigmoid_backward(dscores[..., None], smax)
    dd2, dw3, db3 = affine_backward(d3, c3)
    grads["clf.fc3.w"] += dw3
    grads["clf.fc3.b"] += db3
    dh2 = dropout_backward(dd2, m2)
    dd1, dw2, db2 = affine_backward(dh2, c2)
    grads["clf.fc2.w"] += dw2
    grads["clf.fc2.b"] += db2
    dr1 = dropout_backward(dd1, m1)
    dh1 = relu_backward(dr1, rmask)
    dx, dw1, db1 = affine_backward(dh1, c1)
    grads["clf.fc1.w"] += dw1
    grads["clf.fc1.b"] += db1
    return dx


def score(params, xhat, cfg: ModelConfig, train=False, rng=None) -> np.ndarray:
    """Score a single (T, D) feature matrix; returns (T,) anomaly scores."""
    scores, _ = classifier_forward(params, xhat[None], cfg, rng=rng, train=train)
    return scores[0]
