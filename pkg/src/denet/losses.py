"""Ranking and feature-variation objectives.

The score loss is the hinge-based MIL ranking loss between the top score of
an abnormal video and the top score of its paired normal video. The feature
loss applies the same hinge to the largest "local variation" of the
aggregated features, where the variation of row t is one minus the cosine
similarity between rows t and t - T/2. Both are averaged over the
abnormal/normal pairs of a batch (the i-th abnormal video is paired with
the i-th normal one).

Subgradient conventions: the hinge contributes no gradient when inactive,
max selections route the gradient to the first (smallest-index) maximizer,
and degenerate cosines (a zero-norm row in the pair) are treated as the
constant 0, giving variation 1 and no gradient.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .config import LossWeights

logger = logging.getLogger(__name__)


def score_ranking_loss(scores_abnormal, scores_normal) -> float:
    """max(0, 1 - max(abnormal scores) + max(normal scores))."""
    a = np.asarray(scores_abnormal)
    n = np.asarray(scores_normal)
    if a.size == 0 or n.size == 0:
        raise ValueError("score vectors must be nonempty")
    return float(max(0.0, 1.0 - a.max() + n.max()))


def _variation_forward(x):
    """Batched local variation: (B, T, D) -> (B, T/2) plus gradient cache."""
    _, T, _ = x.shape
    if T < 2 or T % 2:
        raise ValueError(f"local variation needs an even length >= 2, got {T}")
    k = T // 2
    u = x[:, :k]
    v = x[:, k:]
    nu = np.sqrt((u * u).sum(axis=-1))
    nv = np.sqrt((v * v).sum(axis=-1))
    dot = (u * v).sum(axis=-1)
    denom = nu * nv
    valid = denom > 0
    if not valid.all():
        logger.warning("local variation: %d zero-norm row pair(s), cosine treated as 0",
                       int((~valid).sum()))
    cos = np.zeros_like(dot)
    np.divide(dot, denom, out=cos, where=valid)
    np.clip(cos, -1.0, 1.0, out=cos)
    var = 1.0 - cos
    return var, (u, v, nu, nv, cos, valid, k)


def local_variation(xhat) -> np.ndarray:
    """Variation values for rows T/2+1..T of one (T, D) matrix."""
    var, _ = _variation_forward(np.asarray(xhat)[None])
    return var[0]


def feature_variation_loss(xhat_abnormal, xhat_normal) -> float:
    """Hinge between the largest variations of an abnormal/normal pair."""
    va = local_variation(xhat_abnormal)
    vn = local_variation(xhat_normal)
    return float(max(0.0, 1.0 - va.max() + vn.max()))


def _add_variation_grad(dx, cache, j_idx, coeff):
    """Add coeff[i] * d(var[i, j_idx[i]])/dx to dx for rows with coeff != 0."""
    u, v, nu, nv, cos, valid, k = cache
    for i in np.flatnonzero(coeff):
        j = j_idx[i]
        if not valid[i, j]:
            continue
        uu = u[i, j]
        vv = v[i, j]
        inv = 1.0 / (nu[i, j] * nv[i, j])
        c = cos[i, j]
        dcos_du = vv * inv - c * uu / (nu[i, j] ** 2)
        dcos_dv = uu * inv - c * vv / (nv[i, j] ** 2)
        dx[i, j] += coeff[i] * -dcos_du
        dx[i, k + j] += coeff[i] * -dcos_dv


def pass_losses(scores_a, scores_n, xhat_a, xhat_n,
                coef_score=0.0, coef_fea=0.0):
    """Pair-averaged losses of one forward pass, with optional gradients.

    ``coef_score``/``coef_fea`` scale the returned gradients; the loss
    values themselves are always the unweighted means over pairs.
    Returns (l_score, l_fea, d_scores_a, d_scores_n, d_xhat_a, d_xhat_n).
    """
    if scores_a.shape[0] != scores_n.shape[0]:
        raise ValueError(f"unpaired batch: {scores_a.shape[0]} abnormal vs "
                         f"{scores_n.shape[0]} normal videos")
    P = scores_a.shape[0]
    if P == 0:
        raise ValueError("empty batch")
    rows = np.arange(P)

    ia = scores_a.argmax(axis=1)
    inr = scores_n.argmax(axis=1)
    margin = 1.0 - scores_a[rows, ia] + scores_n[rows, inr]
    l_score = float(np.maximum(margin, 0.0).mean())
    dsa = np.zeros_like(scores_a)
    dsn = np.zeros_like(scores_n)
    if coef_score:
        active = margin > 0
        dsa[rows[active], ia[active]] = -coef_score / P
        dsn[rows[active], inr[active]] = coef_score / P

    var_a, cache_a = _variation_forward(xhat_a)
    var_n, cache_n = _variation_forward(xhat_n)
    ja = var_a.argmax(axis=1)
    jn = var_n.argmax(axis=1)
    vmargin = 1.0 - var_a[rows, ja] + var_n[rows, jn]
    l_fea = float(np.maximum(vmargin, 0.0).mean())
    dxa = np.zeros_like(xhat_a)
    dxn = np.zeros_like(xhat_n)
    if coef_fea:
        vcoef = np.where(vmargin > 0, coef_fea / P, 0.0)
        _add_variation_grad(dxa, cache_a, ja, -vcoef)
        _add_variation_grad(dxn, cache_n, jn, vcoef)

    return l_score, l_fea, dsa, dsn, dxa, dxn


class PassOutputs(NamedTuple):
    """Scores and aggregated features of one forward pass, split by class."""

    scores_abnormal: np.ndarray  # (P, T)
    scores_normal: np.ndarray    # (P, T)
    features_abnormal: np.ndarray  # (P, T, D)
    features_normal: np.ndarray    # (P, T, D)


@dataclass(frozen=True)
class LossReport:
    """All loss terms of one training iteration."""

    l_score_u: float
    l_fea_u: float
    l_u: float
    l_score_e: float
    l_fea_e: float
    l_e: float
    total: float

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in
                ("l_score_u", "l_fea_u", "l_u", "l_score_e", "l_fea_e", "l_e", "total")}


def combined_loss(unerased: PassOutputs, erased: PassOutputs | None,
                  weights: LossWeights) -> LossReport:
    """Weighted combination of the unerased and erased pass losses.

    ``erased=None`` models single-pass training: the erased terms are zero.
    """
    l_score_u, l_fea_u, *_ = pass_losses(*unerased)
    if erased is None:
        l_score_e = l_fea_e = 0.0
    else:
        l_score_e, l_fea_e, *_ = pass_losses(*erased)
    l_u = weights.alpha1 * l_score_u + weights.alpha2 * l_fea_u
    l_e = weights.alpha1 * l_score_e + weights.alpha2 * l_fea_e
    total = weights.lambda1 * l_u + weights.lambda2 * l_e
    return LossReport(l_score_u, l_fea_u, l_u, l_score_e, l_fea_e, l_e, total)
