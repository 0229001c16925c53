"""Array-level building blocks with explicit forward and backward passes.

Every ``*_forward`` returns ``(out, cache)``; the matching ``*_backward``
consumes the upstream gradient and the cache and returns gradients for its
inputs and parameters. Arrays follow the ``(batch, length, dim)`` layout
unless noted. All functions preserve the dtype of their inputs, so the same
code path serves float32 training and float64 gradient checking. Dropout is
the only source of randomness; with ``train=False`` it is the identity and
every pass is deterministic.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import expit


def affine_forward(x, w, b):
    """y = x @ w + b over the last axis; x: (..., n_in), w: (n_in, n_out)."""
    return x @ w + b, (x, w)


def affine_backward(dout, cache):
    x, w = cache
    n_in, n_out = w.shape
    dx = dout @ w.T
    dw = x.reshape(-1, n_in).T @ dout.reshape(-1, n_out)
    db = dout.reshape(-1, n_out).sum(axis=0)
    return dx, dw, db


def relu_forward(x):
    mask = x > 0
    return x * mask, mask


def relu_backward(dout, mask):
    return dout * mask


def sigmoid_forward(x):
    out = expit(x)
    return out, out


def sigmoid_backward(dout, out):
    return dout * out * (1.0 - out)


def dropout_forward(x, p, rng, train):
    """Inverted dropout; identity (cache None) when not training or p == 0."""
    if not train or p <= 0.0:
        return x, None
    if rng is None:
        raise ValueError("training-mode dropout needs a random generator")
    draw_dtype = x.dtype if x.dtype in (np.float32, np.float64) else np.float64
    keep = rng.random(x.shape, dtype=draw_dtype) >= p
    mask = keep.astype(x.dtype) * (1.0 / (1.0 - p))
    return x * mask, mask


def dropout_backward(dout, mask):
    return dout if mask is None else dout * mask


def layernorm_forward(x, gain, bias, eps=1e-5):
    """Normalize the last axis to zero mean / unit variance, then scale+shift."""
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xn = xc * inv
    return xn * gain + bias, (xn, inv, gain)


def layernorm_backward(dout, cache):
    xn, inv, gain = cache
    dim = xn.shape[-1]
    dxn = dout * gain
    dgain = (dout * xn).reshape(-1, dim).sum(axis=0)
    dbias = dout.reshape(-1, dim).sum(axis=0)
    m1 = dxn.mean(axis=-1, keepdims=True)
    m2 = (dxn * xn).mean(axis=-1, keepdims=True)
    dx = (dxn - m1 - xn * m2) * inv
    return dx, dgain, dbias


def softmax_last(z):
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _split_heads(x, heads):
    b, length, dim = x.shape
    return x.reshape(b, length, heads, dim // heads).transpose(0, 2, 1, 3)


def _merge_heads(x):
    b, heads, length, hd = x.shape
    return x.transpose(0, 2, 1, 3).reshape(b, length, heads * hd)


def attention_forward(x, wq, bq, wk, bk, wv, bv, wo, bo, heads,
                      dropout_p=0.0, rng=None, train=False):
    """Full (all-to-all) multi-head self-attention with output projection."""
    q, cq = affine_forward(x, wq, bq)
    k, ck = affine_forward(x, wk, bk)
    v, cv = affine_forward(x, wv, bv)
    qh, kh, vh = (_split_heads(a, heads) for a in (q, k, v))
    scale = 1.0 / math.sqrt(qh.shape[-1])
    logits = (qh @ kh.transpose(0, 1, 3, 2)) * scale
    prob = softmax_last(logits)
    prob_d, pmask = dropout_forward(prob, dropout_p, rng, train)
    ctx = _merge_heads(prob_d @ vh)
    out, co = affine_forward(ctx, wo, bo)
    cache = (cq, ck, cv, co, qh, kh, vh, prob, prob_d, pmask, scale, heads)
    return out, cache


def attention_backward(dout, cache):
    cq, ck, cv, co, qh, kh, vh, prob, prob_d, pmask, scale, heads = cache
    dctx, dwo, dbo = affine_backward(dout, co)
    dctx_h = _split_heads(dctx, heads)
    dprob_d = dctx_h @ vh.transpose(0, 1, 3, 2)
    dvh = prob_d.transpose(0, 1, 3, 2) @ dctx_h
    dprob = dropout_backward(dprob_d, pmask)
    dlogits = (dprob - (dprob * prob).sum(axis=-1, keepdims=True)) * prob
    dqh = (dlogits @ kh) * scale
    dkh = (dlogits.transpose(0, 1, 3, 2) @ qh) * scale
    dxq, dwq, dbq = affine_backward(_merge_heads(dqh), cq)
    dxk, dwk, dbk = affine_backward(_merge_heads(dkh), ck)
    dxv, dwv, dbv = affine_backward(_merge_heads(dvh), cv)
    dx = dxq + dxk + dxv
    return dx, (dwq, dbq, dwk, dbk, dwv, dbv, dwo, dbo)


def mlp_forward(x, w1, b1, w2, b2):
    h, c1 = affine_forward(x, w1, b1)
    r, rmask = relu_forward(h)
    out, c2 = affine_forward(r, w2, b2)
    return out, (c1, rmask, c2)


def mlp_backward(dout, cache):
    c1, rmask, c2 = cache
    dr, dw2, db2 = affine_backward(dout, c2)
    dh = relu_backward(dr, rmask)
    dx, dw1, db1 = affine_backward(dh, c1)
    return dx, (dw1, db1, dw2, db2)
