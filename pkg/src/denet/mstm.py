"""Multi-scale temporal modeling.

For each scale ``s`` (1-based), the input ``(T, D)`` sequence is locally
summarized by a strided 1-D convolution (stride = kernel = ``2**(s-1)``,
no padding, no activation), giving ``T / 2**(s-1)`` rows. A learnable
positional encoding is added and a single post-norm transformer encoder
layer imposes global context at that scale. The per-scale outputs are
aligned back to length ``T`` by nearest-neighbor repetition, concatenated
along the feature axis, and projected to ``(T, D)`` by one affine layer.

Parameters live in a flat ``{name: ndarray}`` dict with canonical names
(``mstm.s{s}.conv.w`` etc.); see :mod:`denet.checkpoint` for the naming
contract. Batched entry points operate on ``(B, T, D)`` arrays; the
module-level operations take a single ``(T, D)`` matrix.
"""

from __future__ import annotations

import math

import numpy as np

from .config import ModelConfig
from .layers import (affine_backward, affine_forward, attention_backward,
                     attention_forward, dropout_backward, dropout_forward,
                     layernorm_backward, layernorm_forward, mlp_backward,
                     mlp_forward)


def scale_group(s: int) -> int:
    """Rows merged per output row at scale s (stride and kernel size)."""
    if s < 1:
        raise ValueError(f"scale index must be >= 1, got {s}")
    return 2 ** (s - 1)


def scale_length(T: int, s: int) -> int:
    g = scale_group(s)
    if T % g:
        raise ValueError(f"sequence length {T} is not divisible by {g} (scale {s})")
    return T // g


def mstm_param_shapes(cfg: ModelConfig) -> dict[str, tuple[int, ...]]:
    D, H = cfg.D, cfg.hidden
    shapes: dict[str, tuple[int, ...]] = {}
    for s in range(1, cfg.S + 1):
        g = scale_group(s)
        pre = f"mstm.s{s}"
        shapes[f"{pre}.conv.w"] = (g * D, D)
        shapes[f"{pre}.conv.b"] = (D,)
        shapes[f"{pre}.pos"] = (scale_length(cfg.T, s), D)
        for name in ("q", "k", "v", "out"):
            shapes[f"{pre}.attn.{name}.w"] = (D, D)
            shapes[f"{pre}.attn.{name}.b"] = (D,)
        for ln in ("ln1", "ln2"):
            shapes[f"{pre}.{ln}.g"] = (D,)
            shapes[f"{pre}.{ln}.b"] = (D,)
        shapes[f"{pre}.mlp.fc1.w"] = (D, H)
        shapes[f"{pre}.mlp.fc1.b"] = (H,)
        shapes[f"{pre}.mlp.fc2.w"] = (H, D)
        shapes[f"{pre}.mlp.fc2.b"] = (D,)
    shapes["mstm.agg.w"] = (cfg.S * D, D)
    shapes["mstm.agg.b"] = (D,)
    return shapes


def init_affine(params, rng, dtype, wname, bname, n_in, n_out):
    """Fan-in scaled uniform initialization for one affine layer."""
    bound = 1.0 / math.sqrt(n_in)
    params[wname] = rng.uniform(-bound, bound, size=(n_in, n_out)).astype(dtype)
    params[bname] = rng.uniform(-bound, bound, size=n_out).astype(dtype)


def init_mstm_params(cfg: ModelConfig, rng: np.random.Generator,
                     dtype=np.float32) -> dict[str, np.ndarray]:
    D, H = cfg.D, cfg.hidden
    p: dict[str, np.ndarray] = {}
    for s in range(1, cfg.S + 1):
        g = scale_group(s)
        pre = f"mstm.s{s}"
        init_affine(p, rng, dtype, f"{pre}.conv.w", f"{pre}.conv.b", g * D, D)
        p[f"{pre}.pos"] = np.zeros((scale_length(cfg.T, s), D), dtype=dtype)
        for name in ("q", "k", "v", "out"):
            init_affine(p, rng, dtype, f"{pre}.attn.{name}.w", f"{pre}.attn.{name}.b", D, D)
        for ln in ("ln1", "ln2"):
            p[f"{pre}.{ln}.g"] = np.ones(D, dtype=dtype)
            p[f"{pre}.{ln}.b"] = np.zeros(D, dtype=dtype)
        init_affine(p, rng, dtype, f"{pre}.mlp.fc1.w", f"{pre}.mlp.fc1.b", D, H)
        init_affine(p, rng, dtype, f"{pre}.mlp.fc2.w", f"{pre}.mlp.fc2.b", H, D)
    init_affine(p, rng, dtype, "mstm.agg.w", "mstm.agg.b", cfg.S * D, D)
    return p


def _conv_forward(x, w, b, g):
    """Strided local convolution as a reshape + affine map.

    Output row j is an affine function of the g consecutive input rows
    starting at j*g. Requires the length to be divisible by g.
    """
    batch, length, dim = x.shape
    if length % g:
        raise ValueError(f"sequence length {length} is not divisible by stride {g}")
    xr = x.reshape(batch, length // g, g * dim)
    out, _ = affine_forward(xr, w, b)
    return out, (xr, w, g, dim)


def _conv_backward(dout, cache):
    xr, w, g, dim = cache
    batch = xr.shape[0]
    gd = xr.shape[-1]
    dw = xr.reshape(-1, gd).T @ dout.reshape(-1, dim)
    db = dout.reshape(-1, dim).sum(axis=0)
    dx = (dout @ w.T).reshape(batch, -1, dim)
    return dx, dw, db


def _align(x, g):
    return x if g == 1 else np.repeat(x, g, axis=1)


def _align_backward(dout, g):
    if g == 1:
        return dout
    batch, length, dim = dout.shape
    return dout.reshape(batch, length // g, g, dim).sum(axis=2)


def _encoder_forward(params, x, s, cfg, rng=None, train=False):
    """One post-norm encoder layer: LN(x + drop(MSA(x))), then LN(h + drop(MLP(h)))."""
    pre = f"mstm.s{s}"
    attn, c_attn = attention_forward(
        x,
        params[f"{pre}.attn.q.w"], params[f"{pre}.attn.q.b"],
        params[f"{pre}.attn.k.w"], params[f"{pre}.attn.k.b"],
        params[f"{pre}.attn.v.w"], params[f"{pre}.attn.v.b"],
        params[f"{pre}.attn.out.w"], params[f"{pre}.attn.out.b"],
        heads=cfg.heads, dropout_p=cfg.dropout, rng=rng, train=train)
    attn_d, m_attn = dropout_forward(attn, cfg.dropout, rng, train)
    h, c_ln1 = layernorm_forward(x + attn_d, params[f"{pre}.ln1.g"], params[f"{pre}.ln1.b"])
    mlp, c_mlp = mlp_forward(h, params[f"{pre}.mlp.fc1.w"], params[f"{pre}.mlp.fc1.b"],
                             params[f"{pre}.mlp.fc2.w"], params[f"{pre}.mlp.fc2.b"])
    mlp_d, m_mlp = dropout_forward(mlp, cfg.dropout, rng, train)
    out, c_ln2 = layernorm_forward(h + mlp_d, params[f"{pre}.ln2.g"], params[f"{pre}.ln2.b"])
    return out, (c_attn, m_attn, c_ln1, c_mlp, m_mlp, c_ln2)


def _encoder_backward(params, grads, dout, s, cache):
    pre = f"mstm.s{s}"
    c_attn, m_attn, c_ln1, c_mlp, m_mlp, c_ln2 = cache
    dsum2, dg2, db2 = layernorm_backward(dout, c_ln2)
    grads[f"{pre}.ln2.g"] += dg2
    grads[f"{pre}.ln2.b"] += db2
    dmlp = dropout_backward(dsum2, m_mlp)
    dh_mlp, (dw1, db1, dw2, db2m) = mlp_backward(dmlp, c_mlp)
    grads[f"{pre}.mlp.fc1.w"] += dw1
    grads[f"{pre}.mlp.fc1.b"] += db1
    grads[f"{pre}.mlp.fc2.w"] += dw2
    grads[f"{pre}.mlp.fc2.b"] += db2m
    dh = dsum2 + dh_mlp
    dsum1, dg1, db1n = layernorm_backward(dh, c_ln1)
    grads[f"{pre}.ln1.g"] += dg1
    grads[f"{pre}.ln1.b"] += db1n
    dattn = dropout_backward(dsum1, m_attn)
    dx_attn, (dwq, dbq, dwk, dbk, dwv, dbv, dwo, dbo) = attention_backward(dattn, c_attn)
    for name, gw, gb in (("q", dwq, dbq), ("k", dwk, dbk), ("v", dwv, dbv), ("out", dwo, dbo)):
        grads[f"{pre}.attn.{name}.w"] += gw
        grads[f"{pre}.attn.{name}.b"] += gb
    return dsum1 + dx_attn


def mstm_forward(params, x, cfg: ModelConfig, rng=None, train=False):
    """Batched multi-scale forward pass: (B, T, D) -> (B, T, D) plus cache."""
    T = x.shape[1]
    aligned = []
    scale_caches = []
    for s in range(1, cfg.S + 1):
        g = scale_group(s)
        pre = f"mstm.s{s}"
        xb, c_conv = _conv_forward(x, params[f"{pre}.conv.w"], params[f"{pre}.conv.b"], g)
        pos = params[f"{pre}.pos"]
        if xb.shape[1] != pos.shape[0]:
            raise ValueError(f"scale {s}: length {xb.shape[1]} does not match "
                             f"positional encoding of length {pos.shape[0]}")
        xe, c_enc = _encoder_forward(params, xb + pos, s, cfg, rng=rng, train=train)
        aligned.append(_align(xe, g))
        scale_caches.append((g, c_conv, c_enc))
    cat = np.concatenate(aligned, axis=2)
    xhat, c_agg = affine_forward(cat, params["mstm.agg.w"], params["mstm.agg.b"])
    if xhat.shape[1] != T:
        raise ValueError("alignment failed to restore the original length")
    return xhat, (scale_caches, c_agg)


def mstm_backward(params, grads, dxhat, cache):
    """Accumulate parameter gradients into ``grads``; returns d(input)."""
    scale_caches, c_agg = cache
    dim = dxhat.shape[-1]
    dcat, dw_agg, db_agg = affine_backward(dxhat, c_agg)
    grads["mstm.agg.w"] += dw_agg
    grads["mstm.agg.b"] += db_agg
    dx_total = None
    for i, (g, c_conv, c_enc) in enumerate(scale_caches):
        s = i + 1
        dxe = _align_backward(dcat[:, :, i * dim:(i + 1) * dim], g)
        dxp = _encoder_backward(params, grads, dxe, s, c_enc)
        grads[f"mstm.s{s}.pos"] += dxp.sum(axis=0)
        dx, dw, db = _conv_backward(dxp, c_conv)
        grads[f"mstm.s{s}.conv.w"] += dw
        grads[f"mstm.s{s}.conv.b"] += db
        dx_total = dx if dx_total is None else dx_total + dx
    return dx_total


# ---------------------------------------------------------------------------
# single-video operations


def local_conv(params, X, s: int):
    """Strided local convolution of one (T, D) matrix at scale s."""
    out, _ = _conv_forward(X[None], params[f"mstm.s{s}.conv.w"],
                           params[f"mstm.s{s}.conv.b"], scale_group(s))
    return out[0]


def global_encode(params, Xbar, s: int, cfg: ModelConfig, rng=None, train=False):
    """Positional encoding plus one encoder layer at scale s, on (L, D)."""
    pos = params[f"mstm.s{s}.pos"]
    if Xbar.shape[0] != pos.shape[0]:
        raise ValueError(f"scale {s}: length {Xbar.shape[0]} does not match "
                         f"positional encoding of length {pos.shape[0]}")
    out, _ = _encoder_forward(params, Xbar[None] + pos, s, cfg, rng=rng, train=train)
    return out[0]


def align(Xhat_s, T: int):
    """Repeat each row so an (L, D) matrix becomes (T, D); T/L must be a power of 2."""
    length = Xhat_s.shape[0]
    if length < 1 or T % length:
        raise ValueError(f"cannot align length {length} to {T}")
    g = T // length
    if g & (g - 1):
        raise ValueError(f"repetition factor {g} is not a power of 2")
    return _align(Xhat_s[None], g)[0]


def aggregate(params, aligned):
    """Concatenate S aligned (T, D) matrices and project back to (T, D)."""
    widths = {a.shape for a in aligned}
    if len(widths) != 1:
        raise ValueError(f"aligned inputs disagree on shape: {sorted(widths)}")
    cat = np.concatenate(aligned, axis=1)
    if cat.shape[1] != params["mstm.agg.w"].shape[0]:
        raise ValueError(f"concatenated width {cat.shape[1]} does not match "
                         f"projection input {params['mstm.agg.w'].shape[0]}")
    out, _ = affine_forward(cat, params["mstm.agg.w"], params["mstm.agg.b"])
    return out


def forward(params, X, cfg: ModelConfig, rng=None, train=False):
    """Full multi-scale pass on one (T, D) matrix."""
    out, _ = mstm_forward(params, X[None], cfg, rng=rng, train=train)
    return out[0]
