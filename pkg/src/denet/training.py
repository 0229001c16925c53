"""Two-pass training loop: score, assess/erase, rescore, update.

Each iteration draws a half-abnormal/half-normal batch and
1. scores every video without dropout (erasure decisions must be
   deterministic, and this pass contributes no gradients);
2. decides and applies erasure per abnormal video from those scores;
3. runs a training-mode pass on the original features and one on the
   erased features (normal videos enter the second pass unchanged);
4. combines the pair-averaged losses of both passes and performs a single
   Adam update with decoupled weight decay on the shared parameters.

All randomness (batch sampling, dropout) comes from one seeded generator
drawn in a fixed order, so identical seed/config/data give bit-identical
checkpoints, and resuming from a checkpoint replays the uninterrupted run
exactly.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path

import numpy as np

from . import model
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .config import ModelConfig, TrainConfig
from .data import DatasetManifest, SegmentFeatures, load_manifest, load_split
from .erasing import apply_batch
from .errors import TrainingError, ValidationError
from .losses import LossReport, pass_losses
from .optim import AdamState, adam_step, init_adam_state

logger = logging.getLogger(__name__)

METRICS_COLUMNS = ("iteration", "l_u", "l_e", "total",
                   "fraction_erased_videos", "mean_erased_segments")


def make_batch(dataset: list[SegmentFeatures], rng: np.random.Generator,
               batch_size: int) -> tuple[list[SegmentFeatures], list[SegmentFeatures]]:
    """Sample batch_size/2 abnormal and batch_size/2 normal videos.

    Sampling is without replacement unless a class has fewer videos than
    needed. Abnormal indices are drawn before normal ones (fixed order, so
    a restored generator reproduces the same batches).
    """
    abnormal = [sf for sf in dataset if sf.label == 1]
    normal = [sf for sf in dataset if sf.label == 0]
    if not abnormal or not normal:
        raise ValidationError("training data must contain both normal and abnormal videos")
    half = batch_size // 2
    picked = []
    for pool in (abnormal, normal):
        idx = rng.choice(len(pool), size=half, replace=len(pool) < half)
        picked.append([pool[i] for i in idx])
    return picked[0], picked[1]


def train_step(params, adam: AdamState, abnormal: list[SegmentFeatures],
               normal: list[SegmentFeatures], tcfg: TrainConfig,
               mcfg: ModelConfig, rng: np.random.Generator):
    """One optimization step; mutates params/adam in place.

    Returns (LossReport, erase decisions, (fraction_erased, mean_erased)).
    """
    weights = tcfg.loss_weights()
    P = len(abnormal)
    Xa = np.stack([sf.X for sf in abnormal])
    Xn = np.stack([sf.X for sf in normal])
    X_all = np.concatenate([Xa, Xn], axis=0)

    # deterministic scoring for the erasure decisions (no dropout, no gradients)
    scores_det, _, _ = model.forward(params, X_all, mcfg)
    if tcfg.erase_mode == "none":
        decisions = []
        Xe_all = None
    else:
        abn_items = [(abnormal[i].video_id, Xa[i], scores_det[i]) for i in range(P)]
        nrm_items = [(normal[i].video_id, Xn[i], scores_det[P + i]) for i in range(P)]
        erased, decisions = apply_batch(abn_items, nrm_items, tcfg.delta,
                                        force_erase=tcfg.erase_mode == "static")
        Xe_all = np.concatenate([np.stack(erased), Xn], axis=0)

    grads = model.zero_grads(params)
    scores_u, xhat_u, cache_u = model.forward(params, X_all, mcfg, rng=rng, train=True)
    l_score_u, l_fea_u, dsa, dsn, dxa, dxn = pass_losses(
        scores_u[:P], scores_u[P:], xhat_u[:P], xhat_u[P:],
        coef_score=weights.lambda1 * weights.alpha1,
        coef_fea=weights.lambda1 * weights.alpha2)
    model.backward(params, grads, np.concatenate([dsa, dsn]),
                   np.concatenate([dxa, dxn]), cache_u)

    if Xe_all is None:
        l_score_e = l_fea_e = 0.0
    else:
        scores_e, xhat_e, cache_e = model.forward(params, Xe_all, mcfg, rng=rng, train=True)
        l_score_e, l_fea_e, dsa_e, dsn_e, dxa_e, dxn_e = pass_losses(
            scores_e[:P], scores_e[P:], xhat_e[:P], xhat_e[P:],
            coef_score=weights.lambda2 * weights.alpha1,
            coef_fea=weights.lambda2 * weights.alpha2)
        model.backward(params, grads, np.concatenate([dsa_e, dsn_e]),
                       np.concatenate([dxa_e, dxn_e]), cache_e)

    l_u = weights.alpha1 * l_score_u + weights.alpha2 * l_fea_u
    l_e = weights.alpha1 * l_score_e + weights.alpha2 * l_fea_e
    total = weights.lambda1 * l_u + weights.lambda2 * l_e
    report = LossReport(l_score_u, l_fea_u, l_u, l_score_e, l_fea_e, l_e, total)
    if not np.isfinite(list(report.as_dict().values())).all():
        ids = [sf.video_id for sf in abnormal] + [sf.video_id for sf in normal]
        raise TrainingError(f"non-finite loss {report.as_dict()} on batch {ids}")

    adam_step(params, grads, adam, lr=tcfg.learning_rate, beta1=tcfg.beta1,
              beta2=tcfg.beta2, eps=tcfg.adam_eps,
              weight_decay=tcfg.weight_decay, decay=model.decay_mask(params))

    if decisions:
        fraction = sum(d.era_m for d in decisions) / len(decisions)
        mean_erased = sum(len(d.erased_indices) for d in decisions) / len(decisions)
    else:
        fraction = 0.0
        mean_erased = 0.0
    return report, decisions, (fraction, mean_erased)


def _checkpoint_of(params, mcfg, tcfg, iteration, rng, adam) -> Checkpoint:
    return Checkpoint(params=params, model=mcfg, train=tcfg, iteration=iteration,
                      rng_state=rng.bit_generator.state, adam=adam)


def train(tcfg: TrainConfig, manifest, out_dir, resume=None,
          audit_erase: bool = False, log_every: int = 100) -> Path:
    """Run the training loop and return the path of the final checkpoint.

    ``manifest`` is a DatasetManifest or a path to a train-split CSV.
    Checkpoints are written every ``checkpoint_every`` iterations and at the
    end; ``resume`` restores parameters, optimizer state, RNG state, and the
    iteration counter from an earlier checkpoint (its recorded train config
    replaces ``tcfg`` so the continuation is exact).
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if not isinstance(manifest, DatasetManifest):
        manifest = load_manifest(manifest, "train")

    if resume is not None:
        ck = load_checkpoint(resume)
        if ck.train is None or ck.adam is None or ck.rng_state is None:
            raise ValidationError(f"{resume}: checkpoint has no training state to resume")
        tcfg = ck.train
        dataset = load_split(manifest, tcfg.T)
        mcfg = tcfg.model_config(dataset[0].X.shape[1])
        if mcfg != ck.model:
            raise ValidationError(f"{resume}: dataset/model mismatch "
                                  f"({mcfg} vs checkpoint {ck.model})")
        params = ck.params
        adam = ck.adam
        rng = np.random.default_rng()
        rng.bit_generator.state = ck.rng_state
        start = ck.iteration
    else:
        dataset = load_split(manifest, tcfg.T)
        mcfg = tcfg.model_config(dataset[0].X.shape[1])
        rng = np.random.default_rng(tcfg.seed)
        params = model.init_params(mcfg, rng)
        adam = init_adam_state(params)
        start = 0
    if start > tcfg.max_iterations:
        raise ValidationError(f"checkpoint iteration {start} is past "
                              f"max_iterations {tcfg.max_iterations}")

    metrics_path = out_dir / "metrics.csv"
    mode = "a" if resume is not None and metrics_path.exists() else "w"
    metrics = open(metrics_path, mode)
    if mode == "w":
        metrics.write(",".join(METRICS_COLUMNS) + "\n")
    audit = None
    if audit_erase:
        audit = open(out_dir / "erase_audit.jsonl",
                     "a" if resume is not None else "w")

    try:
        for it in range(start, tcfg.max_iterations):
            abnormal, normal = make_batch(dataset, rng, tcfg.batch_size)
            report, decisions, (fraction, mean_erased) = train_step(
                params, adam, abnormal, normal, tcfg, mcfg, rng)
            iteration = it + 1
            metrics.write(f"{iteration},{report.l_u:.8g},{report.l_e:.8g},"
                          f"{report.total:.8g},{fraction:.6g},{mean_erased:.6g}\n")
            if audit is not None:
                for d in decisions:
                    audit.write(json.dumps({"iteration": iteration, **d.as_dict()}) + "\n")
            if iteration % log_every == 0 or iteration == tcfg.max_iterations:
                logger.info("iter %d: total=%.5f l_u=%.5f l_e=%.5f erased=%.2f",
                            iteration, report.total, report.l_u, report.l_e, fraction)
            if iteration % tcfg.checkpoint_every == 0:
                save_checkpoint(out_dir / f"ckpt_{iteration:06d}.ckpt",
                                _checkpoint_of(params, mcfg, tcfg, iteration, rng, adam))
    finally:
        metrics.close()
        if audit is not None:
            audit.close()

    final = out_dir / "ckpt_final.ckpt"
    save_checkpoint(final, _checkpoint_of(params, mcfg, tcfg,
                                          tcfg.max_iterations, rng, adam))
    return final
