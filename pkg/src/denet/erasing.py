"""Dynamic assessment and erasure of prominent abnormal segments.

Per abnormal video, the cosine similarity between its highest- and
lowest-scoring segments (on the raw input features) is compared against the
batch mean of the same quantity over normal videos. A positive gap
("completeness") means the detected anomaly already spans what there is to
find; otherwise the video is marked for erasure and every segment scoring
strictly above the threshold has its feature row zeroed. Decisions are pure
functions of the current batch: nothing persists across iterations, and
normal videos are never modified.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)


def extreme_indices(scores) -> tuple[int, int]:
    """(argmax, argmin) of the score vector; ties go to the smallest index."""
    s = np.asarray(scores)
    if s.ndim != 1 or s.size == 0:
        raise ValueError("scores must be a nonempty 1-D array")
    return int(np.argmax(s)), int(np.argmin(s))


def segment_similarity(X, t_high: int, t_low: int) -> float:
    """Cosine similarity of the raw feature rows at the two extreme indices.

    A zero-norm row makes the cosine undefined; 0 is returned as the neutral
    value and the degeneracy is logged.
    """
    u = np.asarray(X)[t_high]
    v = np.asarray(X)[t_low]
    nu = float(np.sqrt((u * u).sum()))
    nv = float(np.sqrt((v * v).sum()))
    if nu == 0.0 or nv == 0.0:
        logger.warning("segment similarity: zero-norm row (t_high=%d, t_low=%d), using 0",
                       t_high, t_low)
        return 0.0
    return float(np.clip(float(u @ v) / (nu * nv), -1.0, 1.0))


def completeness(sim_abnormal: float, normal_sims) -> float:
    """Gap between an abnormal video's similarity and the normal-batch mean."""
    sims = np.asarray(normal_sims, dtype=float)
    if sims.size == 0:
        raise ValueError("normal similarities must be nonempty")
    return float(sim_abnormal - sims.mean())


def erase(X, scores, era_m: int, delta: float):
    """Zero the rows scoring strictly above delta when era_m is set.

    Returns (erased copy, tuple of erased indices). With era_m == 0 the copy
    is identical to the input.
    """
    X = np.asarray(X)
    scores = np.asarray(scores)
    if scores.shape[0] != X.shape[0]:
        raise ValueError(f"scores length {scores.shape[0]} does not match "
                         f"{X.shape[0]} segments")
    X_e = X.copy()
    if not era_m:
        return X_e, ()
    idx = np.flatnonzero(scores > delta)
    X_e[idx] = 0
    return X_e, tuple(int(i) for i in idx)


@dataclass(frozen=True)
class EraseDecision:
    """Audit record of one per-video erasure decision."""

    video_id: str
    t_high: int
    t_low: int
    sim: float
    completeness: float
    era_m: int
    erased_indices: tuple[int, ...]
    delta: float

    def as_dict(self) -> dict:
        return {"video_id": self.video_id, "t_high": self.t_high, "t_low": self.t_low,
                "sim": self.sim, "completeness": self.completeness, "era_m": self.era_m,
                "erased_indices": list(self.erased_indices), "delta": self.delta}


def apply_batch(abnormal, normal, delta: float, force_erase: bool = False):
    """Decide and apply erasure for every abnormal video of a batch.

    ``abnormal`` and ``normal`` are sequences of ``(video_id, X, scores)``
    triples. Normal-side similarities are computed once and shared. Returns
    (list of erased feature matrices, list of decisions); normal videos are
    left untouched. ``force_erase`` skips the assessment and erases every
    abnormal video (ablation fixture, not a supported mode).
    """
    abnormal = list(abnormal)
    normal = list(normal)
    if abnormal and not normal:
        raise ValueError("at least one normal video is required to assess completeness")
    normal_sims = [segment_similarity(X, *extreme_indices(scores))
                   for _, X, scores in normal]
    erased, decisions = [], []
    for video_id, X, scores in abnormal:
        t_high, t_low = extreme_indices(scores)
        sim = segment_similarity(X, t_high, t_low)
        comp = completeness(sim, normal_sims)
        era_m = 1 if force_erase else (0 if comp > 0 else 1)
        X_e, idx = erase(X, scores, era_m, delta)
        erased.append(X_e)
        decisions.append(EraseDecision(video_id, t_high, t_low, sim, comp,
                                       era_m, idx, delta))
    return erased, decisions
