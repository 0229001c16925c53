"""Frame-level scoring and metrics.

Segment scores are broadcast to frames (frame j takes the score of segment
floor(j * T / frame_count)), predictions of all test videos are concatenated
in manifest order, and ROC-AUC / average precision are computed globally.
Ties contribute 0.5 to the AUC pair statistic; average precision ranks by
descending score with a stable sort, so tied frames keep their original
order. Both conventions shift third-decimal results, hence they are pinned
here and mirrored by the brute-force oracles in the test suite.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from scipy.stats import rankdata

from . import model
from .config import ModelConfig
from .data import DatasetManifest, load_sequence, resample_to_segments
from .errors import ValidationError
from .io import read_gt_file


def frame_scores(seg_scores, frame_count: int) -> np.ndarray:
    """Broadcast per-segment scores over each segment's frame span."""
    s = np.asarray(seg_scores)
    if s.ndim != 1 or s.size == 0:
        raise ValueError("segment scores must be a nonempty 1-D array")
    if frame_count < 1:
        raise ValueError(f"frame_count must be >= 1, got {frame_count}")
    idx = (np.arange(frame_count) * s.shape[0]) // frame_count
    return s[idx]


def _check_binary(labels) -> np.ndarray:
    y = np.asarray(labels)
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    return y.astype(np.int64)


def roc_auc(scores, labels) -> float:
    """Area under the ROC curve via the rank-sum (Mann-Whitney) statistic."""
    s = np.asarray(scores, dtype=float)
    y = _check_binary(labels)
    if s.shape != y.shape:
        raise ValueError("scores and labels must have the same length")
    n_pos = int(y.sum())
    n_neg = int(y.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both classes present")
    ranks = rankdata(s)
    return float((ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def average_precision(scores, labels) -> float:
    """Mean precision at the rank of each positive (descending stable order)."""
    s = np.asarray(scores, dtype=float)
    y = _check_binary(labels)
    if s.shape != y.shape:
        raise ValueError("scores and labels must have the same length")
    if y.sum() == 0:
        raise ValueError("average precision needs at least one positive")
    order = np.argsort(-s, kind="stable")
    y_sorted = y[order]
    precision = np.cumsum(y_sorted) / np.arange(1, y.size + 1)
    return float(precision[y_sorted == 1].mean())


def evaluate(params, mcfg: ModelConfig, manifest: DatasetManifest,
             out_dir=None, plot: bool = False):
    """Score every test video and compute global frame-level AUC and AP.

    Returns (report dict, {video_id: (frame scores, gt)}). With ``out_dir``
    set, writes ``report.json`` plus one ``curves/<video_id>.csv`` per video
    (columns frame,score,gt), and optionally a score-curve image per video.
    """
    if manifest.split != "test":
        raise ValidationError("evaluation requires a test manifest with ground truth")
    curves: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    all_scores = []
    all_labels = []
    for entry in manifest.entries:
        seq = load_sequence(manifest, entry)
        seg = resample_to_segments(seq, mcfg.T, label=entry.label)
        scores = model.score_video(params, seg.X, mcfg)
        fs = frame_scores(scores, entry.frame_count)
        gt = read_gt_file(manifest.resolve(entry.gt_path))
        if gt.shape[0] != entry.frame_count:
            raise ValidationError(f"{entry.video_id}: ground truth has {gt.shape[0]} "
                                  f"frames, manifest says {entry.frame_count}")
        curves[entry.video_id] = (fs, gt)
        all_scores.append(fs)
        all_labels.append(gt)
    scores_cat = np.concatenate(all_scores)
    labels_cat = np.concatenate(all_labels)
    report = {"auc": roc_auc(scores_cat, labels_cat),
              "ap": average_precision(scores_cat, labels_cat),
              "n_videos": len(manifest.entries),
              "n_frames": int(labels_cat.size)}
    if out_dir is not None:
        out_dir = Path(out_dir)
        (out_dir / "curves").mkdir(parents=True, exist_ok=True)
        (out_dir / "report.json").write_text(json.dumps(report, indent=2) + "\n")
        for video_id, (fs, gt) in curves.items():
            lines = ["frame,score,gt"]
            lines += [f"{i},{fs[i]:.6f},{gt[i]}" for i in range(fs.shape[0])]
            (out_dir / "curves" / f"{video_id}.csv").write_text("\n".join(lines) + "\n")
        if plot:
            _plot_curves(curves, out_dir / "plots")
    return report, curves


def _plot_curves(curves, plot_dir: Path) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plot_dir.mkdir(parents=True, exist_ok=True)
    for video_id, (fs, gt) in curves.items():
        fig, ax = plt.subplots(figsize=(8, 2.5))
        frames = np.arange(fs.shape[0])
        ax.fill_between(frames, 0, 1, where=gt > 0, color="orange", alpha=0.35,
                        label="ground truth")
        ax.plot(frames, fs, color="tab:blue", lw=1.2, label="anomaly score")
        ax.set_ylim(0, 1)
        ax.set_xlim(0, fs.shape[0] - 1)
        ax.set_xlabel("frame")
        ax.set_ylabel("score")
        ax.set_title(video_id)
        ax.legend(loc="upper right", fontsize=8)
        fig.tight_layout()
        fig.savefig(plot_dir / f"{video_id}.png", dpi=110)
        plt.close(fig)
