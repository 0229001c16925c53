"""Deterministic synthetic benchmark with frame-level ground truth.

Generation is a pure function of (config, seed): running it twice with the
same inputs produces byte-identical files. Segment means are laid out on a
T-grid, expanded to clips, and perturbed with Gaussian noise; the test
split additionally gets per-frame 0/1 labels derived from the segment mask.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .config import SynthConfig
from .data import DatasetManifest, ManifestEntry, write_manifest
from .io import write_feature_file, write_gt_file


def anomaly_directions(D: int) -> tuple[np.ndarray, np.ndarray]:
    """Two fixed unit vectors used as anomaly shift directions.

    Both are orthogonal to the all-ones base direction (exactly when D is a
    multiple of 4), and orthogonal to each other, so prominent and gentle
    events are separable from the base signal and from one another.
    """
    signs_u = np.where(np.arange(D) % 2 == 0, 1.0, -1.0)
    signs_v = np.where(np.arange(D) % 4 < 2, 1.0, -1.0)
    return signs_u / np.linalg.norm(signs_u), signs_v / np.linalg.norm(signs_v)


def _place_events(rng: np.random.Generator, cfg: SynthConfig) -> list[tuple[int, int]]:
    """Sample disjoint (start, length) intervals on the segment grid."""
    k = int(rng.integers(cfg.min_events, cfg.max_events + 1))
    placed: list[tuple[int, int]] = []
    for _ in range(k):
        for _attempt in range(200):
            length = int(rng.integers(cfg.min_anomaly_len, cfg.max_anomaly_len + 1))
            start = int(rng.integers(0, cfg.T - length + 1))
            if all(start + length <= s or start >= s + l for s, l in placed):
                placed.append((start, length))
                break
        # an event that cannot be placed disjointly is dropped
    return placed


def _make_video(rng: np.random.Generator, cfg: SynthConfig,
                abnormal: bool) -> tuple[np.ndarray, np.ndarray]:
    """Return (clip features, per-segment 0/1 mask) for one video."""
    u, v = anomaly_directions(cfg.D)
    mix = cfg.gentle_u_mix
    gentle_dir = mix * u + math.sqrt(1.0 - mix * mix) * v
    means = np.full((cfg.T, cfg.D), cfg.base_level, dtype=np.float64)
    mask = np.zeros(cfg.T, dtype=np.int8)
    if abnormal:
        # delta_mu == 0 still marks intervals so the label noise floor stays measurable
        for idx, (start, length) in enumerate(_place_events(rng, cfg)):
            direction = u if idx % 2 == 0 else gentle_dir
            scale = 1.0 if idx % 2 == 0 else cfg.gentle_scale
            means[start:start + length] += cfg.delta_mu * scale * direction
            mask[start:start + length] = 1
    n_clips = cfg.T * cfg.clips_per_segment
    clips = np.repeat(means, cfg.clips_per_segment, axis=0)
    clips = clips + rng.normal(0.0, cfg.noise_sigma, size=(n_clips, cfg.D))
    if cfg.min_amplitude < 1.0:
        amplitude = rng.uniform(cfg.min_amplitude, 1.0, size=cfg.T)
        clips = clips * np.repeat(amplitude, cfg.clips_per_segment)[:, None]
    return clips.astype(np.float32), mask


def generate_synthetic(cfg: SynthConfig, seed: int,
                       out_dir) -> tuple[DatasetManifest, DatasetManifest]:
    """Write feature files, ground truth, and train/test manifests.

    Returns the (train, test) manifests. Ground truth is written only for
    the test split; train rows carry nothing beyond the video-level label.
    """
    out_dir = Path(out_dir)
    frames_per_video = cfg.T * cfg.clips_per_segment * cfg.clip_len
    rng = np.random.default_rng(seed)
    manifests = {}
    for split, n_normal, n_abnormal in (("train", cfg.n_normal, cfg.n_abnormal),
                                        ("test", cfg.n_test_normal, cfg.n_test_abnormal)):
        entries = []
        specs = [(f"{split}_nrm_{i:04d}", 0) for i in range(n_normal)]
        specs += [(f"{split}_abn_{i:04d}", 1) for i in range(n_abnormal)]
        for video_id, label in specs:
            clips, seg_mask = _make_video(rng, cfg, abnormal=bool(label))
            feature_path = f"features/{video_id}.dnf"
            write_feature_file(out_dir / feature_path, clips)
            gt_path = ""
            if split == "test":
                gt_path = f"gt/{video_id}.txt"
                frame_gt = np.repeat(seg_mask, cfg.clips_per_segment * cfg.clip_len)
                write_gt_file(out_dir / gt_path, frame_gt)
            entries.append(ManifestEntry(video_id, label, feature_path,
                                         frames_per_video, gt_path))
        write_manifest(out_dir / f"{split}.csv", entries)
        manifests[split] = DatasetManifest(entries=entries, split=split, root=out_dir)
    return manifests["train"], manifests["test"]
