"""Dataset manifests and clip-to-segment resampling.

A manifest is a CSV with columns ``video_id,label,feature_path,frame_count,
gt_path``. Each manifest file describes one split; test rows must point to
a frame-level ground-truth file, train rows must leave ``gt_path`` empty
(weak supervision: only video-level labels are available for training).
Relative paths are resolved against the manifest's directory.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError, ValidationError
from .io import read_feature_file

MANIFEST_COLUMNS = ("video_id", "label", "feature_path", "frame_count", "gt_path")


@dataclass
class FeatureSequence:
    """Raw per-clip features of one video, before segmentation."""

    video_id: str
    clips: np.ndarray  # (n_clips, D)
    frame_count: int
    clip_len: int = 16

    def validate(self) -> "FeatureSequence":
        if self.clips.ndim != 2 or self.clips.shape[0] < 1 or self.clips.shape[1] < 1:
            raise DataError(f"{self.video_id}: clip features must be a non-empty 2-D array")
        if self.frame_count < 1:
            raise DataError(f"{self.video_id}: frame_count must be >= 1")
        if not np.isfinite(self.clips).all():
            raise DataError(f"{self.video_id}: non-finite clip features")
        return self


@dataclass
class SegmentFeatures:
    """Fixed-length segment features of one video plus its video-level label."""

    video_id: str
    X: np.ndarray  # (T, D)
    label: int


@dataclass(frozen=True)
class ManifestEntry:
    video_id: str
    label: int
    feature_path: str
    frame_count: int
    gt_path: str = ""


@dataclass
class DatasetManifest:
    entries: list[ManifestEntry]
    split: str
    root: Path = field(default_factory=Path)

    def resolve(self, relpath: str) -> Path:
        p = Path(relpath)
        return p if p.is_absolute() else self.root / p


def load_manifest(path, split: str) -> DatasetManifest:
    """Parse and validate a manifest CSV; feature files are not read yet."""
    if split not in ("train", "test"):
        raise ValidationError(f"split must be 'train' or 'test', got {split!r}")
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"{path}: no entries") from None
        if tuple(h.strip() for h in header) != MANIFEST_COLUMNS:
            raise ValidationError(
                f"{path}: bad header {header!r}, expected {','.join(MANIFEST_COLUMNS)}")
        entries = []
        seen = set()
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(MANIFEST_COLUMNS):
                raise ValidationError(f"{path}:{lineno}: expected {len(MANIFEST_COLUMNS)} columns")
            video_id, label_s, feature_path, frame_count_s, gt_path = (c.strip() for c in row)
            if not video_id:
                raise ValidationError(f"{path}:{lineno}: empty video_id")
            if video_id in seen:
                raise ValidationError(f"{path}:{lineno}: duplicate video_id {video_id!r}")
            seen.add(video_id)
            if label_s not in ("0", "1"):
                raise ValidationError(f"{path}:{lineno}: label must be 0 or 1, got {label_s!r}")
            if not feature_path:
                raise ValidationError(f"{path}:{lineno}: empty feature_path")
            try:
                frame_count = int(frame_count_s)
            except ValueError:
                raise ValidationError(f"{path}:{lineno}: bad frame_count {frame_count_s!r}") from None
            if frame_count < 1:
                raise ValidationError(f"{path}:{lineno}: frame_count must be >= 1")
            if split == "test" and not gt_path:
                raise ValidationError(f"{path}:{lineno}: test row {video_id!r} missing gt_path")
            if split == "train" and gt_path:
                raise ValidationError(
                    f"{path}:{lineno}: train row {video_id!r} must not carry gt_path "
                    "(weak supervision)")
            entries.append(ManifestEntry(video_id, int(label_s), feature_path,
                                         frame_count, gt_path))
    if not entries:
        raise ValidationError(f"{path}: no entries")
    return DatasetManifest(entries=entries, split=split, root=path.parent)


def write_manifest(path, entries) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MANIFEST_COLUMNS)
        for e in entries:
            writer.writerow([e.video_id, e.label, e.feature_path, e.frame_count, e.gt_path])


def resample_to_segments(seq: FeatureSequence, T: int, label: int = 0) -> SegmentFeatures:
    """Average clip features into ``T`` segments.

    Clip indices are partitioned into ``T`` contiguous, evenly sized groups
    and each segment is the mean of its group. Videos with fewer clips than
    segments repeat clips by nearest-index assignment so no segment is empty.
    """
    if T < 1:
        raise ValidationError(f"T must be >= 1, got {T}")
    seq.validate()
    clips = seq.clips
    n = clips.shape[0]
    if n >= T:
        bounds = (np.arange(T + 1) * n) // T
        X = np.stack([clips[bounds[t]:bounds[t + 1]].mean(axis=0) for t in range(T)])
    else:
        # nearest clip to each segment midpoint: floor((t + 0.5) * n / T)
        idx = ((2 * np.arange(T) + 1) * n) // (2 * T)
        X = clips[idx].copy()
    return SegmentFeatures(video_id=seq.video_id, X=X.astype(clips.dtype, copy=False),
                           label=label)


def load_sequence(manifest: DatasetManifest, entry: ManifestEntry) -> FeatureSequence:
    clips = read_feature_file(manifest.resolve(entry.feature_path))
    return FeatureSequence(video_id=entry.video_id, clips=clips,
                           frame_count=entry.frame_count).validate()


def load_split(manifest: DatasetManifest, T: int) -> list[SegmentFeatures]:
    """Read every feature file of a manifest and resample to T segments."""
    out = []
    dim = None
    for entry in manifest.entries:
        seq = load_sequence(manifest, entry)
        if dim is None:
            dim = seq.clips.shape[1]
        elif seq.clips.shape[1] != dim:
            raise DataError(f"{entry.video_id}: feature dim {seq.clips.shape[1]} "
                            f"differs from {dim} seen earlier")
        out.append(resample_to_segments(seq, T, label=entry.label))
    return out
