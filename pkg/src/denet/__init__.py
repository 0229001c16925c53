"""Weakly supervised video anomaly detection with multi-scale temporal
features and dynamic erasing of prominent abnormal segments."""

from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .classifier import score
from .config import LossWeights, ModelConfig, SynthConfig, TrainConfig
from .data import (DatasetManifest, FeatureSequence, ManifestEntry,
                   SegmentFeatures, load_manifest, load_split,
                   resample_to_segments, write_manifest)
from .erasing import (EraseDecision, apply_batch, completeness, erase,
                      extreme_indices, segment_similarity)
from .errors import DataError, DenetError, TrainingError, ValidationError
from .evaluation import average_precision, evaluate, frame_scores, roc_auc
from .io import read_feature_file, read_gt_file, write_feature_file, write_gt_file
from .losses import (LossReport, PassOutputs, combined_loss,
                     feature_variation_loss, local_variation,
                     score_ranking_loss)
from .model import forward, init_params, param_shapes, score_video
from .mstm import aggregate, align, global_encode, local_conv
from .synthetic import generate_synthetic
from .training import make_batch, train, train_step

__version__ = "0.1.0"

__all__ = [
    "Checkpoint", "DataError", "DatasetManifest", "DenetError", "EraseDecision",
    "FeatureSequence", "LossReport", "LossWeights", "ManifestEntry", "ModelConfig",
    "PassOutputs", "SegmentFeatures", "SynthConfig", "TrainConfig", "TrainingError",
    "ValidationError", "aggregate", "align", "apply_batch", "average_precision",
    "combined_loss", "completeness", "erase", "evaluate", "extreme_indices",
    "feature_variation_loss", "forward", "frame_scores", "generate_synthetic",
    "global_encode", "init_params", "load_checkpoint", "load_manifest", "load_split",
    "local_conv", "local_variation", "make_batch", "param_shapes",
    "read_feature_file", "read_gt_file", "resample_to_segments", "roc_auc",
    "save_checkpoint", "score", "score_ranking_loss", "score_video",
    "segment_similarity", "train", "train_step", "write_feature_file",
    "write_gt_file", "write_manifest",
]
