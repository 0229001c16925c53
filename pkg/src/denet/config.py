"""Configuration dataclasses and strict JSON loading.

All configs are flat key/value structures so they can be stored as plain
JSON files. Loading rejects unknown keys and validates invariants up
front, before any data is touched.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ValidationError

ERASE_MODES = ("dynamic", "static", "none")


def _check(cond: bool, msg: str) -> None:
    if not cond:
        raise ValidationError(msg)


@dataclass(frozen=True)
class LossWeights:
    """Scalar weights combining the score/feature and unerased/erased terms."""

    alpha1: float = 1.0
    alpha2: float = 1e-4
    lambda1: float = 1.0
    lambda2: float = 1.0

    def __post_init__(self):
        for name in ("alpha1", "alpha2", "lambda1", "lambda2"):
            _check(getattr(self, name) >= 0, f"loss weight {name} must be >= 0")


@dataclass(frozen=True)
class ModelConfig:
    """Architecture hyperparameters for the multi-scale model and classifier.

    Temporal scale ``s`` (1-based) halves the sequence length ``s - 1``
    times, so ``T`` must be divisible by ``2**(S - 1)``.
    """

    T: int
    D: int
    S: int = 3
    heads: int = 8
    encoder_layers: int = 1
    mlp_hidden: int | None = None
    dropout: float = 0.1
    clf_dropout: float = 0.6

    def __post_init__(self):
        _check(self.T >= 1, "T must be >= 1")
        _check(self.D >= 1, "D must be >= 1")
        _check(self.S >= 1, "S must be >= 1")
        _check(self.heads >= 1, "heads must be >= 1")
        _check(self.D % self.heads == 0, f"D={self.D} must be divisible by heads={self.heads}")
        group = 2 ** (self.S - 1)
        _check(self.T % group == 0, f"T={self.T} must be divisible by 2^(S-1)={group}")
        _check(self.encoder_layers == 1, "only single-layer encoders are supported")
        _check(0.0 <= self.dropout < 1.0, "dropout must be in [0, 1)")
        _check(0.0 <= self.clf_dropout < 1.0, "clf_dropout must be in [0, 1)")
        if self.mlp_hidden is not None:
            _check(self.mlp_hidden >= 1, "mlp_hidden must be >= 1")

    @property
    def hidden(self) -> int:
        return self.mlp_hidden if self.mlp_hidden is not None else 4 * self.D


@dataclass(frozen=True)
class TrainConfig:
    """Training hyperparameters; defaults follow the reference setup."""

    T: int = 64
    S: int = 3
    heads: int = 8
    mlp_hidden: int | None = None
    dropout: float = 0.1
    clf_dropout: float = 0.6
    delta: float = 0.8
    batch_size: int = 64
    learning_rate: float = 1e-5
    weight_decay: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    max_iterations: int = 2000
    checkpoint_every: int = 500
    seed: int = 0
    alpha1: float = 1.0
    alpha2: float = 1e-4
    lambda1: float = 1.0
    lambda2: float = 1.0
    erase_mode: str = "dynamic"

    def __post_init__(self):
        _check(self.batch_size >= 2 and self.batch_size % 2 == 0,
               "batch_size must be even (equal normal/abnormal halves)")
        _check(0.0 < self.delta < 1.0, "delta must be in (0, 1)")
        _check(self.T % 2 == 0, "T must be even (feature variation pairs rows T/2 apart)")
        _check(self.learning_rate > 0, "learning_rate must be > 0")
        _check(self.weight_decay >= 0, "weight_decay must be >= 0")
        _check(0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0, "betas must be in [0, 1)")
        _check(self.adam_eps > 0, "adam_eps must be > 0")
        _check(self.max_iterations >= 0, "max_iterations must be >= 0")
        _check(self.checkpoint_every >= 1, "checkpoint_every must be >= 1")
        _check(self.erase_mode in ERASE_MODES,
               f"erase_mode must be one of {ERASE_MODES}")
        _check(self.S >= 1, "S must be >= 1")
        group = 2 ** (self.S - 1)
        _check(self.T % group == 0, f"T={self.T} must be divisible by 2^(S-1)={group}")
        _check(0.0 <= self.dropout < 1.0, "dropout must be in [0, 1)")
        _check(0.0 <= self.clf_dropout < 1.0, "clf_dropout must be in [0, 1)")
        _check(self.seed >= 0, "seed must be >= 0")
        self.loss_weights()  # validates weights

    def loss_weights(self) -> LossWeights:
        return LossWeights(self.alpha1, self.alpha2, self.lambda1, self.lambda2)

    def model_config(self, D: int) -> ModelConfig:
        return ModelConfig(T=self.T, D=D, S=self.S, heads=self.heads,
                           mlp_hidden=self.mlp_hidden, dropout=self.dropout,
                           clf_dropout=self.clf_dropout)


@dataclass(frozen=True)
class SynthConfig:
    """Synthetic benchmark generator settings.

    Normal videos are noise around a constant base vector. Abnormal videos
    additionally contain 1..k disjoint anomalous intervals whose segment
    means are shifted by ``delta_mu`` along a fixed direction. Events
    alternate between two orthogonal shift directions; events using the
    second direction are scaled by ``gentle_scale``, which makes "gentle"
    anomalies that a detector fixated on the most prominent event will miss.
    ``gentle_u_mix`` tilts the gentle direction toward the prominent one
    (0 = fully orthogonal), so gentle events can carry a faint trace of the
    prominent signature, as related real-world events do.
    Durations are drawn uniformly from the configured range, in segments.

    ``min_amplitude`` < 1 rescales every segment (signal and noise together)
    by an activity level drawn uniformly from [min_amplitude, 1], imitating
    idle or dim stretches of footage. Cosine similarities between segments
    are unaffected, but low-norm rows become part of the normal appearance,
    so magnitude alone carries no label information.
    """

    n_normal: int = 100
    n_abnormal: int = 100
    n_test_normal: int = 25
    n_test_abnormal: int = 25
    T: int = 32
    D: int = 16
    min_anomaly_len: int = 2
    max_anomaly_len: int = 8
    min_events: int = 1
    max_events: int = 2
    delta_mu: float = 3.0
    noise_sigma: float = 1.0
    base_level: float = 3.0
    gentle_scale: float = 1.0
    gentle_u_mix: float = 0.0
    min_amplitude: float = 1.0
    clips_per_segment: int = 1
    clip_len: int = 16

    def __post_init__(self):
        _check(self.T >= 1 and self.D >= 1, "T and D must be >= 1")
        for name in ("n_normal", "n_abnormal", "n_test_normal", "n_test_abnormal"):
            _check(getattr(self, name) >= 0, f"{name} must be >= 0")
        _check(1 <= self.min_anomaly_len <= self.max_anomaly_len <= self.T,
               "anomaly length range must satisfy 1 <= min <= max <= T")
        _check(1 <= self.min_events <= self.max_events,
               "events range must satisfy 1 <= min <= max")
        _check(self.noise_sigma > 0, "noise_sigma must be > 0")
        _check(self.delta_mu >= 0, "delta_mu must be >= 0")
        _check(self.gentle_scale >= 0, "gentle_scale must be >= 0")
        _check(0.0 <= self.gentle_u_mix <= 1.0, "gentle_u_mix must be in [0, 1]")
        _check(0 < self.min_amplitude <= 1.0, "min_amplitude must be in (0, 1]")
        _check(self.clips_per_segment >= 1, "clips_per_segment must be >= 1")
        _check(self.clip_len >= 1, "clip_len must be >= 1")


def from_dict(cls, data: dict, source: str = "config"):
    """Build a config dataclass from a plain dict, rejecting unknown keys."""
    if not isinstance(data, dict):
        raise ValidationError(f"{source}: expected a JSON object")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ValidationError(f"{source}: unknown config key(s): {', '.join(unknown)}")
    try:
        return cls(**data)
    except TypeError as exc:
        raise ValidationError(f"{source}: {exc}") from exc


def load_json_config(cls, path):
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from exc
    return from_dict(cls, data, source=str(path))


def config_to_dict(cfg) -> dict:
    return dataclasses.asdict(cfg)
