"""Command-line entry points: synth, train, eval, score.

Exit codes: 0 on success, 2 for usage/validation problems (bad flags,
malformed configs or data files, missing ground truth), 3 for runtime
failures. Config precedence is CLI flag > config file > built-in default;
the seed falls back to the DENET_SEED environment variable when neither a
flag nor a config provides one.
"""

from __future__ import annotations

import dataclasses
import functools
import json
import logging
import os
import sys
from pathlib import Path

import click
import numpy as np

from . import model
from .checkpoint import load_checkpoint
from .config import SynthConfig, TrainConfig, from_dict, load_json_config
from .data import load_manifest, resample_to_segments, FeatureSequence
from .errors import DataError, DenetError, ValidationError
from .evaluation import evaluate, frame_scores
from .io import read_feature_file
from .synthetic import generate_synthetic
from .training import train as run_training


def _guarded(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ValidationError, DataError, ValueError, FileNotFoundError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)
        except DenetError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(3)
        except Exception as exc:  # noqa: BLE001 - CLI boundary
            click.echo(f"unexpected error: {exc}", err=True)
            sys.exit(3)
    return wrapper


def _resolve_seed(flag_seed, config_seed=None) -> int:
    if flag_seed is not None:
        return flag_seed
    if config_seed is not None:
        return config_seed
    env = os.environ.get("DENET_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ValidationError(f"DENET_SEED must be an integer, got {env!r}") from None
    return 0


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def main(verbose):
    """Weakly supervised video anomaly detection toolkit."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s",
                        stream=sys.stderr)


@main.command()
@click.option("--config", "config_path", type=click.Path(path_type=Path),
              default=None, help="JSON file with generator settings.")
@click.option("--seed", type=int, default=None, help="Generator seed.")
@click.option("--output-dir", type=click.Path(path_type=Path), default=Path("."),
              show_default=True)
@_guarded
def synth(config_path, seed, output_dir):
    """Generate a synthetic dataset with train/test manifests."""
    cfg = load_json_config(SynthConfig, config_path) if config_path else SynthConfig()
    seed = _resolve_seed(seed)
    train_manifest, test_manifest = generate_synthetic(cfg, seed, output_dir)
    click.echo(f"wrote {len(train_manifest.entries)} train videos and "
               f"{len(test_manifest.entries)} test videos under {output_dir}")
    click.echo(f"manifests: {output_dir / 'train.csv'} {output_dir / 'test.csv'}")


@main.command()
@click.option("--manifest", "manifest_path", required=True,
              type=click.Path(path_type=Path), help="Train-split manifest CSV.")
@click.option("--config", "config_path", type=click.Path(path_type=Path),
              default=None, help="JSON file with training settings.")
@click.option("--output-dir", type=click.Path(path_type=Path), default=Path("."),
              show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--iterations", type=int, default=None, help="Override max_iterations.")
@click.option("--batch-size", type=int, default=None)
@click.option("--learning-rate", type=float, default=None)
@click.option("--delta", type=float, default=None, help="Erase threshold.")
@click.option("--scales", type=int, default=None, help="Number of temporal scales.")
@click.option("--no-erase", is_flag=True,
              help="Single-pass ablation: erased-pass weight forced to 0.")
@click.option("--static-erase", is_flag=True,
              help="Ablation: erase every abnormal video without assessment.")
@click.option("--resume", "resume_path", type=click.Path(path_type=Path), default=None,
              help="Continue from a checkpoint (its config wins).")
@click.option("--audit-erase", is_flag=True,
              help="Append per-iteration erase decisions to erase_audit.jsonl.")
@_guarded
def train(manifest_path, config_path, output_dir, seed, iterations, batch_size,
          learning_rate, delta, scales, no_erase, static_erase, resume_path,
          audit_erase):
    """Train a model and write checkpoints plus a metrics CSV."""
    if no_erase and static_erase:
        raise ValidationError("--no-erase and --static-erase are mutually exclusive")
    data = {}
    if config_path is not None:
        data = dataclasses.asdict(load_json_config(TrainConfig, config_path))
    overrides = {"max_iterations": iterations, "batch_size": batch_size,
                 "learning_rate": learning_rate, "delta": delta, "S": scales}
    data.update({k: v for k, v in overrides.items() if v is not None})
    data["seed"] = _resolve_seed(seed, data.get("seed"))
    if no_erase:
        data["erase_mode"] = "none"
        data["lambda2"] = 0.0
    elif static_erase:
        data["erase_mode"] = "static"
    tcfg = from_dict(TrainConfig, data, source="train config")
    final = run_training(tcfg, manifest_path, output_dir,
                         resume=resume_path, audit_erase=audit_erase)
    click.echo(f"final checkpoint: {final}")


@main.command("eval")
@click.option("--checkpoint", "checkpoint_path", required=True,
              type=click.Path(path_type=Path))
@click.option("--manifest", "manifest_path", required=True,
              type=click.Path(path_type=Path), help="Test-split manifest CSV.")
@click.option("--output-dir", type=click.Path(path_type=Path), default=Path("."),
              show_default=True)
@click.option("--plot", is_flag=True, help="Write per-video score-curve images.")
@_guarded
def eval_cmd(checkpoint_path, manifest_path, output_dir, plot):
    """Evaluate a checkpoint on a test split; prints the JSON report."""
    ck = load_checkpoint(checkpoint_path)
    manifest = load_manifest(manifest_path, "test")
    report, _ = evaluate(ck.params, ck.model, manifest, out_dir=output_dir, plot=plot)
    click.echo(json.dumps(report, indent=2))


@main.command()
@click.option("--checkpoint", "checkpoint_path", required=True,
              type=click.Path(path_type=Path))
@click.option("--features", "features_path", required=True,
              type=click.Path(path_type=Path), help="Binary feature file.")
@click.option("--frame-count", type=int, default=None,
              help="Frames in the video; defaults to n_clips * 16.")
@click.option("--output", "output_path", type=click.Path(path_type=Path), default=None,
              help="Destination CSV; stdout when omitted.")
@_guarded
def score(checkpoint_path, features_path, frame_count, output_path):
    """Score one feature file; emits a frame,score CSV (inference only)."""
    ck = load_checkpoint(checkpoint_path)
    clips = read_feature_file(features_path)
    if frame_count is None:
        frame_count = clips.shape[0] * 16
    seq = FeatureSequence(video_id=str(features_path), clips=clips,
                          frame_count=frame_count).validate()
    seg = resample_to_segments(seq, ck.model.T)
    fs = frame_scores(model.score_video(ck.params, seg.X, ck.model), frame_count)
    lines = ["frame,score"] + [f"{i},{fs[i]:.6f}" for i in range(frame_count)]
    text = "\n".join(lines) + "\n"
    if output_path is None:
        click.echo(text, nl=False)
    else:
        Path(output_path).parent.mkdir(parents=True, exist_ok=True)
        Path(output_path).write_text(text)
        click.echo(f"wrote {output_path}", err=True)


if __name__ == "__main__":
    main()
