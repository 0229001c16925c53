"""Checkpoint archives (version ``denet-ckpt-v1``).

A checkpoint is a single uncompressed zip whose entries are written in a
fixed order with zeroed timestamps, so identical state always serializes to
identical bytes. Layout:

- ``meta.json``: version tag, model/train configs, iteration counter,
  optimizer step, RNG state, and the ordered parameter name list.
- ``params/<name>.npy``: one shape- and dtype-tagged array per parameter,
  under its canonical name (``mstm.s{s}.conv.w``, ``mstm.s{s}.conv.b``,
  ``mstm.s{s}.pos``, ``mstm.s{s}.attn.{q,k,v,out}.{w,b}``,
  ``mstm.s{s}.{ln1,ln2}.{g,b}``, ``mstm.s{s}.mlp.{fc1,fc2}.{w,b}``,
  ``mstm.agg.{w,b}``, ``clf.fc{1,2,3}.{w,b}``).
- ``adam/m/<name>.npy`` and ``adam/v/<name>.npy``: optimizer moments,
  present when the checkpoint was written by the trainer. They are stored
  so a resumed run reproduces the uninterrupted one bit-exactly.

Training runs in float32, so the stored arrays are float32 and loading is
lossless.
"""

from __future__ import annotations

import io
import json
import zipfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import ModelConfig, TrainConfig, config_to_dict, from_dict
from .errors import DataError
from .model import param_shapes
from .optim import AdamState

CHECKPOINT_VERSION = "denet-ckpt-v1"
_EPOCH = (1980, 1, 1, 0, 0, 0)


@dataclass
class Checkpoint:
    params: dict[str, np.ndarray]
    model: ModelConfig
    train: TrainConfig | None = None
    iteration: int = 0
    rng_state: dict | None = None
    adam: AdamState | None = None


def _npy_bytes(arr: np.ndarray) -> bytes:
    buf = io.BytesIO()
    np.lib.format.write_array(buf, np.ascontiguousarray(arr), version=(1, 0))
    return buf.getvalue()


def _read_npy(data: bytes) -> np.ndarray:
    return np.lib.format.read_array(io.BytesIO(data))


def save_checkpoint(path, ckpt: Checkpoint) -> None:
    names = list(ckpt.params)
    meta = {
        "version": CHECKPOINT_VERSION,
        "model": config_to_dict(ckpt.model),
        "train": config_to_dict(ckpt.train) if ckpt.train is not None else None,
        "iteration": ckpt.iteration,
        "adam_step": ckpt.adam.step if ckpt.adam is not None else None,
        "rng_state": ckpt.rng_state,
        "params": names,
    }
    entries: list[tuple[str, bytes]] = [
        ("meta.json", json.dumps(meta, sort_keys=True, indent=1).encode())]
    for name in names:
        entries.append((f"params/{name}.npy", _npy_bytes(ckpt.params[name])))
    if ckpt.adam is not None:
        for name in names:
            entries.append((f"adam/m/{name}.npy", _npy_bytes(ckpt.adam.m[name])))
        for name in names:
            entries.append((f"adam/v/{name}.npy", _npy_bytes(ckpt.adam.v[name])))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_STORED) as zf:
        for name, payload in entries:
            info = zipfile.ZipInfo(name, date_time=_EPOCH)
            info.external_attr = 0o600 << 16
            zf.writestr(info, payload)


def load_checkpoint(path) -> Checkpoint:
    path = Path(path)
    try:
        zf = zipfile.ZipFile(path)
    except (zipfile.BadZipFile, FileNotFoundError) as exc:
        raise DataError(f"{path}: not a readable checkpoint ({exc})") from exc
    with zf:
        contents = set(zf.namelist())
        if "meta.json" not in contents:
            raise DataError(f"{path}: missing meta.json")
        meta = json.loads(zf.read("meta.json"))
        if meta.get("version") != CHECKPOINT_VERSION:
            raise DataError(f"{path}: unsupported checkpoint version "
                            f"{meta.get('version')!r}, expected {CHECKPOINT_VERSION!r}")
        model = from_dict(ModelConfig, meta["model"], source=f"{path}:model")
        train = None
        if meta.get("train") is not None:
            train = from_dict(TrainConfig, meta["train"], source=f"{path}:train")
        names = meta["params"]
        expected = param_shapes(model)
        if set(names) != set(expected):
            raise DataError(f"{path}: parameter names do not match the model config")
        params = {}
        for name in names:
            arr = _read_npy(zf.read(f"params/{name}.npy"))
            if arr.shape != expected[name]:
                raise DataError(f"{path}: {name} has shape {arr.shape}, "
                                f"expected {expected[name]}")
            params[name] = arr
        adam = None
        if meta.get("adam_step") is not None:
            adam = AdamState(
                step=int(meta["adam_step"]),
                m={n: _read_npy(zf.read(f"adam/m/{n}.npy")) for n in names},
                v={n: _read_npy(zf.read(f"adam/v/{n}.npy")) for n in names})
    return Checkpoint(params=params, model=model, train=train,
                      iteration=int(meta["iteration"]),
                      rng_state=meta.get("rng_state"), adam=adam)
