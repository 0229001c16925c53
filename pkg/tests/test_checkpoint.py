import json
import zipfile

import numpy as np
import pytest

from denet import (Checkpoint, DataError, ModelConfig, TrainConfig,
                   load_checkpoint, save_checkpoint)
from denet import model
from denet.checkpoint import CHECKPOINT_VERSION
from denet.optim import init_adam_state


def _make_checkpoint(seed=0, with_train=True):
    mcfg = ModelConfig(T=8, D=8, S=2, heads=2)
    rng = np.random.default_rng(seed)
    params = model.init_params(mcfg, rng)
    adam = init_adam_state(params) if with_train else None
    if adam is not None:
        for name in adam.m:
            adam.m[name] += 0.25
        adam.step = 7
    tcfg = TrainConfig(T=8, S=2, heads=2, max_iterations=10, seed=seed) if with_train else None
    rng_state = rng.bit_generator.state if with_train else None
    return Checkpoint(params=params, model=mcfg, train=tcfg, iteration=7,
                      rng_state=rng_state, adam=adam)


def test_round_trip_preserves_everything(tmp_path):
    ck = _make_checkpoint()
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, ck)
    back = load_checkpoint(path)
    assert back.model == ck.model
    assert back.train == ck.train
    assert back.iteration == 7
    assert back.rng_state == ck.rng_state
    assert back.adam.step == 7
    for name, arr in ck.params.items():
        assert back.params[name].dtype == np.float32
        np.testing.assert_array_equal(back.params[name], arr)
        np.testing.assert_array_equal(back.adam.m[name], ck.adam.m[name])
        np.testing.assert_array_equal(back.adam.v[name], ck.adam.v[name])


def test_save_load_save_is_byte_identical(tmp_path):
    ck = _make_checkpoint()
    a = tmp_path / "a.ckpt"
    b = tmp_path / "b.ckpt"
    save_checkpoint(a, ck)
    save_checkpoint(b, load_checkpoint(a))
    assert a.read_bytes() == b.read_bytes()


def test_same_state_serializes_identically_across_calls(tmp_path):
    a = tmp_path / "a.ckpt"
    b = tmp_path / "b.ckpt"
    save_checkpoint(a, _make_checkpoint(seed=3))
    save_checkpoint(b, _make_checkpoint(seed=3))
    assert a.read_bytes() == b.read_bytes()


def test_version_field_present_and_enforced(tmp_path):
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, _make_checkpoint())
    with zipfile.ZipFile(path) as zf:
        meta = json.loads(zf.read("meta.json"))
    assert meta["version"] == CHECKPOINT_VERSION == "denet-ckpt-v1"
    # rewrite with a bogus version
    with zipfile.ZipFile(path) as zf:
        entries = {n: zf.read(n) for n in zf.namelist()}
    meta["version"] = "denet-ckpt-v0"
    entries["meta.json"] = json.dumps(meta).encode()
    with zipfile.ZipFile(path, "w") as zf:
        for name, payload in entries.items():
            zf.writestr(name, payload)
    with pytest.raises(DataError, match="version"):
        load_checkpoint(path)


def test_eval_only_checkpoint_without_training_state(tmp_path):
    ck = _make_checkpoint(with_train=False)
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, ck)
    back = load_checkpoint(path)
    assert back.train is None and back.adam is None and back.rng_state is None


def test_garbage_file_rejected(tmp_path):
    path = tmp_path / "model.ckpt"
    path.write_bytes(b"not a checkpoint at all")
    with pytest.raises(DataError):
        load_checkpoint(path)


def test_shape_mismatch_rejected(tmp_path):
    ck = _make_checkpoint()
    ck.params["clf.fc3.b"] = np.zeros(2, dtype=np.float32)  # wrong shape
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, ck)
    with pytest.raises(DataError, match="shape"):
        load_checkpoint(path)
