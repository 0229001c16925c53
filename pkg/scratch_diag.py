"""Scratch: diagnose erased-pass dynamics (dev only)."""
import tempfile
from pathlib import Path

import numpy as np

from denet import SynthConfig, TrainConfig, generate_synthetic, load_checkpoint
from denet import model
from denet.data import load_split
from denet.synthetic import anomaly_directions
from denet.training import train
from denet.evaluation import evaluate

tmp = Path(tempfile.mkdtemp(prefix="denet_diag_"))
scfg = SynthConfig(n_normal=60, n_abnormal=60, n_test_normal=20, n_test_abnormal=20,
                   T=32, D=16, min_anomaly_len=3, max_anomaly_len=12,
                   min_events=2, max_events=2, delta_mu=3.0, noise_sigma=1.0,
                   base_level=3.0, gentle_scale=0.5)
train_m, test_m = generate_synthetic(scfg, seed=99, out_dir=tmp / "data")
tcfg = TrainConfig(T=32, S=2, heads=8, delta=0.8, batch_size=32, learning_rate=1e-3,
                   max_iterations=1500, checkpoint_every=10 ** 9, seed=1,
                   erase_mode="dynamic")
final = train(tcfg, train_m, tmp / "run")
ck = load_checkpoint(final)

# erase-rate trajectory
rows = [l.split(",") for l in (tmp / "run" / "metrics.csv").read_text().splitlines()[1:]]
fr = np.array([float(r[4]) for r in rows])
me = np.array([float(r[5]) for r in rows])
for lo in range(0, 1500, 300):
    print(f"iters {lo:4d}-{lo+300:4d}: erase fraction {fr[lo:lo+300].mean():.2f} "
          f"mean erased segs {me[lo:lo+300].mean():.2f}")

# score profile of a training abnormal video, original and erased
u, v = anomaly_directions(scfg.D)
dataset = load_split(train_m, tcfg.T)
abn = [sf for sf in dataset if sf.label == 1]
sf = abn[0]
scores = model.score_video(ck.params, sf.X, ck.model)
# classify each segment by its shift direction using the clean projections
proj_u = (sf.X - 3.0) @ u
proj_v = (sf.X - 3.0) @ v
kind = np.where(proj_u > 1.5, "U", np.where(proj_v > 0.75, "v", "."))
print("segment kinds:", "".join(kind))
print("scores       :", " ".join(f"{s:.2f}" for s in scores))

# zero-row score probe: what does the trained model give an erased row?
X_erased = sf.X.copy()
X_erased[scores > 0.8] = 0
scores_e = model.score_video(ck.params, X_erased, ck.model)
zero_rows = np.flatnonzero(~X_erased.any(axis=1))
print("zeroed rows:", zero_rows, "their erased-pass scores:",
      " ".join(f"{scores_e[i]:.2f}" for i in zero_rows))
print("erased-pass argmax:", int(scores_e.argmax()), "kind", kind[int(scores_e.argmax())],
      "score", float(scores_e.max()))

# aggregate over all abnormal train videos
n_zero_argmax = 0
n_gentle_argmax = 0
n_other = 0
for sf in abn:
    s = model.score_video(ck.params, sf.X, ck.model)
    Xe = sf.X.copy()
    hot = s > 0.8
    if not hot.any():
        continue
    Xe[hot] = 0
    se = model.score_video(ck.params, Xe, ck.model)
    am = int(se.argmax())
    if hot[am]:
        n_zero_argmax += 1
    elif (sf.X[am] - 3.0) @ v > 0.75:
        n_gentle_argmax += 1
    else:
        n_other += 1
print(f"erased-pass argmax lands on: zeroed row {n_zero_argmax}, gentle {n_gentle_argmax}, "
      f"other {n_other}")
report, _ = evaluate(ck.params, ck.model, test_m)
print("test:", report)
