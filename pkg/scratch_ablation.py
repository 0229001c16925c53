"""Scratch: calibrate the multi-event ablation ordering (dev only)."""
import sys
import time
import tempfile
from pathlib import Path

import numpy as np

from denet import SynthConfig, TrainConfig, generate_synthetic, load_checkpoint
from denet.training import train
from denet.evaluation import evaluate

iters = int(sys.argv[1]) if len(sys.argv) > 1 else 1500
gentle = float(sys.argv[2]) if len(sys.argv) > 2 else 0.5
max_len = int(sys.argv[3]) if len(sys.argv) > 3 else 12
seeds = [int(s) for s in sys.argv[4].split(",")] if len(sys.argv) > 4 else [1, 2, 3, 4, 5]

tmp = Path(tempfile.mkdtemp(prefix="denet_abl_"))
scfg = SynthConfig(n_normal=60, n_abnormal=60, n_test_normal=20, n_test_abnormal=20,
                   T=32, D=16, min_anomaly_len=3, max_anomaly_len=max_len,
                   min_events=2, max_events=2, delta_mu=3.0, noise_sigma=1.0,
                   base_level=3.0, gentle_scale=gentle)
train_m, test_m = generate_synthetic(scfg, seed=99, out_dir=tmp / "data")

results = {}
t0 = time.time()
for mode, lam2 in (("dynamic", 1.0), ("none", 0.0), ("static", 1.0)):
    aps = []
    for seed in seeds:
        tcfg = TrainConfig(T=32, S=2, heads=8, delta=0.8, batch_size=32,
                           learning_rate=1e-3, max_iterations=iters,
                           checkpoint_every=10 ** 9, seed=seed,
                           erase_mode=mode, lambda2=lam2)
        final = train(tcfg, train_m, tmp / f"run_{mode}_{seed}")
        ck = load_checkpoint(final)
        report, _ = evaluate(ck.params, ck.model, test_m)
        aps.append(report["ap"])
    results[mode] = np.array(aps)
    print(f"{mode:8s} AP per seed: {np.round(results[mode], 4)} "
          f"mean={results[mode].mean():.4f}")

diff = results["dynamic"] - results["none"]
se = diff.std(ddof=1) / np.sqrt(len(diff))
print(f"\ndynamic-none diff mean={diff.mean():.4f} se={se:.4f} "
      f"(need mean >= se)")
print(f"static mean {results['static'].mean():.4f} <= dynamic mean "
      f"{results['dynamic'].mean():.4f}: {results['static'].mean() <= results['dynamic'].mean()}")
print(f"total time {time.time()-t0:.0f}s")
