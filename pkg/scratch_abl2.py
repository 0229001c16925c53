"""Scratch: quick 2-seed scan of ablation configs with amplitude variation."""
import sys, time, tempfile
from pathlib import Path
import numpy as np
from denet import SynthConfig, TrainConfig, generate_synthetic, load_checkpoint
from denet.training import train
from denet.evaluation import evaluate

amp = float(sys.argv[1]); gentle = float(sys.argv[2]); iters = int(sys.argv[3])
seeds = [int(s) for s in sys.argv[4].split(",")]
tmp = Path(tempfile.mkdtemp(prefix="denet_abl2_"))
scfg = SynthConfig(n_normal=60, n_abnormal=60, n_test_normal=20, n_test_abnormal=20,
                   T=32, D=16, min_anomaly_len=3, max_anomaly_len=12,
                   min_events=2, max_events=2, delta_mu=3.0, noise_sigma=1.0,
                   base_level=3.0, gentle_scale=gentle, min_amplitude=amp)
train_m, test_m = generate_synthetic(scfg, seed=99, out_dir=tmp / "data")
t0 = time.time()
for mode, lam2 in (("dynamic", 1.0), ("none", 0.0), ("static", 1.0)):
    aps = []
    for seed in seeds:
        tcfg = TrainConfig(T=32, S=2, heads=8, delta=0.8, batch_size=32,
                           learning_rate=1e-3, max_iterations=iters,
                           checkpoint_every=10**9, seed=seed,
                           erase_mode=mode, lambda2=lam2)
        final = train(tcfg, train_m, tmp / f"run_{mode}_{seed}")
        ck = load_checkpoint(final)
        report, _ = evaluate(ck.params, ck.model, test_m)
        aps.append(report["ap"])
    print(f"amp={amp} gentle={gentle} {mode:8s}: {np.round(aps, 4)} mean={np.mean(aps):.4f}", flush=True)
print(f"time {time.time()-t0:.0f}s")
