"""Scratch: ablation scan with gentle_u_mix (dev only)."""
import sys, time, tempfile
from pathlib import Path
import numpy as np
from denet import SynthConfig, TrainConfig, generate_synthetic, load_checkpoint
from denet.training import train
from denet.evaluation import evaluate

dmu = float(sys.argv[1]); gentle = float(sys.argv[2]); mix = float(sys.argv[3])
iters = int(sys.argv[4]); seeds = [int(s) for s in sys.argv[5].split(",")]
tmp = Path(tempfile.mkdtemp(prefix="denet_abl3_"))
scfg = SynthConfig(n_normal=60, n_abnormal=60, n_test_normal=20, n_test_abnormal=20,
                   T=32, D=16, min_anomaly_len=3, max_anomaly_len=12,
                   min_events=2, max_events=2, delta_mu=dmu, noise_sigma=1.0,
                   base_level=3.0, gentle_scale=gentle, gentle_u_mix=mix)
train_m, test_m = generate_synthetic(scfg, seed=99, out_dir=tmp / "data")
t0 = time.time()
res = {}
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
    res[mode] = np.array(aps)
    print(f"dmu={dmu} g={gentle} mix={mix} {mode:8s}: {np.round(aps,4)} mean={np.mean(aps):.4f}", flush=True)
d = res["dynamic"] - res["none"]
se = d.std(ddof=1) / np.sqrt(len(d)) if len(d) > 1 else 0.0
print(f"dyn-none mean={d.mean():.4f} se={se:.4f}; static<=dyn: {res['static'].mean() <= res['dynamic'].mean()}")
print(f"time {time.time()-t0:.0f}s")
