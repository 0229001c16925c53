"""Scratch: calibrate the easy synthetic benchmark (dev only)."""
import sys
import time
import tempfile
from pathlib import Path

from denet import SynthConfig, TrainConfig, generate_synthetic, load_checkpoint
from denet.training import train
from denet.evaluation import evaluate

lr = float(sys.argv[1]) if len(sys.argv) > 1 else 1e-3
iters = int(sys.argv[2]) if len(sys.argv) > 2 else 2000
batch = int(sys.argv[3]) if len(sys.argv) > 3 else 32

tmp = Path(tempfile.mkdtemp(prefix="denet_bench_"))
scfg = SynthConfig(n_normal=100, n_abnormal=100, n_test_normal=25, n_test_abnormal=25,
                   T=32, D=16, min_anomaly_len=3, max_anomaly_len=8,
                   min_events=1, max_events=1, delta_mu=3.0, noise_sigma=1.0,
                   base_level=3.0)
t0 = time.time()
train_m, test_m = generate_synthetic(scfg, seed=7, out_dir=tmp / "data")
print(f"synth in {time.time()-t0:.1f}s -> {tmp}")

tcfg = TrainConfig(T=32, S=2, heads=8, delta=0.8, batch_size=batch,
                   learning_rate=lr, max_iterations=iters, checkpoint_every=1000,
                   seed=11)
t0 = time.time()
final = train(tcfg, train_m, tmp / "run")
t_train = time.time() - t0
ck = load_checkpoint(final)
report, _ = evaluate(ck.params, ck.model, test_m)
print(f"lr={lr} iters={iters} batch={batch}: "
      f"AUC={report['auc']:.4f} AP={report['ap']:.4f} train_time={t_train:.1f}s")
