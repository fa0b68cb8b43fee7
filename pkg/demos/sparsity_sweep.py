"""Success probability of TBP and the LASSO as the sparsity grows.

Runs the same sweep under both noise-scale conventions. With the per-entry
convention (noise variance 1/SNR per measurement) the noise norm grows with
sqrt(m) and recovery collapses already at small k; with the unnormalized
convention (variance 1/(m SNR)) TBP stays reliable well past the point where
the LASSO's sign recovery breaks down.

Small trial counts keep this under a minute; raise ``TRIALS`` for smoother
curves.
"""
import math

from tbp.harness import AlgoSpec, ExperimentConfig, run_sweep

N, TRIALS = 200, 10
ks = list(range(2, 43, 8))

for scale in ("entry", "unnormalized"):
    cfg = ExperimentConfig(
        n=N, m=100, k_grid=ks, snr=6 * math.log(N), trials=TRIALS, master_seed=7,
        snr_scale=scale, algorithms=(AlgoSpec("tbp"), AlgoSpec("lasso", 0.2)),
    )
    table = run_sweep(cfg, workers=1)
    _, pt, _ = table.curve("k", algo="tbp")
    _, pl, _ = table.curve("k", algo="lasso")
    print(f"\nsnr-scale={scale}")
    print("   k   TBP  LASSO")
    for k, a, b in zip(ks, pt, pl):
        print(f"{k:4d}  {a:4.2f}   {b:4.2f}")
