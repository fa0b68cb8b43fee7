"""Phase transition of TBP in the noise scale theta.

The noise level is sigma = 1 / ((2 sqrt(12 log n) + 2) theta), so theta = 1
sits at the scale predicted by the theory; success should move from near 0
to near 1 within a decade either side of it.
"""
import numpy as np

from tbp.harness import AlgoSpec, ExperimentConfig, run_sweep, theta_sigma

thetas = tuple(np.logspace(-1.5, 1.5, 7))
cfg = ExperimentConfig(
    n=200, m=100, k=20, snr_mode="theta_scan", theta_grid=thetas, trials=10,
    master_seed=3, algorithms=(AlgoSpec("tbp"),),
)
th, p, _ = run_sweep(cfg, workers=1).curve("theta", algo="tbp")
print("   theta   sigma   P(success)")
for t, q in zip(th, p):
    print(f"{t:8.3f}  {theta_sigma(t, 200):.4f}   {q:.2f}")
