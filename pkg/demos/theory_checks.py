"""Isometry constants, the admissible noise level and the structural identities.

1. Exact restricted isometry constants of a frame with known spectrum, the
   resulting stability constant C_s and the recovery-count bound.
2. The noise-level formula in the linear-sparsity regime.
3. BP on G(x + w) equals BP on x + w plus a null-space correction, and the
   minimum-norm preimage of the noise stays within its l-inf / l1 bounds.
4. The largest input-noise scale TBP tolerates along random directions.
"""
import math

import numpy as np

from tbp import (
    InputDeterministic,
    OutputGaussian,
    RngStream,
    basis_pursuit,
    compute_cs,
    compute_epsilon0,
    empirical_gamma0,
    gen_matrix,
    gen_measurement,
    gen_signal,
    min_norm_noise,
    rip_exact,
    tbp,
)
from tbp.analysis import check_min_norm_bounds, corollary_bound, verify_null_space_equivalence
from tbp.ensembles import complement_frame

print("-- isometry constants of a 19 x 20 complement frame")
F = complement_frame(20, RngStream(0))
d2, d3 = rip_exact(F, 2).delta_k, rip_exact(F, 3).delta_k
cs = compute_cs(d2, d3)
print(f"delta_2={d2:.4f} (exact 0.1)  delta_3={d3:.4f} (exact 0.15)  C_s={cs:.3f}")
x = gen_signal(20, 1, RngStream(0, 1))
w = 1e-3 * RngStream(0, 2).generator().uniform(-1, 1, 20)
y, _ = gen_measurement(F, x, InputDeterministic(w, 1e-3), RngStream(0, 3))
rep = tbp(F, y, x.x_min, truth=x)
print(f"TBP with l-inf input noise 1e-3: misses={rep.n_miss} false={rep.n_false}, "
      f"bound={corollary_bound(20, 1, cs, 1e-3):.4f}")

print("\n-- admissible noise level, alpha=0.1, C_s=9.657, n=200")
for C in (1.5, 2.0, 4.0):
    t = compute_epsilon0(0.1, C, 9.657, 200)
    print(f"C={C}: d1={t.d1:8.2f} d2={t.d2:8.2f} epsilon0={t.epsilon0:.3e}")

print("\n-- null-space equivalence and minimum-norm noise, 20 x 40")
G = gen_matrix(20, 40, rng=RngStream(5, 0))
x = gen_signal(40, 3, RngStream(5, 1))
y, e = gen_measurement(G, x, OutputGaussian(0.05), RngStream(5, 2))
w = min_norm_noise(G, e)
sol = basis_pursuit(G, y)
dev = verify_null_space_equivalence(G, y, x.dense() + w, sol)
print(f"max deviation of the null-space identity: {dev:.2e}")
b = check_min_norm_bounds(G, e, w, 0.1)
print(f"||w||_inf={b.linf:.4f} <= {b.linf_bound:.4f}: {b.linf_ok};  "
      f"||w||_1={b.l1:.4f} <= {b.l1_bound:.4f}: {b.l1_ok}")

print("\n-- empirical tolerated noise scale gamma0 (k=2, m=n/2)")
for n in (64, 128, 256):
    vals = []
    for s in range(3):
        G = gen_matrix(n // 2, n, rng=RngStream(s, 10))
        x = gen_signal(n, 2, RngStream(s, 11))
        d = RngStream(s, 12).generator().uniform(-1, 1, n)
        vals.append(float(empirical_gamma0(G, x, d / np.abs(d).max())))
    print(f"n={n}: mean gamma0 * sqrt(log n) = {np.mean(vals) * math.sqrt(math.log(n)):.3f}")
