"""Particles carried by the stochastic flow of the divergence-free basis.

Looks at the Jacobian determinant along paths, the Nelson forward derivative
and the generator acting on a test function.
"""

import numpy as np

from sdifflab import basis as bs
from sdifflab import flow as fl
from sdifflab import spectral as sp

tg = sp.taylor_green_field(1)
Q = bs.build_basis(2, 1)
x0 = np.random.default_rng(0).uniform(0, 2 * np.pi, (16, 2))

for nu in (0.0, 0.1):
    coarse, fine = fl.volume_convergence(x0, tg, fl.Noise(nu, 2, Q, shared=True), 1e-3, 1.0)
    print(f"nu={nu}: max|det J - 1| = {coarse.max_deviation:.2e} at dt=1e-3, {fine.max_deviation:.2e} at dt=5e-4")

x = np.array([0.3, 0.7])
est = fl.nelson_derivative(x, tg, fl.Noise(0.1, 2, Q), 1e-3, 50_000, seed=1)
print("\nNelson derivative:", est.mean, "+-", est.stderr)
print("drift at x:       ", sp.evaluate(tg, x))

f = sp.scalar_field(2, 1, [((1, 0), "cos", 1.0)])
est, exact, allow = fl.generator_check(x, f, tg, 0.1, 1e-2, 50_000, seed=2, Q=Q)
print(f"\ngenerator on cos x: {float(est.mean):.4f} +- {float(est.stderr):.4f} (exact {exact:.4f}, O(h) allowance {allow:.1e})")
