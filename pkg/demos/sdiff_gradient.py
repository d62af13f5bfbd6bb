"""Gradients of functions on the volume-preserving group.

A cylinder function depends on a map only through its values at a few points;
its gradient is the projected sum of point masses.  The directional derivative
along a basis element is compared with finite differences along its flow.
"""

import numpy as np

from sdifflab import basis as bs
from sdifflab import spectral as sp

Q = bs.build_basis(2, 3)
rng = np.random.default_rng(0)
pts = rng.uniform(0, 2 * np.pi, (2, 2))
P = bs.CylinderPotential.separable(pts, [sp.random_scalar(rng, 2, 2) for _ in range(2)])
grad = bs.sdiff_gradient_cylinder(Q, P)
A = [e for e in Q if e.parity != bs.CONST][5].field
exact = sp.l2_inner(grad, A)
print(f"<grad P, A> = {exact:.10f}")
for eps in (0.08, 0.04, 0.02, 0.01):
    fd = bs.directional_derivative_fd(P, A, eps)
    print(f"  eps={eps:<5}  finite difference {fd:.10f}  error {abs(fd - exact):.2e}")

V = sp.random_scalar(rng, 2, 2)
print("\nintegral potential, gradient size:", bs.sdiff_gradient_integral(Q, V).max_abs_coeff())
