"""Dualizing a problem spec and replaying runs across the duality mirror.

The Fenchel dual of  min_x f(Ax) + h(x)  is again a composite problem, with
h* in the smooth role, v -> f*(-v) in the nonsmooth role, and A* as the map.
Two classical facts become executable checks:

* a conditional-subgradient run on the primal is, sign for sign, a
  mirror-descent run on the dual started from -x0;
* the symmetric primal-dual driver produces the same iterates on the primal
  and on the dual after swapping (x0, u0) -> (-u0, x0).

Both deviations should be exactly zero: every dual oracle is a sign-and-swap
rewiring of a primal oracle, and IEEE negation is exact.
"""

import numpy as np

import fenchelduo as fd

for label, spec, x0 in [
    ("quadratic-simplex", fd.make_quadratic_simplex(n=2), np.array([1.0, 0.0])),
    ("entropy-lse", fd.make_entropy_lse(3, b=np.array([0.3, -0.2, 0.1])),
     np.array([1.0, 0.0, 0.0])),
    ("random 5x3 map", fd.make_quadratic_simplex(
        Q=np.eye(5), b=np.linspace(-0.4, 0.4, 5), n=3,
        a=fd.random_linear_map(5, 3, np.random.default_rng(3))),
     np.array([1.0, 0.0, 0.0])),
]:
    dual = fd.dualize(spec)
    dev_runs = fd.check_bach_equivalence(spec, x0, fd.FixedHarmonic(), 50)
    u0 = spec.f_grad(spec.linmap.apply(x0))
    dev_sym = fd.check_hybrid_symmetry(spec, x0, u0, fd.FixedHarmonic(), 30)
    print(f"{label}:")
    print(f"  dual spec dims: x in R^{dual.dim_x}, map into R^{dual.dim_y}")
    print(f"  primal-vs-dual run deviation (50 its): {dev_runs:.1e}")
    print(f"  symmetric-driver deviation   (30 its): {dev_sym:.1e}")

# dualizing twice returns to the primal, composed with negation on both sides
spec = fd.make_entropy_lse(3, b=np.array([0.3, -0.2, 0.1]))
dd = fd.dualize(fd.dualize(spec))
x = np.array([0.2, 0.5, 0.3])
primal_value = spec.f_val(spec.linmap.apply(x)) + spec.h_val(x)
mirrored = dd.f_val(dd.linmap.apply(-x)) + dd.h_val(-x)
print()
print(f"double dual at -x reproduces the primal objective: "
      f"{primal_value:.12f} vs {mirrored:.12f}")
