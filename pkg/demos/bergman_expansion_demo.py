"""The Bergman kernel diagonal grows linearly with the degree, with slope
given by the curvature-to-base density ratio.

For the round (Fubini-Study) metric P_N is exactly N + 1 everywhere; for the
weighted model the constancy is only asymptotic, and the fitted slope at
each point converges to curvature/base.  Run from the repo root:

    python demos/bergman_expansion_demo.py
"""

import numpy as np

from zerolab import bergman, geometry, spaces

fs = geometry.fubini_study()
sp = spaces.build_space(fs, 20)
grid = np.array([0.0, 0.7, -1.2 + 0.4j, 3.0j])
print("Fubini-Study, N=20:  P_N on a grid =", bergman.bergman_diag(sp, grid))
print("trace ratio - 1 =", f"{bergman.trace_check(sp) - 1:.2e}\n")

model = geometry.poincare_weighted(0.05, delta=0.45)  # generic curvature
ns = [40, 80, 120, 160]
built = {n: spaces.build_space(model, n) for n in ns}
print(f"weighted model (delta=0.45), fit P_N = b0*N + b1 over N = {ns}:")
for z in (0.0, 0.6, -0.4 + 0.5j):
    fit = bergman.leading_coeff_fit(model, ns, z, spaces=built)
    print(f"  z = {z}: b0 = {fit.b0:.5f}, predicted "
          f"{fit.predicted_b0:.5f}, rel err {fit.relative_error:.1e}")

print("\npullback density vs curvature at z = 0.5 (deviation ~ 1/N):")
curv = float(np.real(geometry.curvature_density(model, 0.5)))
for n in ns:
    dev = abs(bergman.fs_pullback_density(built[n], 0.5) - curv)
    print(f"  N={n:4d}: deviation = {dev:.3e}   N*deviation = {n * dev:.3e}")
