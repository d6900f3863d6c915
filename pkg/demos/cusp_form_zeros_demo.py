"""Zeros of random cusp forms for the level-two theta group.

Random weight-2N cusp forms (built from theta-constant monomials,
orthonormalized in the Petersson inner product) are sampled, their zeros in
a box of the upper half plane are counted by the argument principle, and the
normalized counts are compared against the hyperbolic-area prediction
Vol(U)/(2 pi).  Run from the repo root:

    python demos/cusp_form_zeros_demo.py
"""

import numpy as np

from zerolab import geometry, spaces, zeros

model = geometry.hyperbolic_gamma2()
region = geometry.box(-0.5, 0.5, 0.4, 1.5, chart=geometry.UPPER_HALF_PLANE)
predicted = geometry.predicted_mass(model, region)
print(f"region {region.bounds}: predicted normalized count = {predicted:.4f}\n")

for n in (10, 20):
    space = spaces.build_space(model, n)
    counts = []
    for i in range(8):
        sec = spaces.sample_section(space, spaces.sample_seed(3, n, i))
        counts.append(zeros.count_zeros_box(sec, region))
    mean = np.mean(counts) / n
    print(f"N={n:3d} (dim {space.dim}): counts {counts}, "
          f"mean (1/N)count = {mean:.4f}, deviation {abs(mean - predicted):.4f}")

# localize the zeros of one section and show them
space = spaces.build_space(model, 10)
sec = spaces.sample_section(space, 1)
zs = zeros.zero_set_hyperbolic(sec, region)
print(f"\nlocalized zeros of one N=10 section ({zs.total_count} in region):")
for p in zs.points:
    print(f"  tau = {p.location.real:+.5f} + {p.location.imag:.5f}i   "
          f"multiplicity {p.multiplicity}")
