"""A curved Lorentzian metric with a null parallel line field.

ds^2 = 2 dx1 dx4 + dx2^2 + dx3^2 + (x2^2 - x3^2) dx4^2
"""

import numpy as np

from walkerkit import assemble, canonical_distribution, curvature, pp_wave, run_full_report, signature

data = pp_wave()
g = assemble(data)
D = canonical_distribution(4, 1)

for row in g.rows():
    print("  ".join(f"{e.text():>12s}" for e in row))

x = np.array([0.3, -0.2, 0.5, 0.1])
print("\nsignature at x:", tuple(signature(g, x)))

R = curvature(g, x).R
nz = np.argwhere(np.abs(R) > 1e-12)
print(f"{len(nz)} nonzero R_ijkl at x, e.g.")
for i, j, k, l in nz[:4]:
    print(f"  R_{i + 1}{j + 1}{k + 1}{l + 1} = {R[i, j, k, l]:+.3f}")

# the metric is curved, yet d/dx1 stays null and parallel
report = run_full_report(g, D)
print()
print(report.to_text())
