"""n = 2r: the null plane is its own orthogonal complement and g is neutral."""

import numpy as np

from walkerkit import mid_dimensional_assemble, orthogonal_complement, signature

g, D = mid_dimensional_assemble(2, [["x1 * x3", "sin(x2)"], ["sin(x2)", "x4^2 - 4"]])
X = np.random.default_rng(1).uniform(-1, 1, (200, 4))
print("signatures seen:", {tuple(signature(g, x)) for x in X})

C = orthogonal_complement(g, D, X[0])
print("complement of span(d1, d2):\n", np.round(C, 12))
