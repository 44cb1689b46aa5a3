"""How much freedom is left when filling in a partial metric."""

import numpy as np

from walkerkit import (
    assemble,
    extend_partial_metric,
    extend_partial_pairing,
    metric_parameter_rank,
    pairing_parameter_rank,
    random_walker_data,
    step1_partial_pairing,
    walker_partial_metric,
)

rng = np.random.default_rng(0)
data = random_walker_data(rng, 6, 2)
g = assemble(data)
x = rng.uniform(-1, 1, 6)
G = g.value(x)

# Step 1: the (n-r) x (n-r) block [[0, I], [A, H]] is a pairing fixed everywhere except on H
p, H = step1_partial_pairing(data, x)
print("k, l, m =", (p.k, p.l, p.m), " free parameters:", pairing_parameter_rank(p))
beta = extend_partial_pairing(p, H)
print("recovers rows 1..n-r of g:", np.allclose(beta[..., 0], G[:4, 2:]))

# Step 2: rows 1..n-r fixed, the symmetric r x r block B is free
q, B = walker_partial_metric(data, x)
print("\nfree parameters in B:", metric_parameter_rank(q))
for trial in range(3):
    M = rng.uniform(-2, 2, (2, 2))
    Bfree = np.round(M + M.T, 2)
    Gt = extend_partial_metric(q, Bfree)
    P = np.eye(6)[:, :2]
    print(f"  B = {Bfree.tolist()}: det = {np.linalg.det(Gt):+.3f}, |g(P, P)| = {np.abs(P.T @ Gt @ P).max():.1e}")

# det g does not see B at all: the null block pairs B with zeros

print("\nwith B(x) we get g(x) back:", np.allclose(extend_partial_metric(q, B), G))
