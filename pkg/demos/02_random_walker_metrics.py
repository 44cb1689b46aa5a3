"""Random Walker data: every instance should pass every check."""

import collections
import time

from walkerkit import VerifyConfig, assemble, canonical_distribution, run_full_report
from walkerkit.corpus import corpus

t0 = time.perf_counter()
by_shape = collections.Counter()
failed = []
for data in corpus(60, seed=0):
    report = run_full_report(assemble(data), canonical_distribution(data.n, data.r), VerifyConfig(samples=10))
    by_shape[data.n, data.r] += 1
    if not report.passed:
        failed.append((data.n, data.r, report.failing()))

print("instances per (n, r):", dict(sorted(by_shape.items())))
print("failures:", failed or "none")
print(f"{time.perf_counter() - t0:.1f} s")

# worst residuals of one mid-sized instance
data = corpus(9, seed=4)[7]
report = run_full_report(assemble(data), canonical_distribution(data.n, data.r))
print(f"\nn={data.n}, r={data.r}")
for c in report.checks:
    print(f"  {c.name:32s} {c.max_residual:.2e}")
