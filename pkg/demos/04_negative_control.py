"""Break the x1-independence of H and watch the checks notice."""

from walkerkit import assemble, canonical_distribution, perturb_h, random_walker_data, run_full_report

data = random_walker_data(3, 5, 1)
D = canonical_distribution(5, 1)

good = run_full_report(assemble(data), D)
bad_data = perturb_h(data)
print("perturbed H[1,1] =", bad_data.H[0][0].text())
bad = run_full_report(assemble(bad_data, validate=False), D)

print(f"{'check':32s} {'original':>10s} {'perturbed':>10s}")
for a, b in zip(good.checks, bad.checks):
    flag = "  <-- fails" if b.verdict == "fail" else ""
    print(f"{a.name:32s} {a.max_residual:10.2e} {b.max_residual:10.2e}{flag}")
