"""Acceptance criteria, one test each.

Each test records a one-line verdict that is printed in the terminal summary
(and immediately with ``-s``).
"""

import time

import numpy as np
import pytest
from scipy.linalg import subspace_angles

from conftest import ACCEPTANCE
from instances import random_pairing, random_partial_metric
from oracles import extension_dimension_metric, extension_dimension_pairing, fd_christoffel, fd_curvature, rel_err
from walkerkit.cli import main
from walkerkit.corpus import corpus
from walkerkit.geometry import (
    Distribution,
    MetricField,
    christoffel,
    curvature,
    degeneracy_threshold,
    orthogonal_complement,
    sample_points,
)
from walkerkit.verify import (
    VerifyConfig,
    check_curvature_relations,
    check_curvature_symmetries,
    check_first_bianchi,
    check_inclusions_and_bounds,
    check_null,
    check_orthocomplement_parallel,
    check_parallel,
    run_full_report,
)
from walkerkit.walker import (
    assemble,
    canonical_distribution,
    extend_partial_metric,
    metric_parameter_rank,
    pairing_parameter_rank,
    perturb_h,
    pp_wave,
    walker_partial_metric,
)

CORPUS_SIZE = 200
SAMPLES = 25
TOL = 1e-9


def record(number, ok, message):
    key = f"criterion {number}"
    ACCEPTANCE[key] = (bool(ok), message)
    print(f"{'PASS' if ok else 'FAIL'}  {key}: {message}")


@pytest.fixture(scope="module")
def instances():
    out = []
    for data in corpus(CORPUS_SIZE, seed=0):
        g = assemble(data)
        D = canonical_distribution(data.n, data.r)
        X, _ = sample_points(g, SAMPLES, seed=0)
        out.append((data, g, D, X))
    return out


def test_criterion_1_null_and_parallel(instances):
    start = time.perf_counter()
    worst_null = worst_par = 0.0
    points = 0
    for data in corpus(CORPUS_SIZE, seed=0):
        g = assemble(data)
        D = canonical_distribution(data.n, data.r)
        X, _ = sample_points(g, SAMPLES, seed=0)
        worst_null = max(worst_null, check_null(g, D, X).max_residual)
        res = check_parallel(g, D, X)
        worst_par = max(worst_par, res.max_residual)
        points += res.points_checked
    elapsed = time.perf_counter() - start
    ok = worst_null <= TOL and worst_par <= TOL and points == CORPUS_SIZE * SAMPLES and elapsed < 30.0
    record(1, ok, f"{CORPUS_SIZE} instances x {SAMPLES} points: max null {worst_null:.2e}, "
                  f"max parallel {worst_par:.2e} (tol {TOL:g}), {elapsed:.1f} s (limit 30 s)")
    assert ok


def test_criterion_2_curvature_relations(instances):
    worst = 0.0
    for _, g, D, X in instances:
        worst = max(worst, check_curvature_relations(g, D, X).max_residual)
    data = pp_wave()
    g = assemble(data)
    X, _ = sample_points(g, SAMPLES, seed=0)
    pp = check_curvature_relations(g, canonical_distribution(4, 1), X)
    largest = max(float(np.max(np.abs(curvature(g, x).R))) for x in X)
    ok = worst <= TOL and pp.passed and largest > 1e-3
    record(2, ok, f"max relation residual {worst:.2e} (tol {TOL:g}); pp-wave relations "
                  f"{pp.max_residual:.2e}, max |R_ijkl| {largest:.3f} (> 1e-3)")
    assert ok


def test_criterion_3_signature_bounds(instances):
    failures = 0
    mid_sigs = set()
    mid_count = 0
    for data, g, D, X in instances:
        res = check_inclusions_and_bounds(g, D, X)
        failures += not res.passed
        if data.n == 2 * data.r:
            mid_count += 1
            for s in res.data["signatures"]:
                mid_sigs.add((tuple(s), data.r))
    neutral = all(s == (r, r) for s, r in mid_sigs)
    ok = failures == 0 and neutral and mid_count > 0
    record(3, ok, f"bounds fail on {failures}/{len(instances)} instances; "
                  f"{mid_count} mid-dimensional instances, signatures {sorted(mid_sigs)} all neutral: {neutral}")
    assert ok


def test_criterion_4_extension_dimensions():
    rng = np.random.default_rng(2024)
    mismatches = []
    for t in range(50):
        p, _ = random_pairing(rng)
        rank = pairing_parameter_rank(p)
        expected = p.k * p.l * p.m
        if not (rank == expected == extension_dimension_pairing(p)):
            mismatches.append(("pairing", t, rank, expected))
        q, _ = random_partial_metric(rng)
        rank = metric_parameter_rank(q)
        expected = q.r * (q.r + 1) // 2
        if not (rank == expected == extension_dimension_metric(q)):
            mismatches.append(("metric", t, rank, expected))
    ok = not mismatches
    record(4, ok, f"50 pairings (k,l <= 3, m <= 2) and 50 partial metrics (r <= 3): "
                  f"{len(mismatches)} rank mismatches against klm and r(r+1)/2")
    assert ok, mismatches


def _postconditions(p, Bfree):
    n = p.n
    G = extend_partial_metric(p, Bfree)
    nondegenerate = bool(np.abs(np.linalg.det(G)) > degeneracy_threshold(G))
    null = float(np.max(np.abs(p.P.T @ G @ p.P), initial=0.0))
    C = orthogonal_complement(MetricField.constant(G), Distribution.from_components(n, p.P.T.tolist()), np.zeros(n))
    angle = float(np.max(subspace_angles(C, p.Pprime), initial=0.0)) if C.shape[1] == p.Pprime.shape[1] else np.inf
    return nondegenerate, null, angle


def test_criterion_5_partial_metric_postconditions(instances):
    rng = np.random.default_rng(2025)
    cases = []
    for _ in range(50):
        p, _ = random_partial_metric(rng)
        M = rng.normal(size=(p.r, p.r))
        cases.append((p, M + M.T))
    for data, g, D, X in instances[::4]:
        p, Bx = walker_partial_metric(data, X[0])
        M = rng.uniform(-2, 2, size=(data.r, data.r))
        cases.append((p, Bx))
        cases.append((p, M + M.T))
    degenerate = 0
    worst_null = worst_angle = 0.0
    for p, B in cases:
        nd, null, angle = _postconditions(p, B)
        degenerate += not nd
        worst_null = max(worst_null, null)
        worst_angle = max(worst_angle, angle)
    ok = degenerate == 0 and worst_null <= 1e-12 and worst_angle <= 1e-10
    record(5, ok, f"{len(cases)} extensions: {degenerate} degenerate, max P-null residual {worst_null:.2e} "
                  f"(tol 1e-12), max angle to P' {worst_angle:.2e} (tol 1e-10)")
    assert ok


def test_criterion_6_oracle_equivalence(instances):
    worst_gamma = worst_R = 0.0
    for _, g, _, X in instances[:50]:
        for x in X[:2]:
            worst_gamma = max(worst_gamma, rel_err(christoffel(g, x).gamma, fd_christoffel(g, x, h=1e-4)[1]))
            worst_R = max(worst_R, rel_err(curvature(g, x).R, fd_curvature(g, x, 1e-4, 1e-3)))
    ok = worst_gamma <= 1e-5 and worst_R <= 1e-5
    record(6, ok, f"50 instances x 2 points: max relative error Gamma {worst_gamma:.2e}, R {worst_R:.2e} (tol 1e-5)")
    assert ok


def test_criterion_7_negative_controls(instances):
    total = caught = 0
    weakest = np.inf
    for data, _, D, _ in instances:
        if data.n - 2 * data.r < 1:
            continue
        total += 1
        g = assemble(perturb_h(data), validate=False)
        X, _ = sample_points(g, SAMPLES, seed=0)
        residuals = [
            c.max_residual
            for c in (check_parallel(g, D, X), check_orthocomplement_parallel(g, D, X),
                      check_curvature_relations(g, D, X))
            if c.verdict == "fail"
        ]
        best = max(residuals, default=0.0)
        weakest = min(weakest, best)
        caught += best > 1e-3
    ok = total > 0 and caught == total
    record(7, ok, f"{caught}/{total} H-perturbed instances fail a check with residual > 1e-3 "
                  f"(smallest winning residual {weakest:.2e})")
    assert ok


def test_criterion_8_bianchi_and_pair_symmetry(instances):
    worst_b = worst_pair = 0.0
    for _, g, _, X in instances:
        worst_b = max(worst_b, check_first_bianchi(g, X).max_residual)
        worst_pair = max(worst_pair, check_curvature_symmetries(g, X).data["parts"]["pair_symmetry"])
    ok = worst_b <= TOL and worst_pair <= TOL
    record(8, ok, f"max first Bianchi {worst_b:.2e}, max pair symmetry {worst_pair:.2e} (tol {TOL:g})")
    assert ok


def test_criterion_9_determinism(tmp_path, capsys):
    mismatched = 0
    checked = 0
    first = corpus(40, seed=3)
    second = corpus(40, seed=3)
    for a, b in zip(first, second):
        ra = run_full_report(assemble(a), canonical_distribution(a.n, a.r), VerifyConfig(seed=11))
        rb = run_full_report(assemble(b), canonical_distribution(b.n, b.r), VerifyConfig(seed=11))
        mismatched += ra.to_json().encode() != rb.to_json().encode()
        mismatched += ra.to_text().encode() != rb.to_text().encode()
        checked += 2
    outputs = []
    for _ in range(2):
        path = tmp_path / "w.txt"
        main(["gen", "--n", "5", "--r", "1", "--seed", "77", "--out", str(path)])
        run_outputs = [path.read_bytes()]
        for cmd in (["verify", "--format", "json"], ["extend", "--format", "json"], ["negctrl", "--format", "json"]):
            main([cmd[0], str(path), *cmd[1:], "--seed", "5"])
            run_outputs.append(capsys.readouterr().out.encode())
        outputs.append(run_outputs)
    cli_same = outputs[0] == outputs[1]
    ok = mismatched == 0 and cli_same
    record(9, ok, f"{checked - mismatched}/{checked} library reports byte-identical; "
                  f"CLI gen/verify/extend/negctrl outputs identical across runs: {cli_same}")
    assert ok
