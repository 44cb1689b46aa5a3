import json

import numpy as np
import pytest

from walkerkit.corpus import corpus, random_walker_data
from walkerkit.geometry import Distribution, MetricField, curvature, sample_points
from walkerkit.verify import (
    PARALLELISM_FAMILY,
    CheckResult,
    UnsupportedInputError,
    VerifyConfig,
    check_curvature_relations,
    check_curvature_symmetries,
    check_first_bianchi,
    check_inclusions_and_bounds,
    check_metric_compatibility,
    check_null,
    check_orthocomplement_parallel,
    check_parallel,
    run_full_report,
)
from walkerkit.walker import (
    WalkerData,
    assemble,
    canonical_distribution,
    mid_dimensional_assemble,
    perturb_a,
    perturb_h,
    pp_wave,
)


def walker(data, validate=True):
    g = assemble(data, validate=validate)
    return g, canonical_distribution(data.n, data.r), sample_points(g, 10, seed=0)[0]


def test_check_result_verdict_rule():
    assert CheckResult.measured("x", 1e-9, 1e-9, 3, "").verdict == "pass"
    assert CheckResult.measured("x", 2e-9, 1e-9, 3, "").verdict == "fail"


def test_null_examples():
    g, D, X = walker(random_walker_data(0, 5, 2))
    assert check_null(g, D, X).max_residual < 1e-12
    eucl = MetricField.constant(np.eye(2))
    res = check_null(eucl, Distribution.coordinate(2, [1]), np.zeros((1, 2)))
    assert res.verdict == "fail" and res.max_residual == 1.0
    g, D = mid_dimensional_assemble(2, [["x1", "x2"], ["x2", "x3 * x4"]])
    assert check_null(g, D, sample_points(g, 5, seed=0)[0]).passed


def test_parallel_examples():
    g, D, X = walker(random_walker_data(1, 4, 1))
    assert check_parallel(g, D, X).passed
    flat = MetricField.constant([[0, 1], [1, 0]])
    res = check_parallel(flat, Distribution.coordinate(2, [1]), np.random.default_rng(0).uniform(-1, 1, (4, 2)))
    assert res.passed and res.max_residual == 0.0


def test_parallel_fails_for_h_depending_on_x1():
    data = WalkerData.from_blocks(4, 1, [["1", "0"], ["0", "1"]], [["x1 * x3"], ["0"]], [["0"]])
    g, D, X = walker(data, validate=False)
    res = check_parallel(g, D, X)
    assert res.verdict == "fail" and res.max_residual > 1e-3


def test_parallel_fails_for_non_null_direction_field():
    # Euclidean plane: span(x2 d1 + d2) is not parallel
    g = MetricField.constant(np.eye(2))
    D = Distribution.from_components(2, [["x2", 1]])
    assert check_parallel(g, D, np.random.default_rng(1).uniform(-1, 1, (5, 2))).verdict == "fail"


def test_orthocomplement_examples():
    g, D, X = walker(random_walker_data(2, 6, 2))
    assert check_orthocomplement_parallel(g, D, X).passed
    g, D = mid_dimensional_assemble(2, [["x1 * x3", "x4"], ["x4", "x2^2"]])
    X = sample_points(g, 5, seed=0)[0]
    a, b = check_parallel(g, D, X), check_orthocomplement_parallel(g, D, X)
    assert a.passed and b.passed
    assert a.max_residual == b.max_residual
    g, D, X = walker(perturb_h(random_walker_data(2, 5, 1)), validate=False)
    assert check_orthocomplement_parallel(g, D, X).verdict == "fail"


def test_orthocomplement_requires_walker_form():
    g = MetricField.constant(np.eye(3))
    with pytest.raises(UnsupportedInputError):
        check_orthocomplement_parallel(g, Distribution.coordinate(3, [1]), np.zeros((1, 3)))
    g, _, X = walker(random_walker_data(0, 4, 1))
    with pytest.raises(UnsupportedInputError):
        check_orthocomplement_parallel(g, Distribution.coordinate(4, [2]), X)


def test_inclusions_and_bounds_examples():
    g, D, X = walker(pp_wave())
    res = check_inclusions_and_bounds(g, D, X)
    assert res.passed and res.data["signatures"] == [[1, 3]]
    g, D = mid_dimensional_assemble(2, [["x1", "0"], ["0", "x2"]])
    res = check_inclusions_and_bounds(g, D, sample_points(g, 5, seed=0)[0])
    assert res.passed and res.data["signatures"] == [[2, 2]]
    data = random_walker_data(0, 3, 0)
    g, D, X = walker(data)
    assert check_inclusions_and_bounds(g, D, X).passed


def test_inclusions_and_bounds_fails_when_r_exceeds_index():
    g = MetricField.constant(np.eye(2))
    res = check_inclusions_and_bounds(g, Distribution.coordinate(2, [1]), np.zeros((1, 2)))
    assert res.verdict == "fail"


def test_curvature_relations_pp_wave_nonvacuous():
    g, D, X = walker(pp_wave())
    res = check_curvature_relations(g, D, X)
    assert res.passed
    assert max(np.max(np.abs(curvature(g, x).R)) for x in X) > 1e-3


def test_curvature_relations_negative_control():
    g, D, X = walker(perturb_h(random_walker_data(0, 5, 1)), validate=False)
    res = check_curvature_relations(g, D, X)
    assert res.verdict == "fail"
    assert any(v > 1e-9 for v in res.data["relations"].values())


def test_geometry_invariants_pass_on_generic_metric():
    g = MetricField.from_rows([["2 + x1 * x2", "x2 / 3"], ["x2 / 3", "-1 - x1^2"]])
    X = sample_points(g, 8, seed=3)[0]
    assert check_metric_compatibility(g, X).passed
    assert check_curvature_symmetries(g, X).passed
    assert check_first_bianchi(g, X).passed


def test_full_report_all_pass():
    for data in corpus(9, seed=1):
        report = run_full_report(assemble(data), canonical_distribution(data.n, data.r))
        assert report.passed, report.failing()
        assert [c.name for c in report.checks] == sorted(c.name for c in report.checks)


def test_full_report_negative_control_fails_exactly_parallelism_family():
    for seed in range(6):
        data = perturb_h(random_walker_data(seed, 5, 1))
        report = run_full_report(assemble(data, validate=False), canonical_distribution(5, 1))
        assert sorted(report.failing()) == sorted(PARALLELISM_FAMILY)


def test_full_report_a_perturbation_is_caught():
    data = perturb_a(random_walker_data(3, 5, 1))
    report = run_full_report(assemble(data, validate=False), canonical_distribution(5, 1))
    assert "walker_form.condition_ii" in report.failing()
    assert set(report.failing()) & {"parallel", "orthocomplement_parallel", "curvature_relations"}


def test_full_report_degenerate_a_skips_curvature():
    data = WalkerData.from_blocks(3, 1, [["x2 - x2"]], [["0"]], [["0"]])
    report = run_full_report(assemble(data, validate=False), canonical_distribution(3, 1))
    assert "walker_form.A_nonsingular" in report.failing()
    assert report.check("nondegenerate").verdict == "fail"
    assert report.check("curvature_relations").verdict == "skipped"
    assert not report.passed


def test_full_report_unsupported_distribution_is_recorded_not_raised():
    g = assemble(random_walker_data(0, 4, 1))
    report = run_full_report(g, Distribution.coordinate(4, [2]))
    assert report.check("orthocomplement_parallel").verdict == "error"


def test_report_determinism_and_serialization():
    data = random_walker_data(7, 6, 2)
    g, D = assemble(data), canonical_distribution(6, 2)
    a = run_full_report(g, D, VerifyConfig(seed=5))
    b = run_full_report(g, D, VerifyConfig(seed=5))
    assert a.to_json() == b.to_json()
    assert a.to_text() == b.to_text()
    doc = json.loads(a.to_json())
    assert doc["seed"] == 5 and doc["passed"] is True
    assert set(doc) == {"fingerprint", "seed", "n", "r", "samples", "conventions", "passed", "checks"}
    assert set(doc["checks"][0]) == {
        "name", "max_residual", "tolerance", "points_checked", "verdict", "provenance", "detail", "data",
    }
    c = run_full_report(g, D, VerifyConfig(seed=6))
    assert c.fingerprint == a.fingerprint
    assert c.to_json() != a.to_json()
