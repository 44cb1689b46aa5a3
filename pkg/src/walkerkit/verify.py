"""Claim checks for null parallel distributions, evaluated at sample points.

Every check returns a :class:`CheckResult` whose residual is the maximum over
sample points of a raw residual divided by the point scale
``max(1, ‖g(x)‖∞, ‖Γ(x)‖∞)``.  :func:`run_full_report` runs them all and
collects a deterministic :class:`VerificationReport`.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import linalg

from .geometry import (
    CONVENTIONS,
    DegenerateMetricError,
    Distribution,
    MetricField,
    RankDeficiencyError,
    connection_arrays,
    curvature_arrays,
    degeneracy_threshold,
    metric_jets,
    sample_points,
    signature_of_matrix,
)
from .walker import walker_form_check

__all__ = [
    "CheckResult",
    "VerificationReport",
    "VerifyConfig",
    "UnsupportedInputError",
    "PARALLELISM_FAMILY",
    "check_null",
    "check_parallel",
    "check_orthocomplement_parallel",
    "check_inclusions_and_bounds",
    "check_curvature_relations",
    "check_metric_compatibility",
    "check_curvature_symmetries",
    "check_first_bianchi",
    "run_full_report",
    "fingerprint",
]

JET_TOL = 1e-9
ANGLE_TOL = 1e-10
FORM_TOL = 1e-12

# checks expected to fail when condition (ii) is violated
PARALLELISM_FAMILY = (
    "curvature_relations",
    "orthocomplement_parallel",
    "parallel",
    "walker_form.condition_ii",
)


class UnsupportedInputError(ValueError):
    """The check needs a metric presented in Walker block form."""


@dataclass
class CheckResult:
    name: str
    max_residual: float
    tolerance: float
    points_checked: int
    verdict: str  # "pass", "fail", "skipped" or "error"
    provenance: str
    detail: str = ""
    data: dict = field(default_factory=dict)

    @classmethod
    def measured(cls, name, residual, tol, points, provenance, detail="", data=None):
        residual = float(residual)
        verdict = "pass" if residual <= tol else "fail"
        return cls(name, residual, float(tol), int(points), verdict, provenance, detail, data or {})

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"


# ---------------------------------------------------------------------------
# Shared per-sample data
# ---------------------------------------------------------------------------


class _Samples:
    """Metric jets, connection and (lazily) curvature at a set of points."""

    def __init__(self, g: MetricField, points):
        X = np.atleast_2d(np.asarray(points, dtype=float))
        if X.shape[1] != g.n:
            raise ValueError(f"points must have {g.n} coordinates")
        self.g = g
        self.X = X
        self.jets = metric_jets(g, X, order=2)
        G = self.jets.g
        bad = np.abs(np.linalg.det(G)) <= degeneracy_threshold(G)
        if np.any(bad):
            p = int(np.argmax(bad))
            raise DegenerateMetricError(f"metric is degenerate at x={X[p].tolist()}")
        self.gam1, self.gam2, self.ginv = connection_arrays(self.jets)
        self.scale = np.maximum(
            1.0,
            np.maximum(np.max(np.abs(G), axis=(1, 2)), np.max(np.abs(self.gam2), axis=(1, 2, 3))),
        )
        self._R = None

    @property
    def count(self) -> int:
        return self.X.shape[0]

    @property
    def R(self) -> np.ndarray:
        if self._R is None:
            self._R = curvature_arrays(self.jets)[0]
        return self._R

    def normalized_max(self, raw: np.ndarray) -> float:
        """``max_p max|raw[p]| / scale[p]`` for an array with leading point axis."""
        if raw.size == 0:
            return 0.0
        per_point = np.max(np.abs(raw.reshape(self.count, -1)), axis=1)
        return float(np.max(per_point / self.scale))


def _distribution_values(D: Distribution, S: _Samples) -> np.ndarray:
    if D.n != S.g.n:
        raise ValueError("distribution and metric dimensions differ")
    V = D.values(S.X)
    for p in range(S.count):
        if D.rank and np.linalg.matrix_rank(V[p], tol=1e-10 * max(1.0, np.max(np.abs(V[p])))) < D.rank:
            raise RankDeficiencyError(f"distribution has rank < {D.rank} at x={S.X[p].tolist()}")
    return V


def _require_walker_layout(g: MetricField, D: Distribution, S: _Samples):
    r = D.rank
    if D.coordinate_indices() != list(range(1, r + 1)):
        raise UnsupportedInputError("distribution must be span(d_1..d_r) for the structural complement")
    report = walker_form_check(g, r, S.X, tol=FORM_TOL)
    layout = {c.name: c for c in report.checks}
    for name in ("dimensions", "zero_blocks", "identity_blocks"):
        if not layout[name].passed:
            raise UnsupportedInputError(f"metric is not in Walker block form ({name} check fails)")


# ---------------------------------------------------------------------------
# Checks
# ---------------------------------------------------------------------------


def _null(S: _Samples, D: Distribution, tol: float) -> CheckResult:
    V = _distribution_values(D, S)
    M = np.einsum("pka,pkl,plb->pab", V, S.jets.g, V)
    return CheckResult.measured(
        "null", S.normalized_max(M), tol, S.count, "g(v_a, v_b) = 0 for spanning fields v_a, v_b of D"
    )


def _pointwise_complements(S: _Samples, V: np.ndarray) -> list[np.ndarray]:
    out = []
    for p in range(S.count):
        if V.shape[2] == 0:
            out.append(np.eye(S.g.n))
        else:
            out.append(linalg.null_space(V[p].T @ S.jets.g[p]))
    return out


def _parallel(S: _Samples, D: Distribution, tol: float) -> CheckResult:
    V = _distribution_values(D, S)
    dV = D.jacobians(S.X)  # [p,k,a,i]
    U = _pointwise_complements(S, V)
    raw = np.zeros(S.count)
    for p in range(S.count):
        # <∇_{∂_i} v_a, u> = g_kl ∂_i v_a^k u^l + Γ_ij,l v_a^j u^l
        gu = S.jets.g[p] @ U[p]  # [k, c]
        term1 = np.einsum("kai,kc->aic", dV[p], gu)
        term2 = np.einsum("ijl,ja,lc->aic", S.gam1[p], V[p], U[p])
        vals = term1 + term2
        raw[p] = np.max(np.abs(vals), initial=0.0)
    return CheckResult.measured(
        "parallel", float(np.max(raw / S.scale)), tol, S.count,
        "<nabla_{d_i} v_a, u> = 0 for v_a in D and u in the pointwise complement of D",
    )


def _orthocomplement_parallel(S: _Samples, D: Distribution, tol: float) -> CheckResult:
    _require_walker_layout(S.g, D, S)
    n, r = S.g.n, D.rank
    V = _distribution_values(D, S)
    # ∇_{∂_i} ∂_a = Γ^k_ia ∂_k, paired with v_b: Γ_ia,l v_b^l, for a <= n-r
    vals = np.einsum("pial,plb->piab", S.gam1[:, :, : n - r, :], V)
    return CheckResult.measured(
        "orthocomplement_parallel", S.normalized_max(vals), tol, S.count,
        "<nabla_{d_i} d_a, v_b> = 0 for a <= n-r (fields spanning the complement) and v_b in D",
    )


def _inclusions_and_bounds(S: _Samples, D: Distribution, tol: float) -> CheckResult:
    V = _distribution_values(D, S)
    n, r = S.g.n, D.rank
    U = _pointwise_complements(S, V)
    worst = 0.0
    signatures = set()
    failures = []
    for p in range(S.count):
        sig = signature_of_matrix(S.jets.g[p])
        signatures.add((sig.i_minus, sig.i_plus))
        res_a = max(0, r - min(sig.i_minus, sig.i_plus))
        if r == 0:
            res_b = 0.0
        elif U[p].shape[1] < r:
            res_b = np.pi / 2
        else:
            res_b = float(np.max(linalg.subspace_angles(V[p], U[p])))
        res_c = max(0.0, r - n / 2)
        if res_a:
            failures.append(f"r={r} > min(i-, i+) for signature {tuple(sig)}")
        if res_c:
            failures.append(f"r={r} > n/2")
        worst = max(worst, float(res_a), res_b, res_c)
    return CheckResult.measured(
        "inclusions_and_bounds", worst, tol, S.count,
        "r <= min(i-, i+); D inside its orthogonal complement; r <= n/2",
        detail="; ".join(sorted(set(failures))),
        data={"signatures": [list(s) for s in sorted(signatures)], "r": r},
    )


def _curvature_relations(S: _Samples, D: Distribution, tol: float) -> CheckResult:
    _require_walker_layout(S.g, D, S)
    n, r = S.g.n, D.rank
    V = _distribution_values(D, S)
    R = S.R
    q = n - r
    # complement spanned by ∂_1..∂_{n-r}
    Rv = np.einsum("pijkl,pia->pajkl", R, V)  # first slot in D
    rel_a = Rv[:, :, :q, :, :]
    rel_b = np.einsum("pajkl,pjb->pabkl", Rv, V)
    rel_c = np.einsum("pijkl,pka->pijal", R[:, :q, :q], V)
    parts = {
        "a": S.normalized_max(rel_a),
        "b": S.normalized_max(rel_b),
        "c": S.normalized_max(rel_c),
    }
    failing = [k for k, v in parts.items() if v > tol]
    return CheckResult.measured(
        "curvature_relations", max(parts.values()), tol, S.count,
        "R(D, D-perp, -, -) = 0, R(D, D, -, -) = 0, R(D-perp, D-perp, D, -) = 0",
        detail="" if not failing else "failing relations: " + ", ".join(failing),
        data={"relations": parts},
    )


def _metric_compatibility(S: _Samples, tol: float) -> CheckResult:
    # ∂_k g_ij = Γ_ki,j + Γ_kj,i
    dg = np.einsum("pijk->pkij", S.jets.dg)
    rhs = S.gam1 + np.einsum("pkji->pkij", S.gam1)
    return CheckResult.measured(
        "metric_compatibility", S.normalized_max(dg - rhs), tol, S.count,
        "d_k g_ij = Gamma_ki,j + Gamma_kj,i",
    )


def _curvature_symmetries(S: _Samples, tol: float) -> CheckResult:
    R = S.R
    parts = {
        "antisymmetry_ij": S.normalized_max(R + np.einsum("pijkl->pjikl", R)),
        "antisymmetry_kl": S.normalized_max(R + np.einsum("pijkl->pijlk", R)),
        "pair_symmetry": S.normalized_max(R - np.einsum("pijkl->pklij", R)),
    }
    return CheckResult.measured(
        "curvature_symmetries", max(parts.values()), tol, S.count,
        "R_ijkl = -R_jikl = -R_ijlk = R_klij",
        data={"parts": parts},
    )


def _first_bianchi(S: _Samples, tol: float) -> CheckResult:
    R = S.R
    cyc = R + np.einsum("pjkil->pijkl", R) + np.einsum("pkijl->pijkl", R)
    return CheckResult.measured(
        "first_bianchi", S.normalized_max(cyc), tol, S.count, "R_ijkl + R_jkil + R_kijl = 0"
    )


def check_null(g: MetricField, D: Distribution, points, tol: float = JET_TOL) -> CheckResult:
    """Largest normalized ``|g(v_a, v_b)|`` over spanning pairs of ``D``."""
    return _null(_Samples(g, points), D, tol)


def check_parallel(g: MetricField, D: Distribution, points, tol: float = JET_TOL) -> CheckResult:
    """``∇_{∂_i} v_a`` stays in ``D``: its pairing with a basis of ``D⊥`` vanishes.

    ``D⊥`` is computed pointwise; since ``g`` is nondegenerate, ``(D⊥)⊥ = D``.
    """
    return _parallel(_Samples(g, points), D, tol)


def check_orthocomplement_parallel(g: MetricField, D: Distribution, points, tol: float = JET_TOL) -> CheckResult:
    """Parallelism of ``D⊥``, spanned structurally by ``∂_1..∂_{n-r}``.

    Only metrics in Walker block form with ``D = span(∂_1..∂_r)`` are
    supported; anything else raises :class:`UnsupportedInputError`.
    """
    return _orthocomplement_parallel(_Samples(g, points), D, tol)


def check_inclusions_and_bounds(g: MetricField, D: Distribution, points, tol: float = ANGLE_TOL) -> CheckResult:
    """Signature bound, ``D ⊂ D⊥`` (largest principal angle) and ``r <= n/2``."""
    return _inclusions_and_bounds(_Samples(g, points), D, tol)


def check_curvature_relations(g: MetricField, D: Distribution, points, tol: float = JET_TOL) -> CheckResult:
    """Vanishing of the three curvature slots forced by a null parallel ``D``.

    Slot order follows ``R_ijkl = g(R(∂_i, ∂_j)∂_k, ∂_l)``.
    """
    return _curvature_relations(_Samples(g, points), D, tol)


def check_metric_compatibility(g: MetricField, points, tol: float = JET_TOL) -> CheckResult:
    return _metric_compatibility(_Samples(g, points), tol)


def check_curvature_symmetries(g: MetricField, points, tol: float = JET_TOL) -> CheckResult:
    return _curvature_symmetries(_Samples(g, points), tol)


def check_first_bianchi(g: MetricField, points, tol: float = JET_TOL) -> CheckResult:
    return _first_bianchi(_Samples(g, points), tol)


# ---------------------------------------------------------------------------
# Full report
# ---------------------------------------------------------------------------


@dataclass
class VerifyConfig:
    seed: int = 0
    samples: int = 25
    tol: float = JET_TOL
    angle_tol: float = ANGLE_TOL
    form_tol: float = FORM_TOL


@dataclass
class VerificationReport:
    fingerprint: str
    seed: int
    n: int
    r: int
    samples_requested: int
    samples_skipped: int
    checks: list[CheckResult]
    conventions: dict = field(default_factory=lambda: dict(CONVENTIONS))

    @property
    def passed(self) -> bool:
        return not any(c.verdict in ("fail", "error") for c in self.checks)

    def failing(self) -> list[str]:
        return [c.name for c in self.checks if c.verdict in ("fail", "error")]

    def check(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "fingerprint": self.fingerprint,
            "seed": self.seed,
            "n": self.n,
            "r": self.r,
            "samples": {"requested": self.samples_requested, "skipped": self.samples_skipped},
            "conventions": self.conventions,
            "passed": self.passed,
            "checks": [_jsonable(asdict(c)) for c in self.checks],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_text(self) -> str:
        lines = [
            f"fingerprint: {self.fingerprint}",
            f"seed: {self.seed}",
            f"n: {self.n}",
            f"r: {self.r}",
            f"samples: {self.samples_requested} (skipped {self.samples_skipped})",
        ]
        for k in sorted(self.conventions):
            lines.append(f"convention {k}: {self.conventions[k]}")
        for c in self.checks:
            line = (
                f"[{c.verdict.upper():7s}] {c.name}: residual={c.max_residual:.3e} "
                f"tol={c.tolerance:.1e} points={c.points_checked}"
            )
            if c.detail:
                line += f" -- {c.detail}"
            lines.append(line)
        lines.append(f"overall: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines) + "\n"


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def fingerprint(g: MetricField, D: Distribution) -> str:
    text = g.canonical_text() + "\n--\n" + "\n".join(
        "; ".join(c.text() for c in f) for f in D.fields
    )
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _form_result(fc, tol: float) -> CheckResult:
    provenance = "Walker block layout and conditions (i)-(ii)"
    if fc.name in ("dimensions", "A_nonsingular"):
        # pass/fail sub-checks without a meaningful residual
        residual = 0.0 if fc.passed else float("inf")
        return CheckResult.measured(f"walker_form.{fc.name}", residual, tol, 16, provenance, fc.detail)
    return CheckResult.measured(f"walker_form.{fc.name}", fc.residual, tol, 16, provenance, fc.detail)


def _guarded(name: str, tol: float, fn) -> CheckResult:
    try:
        return fn()
    except (UnsupportedInputError, DegenerateMetricError, RankDeficiencyError, ArithmeticError, ValueError) as exc:
        return CheckResult(name, float("nan"), tol, 0, "error", "", f"{type(exc).__name__}: {exc}")


def run_full_report(g: MetricField, D: Distribution, config: VerifyConfig | None = None) -> VerificationReport:
    """Run every check on ``(g, D)``; per-check errors are recorded, not raised."""
    config = config or VerifyConfig()
    r = D.rank
    checks: list[CheckResult] = []

    form = walker_form_check(g, r, tol=config.form_tol)
    for fc in form.checks:
        checks.append(_form_result(fc, config.form_tol))

    skipped = 0
    S = None
    try:
        X, skipped = sample_points(g, config.samples, config.seed)
        S = _Samples(g, X)
        checks.append(CheckResult.measured(
            "nondegenerate", 0.0, 0.0, S.count, "|det g| above the scale-aware floor at sample points",
            detail=f"{skipped} degenerate draws skipped" if skipped else "",
        ))
    except (DegenerateMetricError, ArithmeticError) as exc:
        checks.append(CheckResult(
            "nondegenerate", float("inf"), 0.0, 0, "fail",
            "|det g| above the scale-aware floor at sample points", str(exc),
        ))

    pointwise = [
        ("null", config.tol, lambda: _null(S, D, config.tol)),
        ("parallel", config.tol, lambda: _parallel(S, D, config.tol)),
        ("orthocomplement_parallel", config.tol, lambda: _orthocomplement_parallel(S, D, config.tol)),
        ("inclusions_and_bounds", config.angle_tol, lambda: _inclusions_and_bounds(S, D, config.angle_tol)),
        ("curvature_relations", config.tol, lambda: _curvature_relations(S, D, config.tol)),
        ("metric_compatibility", config.tol, lambda: _metric_compatibility(S, config.tol)),
        ("curvature_symmetries", config.tol, lambda: _curvature_symmetries(S, config.tol)),
        ("first_bianchi", config.tol, lambda: _first_bianchi(S, config.tol)),
    ]
    for name, tol, fn in pointwise:
        if S is None:
            checks.append(CheckResult(name, float("nan"), tol, 0, "skipped", "", "no nondegenerate sample points"))
        else:
            checks.append(_guarded(name, tol, fn))

    checks.sort(key=lambda c: c.name)
    return VerificationReport(
        fingerprint=fingerprint(g, D),
        seed=config.seed,
        n=g.n,
        r=r,
        samples_requested=config.samples,
        samples_skipped=skipped,
        checks=checks,
    )
