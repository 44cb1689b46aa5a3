"""Pointwise Levi-Civita geometry of metrics given by coordinate expressions.

Conventions (used everywhere in the package and echoed in report headers):

* coordinates ``x1 .. xn``; array indices are 0-based, so ``∂_i`` is axis ``i-1``;
* ``Γ_ij,k = ½(∂_i g_jk + ∂_j g_ik − ∂_k g_ij)`` (coordinate frames commute,
  so the bracket terms of the Koszul formula drop out) and
  ``Γ^k_ij = g^{km} Γ_ij,m``;
* ``R(u, v) = ∇_v ∇_u − ∇_u ∇_v + ∇_[u,v]`` and
  ``R_ijkl = g(R(∂_i, ∂_j) ∂_k, ∂_l)``.  With this sign a round sphere has
  ``R_1212 > 0``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import linalg

from .expr import Const, ScalarField, eval_jet2_batch, evaluate, parse

__all__ = [
    "CONVENTIONS",
    "DegenerateMetricError",
    "RankDeficiencyError",
    "MetricField",
    "Distribution",
    "ConnectionAtPoint",
    "CurvatureAtPoint",
    "Signature",
    "MetricJets",
    "metric_jets",
    "degeneracy_threshold",
    "sample_points",
    "christoffel",
    "curvature",
    "signature",
    "orthogonal_complement",
    "covariant_derivative",
    "connection_arrays",
    "curvature_arrays",
]

CONVENTIONS = {
    "christoffel_first_kind": "Gamma_ij,k = (d_i g_jk + d_j g_ik - d_k g_ij) / 2",
    "christoffel_second_kind": "Gamma^k_ij = g^km Gamma_ij,m",
    "curvature_operator": "R(u,v) = nabla_v nabla_u - nabla_u nabla_v + nabla_[u,v]",
    "curvature_lowered": "R_ijkl = g(R(d_i, d_j) d_k, d_l)",
    "indices": "coordinates x1..xn; report arrays are 0-based",
}

DEGENERACY_FACTOR = 1e-10


class DegenerateMetricError(ValueError):
    """The metric is (numerically) singular at a point."""


class RankDeficiencyError(ValueError):
    """Spanning fields of a distribution are dependent at a point."""


# ---------------------------------------------------------------------------
# Fields
# ---------------------------------------------------------------------------


def _field(entry, n: int) -> ScalarField:
    if isinstance(entry, ScalarField):
        if entry.nvars != n:
            raise ValueError(f"field over {entry.nvars} coordinates used in dimension {n}")
        return entry
    if isinstance(entry, str):
        return parse(entry, n)
    return ScalarField.constant(float(entry), n)


@dataclass(frozen=True, eq=False)
class MetricField:
    """Symmetric ``n×n`` matrix of scalar fields.

    Only the upper triangle is stored; ``entry(j, i)`` returns ``entry(i, j)``.
    """

    n: int
    upper: tuple  # row-major upper triangle, length n(n+1)/2

    @classmethod
    def from_rows(cls, rows) -> "MetricField":
        """Build from a full square matrix of fields, strings or numbers.

        The matrix must be symmetric as expressions (``g_ij`` and ``g_ji``
        print identically).
        """
        n = len(rows)
        if any(len(row) != n for row in rows):
            raise ValueError("metric rows must form a square matrix")
        full = [[_field(e, n) for e in row] for row in rows]
        upper = []
        for i in range(n):
            for j in range(i, n):
                if full[i][j].ast != full[j][i].ast:
                    raise ValueError(
                        f"metric is not symmetric: g[{i + 1},{j + 1}] = {full[i][j]} "
                        f"but g[{j + 1},{i + 1}] = {full[j][i]}"
                    )
                upper.append(full[i][j])
        return cls(n, tuple(upper))

    @classmethod
    def constant(cls, matrix) -> "MetricField":
        matrix = np.asarray(matrix, dtype=float)
        return cls.from_rows([[float(v) for v in row] for row in matrix])

    def _slot(self, i: int, j: int) -> int:
        if i > j:
            i, j = j, i
        return i * self.n - i * (i - 1) // 2 + (j - i)

    def entry(self, i: int, j: int) -> ScalarField:
        """Field ``g_{i+1, j+1}`` (0-based arguments)."""
        return self.upper[self._slot(i, j)]

    def rows(self) -> list[list[ScalarField]]:
        return [[self.entry(i, j) for j in range(self.n)] for i in range(self.n)]

    def canonical_text(self) -> str:
        return "\n".join("; ".join(e.text() for e in row) for row in self.rows())

    def value(self, x) -> np.ndarray:
        """Matrix ``g(x)`` at a single point."""
        return metric_jets(self, np.asarray(x, dtype=float)[None, :], order=0).g[0]

    def __repr__(self) -> str:
        return f"MetricField(n={self.n}, rows=[{self.canonical_text().replace(chr(10), ' | ')}])"


@dataclass(frozen=True, eq=False)
class Distribution:
    """Span of ``m`` vector fields on ``R^n``; ``fields[a][k]`` is component ``k`` of field ``a``."""

    n: int
    fields: tuple

    def __post_init__(self):
        for f in self.fields:
            if len(f) != self.n:
                raise ValueError("each spanning field needs n components")

    @classmethod
    def from_components(cls, n: int, fields) -> "Distribution":
        return cls(n, tuple(tuple(_field(c, n) for c in f) for f in fields))

    @classmethod
    def coordinate(cls, n: int, indices: Sequence[int]) -> "Distribution":
        """Span of the coordinate fields ``∂_i`` for the given 1-based indices."""
        fields = []
        for i in indices:
            if not 1 <= i <= n:
                raise ValueError(f"coordinate index {i} out of range 1..{n}")
            fields.append([1.0 if k == i - 1 else 0.0 for k in range(n)])
        return cls.from_components(n, fields)

    @property
    def rank(self) -> int:
        return len(self.fields)

    def coordinate_indices(self) -> list[int] | None:
        """1-based indices if every spanning field is a constant coordinate field."""
        out = []
        for f in self.fields:
            ones = []
            for k, c in enumerate(f):
                if not isinstance(c.ast, Const):
                    return None
                if c.ast.value == 1.0:
                    ones.append(k + 1)
                elif c.ast.value != 0.0:
                    return None
            if len(ones) != 1:
                return None
            out.append(ones[0])
        return out

    def values(self, X) -> np.ndarray:
        """Component matrix, shape ``(..., n, m)``: column ``a`` is field ``a``."""
        X = np.asarray(X, dtype=float)
        out = np.zeros(X.shape[:-1] + (self.n, self.rank))
        for a, f in enumerate(self.fields):
            for k, c in enumerate(f):
                out[..., k, a] = _const_or_eval(c, X)
        return out

    def jacobians(self, X) -> np.ndarray:
        """``J[..., k, a, i] = ∂_i`` of component ``k`` of field ``a``."""
        X = np.asarray(X, dtype=float)
        out = np.zeros(X.shape[:-1] + (self.n, self.rank, self.n))
        for a, f in enumerate(self.fields):
            for k, c in enumerate(f):
                if not isinstance(c.ast, Const):
                    out[..., k, a, :] = eval_jet2_batch(c, X).grad
        return out


def _const_or_eval(f: ScalarField, X: np.ndarray):
    if isinstance(f.ast, Const):
        return f.ast.value
    return evaluate(f, X)


# ---------------------------------------------------------------------------
# Metric jets
# ---------------------------------------------------------------------------


@dataclass
class MetricJets:
    """``g[p,i,j]``, ``dg[p,i,j,k] = ∂_k g_ij``, ``d2g[p,i,j,k,l] = ∂_k ∂_l g_ij``."""

    g: np.ndarray
    dg: np.ndarray | None = None
    d2g: np.ndarray | None = None


def metric_jets(g: MetricField, X, order: int = 2) -> MetricJets:
    """Metric and its first ``order`` derivatives at the rows of ``X``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    P, n = X.shape[0], g.n
    if X.shape[1] != n:
        raise ValueError(f"points must have {n} coordinates")
    G = np.zeros((P, n, n))
    dG = np.zeros((P, n, n, n)) if order >= 1 else None
    d2G = np.zeros((P, n, n, n, n)) if order >= 2 else None
    for i in range(n):
        for j in range(i, n):
            f = g.entry(i, j)
            if isinstance(f.ast, Const):
                G[:, i, j] = G[:, j, i] = f.ast.value
                continue
            if order == 0:
                G[:, i, j] = G[:, j, i] = evaluate(f, X)
                continue
            jet = eval_jet2_batch(f, X)
            G[:, i, j] = G[:, j, i] = jet.value
            dG[:, i, j] = dG[:, j, i] = jet.grad
            if order >= 2:
                d2G[:, i, j] = d2G[:, j, i] = jet.hess
    return MetricJets(G, dG, d2G)


def degeneracy_threshold(G: np.ndarray) -> np.ndarray:
    """Scale-aware determinant floor ``1e-10 · (max |g_ij|)^n``."""
    n = G.shape[-1]
    return DEGENERACY_FACTOR * np.max(np.abs(G), axis=(-2, -1)) ** n


def _is_degenerate(G: np.ndarray) -> np.ndarray:
    return np.abs(np.linalg.det(G)) <= degeneracy_threshold(G)


def _require_nondegenerate(G: np.ndarray, X: np.ndarray):
    bad = _is_degenerate(G)
    if np.any(bad):
        p = int(np.argmax(bad))
        raise DegenerateMetricError(
            f"metric is degenerate at x={X[p].tolist()} "
            f"(|det g| = {abs(np.linalg.det(G[p])):.3e})"
        )


def sample_points(g: MetricField, count: int, seed: int, max_draws: int | None = None):
    """Deterministic sample of ``count`` nondegenerate points in ``[-1, 1]^n``.

    Degenerate points (and points where an entry fails to evaluate) are
    skipped and redrawn.  Returns ``(points, skipped)``.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    rng = np.random.default_rng(seed)
    max_draws = max_draws or 50 * count + 100
    kept: list[np.ndarray] = []
    skipped = 0
    drawn = 0
    while len(kept) < count:
        if drawn >= max_draws:
            raise DegenerateMetricError(
                f"could not find {count} nondegenerate sample points in {drawn} draws "
                f"({skipped} skipped)"
            )
        x = rng.uniform(-1.0, 1.0, size=g.n)
        drawn += 1
        try:
            G = metric_jets(g, x[None, :], order=0).g
        except ArithmeticError:
            skipped += 1
            continue
        if not np.all(np.isfinite(G)) or _is_degenerate(G)[0]:
            skipped += 1
            continue
        kept.append(x)
    return np.array(kept), skipped


# ---------------------------------------------------------------------------
# Connection and curvature (batched cores)
# ---------------------------------------------------------------------------


def connection_arrays(jets: MetricJets):
    """First- and second-kind Christoffel symbols plus the inverse metric.

    Returns ``(gam1, gam2, ginv)`` with ``gam1[p,i,j,k] = Γ_ij,k`` and
    ``gam2[p,k,i,j] = Γ^k_ij``.
    """
    dg = jets.dg  # [p,a,b,c] = ∂_c g_ab
    # Γ_ij,k = ½(∂_i g_jk + ∂_j g_ik − ∂_k g_ij)
    gam1 = 0.5 * (
        np.einsum("pjki->pijk", dg) + np.einsum("pikj->pijk", dg) - dg
    )
    ginv = np.linalg.inv(jets.g)
    gam2 = np.einsum("pkm,pijm->pkij", ginv, gam1)
    return gam1, gam2, ginv


def curvature_arrays(jets: MetricJets):
    """Lowered curvature ``R[p,i,j,k,l] = R_ijkl`` plus the connection arrays."""
    gam1, gam2, ginv = connection_arrays(jets)
    dg, d2g = jets.dg, jets.d2g
    # dgam1[p,i,j,k,l] = ∂_l Γ_ij,k
    dgam1 = 0.5 * (
        np.einsum("pjkil->pijkl", d2g) + np.einsum("pikjl->pijkl", d2g) - d2g
    )
    # ∂_l g^{km} = −g^{ka} ∂_l g_ab g^{bm}
    dginv = -np.einsum("pka,pabl,pbm->pkml", ginv, dg, ginv)
    # dgam2[p,k,i,j,l] = ∂_l Γ^k_ij
    dgam2 = np.einsum("pkml,pijm->pkijl", dginv, gam1) + np.einsum(
        "pkm,pijml->pkijl", ginv, dgam1
    )
    # R(∂_i,∂_j)∂_k = (∂_j Γ^q_ik − ∂_i Γ^q_jk + Γ^m_ik Γ^q_jm − Γ^m_jk Γ^q_im) ∂_q
    up = (
        np.einsum("pqikj->pijkq", dgam2)
        - np.einsum("pqjki->pijkq", dgam2)
        + np.einsum("pmik,pqjm->pijkq", gam2, gam2)
        - np.einsum("pmjk,pqim->pijkq", gam2, gam2)
    )
    R = np.einsum("plq,pijkq->pijkl", jets.g, up)
    return R, gam1, gam2, ginv


# ---------------------------------------------------------------------------
# Pointwise API
# ---------------------------------------------------------------------------


@dataclass
class ConnectionAtPoint:
    """``gamma[k, i, j] = Γ^k_ij`` and ``first_kind[i, j, k] = Γ_ij,k``."""

    gamma: np.ndarray
    first_kind: np.ndarray


@dataclass
class CurvatureAtPoint:
    """Fully lowered components ``R[i, j, k, l] = R_ijkl``."""

    R: np.ndarray


@dataclass(frozen=True)
class Signature:
    i_minus: int
    i_plus: int

    def __iter__(self):
        return iter((self.i_minus, self.i_plus))


def _point_jets(g: MetricField, x, order: int):
    x = np.asarray(x, dtype=float)
    if x.shape != (g.n,):
        raise ValueError(f"expected a point with {g.n} coordinates, got shape {x.shape}")
    jets = metric_jets(g, x[None, :], order=order)
    _require_nondegenerate(jets.g, x[None, :])
    return jets


def christoffel(g: MetricField, x) -> ConnectionAtPoint:
    gam1, gam2, _ = connection_arrays(_point_jets(g, x, 1))
    return ConnectionAtPoint(gam2[0], gam1[0])


def curvature(g: MetricField, x) -> CurvatureAtPoint:
    R, *_ = curvature_arrays(_point_jets(g, x, 2))
    return CurvatureAtPoint(R[0])


def signature_of_matrix(G: np.ndarray) -> Signature:
    w = np.linalg.eigvalsh(G)
    return Signature(int(np.sum(w < 0)), int(np.sum(w > 0)))


def signature(g: MetricField, x) -> Signature:
    """Counts of negative and positive eigenvalues of ``g(x)``."""
    return signature_of_matrix(_point_jets(g, x, 0).g[0])


def _independent(V: np.ndarray) -> bool:
    m = V.shape[1]
    if m == 0:
        return True
    s = np.linalg.svd(V, compute_uv=False)
    return s[-1] > 1e-10 * max(1.0, s[0])


def orthogonal_complement(g: MetricField, D: Distribution, x) -> np.ndarray:
    """Basis (columns) of ``{w : g(v_a, w) = 0 for all a}`` at ``x``."""
    G = _point_jets(g, x, 0).g[0]
    V = D.values(np.asarray(x, dtype=float))
    if not _independent(V):
        raise RankDeficiencyError(f"distribution has rank < {D.rank} at x={list(x)}")
    if D.rank == 0:
        return np.eye(g.n)
    return linalg.null_space(V.T @ G)


def _vector_field(v, n: int) -> tuple:
    if isinstance(v, Distribution):
        if v.rank != 1:
            raise ValueError("expected a single vector field")
        return v.fields[0]
    if len(v) != n:
        raise ValueError(f"vector field needs {n} components")
    return tuple(_field(c, n) for c in v)


def covariant_derivative(g: MetricField, w, v, x) -> np.ndarray:
    """Components of ``∇_w v`` at ``x``: ``w^i ∂_i v^k + Γ^k_ij w^i v^j``."""
    n = g.n
    x = np.asarray(x, dtype=float)
    W = Distribution(n, (_vector_field(w, n),))
    Vf = Distribution(n, (_vector_field(v, n),))
    wx = W.values(x)[:, 0]
    vx = Vf.values(x)[:, 0]
    dv = Vf.jacobians(x)[:, 0, :]  # [k, i]
    gamma = christoffel(g, x).gamma
    return dv @ wx + np.einsum("kij,i,j->k", gamma, wx, vx)
