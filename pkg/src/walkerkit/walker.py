"""Walker canonical form and the pointwise extension problems behind it.

A metric in Walker coordinates has the block layout (rows/columns grouped as
``1..r | r+1..n-r | n-r+1..n``)::

    [[0,  0,  I],
     [0,  A,  H],
     [I,  H', B]]

with ``A`` symmetric and nonsingular, ``B`` symmetric, and ``A``, ``H``
independent of ``x1 .. xr``.  The first ``r`` coordinate fields then span a
null parallel distribution.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .expr import Add, ScalarField, Var, eval_jet2_batch, evaluate, parse
from .geometry import Distribution, MetricField, metric_jets

__all__ = [
    "WalkerInvariantError",
    "InclusionError",
    "InconsistentPairingError",
    "WalkerData",
    "CoordinateSplit",
    "PartialPairingAtPoint",
    "PartialFibreMetricAtPoint",
    "FormCheck",
    "WalkerFormReport",
    "assemble",
    "canonical_distribution",
    "walker_form_check",
    "complete_basis",
    "adapted_basis",
    "extend_partial_pairing",
    "pairing_parameter_rank",
    "extend_partial_metric",
    "metric_parameter_rank",
    "mid_dimensional_assemble",
    "step1_partial_pairing",
    "walker_partial_metric",
    "pp_wave",
    "perturb_h",
    "perturb_a",
]

_VALIDATION_SEED = 0
_VALIDATION_SAMPLES = 16


class WalkerInvariantError(ValueError):
    """Walker data violate condition (i) (shapes, symmetry, det A ≠ 0) or (ii)."""

    def __init__(self, condition: str, message: str):
        self.condition = condition
        super().__init__(f"condition ({condition}) violated: {message}")


class InclusionError(ValueError):
    """A subspace that should be contained in another is not."""


class InconsistentPairingError(ValueError):
    """The two prescribed pieces of a partial pairing disagree on C'⊗D'."""


# ---------------------------------------------------------------------------
# Walker data
# ---------------------------------------------------------------------------


def _block(entries, rows: int, cols: int, n: int, name: str) -> tuple:
    entries = [] if entries is None else entries
    if len(entries) != rows or any(len(row) != cols for row in entries):
        shape = (len(entries), len(entries[0]) if entries else 0)
        raise WalkerInvariantError("i", f"{name} must be {rows}x{cols}, got {shape[0]}x{shape[1]}")
    out = []
    for row in entries:
        out.append(tuple(
            e if isinstance(e, ScalarField) else parse(e, n) if isinstance(e, str)
            else ScalarField.constant(float(e), n)
            for e in row
        ))
    return tuple(out)


@dataclass(frozen=True, eq=False)
class WalkerData:
    """Block functions ``A`` ((n-2r)×(n-2r)), ``H`` ((n-2r)×r) and ``B`` (r×r)."""

    n: int
    r: int
    A: tuple
    H: tuple
    B: tuple

    @classmethod
    def from_blocks(cls, n: int, r: int, A=None, H=None, B=None) -> "WalkerData":
        """Build from nested lists of expression strings, numbers or fields.

        Only the shapes are checked here; :meth:`validate` covers the rest.
        """
        if not (isinstance(n, int) and isinstance(r, int)) or n < 1 or not 0 <= 2 * r <= n:
            raise WalkerInvariantError("i", f"need 0 <= r <= n/2, got n={n}, r={r}")
        m = n - 2 * r
        return cls(
            n, r,
            _block(A, m, m, n, "A"),
            _block(H, m, r, n, "H"),
            _block(B, r, r, n, "B"),
        )

    @property
    def split(self) -> "CoordinateSplit":
        return CoordinateSplit(self.n, self.r)

    def blocks(self):
        """Yield ``(name, i, j, field)`` for every block entry (0-based i, j)."""
        for name, blk in (("A", self.A), ("H", self.H), ("B", self.B)):
            for i, row in enumerate(blk):
                for j, f in enumerate(row):
                    yield name, i, j, f

    def matrix_rows(self) -> list[list]:
        """Full Walker matrix as rows of fields / numbers."""
        n, r = self.n, self.r
        m = n - 2 * r
        rows = [[0.0] * n for _ in range(n)]
        for i in range(r):
            rows[i][n - r + i] = 1.0
            rows[n - r + i][i] = 1.0
        for i in range(m):
            for j in range(m):
                rows[r + i][r + j] = self.A[i][j]
            for j in range(r):
                rows[r + i][n - r + j] = self.H[i][j]
                rows[n - r + j][r + i] = self.H[i][j]
        for i in range(r):
            for j in range(r):
                rows[n - r + i][n - r + j] = self.B[i][j]
        return rows

    def validate(self, points=None):
        """Raise :class:`WalkerInvariantError` unless conditions (i) and (ii) hold.

        Pointwise parts (det A ≠ 0, vanishing ``x1..xr`` derivatives) are
        tested at ``points``, or at a fixed seeded sample in ``[-1, 1]^n``.
        """
        for name, blk in (("A", self.A), ("B", self.B)):
            for i, row in enumerate(blk):
                for j in range(i + 1, len(row)):
                    if row[j].ast != blk[j][i].ast:
                        raise WalkerInvariantError(
                            "i", f"{name} not symmetric: {name}[{i + 1},{j + 1}] = {row[j]} "
                            f"vs {name}[{j + 1},{i + 1}] = {blk[j][i]}"
                        )
        X = _validation_points(self.n) if points is None else np.atleast_2d(points)
        offenders = _x1r_dependence(self, X)
        if offenders:
            name, i, j, f, k, _ = offenders[0]
            raise WalkerInvariantError(
                "ii", f"{name}[{i + 1},{j + 1}] = {f} depends on x{k + 1}"
            )
        m = self.n - 2 * self.r
        if m:
            Avals = _block_values(self.A, X)
            det = np.abs(np.linalg.det(Avals))
            floor = 1e-10 * np.max(np.abs(Avals), axis=(1, 2)) ** m
            if np.any(det <= floor):
                p = int(np.argmax(det <= floor))
                raise WalkerInvariantError("i", f"A is singular at x={X[p].tolist()}")


def _validation_points(n: int) -> np.ndarray:
    rng = np.random.default_rng(_VALIDATION_SEED)
    return rng.uniform(-1.0, 1.0, size=(_VALIDATION_SAMPLES, n))


def _block_values(blk, X) -> np.ndarray:
    rows, cols = len(blk), len(blk[0]) if blk else 0
    out = np.zeros((X.shape[0], rows, cols))
    for i in range(rows):
        for j in range(cols):
            out[:, i, j] = evaluate(blk[i][j], X)
    return out


def _x1r_dependence(data: WalkerData, X, tol: float = 0.0):
    """Entries of A, H whose gradient in ``x1..xr`` is nonzero at some point."""
    out = []
    r = data.r
    if r == 0:
        return out
    for name, i, j, f in data.blocks():
        if name == "B" or f.is_constant:
            continue
        grad = eval_jet2_batch(f, X).grad[:, :r]
        worst = np.max(np.abs(grad))
        if worst > tol:
            k = int(np.unravel_index(np.argmax(np.abs(grad)), grad.shape)[1])
            out.append((name, i, j, f, k, float(worst)))
    return out


@dataclass(frozen=True)
class CoordinateSplit:
    """Index ranges (1-based) that stand in for the base, leaf and quotient spaces."""

    n: int
    r: int

    @property
    def sigma_indices(self) -> range:
        return range(self.n - self.r + 1, self.n + 1)

    @property
    def q_indices(self) -> range:
        return range(self.r + 1, self.n + 1)

    @property
    def fibre_indices(self) -> range:
        return range(1, self.n - self.r + 1)

    @property
    def leaf_q_indices(self) -> range:
        return range(self.r + 1, self.n - self.r + 1)


def assemble(data: WalkerData, validate: bool = True) -> MetricField:
    """Walker metric ``[[0,0,I],[0,A,H],[I,H',B]]`` for ``data``.

    With ``validate=False`` the invariants are not checked, which is how
    negative controls are built.
    """
    if validate:
        data.validate()
    return MetricField.from_rows(data.matrix_rows())


def canonical_distribution(n: int, r: int) -> Distribution:
    """Span of ``∂_1 .. ∂_r``.  ``r = 0`` gives the zero distribution."""
    if not 0 <= 2 * r <= n:
        raise ValueError(f"need 0 <= r <= n/2, got n={n}, r={r}")
    return Distribution.coordinate(n, range(1, r + 1))


def mid_dimensional_assemble(r: int, B) -> tuple[MetricField, Distribution]:
    """Neutral metric ``[[0, I], [I, B]]`` on ``R^{2r}`` with its null plane."""
    if r < 1:
        raise ValueError("mid-dimensional case needs r >= 1")
    data = WalkerData.from_blocks(2 * r, r, [], [], B)
    return assemble(data), canonical_distribution(2 * r, r)


def pp_wave(profile: str = "x2^2 - x3^2") -> WalkerData:
    """``2 dx1 dx4 + dx2² + dx3² + B(x2, x3) dx4²`` as Walker data (n=4, r=1)."""
    return WalkerData.from_blocks(4, 1, [[1, 0], [0, 1]], [[0], [0]], [[profile]])


def _plus_x1(f: ScalarField) -> ScalarField:
    return ScalarField(Add(f.ast, Var(1)), f.nvars)


def perturb_h(data: WalkerData, i: int = 0, j: int = 0) -> WalkerData:
    """Copy of ``data`` with ``x1`` added to ``H[i][j]`` (breaks condition (ii))."""
    if not data.H or not data.H[0]:
        raise ValueError("no H block to perturb (n = 2r or r = 0)")
    H = [list(row) for row in data.H]
    H[i][j] = _plus_x1(H[i][j])
    return WalkerData(data.n, data.r, data.A, tuple(tuple(row) for row in H), data.B)


def perturb_a(data: WalkerData, i: int = 0) -> WalkerData:
    """Copy of ``data`` with ``x1`` added to the diagonal entry ``A[i][i]``."""
    if not data.A or data.r == 0:
        raise ValueError("no A block or no x1 constraint to violate")
    A = [list(row) for row in data.A]
    A[i][i] = _plus_x1(A[i][i])
    return WalkerData(data.n, data.r, tuple(tuple(row) for row in A), data.H, data.B)


# ---------------------------------------------------------------------------
# Form check on an arbitrary metric
# ---------------------------------------------------------------------------


@dataclass
class FormCheck:
    name: str
    passed: bool
    residual: float
    detail: str = ""


@dataclass
class WalkerFormReport:
    n: int
    r: int
    checks: list[FormCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failing(self) -> list[FormCheck]:
        return [c for c in self.checks if not c.passed]


def _entry_label(n: int, r: int, i: int, j: int) -> str:
    """Block-relative name of metric entry (i, j), 0-based, e.g. ``H[1,2]``."""
    lo, hi = r, n - r

    def part(k):
        return 0 if k < lo else (1 if k < hi else 2)

    pi, pj = part(i), part(j)
    off = (0, lo, hi)
    names = {(1, 1): "A", (1, 2): "H", (2, 1): "H'", (2, 2): "B"}
    name = names.get((pi, pj))
    if name is None:
        return f"g[{i + 1},{j + 1}]"
    return f"{name}[{i - off[pi] + 1},{j - off[pj] + 1}]"


def walker_form_check(g: MetricField, r: int, points=None, tol: float = 1e-12) -> WalkerFormReport:
    """Check that ``g`` is presented in Walker form for the given ``r``.

    Sub-checks: ``dimensions``, ``zero_blocks``, ``identity_blocks``,
    ``symmetry`` (A and B), ``A_nonsingular`` and ``condition_ii``.  Never
    raises for a well-formed metric; failures are reported.
    """
    n = g.n
    report = WalkerFormReport(n, r)
    if not 0 <= 2 * r <= n:
        report.checks.append(FormCheck("dimensions", False, float("inf"), f"need 0 <= r <= n/2, got r={r}, n={n}"))
        return report
    report.checks.append(FormCheck("dimensions", True, 0.0))
    X = _validation_points(n) if points is None else np.atleast_2d(np.asarray(points, dtype=float))
    jets = metric_jets(g, X, order=1)
    G, dG = jets.g, jets.dg
    m = n - 2 * r

    expected = np.zeros((n, n))
    mask = np.zeros((n, n), dtype=bool)
    mask[:r, : n - r] = mask[: n - r, :r] = True
    zero_res = float(np.max(np.abs(G[:, mask]), initial=0.0))
    bad = [(i, j) for i in range(n) for j in range(i, n) if mask[i, j] and np.max(np.abs(G[:, i, j])) > tol]
    report.checks.append(FormCheck(
        "zero_blocks", zero_res <= tol, zero_res,
        "" if not bad else "nonzero entries " + ", ".join(f"g[{i + 1},{j + 1}]" for i, j in bad),
    ))

    idmask = np.zeros((n, n), dtype=bool)
    for i in range(r):
        for j in range(r):
            idmask[i, n - r + j] = True
        expected[i, n - r + i] = 1.0
    id_res = float(np.max(np.abs(G[:, idmask] - expected[idmask]), initial=0.0))
    report.checks.append(FormCheck("identity_blocks", id_res <= tol, id_res))

    sym_res = float(np.max(np.abs(G - np.swapaxes(G, 1, 2)), initial=0.0))
    report.checks.append(FormCheck("symmetry", sym_res <= tol, sym_res))

    if m:
        A = G[:, r : n - r, r : n - r]
        det = np.abs(np.linalg.det(A))
        floor = 1e-10 * np.max(np.abs(A), axis=(1, 2)) ** m
        ok = bool(np.all(det > floor))
        detail = "" if ok else f"det A = {det[np.argmin(det / np.maximum(floor, 1e-300))]:.3e} at a sampled point"
        report.checks.append(FormCheck("A_nonsingular", ok, float(np.min(det)), detail))
    else:
        report.checks.append(FormCheck("A_nonsingular", True, 0.0, "A is empty (n = 2r)"))

    if r and m:
        # A and H rows/cols r+1..n-r against columns r+1..n
        sub = dG[:, r : n - r, r:, :r]
        res = float(np.max(np.abs(sub), initial=0.0))
        offenders = []
        for i in range(r, n - r):
            for j in range(r, n):
                if np.max(np.abs(dG[:, i, j, :r])) > tol:
                    k = int(np.argmax(np.max(np.abs(dG[:, i, j, :r]), axis=0)))
                    offenders.append(f"{_entry_label(n, r, i, j)} = {g.entry(i, j)} depends on x{k + 1}")
        report.checks.append(FormCheck("condition_ii", res <= tol, res, "; ".join(offenders)))
    else:
        report.checks.append(FormCheck("condition_ii", True, 0.0, "vacuous"))
    return report


# ---------------------------------------------------------------------------
# Linear algebra helpers
# ---------------------------------------------------------------------------


def complete_basis(V: np.ndarray, candidates: np.ndarray, target: int, tol: float = 1e-10) -> np.ndarray:
    """Extend the columns of ``V`` by columns of ``candidates`` to ``target`` columns.

    Pivoted elimination: at each step the candidate with the largest residual
    after eliminating the current span is taken, ties going to the lowest index.  Raises ``ValueError`` if the candidates do not
    reach ``target`` dimensions.
    """
    V = np.asarray(V, dtype=float).reshape(candidates.shape[0], -1)
    basis = [V[:, a] for a in range(V.shape[1])]
    # reduced copies of the accepted vectors, for elimination
    reduced: list[tuple[np.ndarray, int]] = []

    def eliminate(v):
        v = v.astype(float).copy()
        for w, piv in reduced:
            v = v - (v[piv] / w[piv]) * w
        return v

    for v in basis:
        w = eliminate(v)
        piv = int(np.argmax(np.abs(w)))
        if abs(w[piv]) <= tol * max(1.0, np.max(np.abs(v))):
            raise ValueError("starting vectors are linearly dependent")
        reduced.append((w, piv))

    remaining = list(range(candidates.shape[1]))
    while len(basis) < target:
        best, best_val, best_w = None, tol, None
        for c in remaining:
            w = eliminate(candidates[:, c])
            val = np.max(np.abs(w)) / max(1.0, np.max(np.abs(candidates[:, c])))
            if val > best_val * (1 + 1e-12):
                best, best_val, best_w = c, val, w
        if best is None:
            raise ValueError(f"candidates span only {len(basis)} of {target} dimensions")
        remaining.remove(best)
        basis.append(candidates[:, best].astype(float))
        reduced.append((best_w, int(np.argmax(np.abs(best_w)))))
    return np.column_stack(basis) if basis else np.zeros((candidates.shape[0], 0))


def _contained(U: np.ndarray, W: np.ndarray, tol: float = 1e-10) -> bool:
    """Is span(U) ⊂ span(W)?"""
    if U.shape[1] == 0:
        return True
    if W.shape[1] == 0:
        return bool(np.max(np.abs(U)) <= tol)
    coef, *_ = np.linalg.lstsq(W, U, rcond=None)
    return bool(np.max(np.abs(W @ coef - U)) <= tol * max(1.0, np.max(np.abs(U))))


def adapted_basis(P, Pprime, n: int) -> np.ndarray:
    """Basis ``e_1..e_n`` (columns) with ``e_1..e_r`` spanning ``P`` and ``e_1..e_{n-r}`` spanning ``P'``."""
    P = np.asarray(P, dtype=float).reshape(n, -1)
    Pprime = np.asarray(Pprime, dtype=float).reshape(n, -1)
    if not _contained(P, Pprime):
        raise InclusionError("P is not contained in P'")
    try:
        E = complete_basis(P, Pprime, Pprime.shape[1])
    except ValueError as exc:
        raise InclusionError(f"cannot adapt basis: {exc}") from None
    return complete_basis(E, np.eye(n), n)


# ---------------------------------------------------------------------------
# Partial pairings (free block of size k·l·m)
# ---------------------------------------------------------------------------


@dataclass
class PartialPairingAtPoint:
    """A bilinear map ``C × D → E`` prescribed on ``C⊗D'`` and ``C'⊗D``.

    ``Cp`` (``c × (c-k)``) and ``Dp`` (``d × (d-l)``) hold bases of ``C'`` and
    ``D'`` in the standard bases of ``C = R^c`` and ``D = R^d``.
    ``gamma_C_Dp[i, b, :] = γ(e_i, Dp[:, b])`` and
    ``gamma_Cp_D[a, j, :] = γ(Cp[:, a], e_j)``.
    """

    Cp: np.ndarray
    Dp: np.ndarray
    gamma_C_Dp: np.ndarray
    gamma_Cp_D: np.ndarray

    def __post_init__(self):
        self.Cp = np.asarray(self.Cp, dtype=float)
        self.Dp = np.asarray(self.Dp, dtype=float)
        self.gamma_C_Dp = np.asarray(self.gamma_C_Dp, dtype=float)
        self.gamma_Cp_D = np.asarray(self.gamma_Cp_D, dtype=float)
        c, d = self.Cp.shape[0], self.Dp.shape[0]
        m = self.gamma_C_Dp.shape[-1]
        if self.gamma_C_Dp.shape != (c, self.Dp.shape[1], m):
            raise ValueError("gamma_C_Dp must have shape (dim C, dim D', dim E)")
        if self.gamma_Cp_D.shape != (self.Cp.shape[1], d, m):
            raise ValueError("gamma_Cp_D must have shape (dim C', dim D, dim E)")

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.Cp.shape[0], self.Dp.shape[0], self.gamma_C_Dp.shape[-1]

    @property
    def k(self) -> int:
        return self.Cp.shape[0] - self.Cp.shape[1]

    @property
    def l(self) -> int:
        return self.Dp.shape[0] - self.Dp.shape[1]

    @property
    def m(self) -> int:
        return self.gamma_C_Dp.shape[-1]

    def check(self, rtol: float = 1e-12):
        left = np.einsum("ia,ibm->abm", self.Cp, self.gamma_C_Dp)
        right = np.einsum("ajm,jb->abm", self.gamma_Cp_D, self.Dp)
        scale = max(1.0, float(np.max(np.abs(left), initial=0.0)), float(np.max(np.abs(right), initial=0.0)))
        gap = float(np.max(np.abs(left - right), initial=0.0))
        if gap > rtol * scale:
            raise InconsistentPairingError(f"the two pieces of gamma differ by {gap:.3e} on C'⊗D'")


def extend_partial_pairing(p: PartialPairingAtPoint, free) -> np.ndarray:
    """Total pairing ``β[i, j, :] = β(e_i, e_j)`` extending ``p``.

    ``free`` (shape ``k × l × m``) fills ``β`` on the complements chosen by
    :func:`complete_basis`; the map ``free ↦ β`` is affine and bijective onto
    the set of extensions.
    """
    p.check()
    c, d, m = p.dims
    k, l = p.k, p.l
    free = np.asarray(free, dtype=float).reshape(k, l, m)
    Cb = complete_basis(p.Cp, np.eye(c), c)
    Db = complete_basis(p.Dp, np.eye(d), d)
    ca, db = c - k, d - l
    tilde = np.zeros((c, d, m))
    # columns in D': γ(x, Dp_b) is known for every x
    tilde[:, :db] = np.einsum("ia,ibm->abm", Cb, p.gamma_C_Dp)
    # rows in C', columns outside D'
    tilde[:ca, db:] = np.einsum("ajm,jb->abm", p.gamma_Cp_D, Db[:, db:])
    tilde[ca:, db:] = free
    Ci, Di = np.linalg.inv(Cb), np.linalg.inv(Db)
    return np.einsum("ai,bj,abm->ijm", Ci, Di, tilde)


def pairing_parameter_rank(p: PartialPairingAtPoint) -> int:
    """Rank of the linear part of ``free ↦ extend_partial_pairing(p, free)``."""
    k, l, m = p.k, p.l, p.m
    size = k * l * m
    if size == 0:
        return 0
    base = extend_partial_pairing(p, np.zeros(size))
    cols = []
    for t in range(size):
        e = np.zeros(size)
        e[t] = 1.0
        cols.append((extend_partial_pairing(p, e) - base).ravel())
    return int(np.linalg.matrix_rank(np.column_stack(cols)))


# ---------------------------------------------------------------------------
# Partial fibre metrics (free block of size r(r+1)/2)
# ---------------------------------------------------------------------------


@dataclass
class PartialFibreMetricAtPoint:
    """``α: P' × R^n → R`` prescribed on an ``(n-r)``-plane ``P'`` containing the ``r``-plane ``P``.

    ``alpha[a, j] = α(Pprime[:, a], e_j)``.
    """

    n: int
    r: int
    P: np.ndarray
    Pprime: np.ndarray
    alpha: np.ndarray

    def __post_init__(self):
        self.P = np.asarray(self.P, dtype=float).reshape(self.n, -1)
        self.Pprime = np.asarray(self.Pprime, dtype=float).reshape(self.n, -1)
        self.alpha = np.asarray(self.alpha, dtype=float).reshape(-1, self.n)

    def check(self, tol: float = 1e-10):
        n, r = self.n, self.r
        if not 0 <= 2 * r <= n:
            raise WalkerInvariantError("i", f"need 0 <= r <= n/2, got n={n}, r={r}")
        if self.P.shape[1] != r or self.Pprime.shape[1] != n - r or self.alpha.shape[0] != n - r:
            raise WalkerInvariantError("i", "P, P' and alpha must have r, n-r and n-r rows/columns")
        if np.linalg.matrix_rank(self.P, tol=tol) != r or np.linalg.matrix_rank(self.Pprime, tol=tol) != n - r:
            raise WalkerInvariantError("i", "P or P' basis is not linearly independent")
        if not _contained(self.P, self.Pprime, tol):
            raise WalkerInvariantError("i", "P is not contained in P'")
        scale = max(1.0, float(np.max(np.abs(self.alpha), initial=0.0)))
        if np.linalg.matrix_rank(self.alpha, tol=tol * scale) != n - r:
            raise WalkerInvariantError("ii", "alpha does not have rank n-r")
        S = self.alpha @ self.Pprime
        if np.max(np.abs(S - S.T), initial=0.0) > tol * scale:
            raise WalkerInvariantError("ii", "alpha is not symmetric on P' x P'")
        if np.max(np.abs(self.alpha @ self.P), initial=0.0) > tol * scale:
            raise WalkerInvariantError("ii", "alpha does not vanish on P' x P")


def extend_partial_metric(p: PartialFibreMetricAtPoint, Bfree) -> np.ndarray:
    """Symmetric ``n×n`` form extending ``α``, with ``Bfree`` in the free ``r×r`` block.

    In the adapted basis the matrix has Walker's layout; ``Bfree`` is the
    bottom-right block.  The result is nondegenerate, ``P`` is null and ``P'``
    is its orthogonal complement.
    """
    p.check()
    n, r = p.n, p.r
    Bfree = np.asarray(Bfree, dtype=float).reshape(r, r)
    if np.max(np.abs(Bfree - Bfree.T), initial=0.0) > 0:
        raise WalkerInvariantError("i", "Bfree must be symmetric")
    E = adapted_basis(p.P, p.Pprime, n)
    q = n - r
    # coordinates of e_1..e_{n-r} in the given basis of P'
    coef, *_ = np.linalg.lstsq(p.Pprime, E[:, :q], rcond=None)
    T = coef.T @ p.alpha @ E  # T[a, b] = α(e_a, e_b), a < n-r
    Gt = np.zeros((n, n))
    Gt[:q, :] = T
    Gt[q:, :q] = T[:, q:].T
    Gt[:q, :q] = 0.5 * (T[:, :q] + T[:, :q].T)
    Gt[:r, :q] = 0.0
    Gt[:q, :r] = 0.0
    Gt[q:, q:] = Bfree
    Ei = np.linalg.inv(E)
    g = Ei.T @ Gt @ Ei
    return 0.5 * (g + g.T)


def metric_parameter_rank(p: PartialFibreMetricAtPoint) -> int:
    """Rank of the linear part of ``Bfree ↦ extend_partial_metric(p, Bfree)``."""
    r = p.r
    if r == 0:
        return 0
    base = extend_partial_metric(p, np.zeros((r, r)))
    cols = []
    for i in range(r):
        for j in range(i, r):
            B = np.zeros((r, r))
            B[i, j] = B[j, i] = 1.0
            cols.append((extend_partial_metric(p, B) - base).ravel())
    return int(np.linalg.matrix_rank(np.column_stack(cols)))


# ---------------------------------------------------------------------------
# Walker data as instances of the two extension problems
# ---------------------------------------------------------------------------


def _walker_value(data: WalkerData, x) -> np.ndarray:
    g = assemble(data, validate=False)
    return metric_jets(g, np.asarray(x, dtype=float)[None, :], order=0).g[0]


def step1_partial_pairing(data: WalkerData, x) -> tuple[PartialPairingAtPoint, np.ndarray]:
    """Partial pairing whose extensions are the ``(n-r)×(n-r)`` block ``[[0, I], [A, H]]``.

    ``C`` has coordinates ``1..n-r`` with ``C'`` the first ``r``; ``D`` has
    coordinates ``r+1..n`` with ``D'`` the first ``n-2r``.  Returns the partial
    pairing at ``x`` and the free array ``H(x)`` (shape ``(n-2r, r, 1)``) that
    reproduces Walker's block.
    """
    n, r = data.n, data.r
    G = _walker_value(data, x)
    q, m = n - r, n - 2 * r
    p = PartialPairingAtPoint(
        Cp=np.eye(q)[:, :r],
        Dp=np.eye(q)[:, :m],
        gamma_C_Dp=G[:q, r : n - r][..., None],
        gamma_Cp_D=G[:r, r:][..., None],
    )
    return p, G[r : n - r, n - r :][..., None]


def walker_partial_metric(data: WalkerData, x) -> tuple[PartialFibreMetricAtPoint, np.ndarray]:
    """Partial fibre metric given by rows ``1..n-r`` of Walker's matrix, and ``B(x)``."""
    n, r = data.n, data.r
    G = _walker_value(data, x)
    p = PartialFibreMetricAtPoint(
        n, r, np.eye(n)[:, :r], np.eye(n)[:, : n - r], G[: n - r, :]
    )
    return p, G[n - r :, n - r :]
