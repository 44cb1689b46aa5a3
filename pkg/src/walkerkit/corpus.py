"""Seeded random Walker data with polynomial blocks."""

from __future__ import annotations

import numpy as np

from .expr import Add, Const, Mul, Node, Pow, ScalarField, Sub, Var, const
from .walker import WalkerData

__all__ = ["random_polynomial", "random_walker_data", "corpus", "GRID"]

# (n, r) pairs with n in 2..6 and 1 <= r <= n/2
GRID = [(n, r) for n in range(2, 7) for r in range(1, n // 2 + 1)]


def _monomial(rng, variables, degree: int) -> Node | None:
    if degree == 0 or not variables:
        return None
    if degree == 1:
        return Var(int(rng.choice(variables)))
    a, b = sorted(int(v) for v in rng.choice(variables, size=2))
    return Pow(Var(a), 2) if a == b else Mul(Var(a), Var(b))


def random_polynomial(rng, variables, n: int, max_terms: int = 3, coeff: float = 2.0,
                      constant: float | None = None) -> tuple[ScalarField, float]:
    """Random polynomial of degree <= 2 in ``variables`` (1-based indices).

    Coefficients are uniform in ``[-coeff, coeff]`` rounded to two decimals.
    ``constant`` overrides the constant term.  Returns the field and a bound
    on the absolute value of its non-constant part over ``[-1, 1]^n``.
    """
    variables = list(variables)
    terms: list[tuple[float, Node | None]] = []
    for _ in range(int(rng.integers(0, max_terms + 1))):
        deg = int(rng.integers(1, 3)) if variables else 0
        mono = _monomial(rng, variables, deg)
        c = round(float(rng.uniform(-coeff, coeff)), 2)
        if mono is not None and c != 0.0:
            terms.append((c, mono))
    c0 = round(float(rng.uniform(-coeff, coeff)), 2) if constant is None else constant
    bound = float(sum(abs(c) for c, _ in terms))
    node: Node = const(c0)
    for c, mono in terms:
        piece = _scaled(abs(c), mono)
        node = Sub(node, piece) if c < 0 else Add(node, piece)
    return ScalarField(node, n), bound


def _scaled(c: float, mono: Node) -> Node:
    if c == 1.0:
        return mono
    if isinstance(mono, Mul):
        return Mul(Mul(Const(c), mono.left), mono.right)
    return Mul(Const(c), mono)


def random_walker_data(rng, n: int, r: int, max_terms: int = 3, coeff: float = 2.0) -> WalkerData:
    """Admissible Walker data with random degree-<=2 polynomial blocks.

    ``A`` and ``H`` only use ``x_{r+1} .. x_n``; ``B`` may use every
    coordinate.  ``A`` is strictly diagonally dominant on ``[-1, 1]^n``
    (the diagonal constant is raised above the row bound, with a random sign),
    hence nonsingular at every sample point.
    """
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(int(rng))
    if not 0 <= 2 * r <= n:
        raise ValueError(f"need 0 <= r <= n/2, got n={n}, r={r}")
    m = n - 2 * r
    q_vars = list(range(r + 1, n + 1))
    all_vars = list(range(1, n + 1))

    A = [[None] * m for _ in range(m)]
    row_bound = [0.0] * m
    for i in range(m):
        for j in range(i + 1, m):
            f, bound = random_polynomial(rng, q_vars, n, max_terms, coeff)
            c0 = _constant_term(f)
            A[i][j] = A[j][i] = f
            row_bound[i] += bound + abs(c0)
            row_bound[j] += bound + abs(c0)
    for i in range(m):
        f, bound = random_polynomial(rng, q_vars, n, max_terms, coeff, constant=0.0)
        sign = 1.0 if rng.random() < 0.5 else -1.0
        margin = round(float(rng.uniform(0.5, 1.5)), 2)
        c0 = sign * round(row_bound[i] + bound + margin, 2)
        A[i][i] = _with_constant(f, c0)
    H = [[random_polynomial(rng, q_vars, n, max_terms, coeff)[0] for _ in range(r)] for _ in range(m)]
    B = [[None] * r for _ in range(r)]
    for i in range(r):
        for j in range(i, r):
            B[i][j] = B[j][i] = random_polynomial(rng, all_vars, n, max_terms, coeff)[0]
    return WalkerData.from_blocks(n, r, A, H, B)


def _constant_term(f: ScalarField) -> float:
    node = f.ast
    while isinstance(node, (Add, Sub)):
        node = node.left
    if isinstance(node, Const):
        return node.value
    return -node.arg.value  # Neg(Const)


def _with_constant(f: ScalarField, c0: float) -> ScalarField:
    """Replace the leading constant term of a generated polynomial."""

    def rebuild(node):
        if isinstance(node, (Add, Sub)):
            return type(node)(rebuild(node.left), node.right)
        return const(c0)

    return ScalarField(rebuild(f.ast), f.nvars)


def corpus(count: int, seed: int = 0, grid=None):
    """``count`` seeded instances cycling through the ``(n, r)`` grid.

    Instance ``i`` uses ``default_rng([seed, i])`` so each is reproducible on
    its own.
    """
    grid = GRID if grid is None else grid
    out = []
    for i in range(count):
        n, r = grid[i % len(grid)]
        out.append(random_walker_data(np.random.default_rng([seed, i]), n, r))
    return out
