import sys
from pathlib import Path

import pytest
from hypothesis import settings
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from walkerkit.expr import Add, Const, Div, Func, Mul, Neg, Pow, Sub, Var  # noqa: E402

# fixed example sequence so test runs are reproducible
settings.register_profile("deterministic", derandomize=True, print_blob=True)
settings.load_profile("deterministic")

# name -> (passed, message); filled by test_acceptance, printed at the end
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k.split()[1])):
        ok, msg = ACCEPTANCE[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {key}: {msg}")


def ast_strategy(n, max_leaves=12, functions=True, division=True):
    """Random expression trees over x1..xn."""
    consts = st.sampled_from([0.0, 0.5, 1.0, 2.0, 3.0, 0.25, 1.5, 10.0]).map(Const)
    leaves = st.one_of(consts, st.integers(1, n).map(Var))

    def extend(children):
        ops = [Add, Sub, Mul] + ([Div] if division else [])
        options = [
            st.tuples(st.sampled_from(ops), children, children).map(lambda t: t[0](t[1], t[2])),
            children.map(Neg),
            st.tuples(children, st.integers(0, 3)).map(lambda t: Pow(t[0], t[1])),
        ]
        if functions:
            options.append(
                st.tuples(st.sampled_from(["sin", "cos", "exp"]), children).map(lambda t: Func(t[0], t[1]))
            )
        return st.one_of(*options)

    return st.recursive(leaves, extend, max_leaves=max_leaves)


@pytest.fixture
def rng():
    import numpy as np

    return np.random.default_rng(12345)
