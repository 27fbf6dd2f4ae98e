"""Hypothesis strategies shared by the test modules."""

from hypothesis import strategies as st

from backdoors.cnf import CnfFormula


@st.composite
def clauses(draw, max_var=6, max_len=4):
    vs = draw(st.lists(st.integers(1, max_var), min_size=0, max_size=max_len, unique=True))
    return [v if draw(st.booleans()) else -v for v in vs]


@st.composite
def formulas(draw, max_var=6, max_clauses=8, max_len=4):
    cs = draw(st.lists(clauses(max_var, max_len), max_size=max_clauses))
    return CnfFormula.of(*cs)


@st.composite
def assignments(draw, max_var=6):
    vs = draw(st.lists(st.integers(1, max_var), unique=True, max_size=max_var))
    return {v: draw(st.integers(0, 1)) for v in vs}
