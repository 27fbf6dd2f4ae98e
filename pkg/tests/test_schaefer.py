import itertools

import pytest
from hypothesis import given, settings

from backdoors.cnf import CnfFormula, enumerate_assignments, make_clause, reduce, satisfies
from backdoors.errors import ClassMismatch
from backdoors.generators import intro_family
from backdoors.schaefer import (
    ALL_CLASSES,
    HeteroClass,
    SchaeferClass,
    all_hetero_classes,
    bad_pair,
    clause_in_class,
    contains_bad_pair,
    dichotomy,
    formula_in_hetero,
    solve_in_class,
)
from strategies import clauses, formulas

HORN, HORN_MINUS, KROM2, ZERO_VAL, ONE_VAL = (
    SchaeferClass.HORN, SchaeferClass.HORN_MINUS, SchaeferClass.KROM2,
    SchaeferClass.ZERO_VAL, SchaeferClass.ONE_VAL,
)
a, b, c = 1, 2, 3


def test_clause_examples():
    assert clause_in_class(make_clause([-a, -b, c]), HORN)
    assert not clause_in_class(make_clause([a, b]), ZERO_VAL)
    assert clause_in_class(frozenset(), ONE_VAL)
    assert clause_in_class(frozenset(), ZERO_VAL)


def test_tags_and_aliases():
    assert [s.tag for s in ALL_CLASSES] == ["horn", "antihorn", "2cnf", "0val", "1val"]
    assert SchaeferClass.from_tag("HORN-") == HORN_MINUS
    assert HeteroClass.parse("2cnf, horn").tags == ["horn", "2cnf"]
    with pytest.raises(ValueError):
        SchaeferClass.from_tag("xor")


def test_membership_examples():
    v = formula_in_hetero(CnfFormula.of([-a, -b]), HeteroClass.of(HORN, KROM2))
    assert v.member and v.witness == HORN
    f = CnfFormula.of([a, b, c], [-a, -b, -c])
    v = formula_in_hetero(f, HeteroClass.of(HORN, HORN_MINUS))
    assert not v.member
    assert v.violations[HORN] == make_clause([a, b, c])
    assert v.violations[HORN_MINUS] == make_clause([-a, -b, -c])


def test_intro_positive_branch_is_2cnf():
    assert formula_in_hetero(reduce(intro_family(5), {1: 1}), HeteroClass.of(KROM2)).member


def test_bad_pair_examples():
    assert contains_bad_pair(HeteroClass.of(HORN, HORN_MINUS))
    assert not contains_bad_pair(HeteroClass.of(KROM2, HORN, ZERO_VAL))
    assert not contains_bad_pair(HeteroClass.of(HORN, ZERO_VAL))
    assert bad_pair(HeteroClass.of(ZERO_VAL, ONE_VAL, HORN_MINUS)) == (ZERO_VAL, HORN_MINUS)


def test_bad_pair_matches_explicit_list():
    left = {KROM2, HORN, ZERO_VAL}
    right = {KROM2, HORN_MINUS, ONE_VAL}
    hs = all_hetero_classes()
    assert len(hs) == 31
    for h in hs:
        free = h.members <= left or h.members <= right
        assert contains_bad_pair(h) == (not free)
        assert (dichotomy(h) == "FPT") == free


def test_dichotomy_text():
    assert dichotomy(HeteroClass.of(HORN, HORN_MINUS)) == "W[2]-hard (bad pair: horn/antihorn)"


def test_solver_examples():
    r = solve_in_class(CnfFormula.of([-a, b], [-b]), HORN)
    assert r.satisfiable and r.model == {a: 0, b: 0}
    assert not solve_in_class(CnfFormula.of([a], [-a]), KROM2).satisfiable
    assert not solve_in_class(CnfFormula([frozenset()]), ZERO_VAL).satisfiable


def test_solver_rejects_foreign_formula():
    with pytest.raises(ClassMismatch) as e:
        solve_in_class(CnfFormula.of([a, b]), HORN)
    assert e.value.clause == make_clause([a, b])


@given(clauses())
def test_valid_partition(cl):
    cl = make_clause(cl)
    positive = cl and all(l > 0 for l in cl)
    negative = cl and all(l < 0 for l in cl)
    assert clause_in_class(cl, ZERO_VAL) != bool(positive)
    assert clause_in_class(cl, ONE_VAL) != bool(negative)
    if len(cl) <= 1 and any(l < 0 for l in cl):
        assert all(clause_in_class(cl, s) for s in (HORN, KROM2, ZERO_VAL))


@given(formulas(max_var=7, max_clauses=10))
@settings(max_examples=150)
def test_solvers_match_truth_table(f):
    # exhaustive satisfiability
    sat = any(satisfies(t, f) for t in enumerate_assignments(f.variables))
    for s in ALL_CLASSES:
        if all(clause_in_class(cl, s) for cl in f.clauses):
            r = solve_in_class(f, s)
            assert r.satisfiable == sat
            if sat:
                assert set(r.model) == set(f.variables)
                assert satisfies(r.model, f)


@given(formulas(max_var=5, max_clauses=6))
def test_membership_matches_definition(f):
    for h in all_hetero_classes():
        brute = any(all(clause_in_class(cl, s) for cl in f.clauses) for s in h.members)
        assert formula_in_hetero(f, h).member == brute
