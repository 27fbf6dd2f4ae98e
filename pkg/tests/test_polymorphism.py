import itertools

import pytest

from backdoors.csp import RelationTable, make_instance, reduce_csp, solve_exhaustive
from backdoors.errors import BudgetExceeded, ClosureError
from backdoors.generators import closure_gadget, random_csp
from backdoors.polymorphism import (
    OperationTable,
    PolyProperty,
    boolean_and,
    boolean_or,
    check_property,
    constant_op,
    enumerate_property_ops,
    instance_closed,
    majority_bool,
    min_op,
    minority_bool,
    parse_props,
    poly_exists,
    relation_closed,
    relation_violation,
    solve_closed,
)

CONST, MINMAX, MAJ, MIN, MAL = (
    PolyProperty.CONSTANT, PolyProperty.MINMAX, PolyProperty.MAJORITY,
    PolyProperty.MINORITY, PolyProperty.MALCEV,
)
OR = RelationTable.of(2, [(0, 1), (1, 0), (1, 1)])
EMPTY = RelationTable.of(2, [])


def brute_closed(rel, op):
    for rows in itertools.product(sorted(rel.tuples), repeat=op.arity):
        img = tuple(op(*col) for col in zip(*rows))
        if img not in rel.tuples:
            return False
    return True


def test_check_property_examples():
    assert check_property(boolean_and(), MINMAX)
    assert check_property(boolean_or(), MINMAX)
    assert check_property(minority_bool(), MIN)
    assert check_property(majority_bool(), MAJ)
    assert not check_property(majority_bool(), MAL)
    assert check_property(minority_bool(), MAL)
    with pytest.raises(ValueError):
        check_property(boolean_and(), MAJ)


def test_relation_closed_examples():
    assert relation_closed(OR, majority_bool())
    assert not relation_closed(OR, boolean_and())
    assert relation_violation(OR, boolean_and()) is not None
    for op in (boolean_and(), majority_bool(), constant_op(2, 1)):
        assert relation_closed(EMPTY, op)


def test_relation_closed_matches_brute_force():
    ops = [boolean_and(), boolean_or(), majority_bool(), minority_bool(), constant_op(2, 0)]
    for n in range(1, 4):
        rows = list(itertools.product(range(2), repeat=n))
        for mask in range(1 << len(rows)):
            rel = RelationTable.of(n, [r for i, r in enumerate(rows) if mask >> i & 1])
            for op in ops:
                assert relation_closed(rel, op) == brute_closed(rel, op)


def test_instance_closed():
    assert instance_closed(make_instance(2, "ab", []), boolean_and())
    inst = make_instance(2, "abc", [("ab", OR.tuples), ("bc", OR.tuples)])
    assert instance_closed(inst, majority_bool())


def test_boolean_family_sizes():
    sizes = {p: len(enumerate_property_ops(2, p)) for p in PolyProperty}
    assert sizes[CONST] == 2 and sizes[MINMAX] == 2
    assert sizes[MAJ] == 1 and sizes[MIN] == 1
    (maj,) = enumerate_property_ops(2, MAJ)
    assert maj == majority_bool()
    (xor3,) = enumerate_property_ops(2, MIN)
    assert xor3 == minority_bool()


def test_family_members_have_property():
    for d in (2, 3):
        for p in PolyProperty:
            if d == 3 and p == MAL:
                continue  # 3^12 tables
            fam = enumerate_property_ops(d, p)
            tables = list(fam)
            assert all(check_property(t, p) for t in tables)
            assert [t.outputs for t in tables] == sorted({t.outputs for t in tables})
    assert len(enumerate_property_ops(3, MINMAX)) == 6
    assert len(enumerate_property_ops(3, MAJ)) == 3 ** 6


def test_family_cap():
    with pytest.raises(BudgetExceeded):
        enumerate_property_ops(4, MAJ, cap=1000)


def test_min_op():
    op = min_op([2, 0, 1])
    assert op(0, 2) == 2 and op(0, 1) == 0 and check_property(op, MINMAX)


def test_parse_props():
    assert parse_props("maj, minmax") == (MINMAX, MAJ)
    with pytest.raises(ValueError):
        parse_props("")


def test_table_json():
    op = majority_bool()
    assert OperationTable.from_json(op.to_json()) == op
    with pytest.raises(ValueError):
        OperationTable(2, 2, (0, 1, 1))


def test_poly_exists_empty_relation():
    inst = make_instance(3, "ab", [("ab", [])])
    for p in PolyProperty:
        op = poly_exists(inst, p)
        assert op is not None and check_property(op, p)


def test_poly_exists_matches_family_scan():
    # existence by scanning the whole enumerated family
    for seed in range(60):
        inst = random_csp(seed, max_domain=3)
        for p in PolyProperty:
            fam = enumerate_property_ops(inst.domain_size, p)
            if len(fam) > 1000:
                continue
            expect = any(instance_closed(inst, op) for op in fam)
            op = poly_exists(inst, p)
            assert (op is not None) == expect, (seed, p)
            if op is not None:
                assert check_property(op, p) and instance_closed(inst, op)


def test_minmax_gadget():
    g = closure_gadget(MINMAX, 3)
    assert poly_exists(g, MINMAX) is None
    v = g.variables[0]
    assert poly_exists(reduce_csp(g, {v: 0}), MINMAX) is not None


def test_poly_exists_budget():
    g = closure_gadget(MIN, 3)
    with pytest.raises(BudgetExceeded):
        poly_exists(g, MAJ, node_budget=1)


def test_solve_closed_constant():
    inst = make_instance(3, "ab", [("ab", [(0, 0), (1, 2)]), ("b", [(0,), (2,)])])
    assert solve_closed(inst, constant_op(3, 0)) == {"a": 0, "b": 0}
    bad = make_instance(3, "ab", [("ab", [])])
    assert solve_closed(bad, constant_op(3, 0)) is None
    with pytest.raises(ClosureError):
        solve_closed(inst, constant_op(3, 1))


def test_solve_closed_agrees_with_exhaustive():
    for seed in range(60):
        inst = random_csp(seed, max_domain=2)
        op = majority_bool()
        if instance_closed(inst, op):
            got = solve_closed(inst, op)
            assert (got is None) == (solve_exhaustive(inst) is None)
