import itertools

import pytest

from backdoors.cnf import CnfFormula, make_clause, reduce
from backdoors.csp import reduce_csp, solve_exhaustive
from backdoors.errors import NoBarrier, NoObstruction
from backdoors.generators import (
    SetSystem,
    barrier_family,
    boolean_barrier,
    format_set_system,
    hs_to_csp_arity2,
    hs_to_csp_boolean,
    hs_to_strong_sat,
    hs_to_weak_sat,
    intro_family,
    closure_gadget,
    min_hitting_set,
    obstruction,
    parse_set_system,
    partition_gap_instance,
    random_cnf,
    random_csp,
    random_set_system,
    weak_obstruction_pad,
)
from backdoors.polymorphism import (
    OperationTable,
    PolyProperty,
    boolean_and,
    majority_bool,
    minority_bool,
    poly_exists,
)
from backdoors.sat_backdoor import oracle_backdoor
from backdoors.schaefer import ALL_CLASSES, HeteroClass, SchaeferClass, clause_in_class

HORN, HORN_MINUS, KROM2, ZERO_VAL, ONE_VAL = (
    SchaeferClass.HORN, SchaeferClass.HORN_MINUS, SchaeferClass.KROM2,
    SchaeferClass.ZERO_VAL, SchaeferClass.ONE_VAL,
)
GADGET_PROPS = (PolyProperty.MINMAX, PolyProperty.MAJORITY, PolyProperty.MINORITY, PolyProperty.MALCEV)


def test_intro_family_shape():
    f = intro_family(1)
    assert len(f.clauses) == 2 and len(f.variables) == 4
    f = intro_family(4)
    assert make_clause([1, -2, -3, -4, -5]) in f.clauses
    assert make_clause([-1, 6, 10]) in f.clauses
    with pytest.raises(ValueError):
        intro_family(0)


def test_obstructions():
    assert obstruction(HORN, KROM2) == make_clause([-1, -2, -3])
    assert obstruction(ZERO_VAL, HORN) == make_clause([1, 2, -3])
    assert obstruction(HORN, KROM2, start=10) == make_clause([-10, -11, -12])
    for s, t in itertools.permutations(ALL_CLASSES, 2):
        c = obstruction(s, t)
        assert clause_in_class(c, s) and not clause_in_class(c, t), (s, t)
    with pytest.raises(NoObstruction):
        obstruction(HORN, HORN)


def test_set_system_text_round_trip():
    H = parse_set_system("# demo\n2\na b\nb c  # tail\nc d\n")
    assert H.k == 2 and H.universe == ("a", "b", "c", "d")
    assert parse_set_system(format_set_system(H)) == H
    assert min_hitting_set(H) == frozenset("ac")
    assert min_hitting_set(H, limit=1) is None
    with pytest.raises(ValueError):
        SetSystem(("a",), (frozenset("b"),))


def test_hs_strong_sat_unpadded_example():
    H = SetSystem(("u1",), (frozenset({"u1"}),), k=1)
    assert hs_to_strong_sat(H, pad=False) == CnfFormula.of([1], [-1])


def test_hs_strong_sat_clause_counts():
    for seed in range(20):
        H = random_set_system(seed)
        f = hs_to_strong_sat(H)
        n = max(len(H.universe), H.k + 2)
        assert len(f.clauses) <= len(H.sets) + 1
        assert all(len(c) == n for c in f.clauses)


def test_hs_strong_sat_equivalence_small():
    hh = HeteroClass.of(HORN, HORN_MINUS)
    for seed in range(12):
        H = random_set_system(seed, max_universe=5, max_sets=3, k=1)
        hs = len(min_hitting_set(H))
        out = oracle_backdoor(hs_to_strong_sat(H), 1, hh)
        assert out.found == (hs <= 1), seed


def test_weak_pad_unchanged_for_single_class():
    f = random_cnf(3)
    assert weak_obstruction_pad(f, 2, HORN, HeteroClass.of(HORN)) == f


def test_weak_pad_adds_copies():
    f = CnfFormula.of([1, 2])
    g = weak_obstruction_pad(f, 1, HORN, HeteroClass.of(HORN, KROM2, ZERO_VAL))
    assert len(g.clauses) == 1 + 2 * 2
    with pytest.raises(ValueError):
        weak_obstruction_pad(f, 1, ONE_VAL, HeteroClass.of(HORN))


def test_hs_weak_sat_equivalence_small():
    for seed in range(10):
        H = random_set_system(seed, max_universe=4, max_sets=3, k=1)
        hs = len(min_hitting_set(H))
        for s in (HORN, ONE_VAL):
            f = hs_to_weak_sat(H, s)
            out = oracle_backdoor(f, 1, HeteroClass.of(s), mode="weak", cap=30)
            assert out.found == (hs <= 1), (seed, s)


def test_barriers():
    bar = boolean_barrier(boolean_and())
    assert bar.tuples == ((0, 1), (1, 0)) and bar.blocks(boolean_and())
    bar = boolean_barrier(majority_bool())
    assert len(bar.tuples) == 3 and bar.arity == 3 and bar.blocks(majority_bool())
    bar = boolean_barrier(minority_bool())
    assert bar.tuples == ((0, 0), (0, 1), (1, 0)) and bar.image(minority_bool()) == (1, 1)
    with pytest.raises(NoBarrier):
        boolean_barrier(OperationTable(2, 3, (2,) * 9))


def test_barrier_family_dedup():
    fam = barrier_family([PolyProperty.MINMAX])
    assert len(fam) == 1
    assert len(barrier_family("maj,minority")) == 2


def test_hs_csp_boolean_layout():
    H = SetSystem(("a", "b"), (frozenset("ab"),), k=1)
    inst = hs_to_csp_boolean(H, [PolyProperty.MINORITY])
    assert inst.variables == ("x_a", "x_b", "o1_1_1", "o2_1_1")
    (c,) = inst.constraints
    assert c.relation.tuples == {(0, 0, 0, 0), (0, 1, 1, 1), (1, 0, 0, 0)}
    with pytest.raises(ValueError):
        hs_to_csp_boolean(H, [PolyProperty.CONSTANT])


def test_literal_majority_gadget_table():
    g = closure_gadget("majority", 3, literal=True)
    rels = [c.relation.tuples for c in g.constraints]
    assert rels[2] == {(0, 0), (2, 3), (1, 4), (2, 5)}
    assert g.domain_size == 6


@pytest.mark.parametrize("c", GADGET_PROPS, ids=lambda p: p.tag)
def test_gadget_properties(c):
    for k in (3, 4):
        g = closure_gadget(c, k)
        assert len(g.variables) == 2 * k
        assert all((0, 0) in con.relation for con in g.constraints)
        assert poly_exists(g, c) is None
        for v in g.variables:
            for a in range(g.domain_size):
                assert poly_exists(reduce_csp(g, {v: a}), c) is not None, (k, v, a)
    with pytest.raises(ValueError):
        closure_gadget(c, 2)


def test_arity2_all_zero_solution():
    H = SetSystem(tuple("abcd"), (frozenset("abc"), frozenset("bcd")), k=1)
    for c in GADGET_PROPS:
        inst = hs_to_csp_arity2(H, c)
        assert inst.arity == 2
        zero = {v: 0 for v in inst.variables}
        assert all(tuple(zero[v] for v in con.scope) in con.relation for con in inst.constraints)
    with pytest.raises(ValueError):
        hs_to_csp_arity2(SetSystem(("a", "b"), (frozenset("ab"),)), "minmax")


def test_partition_gap_shape():
    inst = partition_gap_instance(6)
    assert len(inst.variables) == 6 and len(inst.constraints) == 4
    for c in PolyProperty:
        inst = partition_gap_instance(5, c)
        for a in (0, 1):
            assert poly_exists(reduce_csp(inst, {"x": a}), c) is not None


def test_random_determinism():
    assert random_cnf(11) == random_cnf(11)
    assert random_csp(11) == random_csp(11)
    assert random_set_system(11) == random_set_system(11)
    assert any(random_cnf(i) != random_cnf(11) for i in range(3))


def test_random_limits():
    for seed in range(50):
        f = random_cnf(seed, max_len=3)
        assert all(len(c) <= 3 for c in f.clauses) and len(f.variables) <= 12
        inst = random_csp(seed)
        assert 2 <= inst.domain_size <= 3 and inst.arity <= 3
        H = random_set_system(seed)
        assert len(H.universe) <= 8 and len(H.sets) <= 5 and 0 <= H.k <= 3
