import pytest

from backdoors.csp import (
    FALSE0,
    TRUE0,
    CspInstance,
    enumerate_csp_assignments,
    is_solution,
    make_instance,
    parse_csp,
    primal_graph,
    reduce_csp,
    solve_exhaustive,
    to_json,
)
from backdoors.errors import BudgetExceeded, CspFormatError
from backdoors.generators import hs_to_csp_boolean, random_csp, random_set_system
from backdoors.polymorphism import PolyProperty

XOR_TEXT = '{"domain":2,"variables":["u","v"],"constraints":[{"scope":["u","v"],"tuples":[[0,1],[1,0]]}]}'


def xor():
    return parse_csp(XOR_TEXT)


def test_parse_xor():
    inst = xor()
    assert inst.variables == ("u", "v") and inst.domain_size == 2
    (c,) = inst.constraints
    assert c.relation.tuples == {(0, 1), (1, 0)}


def test_parse_errors():
    with pytest.raises(CspFormatError):
        parse_csp(XOR_TEXT.replace("[1,0]", "[0,2]"))
    with pytest.raises(CspFormatError):
        parse_csp("[1, 2]")
    with pytest.raises(CspFormatError):
        parse_csp('{"domain": 2, "variables": ["u"]}')
    with pytest.raises(CspFormatError):
        parse_csp('{"domain":2,"variables":["u"],"constraints":[{"scope":["w"],"tuples":[]}]}')
    with pytest.raises(CspFormatError):
        parse_csp('{"domain":2,"variables":["u","u"],"constraints":[]}')


def test_named_domain():
    inst = parse_csp('{"domain":["r","g","b"],"variables":["x"],"constraints":[{"scope":["x"],"tuples":[["g"],[2]]}]}')
    assert inst.domain_size == 3 and inst.value_names == ("r", "g", "b")
    assert inst.constraints[0].relation.tuples == {(1,), (2,)}


def test_no_constraints_everything_solves():
    inst = parse_csp('{"domain":3,"variables":["a","b"],"constraints":[]}')
    assert all(is_solution(inst, t) for t in enumerate_csp_assignments(inst.variables, 3))


def test_json_round_trip():
    for seed in range(20):
        inst = random_csp(seed)
        assert parse_csp(to_json(inst)) == inst


def test_reduce_projection():
    r = reduce_csp(xor(), {"u": 0})
    assert r.variables == ("v",)
    (c,) = r.constraints
    assert c.scope == ("v",) and c.relation.tuples == {(1,)}


def test_reduce_full_scope():
    assert reduce_csp(xor(), {"u": 0, "v": 1}).constraints[0].relation == TRUE0
    assert reduce_csp(xor(), {"u": 1, "v": 1}).constraints[0].relation == FALSE0
    with pytest.raises(ValueError):
        reduce_csp(xor(), {"u": 2})


def test_solve_xor_lexicographic():
    assert solve_exhaustive(xor()) == {"u": 0, "v": 1}


def test_solve_empty_nullary():
    inst = reduce_csp(xor(), {"u": 1, "v": 1})
    assert solve_exhaustive(inst) is None


def test_solve_cap():
    inst = make_instance(3, [f"x{i}" for i in range(20)], [])
    with pytest.raises(BudgetExceeded):
        solve_exhaustive(inst, cap=1000)


def test_solver_matches_enumeration():
    for seed in range(60):
        inst = random_csp(seed)
        sols = [t for t in enumerate_csp_assignments(inst.variables, inst.domain_size) if is_solution(inst, t)]
        got = solve_exhaustive(inst)
        if sols:
            assert got == sols[0]
        else:
            assert got is None


def test_hitting_set_construction_satisfiable():
    for seed in range(10):
        H = random_set_system(seed, max_universe=5, max_sets=3)
        inst = hs_to_csp_boolean(H, [PolyProperty.MAJORITY])
        assert solve_exhaustive(inst) is not None


def test_primal_graph():
    inst = make_instance(2, "uvwabc", [("uv", [(0, 0)])])
    assert primal_graph(inst.constraints) == (frozenset("uv"), frozenset({frozenset("uv")}))
    inst = make_instance(2, "uvwxab", [("uv", []), ("wx", [])])
    assert len(primal_graph(inst.constraints)[1]) == 2
    inst = make_instance(2, "abc", [("abc", [])])
    assert len(primal_graph(inst.constraints)[1]) == 3


def test_instance_validation():
    with pytest.raises(ValueError):
        make_instance(2, ["u"], [(["u", "u"], [(0, 0)])])
    with pytest.raises(ValueError):
        make_instance(2, ["u"], [(["u"], [(3,)])])
    with pytest.raises(ValueError):
        CspInstance(("u",), 0, ())
