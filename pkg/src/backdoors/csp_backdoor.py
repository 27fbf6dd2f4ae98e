"""Strong and weak backdoor detection for CSP instances into polymorphism classes.

A class is given by a tuple of properties; an instance belongs to it when
all its relations are closed under one common operation having one of the
properties. P below is the concatenation of the property families, and
closure of a relation under every member of P is a boolean mask over P.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, product

import numpy as np

from .csp import Constraint, CspInstance, primal_graph, reduce_csp, solve_exhaustive
from .errors import BudgetExceeded, ClosureError
from .polymorphism import (
    PolyProperty,
    combined_mask,
    combined_member,
    enumerate_property_ops,
    family_sizes,
    instance_mask,
    parse_props,
    poly_exists,
    solve_closed,
)
from .search import DetectionOutcome, SearchStats, Timer, assignment_key

ORACLE_REDUCTIONS = 5_000_000


def _props(props) -> tuple:
    if isinstance(props, PolyProperty):
        return (props,)
    return parse_props(props)


def _ordered(inst: CspInstance, B) -> list:
    pos = inst.index()
    return sorted(B, key=pos.__getitem__)


def value_classes(inst: CspInstance, v) -> list:
    """Least representative of each group of interchangeable values of v.

    Two values are interchangeable when every constraint on v has the same
    slice at both of them; they then yield identical reductions.
    """
    return _value_classes(inst, v)


@lru_cache(maxsize=1 << 14)
def _value_classes(inst, v):
    slots = [(c, c.scope.index(v)) for c in inst.constraints if v in c.scope]
    seen = {}
    for a in range(inst.domain_size):
        sig = tuple(
            frozenset(t[:i] + t[i + 1:] for t in c.relation.tuples if t[i] == a) for c, i in slots
        )
        seen.setdefault(sig, a)
    return sorted(seen.values())


def csp_assignments(inst: CspInstance, B, compress: bool = False):
    """Assignments over B: variables in declared order, values ascending.

    With ``compress`` only class representatives are produced; the first
    assignment with any reduction-determined property is the same either way.
    """
    vs = _ordered(inst, B)
    ranges = [value_classes(inst, v) if compress else range(inst.domain_size) for v in vs]
    for vals in product(*ranges):
        yield dict(zip(vs, vals))


def _check_families(d: int, props: tuple):
    for p in props:
        enumerate_property_ops(d, p)


def _witness_name(d, props, i) -> str:
    p, _ = combined_member(d, props, int(i))
    offset = int(i)
    for q in props:
        if q == p:
            break
        offset -= len(enumerate_property_ops(d, q))
    return f"{p.tag}#{offset}"


def detect_strong_csp(inst: CspInstance, k: int, props) -> DetectionOutcome:
    """Strong backdoor of size <= k by depth-bounded search.

    At node B the first assignment whose reduction is closed under no
    member of P is located. For each member phi, the variables of the first
    constraint of that reduction not closed under phi become children.
    """
    props = _props(props)
    d = inst.domain_size
    _check_families(d, props)
    stats = SearchStats()
    visited = set()
    pos = inst.index()

    def visit(B, depth):
        if B in visited:
            return None
        visited.add(B)
        stats.visit(depth)
        bad = None
        for tau in csp_assignments(inst, B, compress=True):
            red = reduce_csp(inst, tau)
            if not instance_mask(red, props).any():
                bad = red
                break
        if bad is None:
            stats.leaves += 1
            return B
        if len(B) >= k:
            stats.leaves += 1
            return None
        remaining = np.ones(sum(family_sizes(d, props)), dtype=bool)
        vs = set()
        for c in bad.constraints:
            if not c.relation.arity or not c.relation.tuples:
                continue
            mc = combined_mask(d, props, c.relation)
            if (remaining & ~mc).any():
                vs.update(c.scope)
                remaining &= mc
                if not remaining.any():
                    break
        for v in sorted(vs, key=pos.__getitem__):
            found = visit(B | {v}, depth + 1)
            if found is not None:
                return found
        return None

    with Timer(stats):
        found = visit(frozenset(), 1)
    out = DetectionOutcome(found, stats, "strong", [p.tag for p in props], k,
                           extra={"domain": d, "arity": inst.arity})
    if found is not None:
        for tau in csp_assignments(inst, found):
            m = instance_mask(reduce_csp(inst, tau), props)
            out.witnesses[assignment_key(tau)] = _witness_name(d, props, np.argmax(m))
    return out


def csp_leaf_bound(inst: CspInstance, k: int, props) -> int:
    """(|P| * max arity)^(k+1), |P| counting every operation in the families."""
    props = _props(props)
    return (sum(family_sizes(inst.domain_size, props)) * max(inst.arity, 1)) ** (k + 1)


def _solvable(inst: CspInstance) -> bool:
    return solve_exhaustive(inst) is not None


def detect_weak_csp(inst: CspInstance, k: int, props) -> DetectionOutcome:
    """Weak backdoor of size <= k.

    Conceptually one search tree per operation phi in P: B succeeds when
    some reduction over B is closed under phi and solvable; otherwise the
    variables of the first constraint not closed under phi, over every
    reduction not closed under phi, become children. All trees are walked
    together level by level, carrying for each candidate set the mask of
    operations whose tree contains it. The reported backdoor is the first
    success of the depth-first walk of the least successful phi's tree.
    """
    props = _props(props)
    d = inst.domain_size
    _check_families(d, props)
    total = sum(family_sizes(d, props))
    stats = SearchStats()
    pos = inst.index()
    key = lambda B: (len(B), sorted(pos[v] for v in B))  # noqa: E731

    def node_info(B):
        rows = []
        yes = np.zeros(total, dtype=bool)
        for tau in csp_assignments(inst, B, compress=True):
            red = reduce_csp(inst, tau)
            m = instance_mask(red, props)
            if m.any() and _solvable(red):
                yes |= m
            rows.append((red, m))
        return yes, rows

    def children(rows, live):
        out = {}
        for red, m in rows:
            remaining = live & ~m
            if not remaining.any():
                continue
            for c in red.constraints:
                if not c.relation.arity or not c.relation.tuples:
                    continue
                mc = combined_mask(d, props, c.relation)
                hit = remaining & ~mc
                if hit.any():
                    for v in c.scope:
                        out[v] = out[v] | hit if v in out else hit.copy()
                    remaining = remaining & mc
                    if not remaining.any():
                        break
        return out

    success = np.zeros(total, dtype=bool)
    with Timer(stats):
        level = {frozenset(): np.ones(total, dtype=bool)}
        depth = 0
        while level:
            depth += 1
            nxt: dict = {}
            for B in sorted(level, key=key):
                reach = level[B]
                stats.visit(depth)
                yes, rows = node_info(B)
                success |= reach & yes
                live = reach & ~yes
                if len(B) >= k or not live.any():
                    stats.leaves += 1
                    continue
                kids = children(rows, live)
                if not kids:
                    stats.leaves += 1
                for v, m in kids.items():
                    C = B | {v}
                    nxt[C] = nxt[C] | m if C in nxt else m
            level = nxt
        found = None
        witnesses = {}
        if success.any():
            phi = int(np.argmax(success))
            found, tau = _weak_single(inst, k, props, phi)
            witnesses[assignment_key(tau)] = _witness_name(d, props, phi)
    return DetectionOutcome(found, stats, "weak", [p.tag for p in props], k, witnesses,
                            {"domain": d, "arity": inst.arity})


def _weak_single(inst, k, props, phi):
    """Depth-first walk of one operation's weak search tree."""
    d = inst.domain_size
    pos = inst.index()
    visited = set()

    def closed(c):
        return not c.relation.arity or not c.relation.tuples or combined_mask(d, props, c.relation)[phi]

    def visit(B):
        if B in visited:
            return None
        visited.add(B)
        vs = set()
        for tau in csp_assignments(inst, B, compress=True):
            red = reduce_csp(inst, tau)
            first = next((c for c in red.constraints if not closed(c)), None)
            if first is None:
                if _solvable(red):
                    return B, tau
                continue
            vs.update(first.scope)
        if len(B) >= k:
            return None
        for v in sorted(vs, key=pos.__getitem__):
            r = visit(B | {v})
            if r is not None:
                return r
        return None

    result = visit(frozenset())
    if result is None:
        raise RuntimeError("level walk reported a success the single walk cannot reproduce")
    return result


# brute force


def _relations_key(inst: CspInstance) -> frozenset:
    return frozenset(c.relation for c in inst.constraints if c.relation.arity and c.relation.tuples)


@lru_cache(maxsize=1 << 16)
def _in_class_by_search(rels: frozenset, d: int, props: tuple, node_budget: int):
    cs = []
    ordered = sorted(rels, key=lambda r: (r.arity, r.sorted_tuples()))
    for i, r in enumerate(ordered):
        cs.append(Constraint(tuple((i, j) for j in range(r.arity)), r))
    stub = CspInstance(tuple(v for c in cs for v in c.scope), d, tuple(cs))
    for p in props:
        op = poly_exists(stub, p, node_budget)
        if op is not None:
            return p, op
    return None


def in_class(inst: CspInstance, props, node_budget: int = 2_000_000):
    """(property, table) closing the instance, found by poly_exists, or None."""
    props = _props(props)
    return _in_class_by_search(_relations_key(inst), inst.domain_size, props, node_budget)


def oracle_csp(inst: CspInstance, k: int, props, mode: str = "strong",
               max_reductions: int = ORACLE_REDUCTIONS, node_budget: int = 2_000_000) -> DetectionOutcome:
    """Minimum backdoor by enumerating variable sets by size, then declared order.

    Class membership of each reduction is decided by ``poly_exists``, not by
    the family masks the detectors use.
    """
    props = _props(props)
    if mode not in ("strong", "weak"):
        raise ValueError(f"unknown mode {mode!r}")
    stats = SearchStats()
    budget = [max_reductions]
    found = None
    witnesses = {}

    def reductions(B):
        for tau in csp_assignments(inst, B, compress=True):
            budget[0] -= 1
            if budget[0] < 0:
                raise BudgetExceeded(f"oracle exceeded {max_reductions} reductions")
            yield tau, reduce_csp(inst, tau)

    with Timer(stats):
        for size in range(0, min(k, len(inst.variables)) + 1):
            for B in combinations(inst.variables, size):
                stats.visit(size + 1)
                B = frozenset(B)
                if mode == "strong":
                    wit = {}
                    for tau, red in reductions(B):
                        hit = in_class(red, props, node_budget)
                        if hit is None:
                            wit = None
                            break
                        wit[assignment_key(tau)] = hit[0].tag
                    if wit is not None:
                        found, witnesses = B, wit
                        break
                else:
                    for tau, red in reductions(B):
                        hit = in_class(red, props, node_budget)
                        if hit is not None and _solvable(red):
                            found, witnesses = B, {assignment_key(tau): hit[0].tag}
                            break
                    if found is not None:
                        break
            if found is not None:
                break
    stats.leaves = stats.nodes_expanded
    return DetectionOutcome(found, stats, mode, [p.tag for p in props], k, witnesses,
                            {"domain": inst.domain_size, "arity": inst.arity, "algorithm": "oracle"})


def closing_operation(inst: CspInstance, props):
    """(property, table) under which the instance is closed, or None.

    Uses the enumerated families when they fit, else poly_exists.
    """
    props = _props(props)
    d = inst.domain_size
    try:
        _check_families(d, props)
    except BudgetExceeded:
        return in_class(inst, props)
    m = instance_mask(inst, props)
    if not m.any():
        return None
    return combined_member(d, props, int(np.argmax(m)))


def verify_strong_csp(inst: CspInstance, B, props):
    """None when B is a strong backdoor, else the first falsifying assignment."""
    for tau in csp_assignments(inst, B, compress=True):
        if closing_operation(reduce_csp(inst, tau), props) is None:
            return tau
    return None


def evaluate_strong_csp(inst: CspInstance, B, props):
    """Solution of I through the strong backdoor B, or None if unsatisfiable."""
    props = _props(props)
    bad = verify_strong_csp(inst, B, props)
    if bad is not None:
        raise ClosureError(f"{_ordered(inst, B)} is not a strong backdoor", assignment=bad)
    for tau in csp_assignments(inst, B):
        red = reduce_csp(inst, tau)
        _, op = closing_operation(red, props)
        sol = solve_closed(red, op)
        if sol is not None:
            full = dict(tau)
            full.update(sol)
            return {v: full[v] for v in inst.variables}
    return None


def evaluate_weak_csp(inst: CspInstance, B, props):
    props = _props(props)
    for tau in csp_assignments(inst, B):
        red = reduce_csp(inst, tau)
        hit = closing_operation(red, props)
        if hit is not None:
            sol = solve_closed(red, hit[1])
            if sol is not None:
                full = dict(tau)
                full.update(sol)
                return {v: full[v] for v in inst.variables}
    return None


# partition backdoors


def min_vertex_cover(vertices, edges) -> frozenset:
    """Exact minimum vertex cover by branching on an endpoint of an uncovered edge."""
    edges = [tuple(sorted(e, key=str)) for e in edges]
    edges.sort(key=lambda e: (str(e[0]), str(e[1])))
    best = [frozenset(vertices)]

    def go(chosen, rest):
        if len(chosen) >= len(best[0]):
            return
        rest = [e for e in rest if e[0] not in chosen and e[1] not in chosen]
        if not rest:
            best[0] = frozenset(chosen)
            return
        u, v = rest[0]
        go(chosen | {u}, rest)
        # without u, every neighbour of u must be in the cover
        nbrs = {b if a == u else a for a, b in rest if u in (a, b)}
        go(chosen | nbrs, rest)

    go(frozenset(), edges)
    return best[0]


def _sub_instance(inst: CspInstance, idx) -> CspInstance:
    return CspInstance(inst.variables, inst.domain_size, tuple(inst.constraints[i] for i in idx))


def partition_backdoor(inst: CspInstance, c1, p: PolyProperty, semantics: str = "idempotent") -> frozenset:
    """Backdoor defined by the partition (C1, rest) of the constraints.

    ``c1`` is a collection of constraint indices. The rest must be closed
    under some operation with property p. With idempotent semantics the
    backdoor is every variable in the scopes of C1; assigning them turns C1
    into arity-0 constraints and pins values in the rest, which idempotent
    operations preserve. With conservative semantics, which needs a
    property whose operations are all conservative, it is a minimum vertex
    cover of the primal graph of C1.
    """
    p = PolyProperty(p)
    c1 = sorted(set(c1))
    c2 = [i for i in range(len(inst.constraints)) if i not in c1]
    if poly_exists(_sub_instance(inst, c2), p) is None:
        raise ClosureError("the complementary constraints are not in the base class")
    part = [inst.constraints[i] for i in c1]
    if semantics == "idempotent":
        if not p.idempotent:
            raise ValueError(f"{p.tag} operations are not idempotent")
        return frozenset(v for c in part for v in c.scope)
    if semantics == "conservative":
        if not p.conservative:
            raise ValueError(f"{p.tag} operations are not conservative")
        return min_vertex_cover(*primal_graph(part))
    raise ValueError(f"unknown semantics {semantics!r}")


@dataclass
class PartitionReport:
    idempotent: int | None
    idempotent_c1: tuple | None
    conservative: int | None
    conservative_c1: tuple | None

    def to_json(self) -> dict:
        return {
            "idempotent": self.idempotent,
            "idempotent_c1": list(self.idempotent_c1) if self.idempotent_c1 is not None else None,
            "conservative": self.conservative,
            "conservative_c1": list(self.conservative_c1) if self.conservative_c1 is not None else None,
        }


def min_partition_backdoor(inst: CspInstance, p: PolyProperty, max_constraints: int = 16) -> PartitionReport:
    """Smallest partition backdoor over every valid partition, per semantics.

    A semantics that does not apply to p (idempotent for constant,
    conservative for anything but min/max) is reported as None.
    """
    p = PolyProperty(p)
    m = len(inst.constraints)
    if m > max_constraints:
        raise BudgetExceeded(f"{m} constraints exceed the partition cap {max_constraints}")
    best_i = None
    best_c = None
    for mask in range(1 << m):
        c2 = [i for i in range(m) if mask >> i & 1]
        if poly_exists(_sub_instance(inst, c2), p) is None:
            continue
        c1 = tuple(i for i in range(m) if not mask >> i & 1)
        part = [inst.constraints[i] for i in c1]
        if p.idempotent:
            size = len({v for c in part for v in c.scope})
            if best_i is None or (size, c1) < best_i:
                best_i = (size, c1)
        if p.conservative:
            size = len(min_vertex_cover(*primal_graph(part)))
            if best_c is None or (size, c1) < best_c:
                best_c = (size, c1)
    return PartitionReport(
        best_i[0] if best_i else None,
        best_i[1] if best_i else None,
        best_c[0] if best_c else None,
        best_c[1] if best_c else None,
    )
