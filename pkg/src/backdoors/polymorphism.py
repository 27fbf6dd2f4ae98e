"""Finite operations, closure of relations under them, and property families.

Five properties are supported: constant (unary), min/max under some total
order (binary), majority, minority and Mal'cev (ternary). The identities of
the last three fix every table entry whose arguments repeat a value, so a
family is described by its forced entries plus a product over the free
ones. Closure of a relation under every member of such a family is
computed at once as a boolean array indexed by the free entries.
"""

from __future__ import annotations

import enum
import heapq
import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations, product

import numpy as np

from .csp import CspInstance, RelationTable, solve_exhaustive
from .errors import BudgetExceeded, ClosureError

FAMILY_CAP = 1_000_000
NODE_BUDGET = 2_000_000


class PolyProperty(enum.IntEnum):
    CONSTANT = 0
    MINMAX = 1
    MAJORITY = 2
    MINORITY = 3
    MALCEV = 4

    @property
    def arity(self) -> int:
        return 1 if self == PolyProperty.CONSTANT else 2 if self == PolyProperty.MINMAX else 3

    @property
    def tag(self) -> str:
        return self.name.lower()

    @property
    def idempotent(self) -> bool:
        return self != PolyProperty.CONSTANT

    @property
    def conservative(self) -> bool:
        # every min/max output is one of its arguments; the ternary
        # families have free entries that may leave {x, y, z}
        return self == PolyProperty.MINMAX

    @classmethod
    def from_tag(cls, tag: str) -> "PolyProperty":
        t = tag.strip().lower()
        if t in _PROP_ALIASES:
            return _PROP_ALIASES[t]
        raise ValueError(f"unknown property tag {tag!r}")


_PROP_ALIASES = {p.tag: p for p in PolyProperty}
_PROP_ALIASES.update({
    "const": PolyProperty.CONSTANT,
    "val": PolyProperty.CONSTANT,
    "maj": PolyProperty.MAJORITY,
    "mal": PolyProperty.MALCEV,
    "minmax": PolyProperty.MINMAX,
})


def parse_props(text) -> tuple:
    """Sorted, duplicate-free tuple of properties from tags or a comma list."""
    items = text.split(",") if isinstance(text, str) else text
    out = set()
    for t in items:
        if isinstance(t, PolyProperty):
            out.add(t)
        elif str(t).strip():
            out.add(PolyProperty.from_tag(str(t)))
    if not out:
        raise ValueError("no properties given")
    return tuple(sorted(out))


@dataclass(frozen=True)
class OperationTable:
    """Total operation D^n -> D, outputs in lexicographic argument order."""

    arity: int
    domain_size: int
    outputs: tuple

    def __post_init__(self):
        object.__setattr__(self, "outputs", tuple(int(x) for x in self.outputs))
        if len(self.outputs) != self.domain_size ** self.arity:
            raise ValueError("table is not total")
        if any(not 0 <= x < self.domain_size for x in self.outputs):
            raise ValueError("table output outside the domain")

    @classmethod
    def from_function(cls, arity: int, d: int, fn) -> "OperationTable":
        return cls(arity, d, tuple(fn(*args) for args in product(range(d), repeat=arity)))

    def index(self, args) -> int:
        i = 0
        for a in args:
            i = i * self.domain_size + a
        return i

    def __call__(self, *args) -> int:
        return self.outputs[self.index(args)]

    def to_json(self) -> dict:
        return {"arity": self.arity, "domain": self.domain_size, "outputs": list(self.outputs)}

    @classmethod
    def from_json(cls, doc) -> "OperationTable":
        return cls(int(doc["arity"]), int(doc["domain"]), tuple(doc["outputs"]))


def constant_op(d: int, c: int) -> OperationTable:
    return OperationTable(1, d, (c,) * d)


def min_op(order) -> OperationTable:
    """Binary min under the total order listing values from least to greatest."""
    rank = {a: i for i, a in enumerate(order)}
    d = len(order)
    return OperationTable.from_function(2, d, lambda a, b: a if rank[a] <= rank[b] else b)


def boolean_and() -> OperationTable:
    return OperationTable(2, 2, (0, 0, 0, 1))


def boolean_or() -> OperationTable:
    return OperationTable(2, 2, (0, 1, 1, 1))


def majority_bool() -> OperationTable:
    return OperationTable.from_function(3, 2, lambda x, y, z: int(x + y + z >= 2))


def minority_bool() -> OperationTable:
    return OperationTable.from_function(3, 2, lambda x, y, z: x ^ y ^ z)


def check_property(op: OperationTable, p: PolyProperty) -> bool:
    p = PolyProperty(p)
    if op.arity != p.arity:
        raise ValueError(f"{p.tag} needs arity {p.arity}, table has arity {op.arity}")
    D = range(op.domain_size)
    if p == PolyProperty.CONSTANT:
        return len(set(op.outputs)) == 1
    if p == PolyProperty.MINMAX:
        # min under a total order <=> idempotent, commutative, conservative, associative
        for a in D:
            for b in D:
                v = op(a, b)
                if v not in (a, b) or v != op(b, a):
                    return False
                for c in D:
                    if op(op(a, b), c) != op(a, op(b, c)):
                        return False
        return True
    forced = _forced_rule(p)
    for a in D:
        for b in D:
            for args in ((a, a, b), (a, b, a), (b, a, a)):
                want = forced(*args)
                if want is not None and op(*args) != want:
                    return False
    return True


def _forced_rule(p: PolyProperty):
    """Map a ternary argument triple to its forced output, or None if free."""
    if p == PolyProperty.MAJORITY:
        def rule(x, y, z):
            if x == y or x == z:
                return x
            if y == z:
                return y
            return None
    elif p == PolyProperty.MINORITY:
        def rule(x, y, z):
            if x == y:
                return z
            if x == z:
                return y
            if y == z:
                return x
            return None
    elif p == PolyProperty.MALCEV:
        def rule(x, y, z):
            if x == y:
                return z
            if y == z:
                return x
            return None
    else:
        raise ValueError(f"{p.tag} is not a ternary identity property")
    return rule


class OperationFamily:
    """All operations on {0..d-1} with one property, in canonical order.

    Canonical order is lexicographic on the output tuple. Ternary families
    are stored as forced entries plus free entries; member i assigns the
    free entries the base-d digits of i, most significant first.
    """

    def __init__(self, prop: PolyProperty, d: int, tables=None, forced=None, free=None):
        self.prop = PolyProperty(prop)
        self.d = d
        self.arity = self.prop.arity
        self._tables = tables
        self.forced = forced
        self.free = free

    @property
    def is_product(self) -> bool:
        return self._tables is None

    def __len__(self):
        if self._tables is not None:
            return len(self._tables)
        return self.d ** len(self.free)

    def __getitem__(self, i: int) -> OperationTable:
        if self._tables is not None:
            return self._tables[i]
        n = len(self)
        if not -n <= i < n:
            raise IndexError(i)
        i %= n
        out = list(self.forced)
        for pos in reversed(self.free):
            i, out[pos] = divmod(i, self.d)
        return OperationTable(self.arity, self.d, tuple(out))

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def __repr__(self):
        return f"OperationFamily({self.prop.tag}, d={self.d}, size={len(self)})"


@lru_cache(maxsize=None)
def enumerate_property_ops(d: int, p: PolyProperty, cap: int = FAMILY_CAP) -> OperationFamily:
    p = PolyProperty(p)
    if p == PolyProperty.CONSTANT:
        return OperationFamily(p, d, tables=[constant_op(d, c) for c in range(d)])
    if p == PolyProperty.MINMAX:
        if math.factorial(d) > cap:
            raise BudgetExceeded(f"{d}! orders exceed the family cap; use poly_exists")
        tables = {min_op(order) for order in permutations(range(d))}
        return OperationFamily(p, d, tables=sorted(tables, key=lambda t: t.outputs))
    rule = _forced_rule(p)
    forced = []
    free = []
    for i, args in enumerate(product(range(d), repeat=3)):
        v = rule(*args)
        forced.append(-1 if v is None else v)
        if v is None:
            free.append(i)
    if d ** len(free) > cap:
        raise BudgetExceeded(f"{d}^{len(free)} {p.tag} operations exceed the family cap; use poly_exists")
    return OperationFamily(p, d, forced=tuple(forced), free=tuple(free))


# closure


def _member_index(rel: RelationTable, d: int):
    pw = d ** np.arange(rel.arity - 1, -1, -1, dtype=np.int64)
    T = np.array(sorted(rel.tuples), dtype=np.int64).reshape(len(rel.tuples), rel.arity)
    member = np.zeros(d ** rel.arity, dtype=bool)
    member[T @ pw] = True
    return T, pw, member


def _cells(T: np.ndarray, n: int, d: int) -> np.ndarray:
    """Table index hit in each coordinate, for every n-sequence of rows of T."""
    m = T.shape[0]
    idx = np.indices((m,) * n).reshape(n, -1)
    cell = np.zeros((idx.shape[1], T.shape[1]), dtype=np.int64)
    for i in range(n):
        cell = cell * d + T[idx[i]]
    return cell


def relation_closed(rel: RelationTable, op: OperationTable) -> bool:
    """Is R closed under op applied coordinatewise to every n-sequence of its tuples?"""
    if rel.arity == 0 or not rel.tuples:
        return True
    d = op.domain_size
    if rel.max_value() >= d:
        raise ValueError("relation uses values outside the operation's domain")
    T, pw, member = _member_index(rel, d)
    out = np.asarray(op.outputs, dtype=np.int64)[_cells(T, op.arity, d)]
    return bool(member[out @ pw].all())


def relation_violation(rel: RelationTable, op: OperationTable):
    """A sequence of tuples whose image leaves R, or None."""
    for seq in product(rel.sorted_tuples(), repeat=op.arity):
        img = tuple(op(*col) for col in zip(*seq))
        if img not in rel.tuples:
            return seq
    return None


def instance_closed(inst: CspInstance, op: OperationTable) -> bool:
    return all(relation_closed(c.relation, op) for c in inst.constraints)


@lru_cache(maxsize=1 << 16)
def family_mask(d: int, p: PolyProperty, rel: RelationTable) -> np.ndarray:
    """Flat boolean array: entry i is True iff R is closed under member i."""
    fam = enumerate_property_ops(d, PolyProperty(p))
    n = len(fam)
    if rel.arity == 0 or not rel.tuples or len(rel.tuples) == d ** rel.arity:
        return np.ones(n, dtype=bool)
    if not fam.is_product:
        return np.array([relation_closed(rel, t) for t in fam], dtype=bool)
    mask = _product_mask(fam, rel)
    mask.setflags(write=False)
    return mask


def _product_mask(fam: OperationFamily, rel: RelationTable) -> np.ndarray:
    d = fam.d
    F = len(fam.free)
    T, pw, member = _member_index(rel, d)
    cell = np.unique(_cells(T, 3, d), axis=0)
    forced = np.asarray(fam.forced, dtype=np.int64)[cell]
    free_pos = np.full(d ** 3, -1, dtype=np.int64)
    free_pos[list(fam.free)] = np.arange(F)
    fpos = free_pos[cell]
    fixed_rows = (fpos < 0).all(axis=1)
    if fixed_rows.any() and not member[forced[fixed_rows] @ pw].all():
        return np.zeros(d ** F, dtype=bool)
    mask = np.ones((d,) * F, dtype=bool)
    forced, fpos = forced[~fixed_rows], fpos[~fixed_rows]
    if not len(fpos):
        return mask.reshape(-1)
    key = np.sort(np.where(fpos < 0, F, fpos), axis=1)
    dup = np.zeros_like(key, dtype=bool)
    dup[:, 1:] = key[:, 1:] == key[:, :-1]
    key = np.sort(np.where(dup, F, key), axis=1)
    groups, inverse = np.unique(key, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    for g, row in enumerate(groups):
        S = [int(s) for s in row if s < F]
        sel = inverse == g
        fp = fpos[sel]
        fv = forced[sel]
        s = len(S)
        combos = np.indices((d,) * s).reshape(s, -1).T
        local = np.searchsorted(np.array(S), np.where(fp < 0, S[0], fp))
        vals = np.where(fp[None] >= 0, combos[:, local], fv[None])
        ok = member[vals @ pw].all(axis=1)
        shape = [1] * F
        for si in S:
            shape[si] = d
        mask &= ok.reshape(shape)
    return mask.reshape(-1)


@lru_cache(maxsize=None)
def family_sizes(d: int, props: tuple) -> tuple:
    return tuple(len(enumerate_property_ops(d, p)) for p in props)


def combined_mask(d: int, props: tuple, rel: RelationTable) -> np.ndarray:
    """Closure mask over the concatenated family of several properties."""
    if len(props) == 1:
        return family_mask(d, props[0], rel)
    return _combined_cached(d, props, rel)


@lru_cache(maxsize=1 << 14)
def _combined_cached(d, props, rel):
    m = np.concatenate([family_mask(d, p, rel) for p in props])
    m.setflags(write=False)
    return m


def combined_member(d: int, props: tuple, i: int):
    """(property, table) for position i of the concatenated family."""
    for p in props:
        fam = enumerate_property_ops(d, p)
        if i < len(fam):
            return p, fam[i]
        i -= len(fam)
    raise IndexError(i)


def instance_mask(inst: CspInstance, props: tuple) -> np.ndarray:
    d = inst.domain_size
    total = sum(family_sizes(d, props))
    m = np.ones(total, dtype=bool)
    for c in inst.constraints:
        if c.relation.arity and c.relation.tuples:
            m &= combined_mask(d, props, c.relation)
    return m


# existence search


def poly_exists(inst: CspInstance, p: PolyProperty, node_budget: int = NODE_BUDGET):
    """Some table with property p under which I is closed, or None.

    Raises BudgetExceeded when the search exceeds ``node_budget`` nodes.
    """
    p = PolyProperty(p)
    d = inst.domain_size
    rels = _distinct_relations(inst)
    if p == PolyProperty.CONSTANT:
        for c in range(d):
            allc = {r.arity: (c,) * r.arity for r in rels}
            if all(allc[r.arity] in r.tuples for r in rels):
                return constant_op(d, c)
        return None
    if p == PolyProperty.MINMAX:
        return _order_search(rels, d, node_budget)
    return _entry_search(rels, d, p, node_budget)


def _distinct_relations(inst: CspInstance) -> list:
    seen = set()
    out = []
    for c in inst.constraints:
        r = c.relation
        if r.arity == 0 or not r.tuples or len(r.tuples) == inst.domain_size ** r.arity:
            continue
        if r not in seen:
            seen.add(r)
            out.append(r)
    return out


def _entry_search(rels, d: int, p: PolyProperty, node_budget: int):
    rule = _forced_rule(p)
    forced = {}
    for args in product(range(d), repeat=3):
        v = rule(*args)
        if v is not None:
            forced[args] = v
    cons: dict = {}
    domains: dict = {}
    for rel in rels:
        tuples = rel.sorted_tuples()
        for seq in product(tuples, repeat=3):
            cols = list(zip(*seq))
            entries = []
            pattern = []
            for col in cols:
                if col in forced:
                    pattern.append(("v", forced[col]))
                else:
                    if col not in entries:
                        entries.append(col)
                    pattern.append(("e", col))
            if not entries:
                if tuple(v for _, v in pattern) not in rel.tuples:
                    return None
                continue
            entries.sort()
            allowed = set()
            for t in tuples:
                val = {}
                ok = True
                for (kind, x), a in zip(pattern, t):
                    if kind == "v":
                        if x != a:
                            ok = False
                            break
                    elif val.setdefault(x, a) != a:
                        ok = False
                        break
                if ok:
                    allowed.add(tuple(val[e] for e in entries))
            key = tuple(entries)
            cons[key] = cons[key] & allowed if key in cons else allowed
            for e in entries:
                domains.setdefault(e, set(range(d)))
    for key, allowed in cons.items():
        if not allowed:
            return None
    solution = _table_csp(domains, cons, node_budget)
    if solution is None:
        return None
    outputs = []
    for args in product(range(d), repeat=3):
        if args in forced:
            outputs.append(forced[args])
        else:
            outputs.append(solution.get(args, 0))
    return OperationTable(3, d, tuple(outputs))


def _table_csp(domains: dict, cons: dict, node_budget: int):
    """Lexicographically least solution of a table CSP (variables in sorted order)."""
    order = sorted(domains)
    watch: dict = {v: [] for v in order}
    clist = list(cons.items())
    for ci, (scope, _) in enumerate(clist):
        for v in scope:
            watch[v].append(ci)
    nodes = [0]

    def propagate(dom, queue):
        pending = set(queue)
        queue = list(queue)
        while queue:
            ci = queue.pop()
            pending.discard(ci)
            scope, allowed = clist[ci]
            live = [t for t in allowed if all(a in dom[v] for v, a in zip(scope, t))]
            if not live:
                return False
            for i, v in enumerate(scope):
                support = {t[i] for t in live}
                if support != dom[v]:
                    dom[v] = support
                    for cj in watch[v]:
                        if cj != ci and cj not in pending:
                            pending.add(cj)
                            queue.append(cj)
        return True

    def search(dom, i):
        nodes[0] += 1
        if nodes[0] > node_budget:
            raise BudgetExceeded(f"poly_exists exceeded {node_budget} nodes")
        while i < len(order) and len(dom[order[i]]) == 1:
            i += 1
        if i == len(order):
            return {v: next(iter(dom[v])) for v in order}
        v = order[i]
        for a in sorted(dom[v]):
            child = {u: set(s) for u, s in dom.items()}
            child[v] = {a}
            if propagate(child, watch[v]):
                found = search(child, i + 1)
                if found is not None:
                    return found
        return None

    dom = {v: set(s) for v, s in domains.items()}
    if not propagate(dom, range(len(clist))):
        return None
    return search(dom, 0)


def _order_search(rels, d: int, node_budget: int):
    """Find a total order making every relation closed under its min.

    Max under an order is min under the reversed order, so this covers the
    whole min/max property. Only comparisons that some pair of tuples
    depends on are decided; groups of comparisons sharing no tuple pair are
    oriented separately and then merged by a topological sort (falling back
    to one joint search if the merged orientations form a cycle).
    """
    checks = []
    for rel in rels:
        ts = rel.sorted_tuples()
        for i, t in enumerate(ts):
            for u in ts[i + 1:]:
                pairs = sorted({(min(a, b), max(a, b)) for a, b in zip(t, u) if a != b})
                checks.append((t, u, pairs, rel.tuples))
    parent = {}

    def find(x):
        while parent.setdefault(x, x) != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for _, _, pairs, _ in checks:
        for pr in pairs[1:]:
            parent[find(pr)] = find(pairs[0])
    groups: dict = {}
    for ci, (_, _, pairs, _) in enumerate(checks):
        if pairs:
            groups.setdefault(find(pairs[0]), []).append(ci)
    nodes = [0]
    merged = set()
    for key in sorted(groups):
        part = _orient([checks[ci] for ci in groups[key]], nodes, node_budget)
        if part is None:
            return None
        merged |= part
    order = _linear_extension(merged, d)
    if order is None:
        whole = _orient(checks, nodes, node_budget)
        if whole is None:
            return None
        order = _linear_extension(whole, d)
    return min_op(order)


def _linear_extension(before, d: int):
    """Values 0..d-1 ordered consistently with the (a, b) = a<b pairs; None if cyclic."""
    succ = {v: set() for v in range(d)}
    indeg = [0] * d
    for a, b in before:
        if b not in succ[a]:
            succ[a].add(b)
            indeg[b] += 1
    ready = [v for v in range(d) if indeg[v] == 0]
    heapq.heapify(ready)
    out = []
    while ready:
        v = heapq.heappop(ready)
        out.append(v)
        for w in succ[v]:
            indeg[w] -= 1
            if indeg[w] == 0:
                heapq.heappush(ready, w)
    return out if len(out) == d else None


def _orient(checks, nodes, node_budget: int):
    """Transitively closed set of (a, b) meaning a<b satisfying every check, or None.

    Comparisons are decided in lexicographic pair order, smaller value first.
    """
    by_pair: dict = {}
    for ci, (_, _, pairs, _) in enumerate(checks):
        for pr in pairs:
            by_pair.setdefault(pr, []).append(ci)
    todo = sorted(by_pair)
    values = sorted({a for pr in todo for a in pr})

    def image(before, t, u):
        return tuple(a if a == b or (a, b) in before else b for a, b in zip(t, u))

    def consistent(before, touched):
        for pr in touched:
            for ci in by_pair.get(pr, ()):
                t, u, pairs, tuples = checks[ci]
                if all(q in before or q[::-1] in before for q in pairs):
                    if image(before, t, u) not in tuples:
                        return False
        return True

    def add(before, a, b):
        """Insert a<b and its transitive consequences; None on contradiction."""
        if (b, a) in before:
            return None
        new = set(before)
        lower = {x for x in values if (x, a) in before} | {a}
        upper = {y for y in values if (b, y) in before} | {b}
        added = []
        for x in lower:
            for y in upper:
                if (y, x) in new or x == y:
                    return None
                if (x, y) not in new:
                    new.add((x, y))
                    added.append((min(x, y), max(x, y)))
        return new, added

    def search(before, i):
        nodes[0] += 1
        if nodes[0] > node_budget:
            raise BudgetExceeded(f"poly_exists exceeded {node_budget} nodes")
        while i < len(todo) and (todo[i] in before or todo[i][::-1] in before):
            i += 1
        if i == len(todo):
            return before
        a, b = todo[i]
        for x, y in ((a, b), (b, a)):
            res = add(before, x, y)
            if res is None:
                continue
            new, added = res
            if consistent(new, added):
                found = search(new, i + 1)
                if found is not None:
                    return found
        return None

    return search(frozenset(), 0)


def solve_closed(inst: CspInstance, op: OperationTable):
    """Solve an instance known to be closed under op; returns a solution or None."""
    for c in inst.constraints:
        if not relation_closed(c.relation, op):
            raise ClosureError(f"constraint on {list(c.scope)} is not closed under the operation",
                               constraint=c)
    if op.arity == 1:
        val = op.outputs[0]
        if any(not c.relation.tuples for c in inst.constraints):
            return None
        tau = {v: val for v in inst.variables}
        if all(tuple(tau[v] for v in c.scope) in c.relation.tuples for c in inst.constraints):
            return tau
    return solve_exhaustive(inst)
