"""CSP instances with extensional relations over the domain {0, ..., d-1}."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from typing import Iterable, Mapping

from .errors import BudgetExceeded, CspFormatError

SOLVE_CAP = 20_000_000


@dataclass(frozen=True)
class RelationTable:
    arity: int
    tuples: frozenset

    @classmethod
    def of(cls, arity: int, tuples: Iterable) -> "RelationTable":
        ts = frozenset(tuple(int(x) for x in t) for t in tuples)
        for t in ts:
            if len(t) != arity:
                raise ValueError(f"tuple {t} does not have arity {arity}")
        return cls(arity, ts)

    def __len__(self):
        return len(self.tuples)

    def __contains__(self, t):
        return tuple(t) in self.tuples

    def sorted_tuples(self) -> list:
        return sorted(self.tuples)

    def max_value(self) -> int:
        return max((max(t) for t in self.tuples if t), default=-1)


TRUE0 = RelationTable(0, frozenset({()}))
FALSE0 = RelationTable(0, frozenset())


@dataclass(frozen=True)
class Constraint:
    scope: tuple
    relation: RelationTable

    def __post_init__(self):
        scope = tuple(self.scope)
        object.__setattr__(self, "scope", scope)
        if len(set(scope)) != len(scope):
            raise ValueError(f"scope {scope} repeats a variable")
        if self.relation.arity != len(scope):
            raise ValueError(f"relation arity {self.relation.arity} differs from scope length {len(scope)}")


@dataclass(frozen=True)
class CspInstance:
    variables: tuple
    domain_size: int
    constraints: tuple
    value_names: tuple | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if self.domain_size < 1:
            raise ValueError("domain size must be at least 1")
        if len(set(self.variables)) != len(self.variables):
            raise ValueError("duplicate variable")
        known = set(self.variables)
        for c in self.constraints:
            for v in c.scope:
                if v not in known:
                    raise ValueError(f"scope variable {v!r} is not declared")
            if c.relation.max_value() >= self.domain_size:
                raise ValueError(f"relation value out of domain 0..{self.domain_size - 1}")

    @property
    def arity(self) -> int:
        """Largest constraint arity."""
        return max((len(c.scope) for c in self.constraints), default=0)

    def index(self) -> dict:
        return {v: i for i, v in enumerate(self.variables)}


def make_instance(domain_size: int, variables, constraints) -> CspInstance:
    """Build from (scope, tuples) pairs."""
    cs = []
    for scope, tuples in constraints:
        cs.append(Constraint(tuple(scope), RelationTable.of(len(scope), tuples)))
    return CspInstance(tuple(variables), domain_size, tuple(cs))


@lru_cache(maxsize=1 << 18)
def _restrict(relation: RelationTable, fixed: tuple) -> RelationTable:
    # fixed: sorted (position, value) pairs
    pinned = {i for i, _ in fixed}
    keep = [i for i in range(relation.arity) if i not in pinned]
    out = set()
    for t in relation.tuples:
        if all(t[i] == a for i, a in fixed):
            out.add(tuple(t[i] for i in keep))
    return RelationTable(len(keep), frozenset(out))


def reduce_constraint(c: Constraint, tau: Mapping) -> Constraint:
    fixed = tuple((i, tau[v]) for i, v in enumerate(c.scope) if v in tau)
    if not fixed:
        return c
    scope = tuple(v for v in c.scope if v not in tau)
    return Constraint(scope, _restrict(c.relation, fixed))


def reduce_csp(inst: CspInstance, tau: Mapping) -> CspInstance:
    """I[tau]: every constraint restricted to tau and projected to its free part.

    Constraints whose scope is fully assigned survive as arity-0 relations,
    {()} when tau matched a tuple and empty otherwise.
    """
    if not tau:
        return inst
    for v, a in tau.items():
        if not 0 <= a < inst.domain_size:
            raise ValueError(f"value {a} out of domain for {v!r}")
    return _reduce_cached(inst, tuple(sorted(tau.items(), key=lambda kv: str(kv[0]))))


@lru_cache(maxsize=1 << 16)
def _reduce_cached(inst: CspInstance, items: tuple) -> CspInstance:
    tau = dict(items)
    variables = tuple(v for v in inst.variables if v not in tau)
    cs = tuple(reduce_constraint(c, tau) for c in inst.constraints)
    return CspInstance(variables, inst.domain_size, cs, inst.value_names)


def enumerate_csp_assignments(variables, domain_size: int, cap: int = SOLVE_CAP):
    vs = list(variables)
    if domain_size ** len(vs) > cap:
        raise BudgetExceeded(f"{domain_size}^{len(vs)} assignments exceed cap {cap}")
    for vals in product(range(domain_size), repeat=len(vs)):
        yield dict(zip(vs, vals))


def is_solution(inst: CspInstance, tau: Mapping) -> bool:
    for c in inst.constraints:
        if tuple(tau[v] for v in c.scope) not in c.relation.tuples:
            return False
    return True


def solve_exhaustive(inst: CspInstance, cap: int = SOLVE_CAP):
    """Lexicographically least solution by backtracking, or None.

    Variables are assigned in declared order with values ascending; each
    constraint is checked once its last scope variable is assigned.
    """
    if inst.domain_size ** len(inst.variables) > cap:
        raise BudgetExceeded(
            f"search space {inst.domain_size}^{len(inst.variables)} exceeds cap {cap}"
        )
    return _solve_cached(inst)


@lru_cache(maxsize=1 << 16)
def _solve_cached(inst: CspInstance):
    pos = inst.index()
    n = len(inst.variables)
    checks = [[] for _ in range(n + 1)]
    for c in inst.constraints:
        if not c.scope:
            if not c.relation.tuples:
                return None
            continue
        if not c.relation.tuples:
            return None
        last = max(pos[v] for v in c.scope)
        checks[last].append(([pos[v] for v in c.scope], c.relation.tuples))
    values = [0] * n
    d = inst.domain_size

    def extend(i):
        if i == n:
            return True
        for a in range(d):
            values[i] = a
            if all(tuple(values[j] for j in idx) in rel for idx, rel in checks[i]):
                if extend(i + 1):
                    return True
        return False

    if extend(0):
        return dict(zip(inst.variables, values))
    return None


def primal_graph(constraints) -> tuple[frozenset, frozenset]:
    vertices = set()
    edges = set()
    for c in constraints:
        vertices.update(c.scope)
        for i, u in enumerate(c.scope):
            for v in c.scope[i + 1:]:
                edges.add(frozenset((u, v)))
    return frozenset(vertices), frozenset(edges)


def parse_csp(text: str) -> CspInstance:
    """Read the JSON exchange format.

    ``domain`` is an integer d, or a list of value names mapped to 0..d-1
    in list order (tuples may then use either names or indices).
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise CspFormatError(f"invalid JSON: {e}") from None
    if not isinstance(doc, dict):
        raise CspFormatError("top level must be an object")
    for key in ("domain", "variables", "constraints"):
        if key not in doc:
            raise CspFormatError(f"missing key {key!r}")
    names = None
    dom = doc["domain"]
    if isinstance(dom, list):
        names = tuple(str(x) for x in dom)
        d = len(names)
    elif isinstance(dom, int) and not isinstance(dom, bool):
        d = dom
    else:
        raise CspFormatError("domain must be an integer or a list of names")
    if d < 1:
        raise CspFormatError("domain must be at least 1")
    lookup = {n: i for i, n in enumerate(names)} if names else {}
    variables = doc["variables"]
    if not isinstance(variables, list) or not all(isinstance(v, str) for v in variables):
        raise CspFormatError("variables must be a list of strings")
    if len(set(variables)) != len(variables):
        raise CspFormatError("duplicate variable name")
    known = set(variables)
    cs = []
    for n, obj in enumerate(doc["constraints"]):
        scope = obj.get("scope")
        tuples = obj.get("tuples")
        if not isinstance(scope, list) or not isinstance(tuples, list):
            raise CspFormatError(f"constraint {n}: needs 'scope' and 'tuples' lists")
        for v in scope:
            if v not in known:
                raise CspFormatError(f"constraint {n}: unknown variable {v!r}")
        if len(set(scope)) != len(scope):
            raise CspFormatError(f"constraint {n}: scope repeats a variable")
        rows = []
        for t in tuples:
            if not isinstance(t, list) or len(t) != len(scope):
                raise CspFormatError(f"constraint {n}: tuple {t} does not match scope arity {len(scope)}")
            row = []
            for x in t:
                if isinstance(x, str) and x in lookup:
                    x = lookup[x]
                if not isinstance(x, int) or isinstance(x, bool) or not 0 <= x < d:
                    raise CspFormatError(f"constraint {n}: value {x!r} outside domain 0..{d - 1}")
                row.append(x)
            rows.append(tuple(row))
        cs.append(Constraint(tuple(scope), RelationTable(len(scope), frozenset(rows))))
    return CspInstance(tuple(variables), d, tuple(cs), names)


def to_json(inst: CspInstance) -> str:
    doc = {
        "domain": inst.domain_size,
        "variables": [str(v) for v in inst.variables],
        "constraints": [
            {"scope": [str(v) for v in c.scope], "tuples": [list(t) for t in c.relation.sorted_tuples()]}
            for c in inst.constraints
        ],
    }
    return json.dumps(doc, indent=1)
