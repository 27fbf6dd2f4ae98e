"""Schaefer clause classes, heterogeneous unions of them, and class solvers."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable

from .cnf import CnfFormula, clause_key, format_clause
from .errors import ClassMismatch


class SchaeferClass(enum.IntEnum):
    HORN = 0
    HORN_MINUS = 1
    KROM2 = 2
    ZERO_VAL = 3
    ONE_VAL = 4

    @property
    def tag(self) -> str:
        return _TAGS[self]

    @classmethod
    def from_tag(cls, tag: str) -> "SchaeferClass":
        t = tag.strip().lower()
        if t in _ALIASES:
            return _ALIASES[t]
        raise ValueError(f"unknown class tag {tag!r}")

    def mirror(self) -> "SchaeferClass":
        return _MIRROR[self]


_TAGS = {
    SchaeferClass.HORN: "horn",
    SchaeferClass.HORN_MINUS: "antihorn",
    SchaeferClass.KROM2: "2cnf",
    SchaeferClass.ZERO_VAL: "0val",
    SchaeferClass.ONE_VAL: "1val",
}
_ALIASES = {v: k for k, v in _TAGS.items()}
_ALIASES.update({
    "horn-": SchaeferClass.HORN_MINUS,
    "anti-horn": SchaeferClass.HORN_MINUS,
    "krom": SchaeferClass.KROM2,
    "0-val": SchaeferClass.ZERO_VAL,
    "1-val": SchaeferClass.ONE_VAL,
})
_MIRROR = {
    SchaeferClass.HORN: SchaeferClass.HORN_MINUS,
    SchaeferClass.HORN_MINUS: SchaeferClass.HORN,
    SchaeferClass.KROM2: SchaeferClass.KROM2,
    SchaeferClass.ZERO_VAL: SchaeferClass.ONE_VAL,
    SchaeferClass.ONE_VAL: SchaeferClass.ZERO_VAL,
}

ALL_CLASSES = tuple(SchaeferClass)
FULL_MASK = (1 << len(ALL_CLASSES)) - 1


def clause_in_class(clause, s: SchaeferClass) -> bool:
    return bool(clause_mask(frozenset(clause)) >> s & 1)


@lru_cache(maxsize=1 << 18)
def clause_mask(clause: frozenset) -> int:
    """Bit s is set iff the clause belongs to class s."""
    pos = sum(1 for l in clause if l > 0)
    neg = len(clause) - pos
    m = 0
    if pos <= 1:
        m |= 1 << SchaeferClass.HORN
    if neg <= 1:
        m |= 1 << SchaeferClass.HORN_MINUS
    if len(clause) <= 2:
        m |= 1 << SchaeferClass.KROM2
    if not clause or neg:
        m |= 1 << SchaeferClass.ZERO_VAL
    if not clause or pos:
        m |= 1 << SchaeferClass.ONE_VAL
    return m


@lru_cache(maxsize=1 << 18)
def formula_mask(formula: CnfFormula) -> int:
    m = FULL_MASK
    for c in formula.clauses:
        m &= clause_mask(c)
        if not m:
            break
    return m


def first_violation(formula: CnfFormula, s: SchaeferClass):
    """Canonically first clause of F outside s, or None."""
    bit = 1 << s
    for c in formula.sorted_clauses:
        if not clause_mask(c) & bit:
            return c
    return None


@dataclass(frozen=True)
class HeteroClass:
    """A nonempty set of Schaefer classes standing for their union."""

    members: frozenset
    mask: int = field(init=False, compare=False)

    def __post_init__(self):
        ms = frozenset(SchaeferClass(m) for m in self.members)
        if not ms:
            raise ValueError("a heterogeneous class needs at least one member")
        object.__setattr__(self, "members", ms)
        object.__setattr__(self, "mask", sum(1 << m for m in ms))

    @classmethod
    def of(cls, *members) -> "HeteroClass":
        return cls(frozenset(SchaeferClass.from_tag(m) if isinstance(m, str) else m for m in members))

    @classmethod
    def parse(cls, text: str) -> "HeteroClass":
        return cls.of(*[t for t in text.split(",") if t.strip()])

    @property
    def ordered(self) -> tuple:
        return tuple(sorted(self.members))

    @property
    def tags(self) -> list[str]:
        return [m.tag for m in self.ordered]

    def mirror(self) -> "HeteroClass":
        return HeteroClass(frozenset(m.mirror() for m in self.members))

    def contains(self, formula: CnfFormula) -> bool:
        return bool(formula_mask(formula) & self.mask)

    def witness(self, formula: CnfFormula):
        """Canonically first member class containing F, or None."""
        m = formula_mask(formula) & self.mask
        if not m:
            return None
        return SchaeferClass((m & -m).bit_length() - 1)

    def __str__(self):
        return ",".join(self.tags)


@dataclass
class MembershipVerdict:
    member: bool
    witness: SchaeferClass | None = None
    violations: dict = field(default_factory=dict)


def formula_in_hetero(formula: CnfFormula, hetero: HeteroClass) -> MembershipVerdict:
    w = hetero.witness(formula)
    if w is not None:
        return MembershipVerdict(True, w)
    return MembershipVerdict(False, None, {s: first_violation(formula, s) for s in hetero.ordered})


def contains_bad_pair(hetero: HeteroClass) -> bool:
    left = {SchaeferClass.HORN, SchaeferClass.ZERO_VAL}
    right = {SchaeferClass.HORN_MINUS, SchaeferClass.ONE_VAL}
    return bool(hetero.members & left) and bool(hetero.members & right)


def bad_pair(hetero: HeteroClass):
    """One offending (left, right) pair, canonically first, or None."""
    for a in (SchaeferClass.HORN, SchaeferClass.ZERO_VAL):
        for b in (SchaeferClass.HORN_MINUS, SchaeferClass.ONE_VAL):
            if a in hetero.members and b in hetero.members:
                return a, b
    return None


def dichotomy(hetero: HeteroClass) -> str:
    """Strong detection complexity of the union: "FPT" or "W[2]-hard (bad pair: a/b)"."""
    pair = bad_pair(hetero)
    if pair is None:
        return "FPT"
    return f"W[2]-hard (bad pair: {pair[0].tag}/{pair[1].tag})"


def all_hetero_classes() -> list[HeteroClass]:
    out = []
    for m in range(1, FULL_MASK + 1):
        out.append(HeteroClass(frozenset(s for s in ALL_CLASSES if m >> s & 1)))
    return out


@dataclass
class SatResult:
    satisfiable: bool
    model: dict | None = None

    def __post_init__(self):
        if self.satisfiable != (self.model is not None):
            raise ValueError("model must be present exactly when satisfiable")

    @property
    def status(self) -> str:
        return "satisfiable" if self.satisfiable else "unsatisfiable"


UNSAT = SatResult(False)


def _horn_solve(formula: CnfFormula):
    # minimal model by forward chaining: clause index per negative literal
    clauses = list(formula.clauses)
    if frozenset() in formula.clauses:
        return None
    missing = []
    watch: dict = {}
    head = []
    true = set()
    queue = []
    for i, c in enumerate(clauses):
        negs = [-l for l in c if l < 0]
        pos = [l for l in c if l > 0]
        head.append(pos[0] if pos else None)
        missing.append(len(negs))
        for v in negs:
            watch.setdefault(v, []).append(i)
        if not negs:
            queue.append(i)
    while queue:
        i = queue.pop()
        h = head[i]
        if h is None:
            return None
        if h in true:
            continue
        true.add(h)
        for j in watch.get(h, ()):
            missing[j] -= 1
            if missing[j] == 0:
                queue.append(j)
    return {v: int(v in true) for v in formula.variables}


def _krom_solve(formula: CnfFormula):
    if frozenset() in formula.clauses:
        return None
    vs = sorted(formula.variables)
    nodes = [l for v in vs for l in (v, -v)]
    graph: dict = {l: [] for l in nodes}
    for c in formula.sorted_clauses:
        lits = list(c)
        if len(lits) == 1:
            a = lits[0]
            graph[-a].append(a)
        else:
            a, b = lits
            graph[-a].append(b)
            graph[-b].append(a)
    comp = _tarjan(nodes, graph)
    model = {}
    for v in vs:
        if comp[v] == comp[-v]:
            return None
        # Tarjan numbers components in reverse topological order
        model[v] = int(comp[v] < comp[-v])
    return model


def _tarjan(nodes, graph):
    index = {}
    low = {}
    comp = {}
    on_stack = set()
    stack = []
    counter = 0
    ncomp = 0
    for root in nodes:
        if root in index:
            continue
        work = [(root, 0)]
        while work:
            v, i = work[-1]
            if i == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack.add(v)
            succ = graph[v]
            if i < len(succ):
                work[-1] = (v, i + 1)
                w = succ[i]
                if w not in index:
                    work.append((w, 0))
                elif w in on_stack:
                    low[v] = min(low[v], index[w])
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp[w] = ncomp
                    if w == v:
                        break
                ncomp += 1
    return comp


def _mirror_model(model):
    return None if model is None else {v: 1 - b for v, b in model.items()}


def solve_in_class(formula: CnfFormula, s: SchaeferClass) -> SatResult:
    s = SchaeferClass(s)
    bad = first_violation(formula, s)
    if bad is not None:
        raise ClassMismatch(f"clause {format_clause(bad)} is not in class {s.tag}", clause=bad)
    if s == SchaeferClass.HORN:
        model = _horn_solve(formula)
    elif s == SchaeferClass.HORN_MINUS:
        model = _mirror_model(_horn_solve(formula.mirror()))
    elif s == SchaeferClass.KROM2:
        model = _krom_solve(formula)
    elif formula.has_empty_clause():
        model = None
    else:
        val = 0 if s == SchaeferClass.ZERO_VAL else 1
        model = {v: val for v in formula.variables}
    return SatResult(model is not None, model)


def sorted_violations(formula: CnfFormula, hetero: HeteroClass) -> list:
    """Clauses violating every member, canonical order."""
    return sorted((c for c in formula.clauses if not clause_mask(c) & hetero.mask), key=clause_key)


def parse_classes(items: Iterable[str] | str) -> HeteroClass:
    if isinstance(items, str):
        return HeteroClass.parse(items)
    return HeteroClass.of(*items)
