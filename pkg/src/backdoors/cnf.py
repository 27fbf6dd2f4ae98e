"""CNF formulas as sets of clauses, DIMACS I/O and the F[tau] reduction.

Literals are nonzero ints in DIMACS style: ``v`` is the positive literal of
variable ``v`` and ``-v`` the negative one. A clause is a frozenset of
literals without complementary pairs. Assignments are plain dicts mapping
variable indices to 0 or 1.
"""

from __future__ import annotations

import itertools
import warnings
from functools import lru_cache
from typing import Iterable, Iterator, Mapping

from .errors import BudgetExceeded, DimacsParseError

Clause = frozenset
Assignment = dict

ASSIGNMENT_CAP = 24


class TautologyWarning(UserWarning):
    pass


def clause_key(clause) -> tuple:
    """Sort key putting clauses in canonical order.

    A literal sorts by (variable, positive) so that -3 comes before 3, and
    a clause sorts by its sequence of sorted literal keys.
    """
    return tuple(sorted((abs(l), l > 0) for l in clause))


def make_clause(literals: Iterable[int]) -> frozenset:
    c = frozenset(literals)
    for l in c:
        if l == 0 or not isinstance(l, int):
            raise ValueError(f"bad literal {l!r}")
        if -l in c:
            raise ValueError(f"clause has complementary pair on variable {abs(l)}")
    return c


def format_clause(clause) -> str:
    if not clause:
        return "()"
    return "(" + " v ".join(str(l) if l > 0 else f"~{-l}" for l in sorted_literals(clause)) + ")"


def sorted_literals(clause) -> list[int]:
    return sorted(clause, key=lambda l: (abs(l), l > 0))


class CnfFormula:
    """Immutable set of clauses."""

    __slots__ = ("clauses", "_hash", "_vars", "_sorted")

    def __init__(self, clauses: Iterable = ()):
        cs = []
        for c in clauses:
            cs.append(c if isinstance(c, frozenset) else make_clause(c))
        self.clauses = frozenset(cs)
        self._hash = None
        self._vars = None
        self._sorted = None

    @classmethod
    def of(cls, *clauses) -> "CnfFormula":
        return cls(make_clause(c) for c in clauses)

    @property
    def variables(self) -> frozenset:
        if self._vars is None:
            self._vars = frozenset(abs(l) for c in self.clauses for l in c)
        return self._vars

    @property
    def variable_count(self) -> int:
        return len(self.variables)

    @property
    def sorted_clauses(self) -> tuple:
        if self._sorted is None:
            self._sorted = tuple(sorted(self.clauses, key=clause_key))
        return self._sorted

    @property
    def max_clause_length(self) -> int:
        return max((len(c) for c in self.clauses), default=0)

    def __len__(self):
        return len(self.clauses)

    def __iter__(self):
        return iter(self.sorted_clauses)

    def __contains__(self, clause):
        return frozenset(clause) in self.clauses

    def __eq__(self, other):
        return isinstance(other, CnfFormula) and self.clauses == other.clauses

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.clauses)
        return self._hash

    def __repr__(self):
        return "CnfFormula{" + ", ".join(format_clause(c) for c in self.sorted_clauses) + "}"

    def union(self, other: "CnfFormula") -> "CnfFormula":
        return CnfFormula(self.clauses | other.clauses)

    def mirror(self) -> "CnfFormula":
        """Flip every literal's polarity."""
        return CnfFormula(frozenset(-l for l in c) for c in self.clauses)

    def has_empty_clause(self) -> bool:
        return frozenset() in self.clauses


def reduce(formula: CnfFormula, tau: Mapping[int, int]) -> CnfFormula:
    """F[tau]: drop satisfied clauses, strip false literals, keep empty clauses."""
    if not tau:
        return formula
    relevant = tuple(sorted((v, b) for v, b in tau.items() if v in formula.variables))
    if not relevant:
        return formula
    return _reduce_cached(formula, relevant)


@lru_cache(maxsize=1 << 18)
def _reduce_cached(formula: CnfFormula, items: tuple) -> CnfFormula:
    true_lits = set()
    for v, b in items:
        true_lits.add(v if b else -v)
    out = []
    for c in formula.clauses:
        if any(l in true_lits for l in c):
            continue
        out.append(frozenset(l for l in c if -l not in true_lits))
    return CnfFormula(out)


def enumerate_assignments(variables: Iterable[int], cap: int = ASSIGNMENT_CAP) -> Iterator[dict]:
    """All 0/1 assignments over ``variables`` in binary-counter order.

    Variables are sorted ascending; the last variable toggles fastest and the
    all-zeros assignment comes first.
    """
    vs = sorted(variables)
    if len(vs) > cap:
        raise BudgetExceeded(f"{len(vs)} variables exceed the assignment cap {cap}")
    for bits in itertools.product((0, 1), repeat=len(vs)):
        yield dict(zip(vs, bits))


def satisfies(tau: Mapping[int, int], formula: CnfFormula) -> bool:
    for c in formula.clauses:
        if not any(tau.get(abs(l)) == (1 if l > 0 else 0) for l in c):
            return False
    return True


def components(formula: CnfFormula) -> list[CnfFormula]:
    """Split into variable-disjoint parts; empty clauses form their own part."""
    parent = {}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for v in formula.variables:
        parent[v] = v
    for c in formula.clauses:
        vs = [abs(l) for l in c]
        for v in vs[1:]:
            a, b = find(vs[0]), find(v)
            if a != b:
                parent[a] = b
    groups: dict = {}
    for c in formula.clauses:
        key = find(abs(next(iter(c)))) if c else None
        groups.setdefault(key, []).append(c)
    return [CnfFormula(cs) for cs in groups.values()]


@lru_cache(maxsize=1 << 16)
def _component_model(formula: CnfFormula):
    if formula.has_empty_clause():
        return None
    for tau in enumerate_assignments(formula.variables):
        if satisfies(tau, formula):
            return tau
    return None


def brute_force_model(formula: CnfFormula, cap: int = ASSIGNMENT_CAP):
    """A model over var(F) found by truth tables per component, or None."""
    model = {}
    for part in components(formula):
        if len(part.variables) > cap:
            raise BudgetExceeded(f"component with {len(part.variables)} variables exceeds cap {cap}")
        m = _component_model(part)
        if m is None:
            return None
        model.update(m)
    return model


def is_satisfiable(formula: CnfFormula) -> bool:
    return brute_force_model(formula) is not None


def parse_dimacs(text: str, return_removed: bool = False):
    """Read DIMACS CNF text.

    Tautological clauses are dropped with a TautologyWarning. With
    ``return_removed`` the result is a (formula, removed_count) pair.
    """
    declared = None
    clauses = []
    removed = 0
    current: list[int] = []
    current_line = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("%"):
            break
        if line.startswith("p"):
            parts = line.split()
            if declared is not None:
                raise DimacsParseError("second problem line", lineno)
            if len(parts) != 4 or parts[1] != "cnf":
                raise DimacsParseError(f"malformed header {line!r}", lineno)
            try:
                declared = (int(parts[2]), int(parts[3]))
            except ValueError:
                raise DimacsParseError(f"malformed header {line!r}", lineno) from None
            if declared[0] < 0 or declared[1] < 0:
                raise DimacsParseError(f"malformed header {line!r}", lineno)
            continue
        if declared is None:
            raise DimacsParseError("clause before problem line", lineno)
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise DimacsParseError(f"bad token {tok!r}", lineno) from None
            if lit == 0:
                lits = set(current)
                if any(-l in lits for l in lits):
                    removed += 1
                else:
                    clauses.append(frozenset(lits))
                current = []
                current_line = None
                continue
            if abs(lit) > declared[0]:
                raise DimacsParseError(
                    f"literal {lit} exceeds declared variable count {declared[0]}", lineno
                )
            if current_line is None:
                current_line = lineno
            current.append(lit)
    if current:
        raise DimacsParseError("clause missing terminating 0", current_line)
    if declared is None:
        raise DimacsParseError("missing problem line", None)
    if removed:
        warnings.warn(f"removed {removed} tautological clause(s)", TautologyWarning, stacklevel=2)
    f = CnfFormula(clauses)
    return (f, removed) if return_removed else f


def to_dimacs(formula: CnfFormula, num_vars: int | None = None) -> str:
    n = max(formula.variables, default=0) if num_vars is None else num_vars
    lines = [f"p cnf {n} {len(formula)}"]
    for c in formula.sorted_clauses:
        lines.append(" ".join(str(l) for l in sorted_literals(c)) + (" 0" if c else "0"))
    return "\n".join(lines) + "\n"
