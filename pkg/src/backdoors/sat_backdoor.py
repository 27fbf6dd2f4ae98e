"""Strong and weak backdoor detection for CNF formulas into Schaefer unions.

Strong detection runs a depth-bounded search over candidate sets B. At each
node a brancher either confirms that B is a strong backdoor or returns a
family Q of variable sets; every backdoor of size <= k that extends B must
contain one member of Q, and |B u Q| <= k for every member. The search tree
is explored depth first with children in canonical order, and a visited set
skips sets already examined under another branch.
"""

from __future__ import annotations

from itertools import combinations
from typing import Callable

from .cnf import (
    ASSIGNMENT_CAP,
    CnfFormula,
    brute_force_model,
    enumerate_assignments,
    reduce,
    satisfies,
)
from .errors import BranchingContractError, BudgetExceeded, ClassMismatch
from .schaefer import (
    HeteroClass,
    SatResult,
    SchaeferClass,
    clause_mask,
    contains_bad_pair,
    first_violation,
    formula_in_hetero,
    formula_mask,
    solve_in_class,
)
from .search import DetectionOutcome, SearchStats, Timer, assignment_key

HORN = SchaeferClass.HORN
HORN_MINUS = SchaeferClass.HORN_MINUS
KROM2 = SchaeferClass.KROM2
ZERO_VAL = SchaeferClass.ZERO_VAL
ONE_VAL = SchaeferClass.ONE_VAL

ORACLE_CAP = 16

Brancher = Callable[[CnfFormula, int, frozenset], "list | None"]


def _bit(*classes) -> int:
    return sum(1 << c for c in classes)


def _falsifying(formula: CnfFormula, B, mask: int):
    """First tau over B (canonical order) with F[tau] outside every class in mask."""
    for tau in enumerate_assignments(B):
        reduced = reduce(formula, tau)
        if not formula_mask(reduced) & mask:
            return tau, reduced
    return None


def _first(formula: CnfFormula, inside: int, outside: int):
    """Canonically first clause in every class of ``inside`` and none of ``outside``."""
    for c in formula.sorted_clauses:
        m = clause_mask(c)
        if m & inside == inside and not m & outside:
            return c
    return None


def _vars(lits) -> list[int]:
    return sorted({abs(l) for l in lits})


def _lits(clause) -> list[int]:
    return sorted(clause, key=lambda l: (abs(l), l > 0))


def _singletons(vs) -> list:
    return [frozenset([v]) for v in sorted(set(vs))]


def _family(sets) -> list:
    return sorted({frozenset(s) for s in sets}, key=lambda s: sorted(s))


def _all_but(clause, keep: int) -> list:
    """var(C \\ O) for every keep-subset O of C, canonical order."""
    vs = _vars(clause)
    return _family(set(vs) - set(o) for o in combinations(vs, keep))


def _mirrored(primal: Brancher) -> Brancher:
    def brancher(formula, k, B):
        return primal(formula.mirror(), k, B)

    return brancher


# Branchers. Each returns None to confirm B, else a list of frozensets.


def branch_krom_union(formula: CnfFormula, k: int, B, c: SchaeferClass):
    """Brancher for 2CNF u c with c one of HORN, HORN-, 0-VAL, 1-VAL."""
    c = SchaeferClass(c)
    if c == KROM2:
        raise ValueError("second class must differ from 2CNF")
    if c in (HORN_MINUS, ONE_VAL):
        return branch_krom_union(formula.mirror(), k, B, c.mirror())
    B = frozenset(B)
    hit = _falsifying(formula, B, _bit(KROM2, c))
    if hit is None:
        return None
    _, reduced = hit
    C = _first(reduced, 0, _bit(KROM2, c))
    if C is not None:
        if c == HORN:
            if len(B) + 1 > k:
                return []
            lits = _lits(C)
            pos = [l for l in lits if l > 0][:2]
            other = next(l for l in lits if l not in pos)
            return _singletons(_vars(pos + [other]))
        # all-positive clause with at least three literals; keep at most two
        if len(B) + len(C) - 2 > k:
            return []
        return _all_but(C, 2)
    if len(B) + 1 > k:
        return []
    C = _first(reduced, _bit(KROM2), _bit(c))
    C2 = _first(reduced, _bit(c), _bit(KROM2))
    return _singletons(_vars(C) + _vars(C2)[:3])


def branch_horn_zval(formula: CnfFormula, k: int, B, dual: bool = False):
    """Brancher for HORN u 0-VAL, or HORN- u 1-VAL when ``dual``."""
    if dual:
        return branch_horn_zval(formula.mirror(), k, B)
    B = frozenset(B)
    hit = _falsifying(formula, B, _bit(HORN, ZERO_VAL))
    if hit is None:
        return None
    _, reduced = hit
    C = _first(reduced, 0, _bit(HORN, ZERO_VAL))
    if C is not None:
        # all positive with two or more literals; keep at most one
        if len(B) + len(C) - 1 > k:
            return []
        return _all_but(C, 1)
    if len(B) + 1 > k:
        return []
    unit = _first(reduced, _bit(HORN), _bit(ZERO_VAL))
    C2 = _first(reduced, _bit(ZERO_VAL), _bit(HORN))
    pos = [l for l in _lits(C2) if l > 0][:2]
    return _singletons(_vars(unit) + _vars(pos))


def branch_triple(formula: CnfFormula, k: int, B, dual: bool = False):
    """Brancher for 2CNF u HORN u 0-VAL, or its mirror image when ``dual``."""
    if dual:
        return branch_triple(formula.mirror(), k, B)
    B = frozenset(B)
    mask = _bit(KROM2, HORN, ZERO_VAL)
    hit = _falsifying(formula, B, mask)
    if hit is None:
        return None
    _, reduced = hit
    C = _first(reduced, 0, mask)
    if C is not None:
        if len(B) + len(C) - 2 > k:
            return []
        return _all_but(C, 2)
    if len(B) + 1 > k:
        return []
    C = _first(reduced, _bit(KROM2), _bit(ZERO_VAL))
    if C is None:
        raise BranchingContractError("reduced formula outside 0-VAL has no positive short clause")
    C1 = _first(reduced, 0, _bit(KROM2, HORN))
    if C1 is not None:
        lits = _lits(C1)
        pos = [l for l in lits if l > 0][:2]
        other = next(l for l in lits if l not in pos)
        return _singletons(_vars(C) + _vars(pos + [other]))
    C2 = _first(reduced, _bit(KROM2), _bit(HORN))
    CH = _first(reduced, _bit(HORN), _bit(KROM2))
    return _singletons(_vars(C2) + _vars(CH)[:3])


def branch_bounded_length(formula: CnfFormula, k: int, B, hetero: HeteroClass):
    """Brancher for any union: one violating clause per member class."""
    B = frozenset(B)
    hit = _falsifying(formula, B, hetero.mask)
    if hit is None:
        return None
    if len(B) + 1 > k:
        return []
    _, reduced = hit
    vs = set()
    for s in hetero.ordered:
        vs.update(abs(l) for l in first_violation(reduced, s))
    return _singletons(vs)


def branch_horn(formula: CnfFormula, k: int, B):
    B = frozenset(B)
    hit = _falsifying(formula, B, _bit(HORN))
    if hit is None:
        return None
    if len(B) + 1 > k:
        return []
    C = first_violation(hit[1], HORN)
    return _singletons([l for l in _lits(C) if l > 0][:2])


def branch_krom(formula: CnfFormula, k: int, B):
    B = frozenset(B)
    hit = _falsifying(formula, B, _bit(KROM2))
    if hit is None:
        return None
    if len(B) + 1 > k:
        return []
    C = first_violation(hit[1], KROM2)
    return _singletons(_vars(C)[:3])


def valid_closure(formula: CnfFormula, one_valid: bool = False) -> frozenset:
    """Smallest strong backdoor into 0-VAL (1-VAL when ``one_valid``).

    A clause whose literals outside B are all positive and nonempty can be
    left all-positive by some assignment, so all its variables belong to
    every backdoor; iterate to the least fixpoint.
    """
    if one_valid:
        formula = formula.mirror()
    B: set = set()
    changed = True
    while changed:
        changed = False
        for c in formula.sorted_clauses:
            rest = [l for l in c if abs(l) not in B]
            if rest and all(l > 0 for l in rest):
                B.update(abs(l) for l in rest)
                changed = True
    return frozenset(B)


def run_branching(formula: CnfFormula, k: int, brancher: Brancher, stats: SearchStats | None = None):
    """Depth-bounded search; returns (backdoor or None, stats)."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    stats = stats if stats is not None else SearchStats()
    visited = set()

    def visit(B, depth):
        if B in visited:
            return None
        visited.add(B)
        stats.visit(depth)
        family = brancher(formula, k, B)
        if family is None:
            stats.leaves += 1
            return B
        if not family:
            stats.leaves += 1
            return None
        for Q in family:
            if not Q or Q & B:
                raise BranchingContractError(f"brancher returned invalid set {sorted(Q)}")
            if len(B | Q) > k:
                raise BranchingContractError(f"|B u Q| = {len(B | Q)} exceeds k = {k}")
        for Q in family:
            found = visit(B | Q, depth + 1)
            if found is not None:
                return found
        return None

    with Timer(stats):
        result = visit(frozenset(), 1)
    return result, stats


def brancher_for(hetero: HeteroClass) -> tuple[str, Brancher | None]:
    """Pick the search procedure for a union; returns (name, brancher).

    The brancher is None for the single valid classes, which are decided
    exactly by ``valid_closure``.
    """
    m = frozenset(hetero.members)
    if len(m) == 1:
        (s,) = m
        if s == HORN:
            return "horn", branch_horn
        if s == HORN_MINUS:
            return "antihorn", _mirrored(branch_horn)
        if s == KROM2:
            return "2cnf", branch_krom
        return ("0val" if s == ZERO_VAL else "1val"), None
    if contains_bad_pair(hetero):
        return "bounded-length", lambda F, k, B: branch_bounded_length(F, k, B, hetero)
    if len(m) == 3:
        dual = HORN_MINUS in m
        return ("triple-dual" if dual else "triple"), lambda F, k, B: branch_triple(F, k, B, dual)
    if KROM2 in m:
        (c,) = m - {KROM2}
        return f"2cnf+{c.tag}", lambda F, k, B: branch_krom_union(F, k, B, c)
    dual = HORN_MINUS in m
    return ("antihorn+1val" if dual else "horn+0val"), lambda F, k, B: branch_horn_zval(F, k, B, dual)


def strong_witnesses(formula: CnfFormula, B, hetero: HeteroClass) -> dict:
    out = {}
    for tau in enumerate_assignments(B):
        w = hetero.witness(reduce(formula, tau))
        out[assignment_key(tau)] = w.tag if w is not None else None
    return out


def detect_strong(formula: CnfFormula, k: int, hetero: HeteroClass) -> DetectionOutcome:
    """Strong backdoor of size <= k into the union, or a not-found outcome.

    Bad-pair unions use the bounded-length brancher with r set to the
    formula's longest clause, which is complete but exponential in r.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    name, brancher = brancher_for(hetero)
    stats = SearchStats()
    if brancher is None:
        with Timer(stats):
            stats.visit(1)
            stats.leaves = 1
            B = valid_closure(formula, one_valid=ONE_VAL in hetero.members)
            found = B if len(B) <= k else None
    else:
        found, stats = run_branching(formula, k, brancher, stats)
    out = DetectionOutcome(found, stats, "strong", hetero.tags, k)
    out.extra["algorithm"] = name
    if name == "bounded-length":
        out.extra["r"] = formula.max_clause_length
    if found is not None:
        out.witnesses = strong_witnesses(formula, found, hetero)
    return out


def _weak_leaf(formula: CnfFormula, B, hetero: HeteroClass):
    for tau in enumerate_assignments(B):
        reduced = reduce(formula, tau)
        w = hetero.witness(reduced)
        if w is not None and solve_in_class(reduced, w).satisfiable:
            return tau, w
    return None


def detect_weak_bounded(formula: CnfFormula, k: int, hetero: HeteroClass) -> DetectionOutcome:
    """Weak backdoor of size <= k into the union by bounded search.

    At a node B with no witness, every tau over B whose reduction lies in
    no member class contributes, for each member s, the variables of its
    first clause outside s. A reduction that lies in some member but is
    unsatisfiable stays unsatisfiable under any extension and contributes
    nothing.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    stats = SearchStats()
    visited = set()
    witness = {}

    def visit(B, depth):
        if B in visited:
            return None
        visited.add(B)
        stats.visit(depth)
        leaf = _weak_leaf(formula, B, hetero)
        if leaf is not None:
            stats.leaves += 1
            witness[assignment_key(leaf[0])] = leaf[1].tag
            return B
        vs = set()
        if len(B) < k:
            for tau in enumerate_assignments(B):
                reduced = reduce(formula, tau)
                if hetero.contains(reduced):
                    continue
                for s in hetero.ordered:
                    vs.update(abs(l) for l in first_violation(reduced, s))
        if not vs:
            stats.leaves += 1
            return None
        for v in sorted(vs):
            found = visit(B | {v}, depth + 1)
            if found is not None:
                return found
        return None

    with Timer(stats):
        found = visit(frozenset(), 1)
    return DetectionOutcome(found, stats, "weak", hetero.tags, k, witness)


# Brute-force oracle


def _check_cap(formula: CnfFormula, cap: int):
    if len(formula.variables) > cap:
        raise BudgetExceeded(f"{len(formula.variables)} variables exceed the oracle cap {cap}")


def _strong_ok(formula, B, hetero) -> bool:
    return all(hetero.contains(reduce(formula, tau)) for tau in enumerate_assignments(B))


def _weak_ok(formula, B, hetero):
    for tau in enumerate_assignments(B):
        reduced = reduce(formula, tau)
        if hetero.contains(reduced) and brute_force_model(reduced) is not None:
            return tau
    return None


def candidate_sets(variables, k: int):
    vs = sorted(variables)
    for size in range(0, min(k, len(vs)) + 1):
        for B in combinations(vs, size):
            yield frozenset(B)


def oracle_backdoor(formula: CnfFormula, k: int, hetero: HeteroClass, mode: str = "strong",
                    cap: int = ORACLE_CAP) -> DetectionOutcome:
    """Minimum, lexicographically least backdoor of size <= k by enumeration."""
    _check_cap(formula, cap)
    stats = SearchStats()
    found = None
    witnesses = {}
    with Timer(stats):
        for B in candidate_sets(formula.variables, k):
            stats.visit(len(B) + 1)
            if mode == "strong":
                if _strong_ok(formula, B, hetero):
                    found = B
                    witnesses = strong_witnesses(formula, B, hetero)
                    break
            elif mode == "weak":
                tau = _weak_ok(formula, B, hetero)
                if tau is not None:
                    found = B
                    witnesses = {assignment_key(tau): hetero.witness(reduce(formula, tau)).tag}
                    break
            else:
                raise ValueError(f"unknown mode {mode!r}")
    stats.leaves = stats.nodes_expanded
    return DetectionOutcome(found, stats, mode, hetero.tags, k, witnesses, {"algorithm": "oracle"})


def oracle_min_sizes(formula: CnfFormula, kmax: int, cap: int = ORACLE_CAP) -> dict:
    """Minimum strong and weak backdoor size for all 31 unions at once.

    Returns {"strong": {mask: size}, "weak": {mask: size}} where a mask
    absent from the map has no backdoor of size <= kmax. Each candidate set
    is reduced once and its class masks are shared by every union.
    """
    _check_cap(formula, cap)
    strong: dict = {}
    weak: dict = {}
    masks = range(1, 32)
    for B in candidate_sets(formula.variables, kmax):
        if len(strong) == 31 and len(weak) == 31:
            break
        cover = []
        sat_union = 0
        for tau in enumerate_assignments(B):
            reduced = reduce(formula, tau)
            m = formula_mask(reduced)
            cover.append(m)
            if m and brute_force_model(reduced) is not None:
                sat_union |= m
        for h in masks:
            if h not in strong and all(m & h for m in cover):
                strong[h] = len(B)
            if h not in weak and sat_union & h:
                weak[h] = len(B)
    return {"strong": strong, "weak": weak}


# Verification and evaluation


class StrongVerdict:
    def __init__(self, ok: bool, witnesses=None, falsifying=None, violations=None):
        self.ok = ok
        self.witnesses = witnesses or {}
        self.falsifying = falsifying
        self.violations = violations or {}

    def __bool__(self):
        return self.ok

    def __repr__(self):
        if self.ok:
            return f"StrongVerdict(ok, witnesses={self.witnesses})"
        return f"StrongVerdict(failed at {self.falsifying}, violations={self.violations})"


def verify_strong(formula: CnfFormula, B, hetero: HeteroClass, cap: int = ASSIGNMENT_CAP) -> StrongVerdict:
    witnesses = {}
    for tau in enumerate_assignments(B, cap):
        verdict = formula_in_hetero(reduce(formula, tau), hetero)
        if not verdict.member:
            return StrongVerdict(False, witnesses, tau, verdict.violations)
        witnesses[assignment_key(tau)] = verdict.witness
    return StrongVerdict(True, witnesses)


def verify_weak(formula: CnfFormula, B, hetero: HeteroClass):
    """An assignment over B whose reduction is in the union and satisfiable, or None."""
    leaf = _weak_leaf(formula, frozenset(B), hetero)
    return None if leaf is None else leaf[0]


def evaluate_backdoor(formula: CnfFormula, B, hetero: HeteroClass, mode: str = "strong"):
    """Decide F through its backdoor.

    Strong mode returns a SatResult for F. Weak mode returns a satisfying
    SatResult, or None when no assignment over B yields a satisfiable
    reduction inside the union.
    """
    B = frozenset(B)
    if mode == "strong":
        for tau in enumerate_assignments(B):
            reduced = reduce(formula, tau)
            w = hetero.witness(reduced)
            if w is None:
                verdict = formula_in_hetero(reduced, hetero)
                bad = next(iter(verdict.violations.values()))
                raise ClassMismatch(f"{sorted(B)} is not a strong backdoor", clause=bad, assignment=tau)
        for tau in enumerate_assignments(B):
            reduced = reduce(formula, tau)
            res = solve_in_class(reduced, hetero.witness(reduced))
            if res.satisfiable:
                return SatResult(True, _extend(formula, tau, res.model))
        return SatResult(False)
    if mode == "weak":
        leaf = _weak_leaf(formula, B, hetero)
        if leaf is None:
            return None
        tau, w = leaf
        res = solve_in_class(reduce(formula, tau), w)
        return SatResult(True, _extend(formula, tau, res.model))
    raise ValueError(f"unknown mode {mode!r}")


def _extend(formula: CnfFormula, tau, sub_model) -> dict:
    model = {v: 0 for v in formula.variables}
    model.update(sub_model)
    model.update({v: b for v, b in tau.items() if v in formula.variables})
    assert satisfies(model, formula)
    return model


def leaf_bound(algorithm: str, k: int, hetero: HeteroClass, r: int) -> int:
    """Upper bound on search-tree leaves for the named algorithm."""
    if algorithm in ("horn", "antihorn"):
        return 2 ** k
    if algorithm in ("2cnf", "horn+0val", "antihorn+1val"):
        return 3 ** k
    if algorithm in ("0val", "1val"):
        return 1
    if algorithm == "bounded-length":
        return (len(hetero.members) * max(r, 1)) ** (k + 1)
    return 9 ** k


def exhaustive_sat(formula: CnfFormula) -> SatResult:
    m = brute_force_model(formula)
    return SatResult(m is not None, m)


__all__ = [
    "branch_krom_union",
    "branch_horn_zval",
    "branch_triple",
    "branch_bounded_length",
    "branch_horn",
    "branch_krom",
    "valid_closure",
    "run_branching",
    "brancher_for",
    "detect_strong",
    "detect_weak_bounded",
    "oracle_backdoor",
    "oracle_min_sizes",
    "verify_strong",
    "verify_weak",
    "evaluate_backdoor",
    "leaf_bound",
    "exhaustive_sat",
    "StrongVerdict",
]
