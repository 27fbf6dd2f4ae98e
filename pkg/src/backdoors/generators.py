"""Instance generators: hardness reductions, tractability gadgets, random corpora."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, product

from .cnf import CnfFormula, make_clause
from .csp import Constraint, CspInstance, RelationTable, make_instance
from .errors import NoBarrier, NoObstruction
from .polymorphism import OperationTable, PolyProperty, enumerate_property_ops, parse_props
from .rng import SplitMix64
from .schaefer import HeteroClass, SchaeferClass

HORN = SchaeferClass.HORN
HORN_MINUS = SchaeferClass.HORN_MINUS
KROM2 = SchaeferClass.KROM2
ZERO_VAL = SchaeferClass.ZERO_VAL
ONE_VAL = SchaeferClass.ONE_VAL


# -- set systems -------------------------------------------------------------

@dataclass(frozen=True)
class SetSystem:
    universe: tuple
    sets: tuple
    k: int = 0

    def __post_init__(self):
        universe = tuple(self.universe)
        sets = tuple(frozenset(s) for s in self.sets)
        object.__setattr__(self, "universe", universe)
        object.__setattr__(self, "sets", sets)
        known = set(universe)
        if len(known) != len(universe):
            raise ValueError("universe repeats an element")
        for s in sets:
            if not s:
                raise ValueError("empty set in set system")
            if not s <= known:
                raise ValueError(f"set {sorted(s)} leaves the universe")

    def ordered(self, s) -> list:
        pos = {u: i for i, u in enumerate(self.universe)}
        return sorted(s, key=pos.__getitem__)

    def with_k(self, k: int) -> "SetSystem":
        return SetSystem(self.universe, self.sets, k)


def parse_set_system(text: str) -> SetSystem:
    """First non-blank line holds k; every later line is one set.

    '#' starts a comment. The universe is the elements in order of first
    appearance.
    """
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise ValueError("set system needs a first line with k")
    try:
        k = int(lines[0])
    except ValueError:
        raise ValueError(f"first line must be the integer k, got {lines[0]!r}") from None
    universe, seen, sets = [], set(), []
    for ln in lines[1:]:
        items = ln.split()
        for u in items:
            if u not in seen:
                seen.add(u)
                universe.append(u)
        sets.append(frozenset(items))
    return SetSystem(tuple(universe), tuple(sets), k)


def format_set_system(H: SetSystem) -> str:
    out = [str(H.k)]
    out.extend(" ".join(H.ordered(s)) for s in H.sets)
    return "\n".join(out) + "\n"


def min_hitting_set(H: SetSystem, limit: int | None = None):
    """Smallest hitting set by size-ordered brute force, or None above limit."""
    top = len(H.universe) if limit is None else min(limit, len(H.universe))
    for size in range(top + 1):
        for cand in combinations(H.universe, size):
            chosen = set(cand)
            if all(s & chosen for s in H.sets):
                return frozenset(cand)
    return None


# -- SAT constructions -------------------------------------------------------

def intro_family(n: int) -> CnfFormula:
    """C = (x, -a1..-an) plus D_i = (-x, b_i, c_i); x=1, then a's, b's, c's."""
    if n < 1:
        raise ValueError("n must be at least 1")
    x = 1
    a = [1 + i for i in range(1, n + 1)]
    b = [1 + n + i for i in range(1, n + 1)]
    c = [1 + 2 * n + i for i in range(1, n + 1)]
    clauses = [[x] + [-v for v in a]]
    clauses += [[-x, b[i], c[i]] for i in range(n)]
    return CnfFormula.of(*clauses)


# sign patterns over (x, y, z); True means a positive literal
_PATTERNS = {
    "nnn": (False, False, False),
    "ppp": (True, True, True),
    "ppn": (True, True, False),
    "pp": (True, True),
    "nnp": (False, False, True),
    "nn": (False, False),
    "p": (True,),
    "n": (False,),
}

_OBSTRUCTIONS = {
    (HORN, KROM2): "nnn",
    (ZERO_VAL, KROM2): "nnn",
    (HORN_MINUS, KROM2): "ppp",
    (ONE_VAL, KROM2): "ppp",
    (ZERO_VAL, HORN): "ppn",
    (ONE_VAL, HORN_MINUS): "nnp",
}
for _s in (KROM2, HORN_MINUS, ONE_VAL):
    _OBSTRUCTIONS[(_s, HORN)] = "pp"
for _s in (KROM2, HORN, ZERO_VAL):
    _OBSTRUCTIONS[(_s, HORN_MINUS)] = "nn"
for _s in (KROM2, ONE_VAL, HORN, HORN_MINUS):
    _OBSTRUCTIONS[(_s, ZERO_VAL)] = "p"
for _s in (KROM2, ZERO_VAL, HORN, HORN_MINUS):
    _OBSTRUCTIONS[(_s, ONE_VAL)] = "n"


def obstruction(s, s_prime, start: int = 1) -> frozenset:
    """A clause inside class s and outside s', over variables start, start+1, ..."""
    s, s_prime = SchaeferClass(s), SchaeferClass(s_prime)
    key = _OBSTRUCTIONS.get((s, s_prime))
    if key is None:
        raise NoObstruction(f"no obstruction listed for {s.tag} -> {s_prime.tag}")
    return make_clause(start + i if pos else -(start + i) for i, pos in enumerate(_PATTERNS[key]))


def hs_to_strong_sat(H: SetSystem, pad: bool = True) -> CnfFormula:
    """Formula whose strong backdoors into a bad-pair class track hitting sets.

    Every set Q gets an all-positive clause Q plus |U \\ Q| fresh dummies;
    one all-negative clause covers U. With ``pad`` the universe is first
    extended by fresh unused elements up to k+2, which the equivalence
    needs (with fewer elements the two-literal residues vanish).
    Elements take variables 1.. in universe order, padding last.
    """
    universe = list(H.universe)
    if pad:
        n = 0
        while len(universe) < H.k + 2:
            n += 1
            name = f"_pad{n}"
            if name not in universe:
                universe.append(name)
    var = {u: i + 1 for i, u in enumerate(universe)}
    nxt = len(universe) + 1
    clauses = []
    for q in H.sets:
        extra = len(universe) - len(q)
        dummies = list(range(nxt, nxt + extra))
        nxt += extra
        clauses.append([var[u] for u in H.ordered(q)] + dummies)
    clauses.append([-var[u] for u in universe])
    return CnfFormula.of(*clauses)


def hs_to_weak_sat(H: SetSystem, s) -> CnfFormula:
    """Formula with a weak s-backdoor of size <= k iff H has a hitting set of size <= k.

    One clause per set: its element variables plus k+2 fresh ones, all
    positive (all negative for HORN- and 1-VAL). Bringing such a clause into
    s without satisfying it takes more than k assignments, so a backdoor
    assignment must satisfy every clause; a fresh variable used for that can
    be swapped for any element of its set.
    """
    s = SchaeferClass(s)
    sign = -1 if s in (HORN_MINUS, ONE_VAL) else 1
    var = {u: i + 1 for i, u in enumerate(H.universe)}
    nxt = len(var) + 1
    clauses = []
    for q in H.sets:
        fresh = list(range(nxt, nxt + H.k + 2))
        nxt += H.k + 2
        clauses.append([sign * var[u] for u in H.ordered(q)] + [sign * v for v in fresh])
    return CnfFormula.of(*clauses)


def weak_obstruction_pad(formula: CnfFormula, k: int, s, hetero: HeteroClass) -> CnfFormula:
    """Add k+1 variable-disjoint copies of obstruction(s, s') for each other member s'."""
    s = SchaeferClass(s)
    if s not in hetero.members:
        raise ValueError(f"{s.tag} is not a member of {hetero}")
    nxt = max(formula.variables, default=0) + 1
    extra = []
    for other in hetero.ordered:
        if other == s:
            continue
        for _ in range(k + 1):
            clause = obstruction(s, other, nxt)
            nxt += len(clause)
            extra.append(clause)
    return CnfFormula(list(formula.clauses) + extra)


# -- Boolean barriers and the Boolean CSP reduction -------------------------

@dataclass(frozen=True)
class BooleanBarrier:
    arity: int
    tuples: tuple
    witness: tuple

    def __post_init__(self):
        if any(len(t) != self.arity for t in self.tuples):
            raise ValueError("barrier tuple of wrong arity")
        if any(w not in self.tuples for w in self.witness):
            raise ValueError("witness uses a tuple outside the barrier")

    def image(self, op: OperationTable) -> tuple:
        return tuple(op(*col) for col in zip(*self.witness))

    def blocks(self, op: OperationTable) -> bool:
        return len(self.witness) == op.arity and self.image(op) not in self.tuples

    @property
    def key(self) -> tuple:
        return (self.arity, self.tuples)


@lru_cache(maxsize=None)
def boolean_barrier(op: OperationTable) -> BooleanBarrier:
    """Smallest set of Boolean tuples not closed under ``op``.

    Candidates are tried by size, then arity, then lexicographically; the
    witness is the first n-sequence (product order) whose image leaves the set.
    """
    n = op.arity
    for args in product((0, 1), repeat=n):
        if op(*args) not in (0, 1):
            raise NoBarrier("operation leaves {0,1} on Boolean arguments")
    # a witness uses at most n distinct tuples, and those alone already block;
    # past 2^size coordinates some column repeats and can be dropped
    for size in range(1, n + 1):
        for r in range(1, min(2 ** n, 2 ** size) + 1):
            space = list(product((0, 1), repeat=r))
            if size > len(space):
                continue
            for lam in combinations(space, size):
                members = set(lam)
                for seq in product(lam, repeat=n):
                    img = tuple(op(*col) for col in zip(*seq))
                    if img not in members:
                        return BooleanBarrier(r, lam, seq)
    raise NoBarrier(f"no Boolean barrier of arity <= {2 ** n}")


def barrier_family(props) -> list:
    """Deduplicated minimal barriers of every Boolean operation with the properties."""
    found = {}
    for p in parse_props(props):
        for op in enumerate_property_ops(2, p):
            bar = boolean_barrier(op)
            found.setdefault(bar.key, bar)
    return [found[key] for key in sorted(found)]


def hs_to_csp_boolean(H: SetSystem, props) -> CspInstance:
    """Boolean CSP whose strong backdoors into the property class track hitting sets.

    For each barrier lambda and set Q there is a constraint on
    (o_1..o_r, x_u for u in Q); row i is the i-th tuple of lambda followed
    by |Q| copies of i mod 2.
    """
    props = parse_props(props)
    for p in props:
        if not p.idempotent:
            raise ValueError(f"{p.tag} operations are not idempotent")
    barriers = barrier_family(props)
    variables = [f"x_{u}" for u in H.universe]
    constraints = []
    for b, bar in enumerate(barriers, 1):
        for q, Q in enumerate(H.sets, 1):
            outs = [f"o{j}_{b}_{q}" for j in range(1, bar.arity + 1)]
            variables.extend(outs)
            xs = [f"x_{u}" for u in H.ordered(Q)]
            rows = [t + (i % 2,) * len(xs) for i, t in enumerate(bar.tuples)]
            constraints.append((outs + xs, rows))
    return make_instance(2, variables, constraints)


# -- gadgets for the arity-2 reduction ---------------------------------------

_GADGET_TAGS = {
    PolyProperty.MINMAX: "minmax",
    PolyProperty.MAJORITY: "majority",
    PolyProperty.MINORITY: "minority",
    PolyProperty.MALCEV: "malcev",
}


def _gadget_relations(c: PolyProperty, k: int, literal: bool) -> list:
    if c is PolyProperty.MINMAX:
        rels = [{(0, 0), (i, i + 1), (i + 1, i), (i + 1, i + 1)} for i in range(1, k)]
        # the chain orders 1..k, so the last relation must tie k (not k+1) back to 1
        top = k + 1 if literal else k
        rels.append({(0, 0), (1, top), (top, 1), (1, 1)})
        return rels
    if c is PolyProperty.MAJORITY:
        rels = [{(0, 0), (1, 3), (1, 4), (2, 5)}, {(0, 0), (1, 3), (2, 4), (1, 5)}]
        m = 3 * (k - 2)
        if literal:
            rels.append({(0, 0), (2, m), (1, m + 1), (2, m + 2)})
        else:
            # first column (1,2,2): the forced majority image 2 must meet {m+1, m+2}
            rels.append({(0, 0), (1, m), (2, m + 1), (2, m + 2)})
        for i in range(4, k + 1):
            lo, hi = 3 * (i - 3), 3 * (i - 2)
            rels.append({(0, 0)} | {(lo + j, hi + j) for j in range(3)})
        return rels
    # minority and Mal'cev share one chain
    rels = [{(0, 0), (1, 3), (1, 4), (2, 5)}]
    for i in range(2, k):
        lo, hi = 3 * (i - 1), 3 * i
        rels.append({(0, 0)} | {(lo + j, hi + j) for j in range(3)})
    m = 3 * (k - 1)
    if literal:
        rels.append({(0, 0), (1, m), (2, m + 1), (1, m + 1)})
    else:
        rels.append({(0, 0), (1, m), (2, m + 1), (1, m + 2)})
    return rels


def _gadget_domain(c: PolyProperty, k: int, literal: bool) -> int:
    if c is PolyProperty.MINMAX:
        return k + 2 if literal else k + 1
    if c is PolyProperty.MAJORITY:
        return 3 * k - 3
    return 3 * k + 3


def closure_gadget(c, k: int, literal: bool = False) -> CspInstance:
    """Binary instance outside the class whose every one-variable reduction is inside.

    Variables v1..v2k, constraint i on (v_{2i-1}, v_{2i}); every relation
    contains (0, 0). ``literal=True`` gives the last relation exactly as
    usually stated; those tables are closed under some operation of the
    class (minmax, majority) or break the one-variable claim (minority,
    Mal'cev). The default repairs the last relation.
    """
    c = PolyProperty.from_tag(c) if isinstance(c, str) else PolyProperty(c)
    if c not in _GADGET_TAGS:
        raise ValueError("gadgets exist for minmax, majority, minority and malcev")
    if k < 3:
        raise ValueError("gadget needs k >= 3")
    variables = [f"v{i}" for i in range(1, 2 * k + 1)]
    rels = _gadget_relations(c, k, literal)
    cons = [((variables[2 * i], variables[2 * i + 1]), sorted(r)) for i, r in enumerate(rels)]
    return make_instance(_gadget_domain(c, k, literal), variables, cons)


def hs_to_csp_arity2(H: SetSystem, c) -> CspInstance:
    """Binary CSP: one gadget per set, its left ends glued onto x_u.

    Nonzero values are shifted per set so different sets share only 0.
    """
    c = PolyProperty.from_tag(c) if isinstance(c, str) else PolyProperty(c)
    for s in H.sets:
        if len(s) < 3:
            raise ValueError(f"set {sorted(s)} has fewer than 3 elements")
    variables = [f"x_{u}" for u in H.universe]
    constraints = []
    offset = 0
    for j, s in enumerate(H.sets, 1):
        elems = H.ordered(s)
        g = closure_gadget(c, len(elems))

        def shift(a, off=offset):
            return a + off if a else 0

        for i, (u, con) in enumerate(zip(elems, g.constraints), 1):
            y = f"y{j}_{i}"
            variables.append(y)
            rows = [(shift(a), shift(b)) for a, b in con.relation.tuples]
            constraints.append(Constraint((f"x_{u}", y), RelationTable.of(2, rows)))
        offset += g.domain_size - 1
    return CspInstance(tuple(variables), offset + 1, tuple(constraints))


def partition_gap_instance(n: int, c="majority") -> CspInstance:
    """Boolean instance with a strong backdoor {x} but large partition backdoors.

    Variables x, y1..y_{n-1}; ternary constraints on (x, y_i, y_{i+1}). No
    constraint alone is in the class, while either value of x leaves only
    closed relations. The relation is one-in-three, or {011, 100} for
    min/max and constant (whose reductions are single tuples).
    """
    c = PolyProperty.from_tag(c) if isinstance(c, str) else PolyProperty(c)
    if n < 3:
        raise ValueError("need at least 3 variables")
    if c in (PolyProperty.MINMAX, PolyProperty.CONSTANT):
        rel = [(0, 1, 1), (1, 0, 0)]
    else:
        rel = [(0, 0, 1), (0, 1, 0), (1, 0, 0)]
    ys = [f"y{i}" for i in range(1, n)]
    cons = [(("x", ys[i], ys[i + 1]), rel) for i in range(n - 2)]
    return make_instance(2, ["x"] + ys, cons)


# -- random corpora ----------------------------------------------------------

def random_cnf(seed: int, max_vars: int = 12, max_clauses: int = 20, max_len: int = 4,
               min_len: int = 1) -> CnfFormula:
    """Seeded random CNF.

    Draws n in [1, max_vars], m in [0, max_clauses]; each clause draws a
    length in [min_len, min(max_len, n)], distinct variables by partial
    Fisher-Yates, and a fair sign per literal.
    """
    if max_vars < 1 or max_len < 1 or max_clauses < 0 or not 1 <= min_len <= max_len:
        raise ValueError("inconsistent random CNF parameters")
    rng = SplitMix64(seed)
    n = rng.between(1, max_vars)
    m = rng.between(0, max_clauses)
    clauses = []
    for _ in range(m):
        length = rng.between(min(min_len, n), min(max_len, n))
        vs = rng.sample(range(1, n + 1), length)
        clauses.append([v if rng.chance(0.5) else -v for v in vs])
    return CnfFormula.of(*clauses)


def random_csp(seed: int, max_vars: int = 7, max_constraints: int = 6, max_arity: int = 3,
               max_domain: int = 3, density: float = 0.5) -> CspInstance:
    """Seeded random CSP.

    Draws d in [2, max_domain], n in [1, max_vars], m in [0, max_constraints];
    per constraint an arity in [1, min(max_arity, n)], a scope sample, and
    each of the d^arity tuples independently with probability ``density``.
    """
    if max_vars < 1 or max_arity < 1 or max_domain < 2 or max_constraints < 0:
        raise ValueError("inconsistent random CSP parameters")
    rng = SplitMix64(seed)
    d = rng.between(2, max_domain)
    n = rng.between(1, max_vars)
    m = rng.between(0, max_constraints)
    variables = [f"v{i}" for i in range(1, n + 1)]
    cons = []
    for _ in range(m):
        arity = rng.between(1, min(max_arity, n))
        scope = rng.sample(variables, arity)
        rows = [t for t in product(range(d), repeat=arity) if rng.chance(density)]
        cons.append((scope, rows))
    return make_instance(d, variables, cons)


def random_set_system(seed: int, max_universe: int = 8, max_sets: int = 5, k: int | None = None,
                      min_size: int = 1, max_size: int | None = None) -> SetSystem:
    """Seeded random set system over u1..un; k is drawn in [0, 3] unless given."""
    if max_universe < 1 or max_sets < 1:
        raise ValueError("inconsistent random set-system parameters")
    rng = SplitMix64(seed)
    n = rng.between(max(1, min_size), max(max_universe, min_size))
    universe = [f"u{i}" for i in range(1, n + 1)]
    top = n if max_size is None else min(max_size, n)
    if min_size > top:
        raise ValueError("min_size exceeds the universe")
    m = rng.between(1, max_sets)
    sets = [frozenset(rng.sample(universe, rng.between(min_size, top))) for _ in range(m)]
    if k is None:
        k = rng.between(0, 3)
    return SetSystem(tuple(universe), tuple(sets), k)

