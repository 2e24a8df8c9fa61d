"""Core formula representation: temporal terms, atomic constraints, the
CLTLB AST, depth/window arithmetic, term closure and variable partitions."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Union

Value = Union[int, Fraction]


class FormulaError(ValueError):
    """Raised for structurally invalid terms, atoms or formulae."""


# ---------------------------------------------------------------------------
# theories
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Theory:
    """An interpretation domain together with its relation family."""

    name: str
    discrete: bool
    has_completion_property: bool
    sort: str  # SMT-LIB sort of domain values

    @property
    def allows_mod(self) -> bool:
        return self.discrete

    @property
    def nonnegative(self) -> bool:
        return self.name == "nat"


THEORIES = {
    "ipc": Theory("ipc", discrete=True, has_completion_property=False, sort="Int"),
    "int": Theory("int", discrete=True, has_completion_property=False, sort="Int"),
    "nat": Theory("nat", discrete=True, has_completion_property=False, sort="Int"),
    "rat": Theory("rat", discrete=False, has_completion_property=True, sort="Real"),
    "real": Theory("real", discrete=False, has_completion_property=True, sort="Real"),
}


def theory_by_name(name: str) -> Theory:
    try:
        return THEORIES[name]
    except KeyError:
        raise FormulaError(
            f"unknown theory {name!r}; expected one of {sorted(THEORIES)}"
        ) from None


# ---------------------------------------------------------------------------
# temporal terms
# ---------------------------------------------------------------------------

@dataclass(frozen=True, order=True)
class Term:
    """A variable or constant under a net temporal shift.

    ``depth`` counts next-shifts minus previous-shifts; constants always
    carry depth 0 because their value is position-independent.
    """

    base: Union[str, int]
    depth: int = 0

    def __post_init__(self):
        if self.is_const and self.depth != 0:
            raise FormulaError("constant terms cannot be shifted")

    @property
    def is_const(self) -> bool:
        return not isinstance(self.base, str)

    @property
    def var(self) -> str:
        if self.is_const:
            raise FormulaError(f"term {self} is a constant")
        return self.base

    def shifted(self, delta: int) -> "Term":
        if self.is_const:
            return self
        return Term(self.base, self.depth + delta)

    def __str__(self) -> str:
        if self.is_const:
            return str(self.base)
        if self.depth > 0:
            return "X(" * self.depth + self.base + ")" * self.depth
        if self.depth < 0:
            return "Y(" * -self.depth + self.base + ")" * -self.depth
        return self.base


def normalize_term(raw) -> Term:
    """Flatten nested next/previous applications into a single net shift.

    ``raw`` is a variable name, a constant, an already-built Term, or a
    ``('X', inner)`` / ``('Y', inner)`` pair.  Alternating shifts cancel.
    """
    if isinstance(raw, Term):
        return raw
    if isinstance(raw, str):
        return Term(raw, 0)
    if isinstance(raw, int):
        return Term(raw, 0)
    if isinstance(raw, tuple) and len(raw) == 2 and raw[0] in ("X", "Y"):
        inner = normalize_term(raw[1])
        return inner.shifted(1 if raw[0] == "X" else -1)
    raise FormulaError(f"not a term: {raw!r}")


# ---------------------------------------------------------------------------
# atomic constraints
# ---------------------------------------------------------------------------

LT = "lt"                # t1 < t2
EQ = "eq"                # t1 = t2
LT_CONST = "lt_const"    # t < d
EQ_CONST = "eq_const"    # t = d
MOD_CONST = "mod_const"  # t mod c = d          (t ≡_c d)
MOD_TERM = "mod_term"    # t1 mod c = t2 + d    (t1 ≡_c t2 + d)

_BINARY_KINDS = (LT, EQ, MOD_TERM)
_MOD_KINDS = (MOD_CONST, MOD_TERM)


@dataclass(frozen=True, order=True)
class AtomicRelation:
    """One atomic constraint over temporal terms."""

    kind: str
    terms: tuple
    c: int = 0  # modulus, mod kinds only
    d: int = 0  # comparison constant or additive offset

    def __post_init__(self):
        if self.kind in _BINARY_KINDS:
            if len(self.terms) != 2:
                raise FormulaError(f"{self.kind} takes two terms")
        elif self.kind in (LT_CONST, EQ_CONST, MOD_CONST):
            if len(self.terms) != 1:
                raise FormulaError(f"{self.kind} takes one term")
        else:
            raise FormulaError(f"unknown atom kind {self.kind!r}")
        if self.kind in _MOD_KINDS and self.c < 1:
            raise FormulaError("modulus must be a positive integer")

    @property
    def is_mod(self) -> bool:
        return self.kind in _MOD_KINDS

    def comparison_constants(self) -> tuple:
        """Domain constants the atom compares against (moduli excluded)."""
        consts = [t.base for t in self.terms if t.is_const]
        if self.kind in (LT_CONST, EQ_CONST):
            consts.append(self.d)
        return tuple(consts)

    def evaluate(self, value_of) -> bool:
        """Truth under ``value_of: Term -> value``."""
        vals = [t.base if t.is_const else value_of(t) for t in self.terms]
        if self.kind == LT:
            return vals[0] < vals[1]
        if self.kind == EQ:
            return vals[0] == vals[1]
        if self.kind == LT_CONST:
            return vals[0] < self.d
        if self.kind == EQ_CONST:
            return vals[0] == self.d
        if self.kind == MOD_CONST:
            return (vals[0] - self.d) % self.c == 0
        return (vals[0] - vals[1] - self.d) % self.c == 0

    def map_terms(self, fn) -> "AtomicRelation":
        return AtomicRelation(self.kind, tuple(fn(t) for t in self.terms),
                              self.c, self.d)

    def __str__(self) -> str:
        if self.kind == LT:
            return f"({self.terms[0]} < {self.terms[1]})"
        if self.kind == EQ:
            return f"({self.terms[0]} = {self.terms[1]})"
        if self.kind == LT_CONST:
            return f"({self.terms[0]} < {self.d})"
        if self.kind == EQ_CONST:
            return f"({self.terms[0]} = {self.d})"
        if self.kind == MOD_CONST:
            return f"({self.terms[0]} mod {self.c} = {self.d})"
        off = f" + {self.d}" if self.d >= 0 else f" - {-self.d}"
        if self.d == 0:
            off = ""
        return f"({self.terms[0]} mod {self.c} = {self.terms[1]}{off})"


def lt(t1, t2) -> AtomicRelation:
    return AtomicRelation(LT, (normalize_term(t1), normalize_term(t2)))


def eq(t1, t2) -> AtomicRelation:
    return AtomicRelation(EQ, (normalize_term(t1), normalize_term(t2)))


def lt_const(t, d: int) -> AtomicRelation:
    return AtomicRelation(LT_CONST, (normalize_term(t),), d=d)


def eq_const(t, d: int) -> AtomicRelation:
    return AtomicRelation(EQ_CONST, (normalize_term(t),), d=d)


# ---------------------------------------------------------------------------
# formulae
# ---------------------------------------------------------------------------

class Formula:
    """Base class; nodes are immutable and hashable."""

    __slots__ = ()

    def __and__(self, other: "Formula") -> "Formula":
        return And(self, other)

    def __or__(self, other: "Formula") -> "Formula":
        return Or(self, other)

    def __invert__(self) -> "Formula":
        return Not(self)

    def children(self) -> tuple:
        return ()

    def __str__(self) -> str:
        from .parsing import render
        return render(self)


@dataclass(frozen=True)
class TrueF(Formula):
    def __str__(self):
        return "true"


@dataclass(frozen=True)
class FalseF(Formula):
    def __str__(self):
        return "false"


TRUE = TrueF()
FALSE = FalseF()


@dataclass(frozen=True)
class Prop(Formula):
    name: str


@dataclass(frozen=True)
class Atom(Formula):
    rel: AtomicRelation


@dataclass(frozen=True)
class Not(Formula):
    child: Formula

    def children(self):
        return (self.child,)


@dataclass(frozen=True)
class _Unary(Formula):
    child: Formula

    def children(self):
        return (self.child,)


@dataclass(frozen=True)
class _Binary(Formula):
    left: Formula
    right: Formula

    def children(self):
        return (self.left, self.right)


class And(_Binary):
    pass


class Or(_Binary):
    pass


class Next(_Unary):
    pass


class Prev(_Unary):
    pass


class WeakPrev(_Unary):
    pass


class Until(_Binary):
    pass


class Since(_Binary):
    pass


class Release(_Binary):
    pass


class Trigger(_Binary):
    pass


TEMPORAL_NODES = (Next, Prev, WeakPrev, Until, Since, Release, Trigger)
FUTURE_NODES = (Next, Until, Release)
PAST_NODES = (Prev, WeakPrev, Since, Trigger)


def G(f: Formula) -> Formula:
    """Globally, desugared to its release form."""
    return Release(FALSE, f)


def F(f: Formula) -> Formula:
    """Eventually, desugared to its until form."""
    return Until(TRUE, f)


def H(f: Formula) -> Formula:
    """Historically, desugared to its trigger form."""
    return Trigger(FALSE, f)


def O(f: Formula) -> Formula:
    """Once, desugared to its since form."""
    return Since(TRUE, f)


def walk(f: Formula) -> Iterator[Formula]:
    """Post-order traversal, children before parents, with repeats."""
    for child in f.children():
        yield from walk(child)
    yield f


def subformulae(f: Formula) -> list:
    """Distinct subformulae in bottom-up order (children precede parents)."""
    seen = {}
    for node in walk(f):
        if node not in seen:
            seen[node] = len(seen)
    return list(seen)


def atoms_of(f: Formula) -> list:
    out = {}
    for node in walk(f):
        if isinstance(node, Atom) and node.rel not in out:
            out[node.rel] = None
    return list(out)


def props_of(f: Formula) -> list:
    out = {}
    for node in walk(f):
        if isinstance(node, Prop) and node.name not in out:
            out[node.name] = None
    return list(out)


def variables_of(f: Formula) -> list:
    """Variables occurring in atoms, sorted by name."""
    names = set()
    for rel in atoms_of(f):
        for t in rel.terms:
            if not t.is_const:
                names.add(t.var)
    return sorted(names)


# ---------------------------------------------------------------------------
# depth window
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Bounds:
    """Temporal window of a formula's terms, in positions."""

    look_back: int   # <= 0
    look_ahead: int  # >= 0

    @property
    def width(self) -> int:
        return self.look_ahead - self.look_back + 1


def term_depths(f: Formula) -> list:
    return [t.depth for rel in atoms_of(f) for t in rel.terms if not t.is_const]


def bounds(f: Formula) -> Bounds:
    depths = term_depths(f)
    return Bounds(min(0, *depths) if depths else 0,
                  max(0, *depths) if depths else 0)


def terms_of(f: Formula) -> list:
    """Closure of shifted variable terms over the formula's full window.

    Every variable contributes one term per shift in
    ``[look_back, look_ahead]``, whether or not that shift occurs
    literally; boundary valuations need the complete grid.
    """
    b = bounds(f)
    return [Term(x, d)
            for x in variables_of(f)
            for d in range(b.look_back, b.look_ahead + 1)]


def constants_of(f: Formula, mode: str = "occurring",
                 theory: Theory | None = None) -> list:
    """Domain constants of the formula.

    ``occurring`` collects comparison constants literally present;
    ``interval`` widens to every integer between the least and greatest
    occurring constant (discrete domains only).  Moduli and residue
    offsets of mod-constraints are relation parameters, not domain
    anchors, and are excluded.
    """
    consts = set()
    for rel in atoms_of(f):
        if rel.is_mod:
            continue
        consts.update(rel.comparison_constants())
    if mode == "occurring":
        return sorted(consts)
    if mode != "interval":
        raise FormulaError(f"unknown constants mode {mode!r}")
    if theory is not None and not theory.discrete:
        raise FormulaError("interval extension undefined for dense domains")
    if any(not isinstance(c, int) for c in consts):
        raise FormulaError("interval extension undefined for dense domains")
    if not consts:
        return []
    return list(range(min(consts), max(consts) + 1))


# ---------------------------------------------------------------------------
# variable partition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VarPartition:
    """Disjoint variable classes induced by co-occurrence in atoms, with
    the constants each class is compared against."""

    classes: tuple          # tuple[frozenset[str]]
    class_consts: tuple     # tuple[frozenset[value]], aligned with classes

    def class_index(self, var: str) -> int:
        for i, cls in enumerate(self.classes):
            if var in cls:
                return i
        raise FormulaError(f"variable {var!r} not in partition")

    def subject_classes(self, subject) -> frozenset:
        """Indices of classes a variable or constant belongs to."""
        if isinstance(subject, str):
            return frozenset({self.class_index(subject)})
        return frozenset(i for i, cs in enumerate(self.class_consts)
                         if subject in cs)

    def same_class(self, a, b) -> bool:
        return bool(self.subject_classes(a) & self.subject_classes(b))


def partition_variables(f: Formula) -> VarPartition:
    """Union-find closure: variables sharing an atom share a class, and
    each comparison constant attaches to the classes it meets."""
    variables = variables_of(f)
    parent = {x: x for x in variables}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[rb] = ra

    atom_consts = {x: set() for x in variables}
    for rel in atoms_of(f):
        rel_vars = [t.var for t in rel.terms if not t.is_const]
        for a, b in zip(rel_vars, rel_vars[1:]):
            union(a, b)
        if rel.is_mod:
            continue
        for x in rel_vars:
            atom_consts[x].update(rel.comparison_constants())

    groups = {}
    for x in variables:
        groups.setdefault(find(x), []).append(x)
    classes = sorted(groups.values(), key=lambda g: sorted(g)[0])
    consts = [frozenset().union(*(atom_consts[x] for x in cls))
              for cls in classes]
    return VarPartition(tuple(frozenset(c) for c in classes), tuple(consts))
