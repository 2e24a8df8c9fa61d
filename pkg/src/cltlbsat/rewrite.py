"""Source-to-source transformations: positive normal form, proposition
elimination, and left-shifting of past-directed terms."""

from __future__ import annotations

from .formulas import (
    FALSE, TRUE, And, Atom, AtomicRelation, EQ_CONST, Formula, FormulaError,
    G, Next, Not, Or, Prev, Prop, Release, Since, Term, Trigger, Until,
    WeakPrev, bounds, props_of, variables_of,
)

FRESH_PREFIX = "__p_"


def to_pnf(f: Formula) -> Formula:
    """Push negations down to propositions and atoms using the dual
    operators; the result is semantically equivalent at every position."""
    return _pnf(f, negate=False)


def _pnf(f: Formula, negate: bool) -> Formula:
    if isinstance(f, (Prop, Atom)):
        return Not(f) if negate else f
    if f == TRUE:
        return FALSE if negate else TRUE
    if f == FALSE:
        return TRUE if negate else FALSE
    if isinstance(f, Not):
        return _pnf(f.child, not negate)
    if isinstance(f, And):
        cls = Or if negate else And
        return cls(_pnf(f.left, negate), _pnf(f.right, negate))
    if isinstance(f, Or):
        cls = And if negate else Or
        return cls(_pnf(f.left, negate), _pnf(f.right, negate))
    if isinstance(f, Next):
        # self-dual over infinite words
        return Next(_pnf(f.child, negate))
    if isinstance(f, Prev):
        cls = WeakPrev if negate else Prev
        return cls(_pnf(f.child, negate))
    if isinstance(f, WeakPrev):
        cls = Prev if negate else WeakPrev
        return cls(_pnf(f.child, negate))
    if isinstance(f, Until):
        cls = Release if negate else Until
        return cls(_pnf(f.left, negate), _pnf(f.right, negate))
    if isinstance(f, Release):
        cls = Until if negate else Release
        return cls(_pnf(f.left, negate), _pnf(f.right, negate))
    if isinstance(f, Since):
        cls = Trigger if negate else Since
        return cls(_pnf(f.left, negate), _pnf(f.right, negate))
    if isinstance(f, Trigger):
        cls = Since if negate else Trigger
        return cls(_pnf(f.left, negate), _pnf(f.right, negate))
    raise FormulaError(f"cannot normalize node {type(f).__name__}")


def is_pnf(f: Formula) -> bool:
    if isinstance(f, Not):
        return isinstance(f.child, (Prop, Atom))
    return all(is_pnf(c) for c in f.children())


def remove_propositions(f: Formula):
    """Replace every proposition ``p`` by the constraint ``x_p = 1`` over a
    fresh variable, conjoining the 0/1 range restriction for each.

    Returns the rewritten formula and the map ``p -> x_p`` used to recover
    propositional valuations from witnesses.
    """
    props = props_of(f)
    if not props:
        return f, {}
    fresh = {p: FRESH_PREFIX + p for p in props}
    clash = set(fresh.values()) & set(variables_of(f))
    if clash:
        raise FormulaError(f"fresh proposition variables collide: {sorted(clash)}")

    def subst(g: Formula) -> Formula:
        if isinstance(g, Prop):
            return _eq_one(fresh[g.name])
        if isinstance(g, Not):
            return Not(subst(g.child))
        if not g.children():
            return g
        cls = type(g)
        return cls(*[subst(c) for c in g.children()])

    ranges = None
    for p in props:
        x = fresh[p]
        rng = Or(_eq_one(x), _eq_const_zero(x))
        ranges = rng if ranges is None else And(ranges, rng)
    return And(subst(f), G(ranges)), fresh


def _eq_one(var: str) -> Atom:
    return Atom(AtomicRelation(EQ_CONST, (Term(var, 0),), d=1))


def _eq_const_zero(var: str) -> Atom:
    return Atom(AtomicRelation(EQ_CONST, (Term(var, 0),), d=0))


def shift_left(f: Formula):
    """Eliminate past-directed terms by re-basing every term shift at the
    formula's look-back; temporal operators on formulae are untouched.

    Returns the rewritten formula and the applied offset (the original
    look-back), under which the two formulae are equisatisfiable.
    """
    offset = bounds(f).look_back
    if offset == 0:
        return f, 0

    def shift(g: Formula) -> Formula:
        if isinstance(g, Atom):
            return Atom(g.rel.map_terms(lambda t: t.shifted(-offset)))
        if not g.children():
            return g
        cls = type(g)
        return cls(*[shift(c) for c in g.children()])

    return shift(f), offset
