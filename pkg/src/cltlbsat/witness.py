"""Witness extraction and independent verification.

A sat model yields a bounded valuation table, a loop position and claimed
subformula truths.  Everything here re-derives the verdict from the table
alone: a recursive lasso evaluation of the formula, the induced symbolic
valuation sequence with its periodicity check, and a graph search for the
forbidden increasing-below-decreasing pattern on discrete domains.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .encoder import EncodingContext
from .existence import PointRef
from .formulas import (
    And, Atom, AtomicRelation, EQ, EQ_CONST, FALSE, Formula, FormulaError,
    LT, LT_CONST, MOD_CONST, Next, Not, Or, Prev, Prop, Release, Since, TRUE,
    Term, Trigger, Until, VarPartition, WeakPrev, bounds, subformulae,
)
from .smtbackend import SolverError, SolverResult


@dataclass
class Witness:
    """Bounded valuation table plus loop position for a formula."""

    k: int
    loop: int
    look_back: int
    look_ahead: int
    sigma: dict                      # var -> {absolute position: value}
    subformula_truth: dict = field(default_factory=dict)
    prop_back: list | None = None    # sets of proposition names, 0..k
    verified: bool = False

    def value(self, var: str, pos: int):
        try:
            return self.sigma[var][pos]
        except KeyError:
            raise FormulaError(f"witness has no value for {var} at {pos}") from None

    def positions(self):
        return range(self.look_back, self.k + self.look_ahead + 1)

    def to_json(self) -> dict:
        def enc(v):
            return v if isinstance(v, (int, bool)) else str(v)
        return {
            "k": self.k,
            "loop": self.loop,
            "look_back": self.look_back,
            "look_ahead": self.look_ahead,
            "sigma": {x: [enc(self.sigma[x][p]) for p in self.positions()]
                      for x in sorted(self.sigma)},
            "props": ([sorted(s) for s in self.prop_back]
                      if self.prop_back is not None else None),
            "verified": self.verified,
        }


def extract_witness(result: SolverResult, ctx: EncodingContext) -> Witness:
    """Assemble the valuation table of the encoded formula from model
    values of the canonical term-function applications."""
    if result.verdict != "sat" or result.model is None:
        raise SolverError("cannot extract a witness from a non-sat result")
    model = result.model

    def lookup(app):
        key = (app, ()) if isinstance(app, str) else (app[0], tuple(app[1:]))
        if key not in model:
            raise SolverError(f"incomplete model: missing {key}")
        return model[key]

    loop_val = lookup("loop")
    loop = int(loop_val)
    b = ctx.bounds
    sigma = {}
    for x in ctx.variables:
        row = {}
        for pos in range(b.look_back, ctx.k + b.look_ahead + 1):
            val = lookup(ctx.sigma_app(x, pos))
            if isinstance(val, Fraction) and val.denominator == 1:
                val = int(val)
            row[pos] = val
        sigma[x] = row
    truth = {}
    for sub in ctx.subs:
        truth[sub] = [bool(lookup(ctx.pred_app(sub, i)))
                      for i in range(ctx.k + 2)]
    return Witness(ctx.k, loop, b.look_back, b.look_ahead, sigma,
                   subformula_truth=truth)


def reframe_witness(w: Witness, offset: int, original_bounds) -> Witness:
    """Move a witness of the left-shifted formula back to the original
    origin: position p of the original corresponds to p - offset."""
    if offset == 0:
        return w
    sigma = {x: {pos + offset: v for pos, v in row.items()}
             for x, row in w.sigma.items()}
    return Witness(w.k, w.loop, original_bounds.look_back,
                   original_bounds.look_ahead, sigma)


# ---------------------------------------------------------------------------
# lasso evaluation
# ---------------------------------------------------------------------------

def evaluate_lasso(formula: Formula, w: Witness, prop_map=None):
    """Truth of every subformula at positions 0..k on the word that
    repeats the loop segment forever.

    Future operators wrap position k+1 to the loop; until takes the least
    and release the greatest fixpoint around the cycle.  Past operators
    recurse down the linear prefix.  Returns the table and whether the
    seam is stable: the value each past operator derives at k+1 must
    match its value at the loop, otherwise the table does not describe a
    coherent periodic word.
    """
    prop_map = prop_map or {}
    k, loop = w.k, w.loop
    if not 1 <= loop <= k:
        raise FormulaError(f"loop {loop} outside [1, {k}]")
    succ = list(range(1, k + 1)) + [loop]
    table = {}

    def atom_row(rel: AtomicRelation):
        return [rel.evaluate(lambda t, i=i: w.value(t.var, i + t.depth))
                for i in range(k + 1)]

    for sub in subformulae(formula):
        if sub == TRUE:
            row = [True] * (k + 1)
        elif sub == FALSE:
            row = [False] * (k + 1)
        elif isinstance(sub, Prop):
            if sub.name not in prop_map:
                raise FormulaError(f"no fresh variable recorded for {sub.name!r}")
            xp = prop_map[sub.name]
            row = [w.value(xp, i) == 1 for i in range(k + 1)]
        elif isinstance(sub, Atom):
            row = atom_row(sub.rel)
        elif isinstance(sub, Not):
            row = [not v for v in table[sub.child]]
        elif isinstance(sub, And):
            row = [a and b for a, b in zip(table[sub.left], table[sub.right])]
        elif isinstance(sub, Or):
            row = [a or b for a, b in zip(table[sub.left], table[sub.right])]
        elif isinstance(sub, Next):
            c = table[sub.child]
            row = [c[succ[i]] for i in range(k + 1)]
        elif isinstance(sub, (Until, Release)):
            l, r = table[sub.left], table[sub.right]
            least = isinstance(sub, Until)
            row = [not least] * (k + 1)
            for _ in range(k + 2):
                changed = False
                for i in range(k, -1, -1):
                    if least:
                        v = r[i] or (l[i] and row[succ[i]])
                    else:
                        v = r[i] and (l[i] or row[succ[i]])
                    if v != row[i]:
                        row[i] = v
                        changed = True
                if not changed:
                    break
        elif isinstance(sub, (Prev, WeakPrev)):
            c = table[sub.child]
            row = [isinstance(sub, WeakPrev)] + [c[i - 1] for i in range(1, k + 1)]
        elif isinstance(sub, (Since, Trigger)):
            l, r = table[sub.left], table[sub.right]
            row = [r[0]]
            for i in range(1, k + 1):
                if isinstance(sub, Since):
                    row.append(r[i] or (l[i] and row[i - 1]))
                else:
                    row.append(r[i] and (l[i] or row[i - 1]))
        else:
            raise FormulaError(f"cannot evaluate node {type(sub).__name__}")
        table[sub] = row

    seam_ok = True
    for sub, row in table.items():
        pin = lambda node: table[node][loop]
        if isinstance(sub, (Prev, WeakPrev)):
            seam_ok &= table[sub.child][k] == pin(sub)
        elif isinstance(sub, Since):
            v = pin(sub.right) or (pin(sub.left) and row[k])
            seam_ok &= v == pin(sub)
        elif isinstance(sub, Trigger):
            v = pin(sub.right) and (pin(sub.left) or row[k])
            seam_ok &= v == pin(sub)
    return table, bool(seam_ok)


def verify_lasso(formula: Formula, w: Witness, prop_map=None) -> bool:
    """Independent acceptance check: the formula holds at the origin of
    the repeated word and the seam is stable.  Never consults encoder
    tables; atoms are re-evaluated against the valuation directly."""
    try:
        table, seam_ok = evaluate_lasso(formula, w, prop_map)
    except FormulaError:
        return False
    return bool(table[formula][0]) and seam_ok


def fill_truth_table(formula: Formula, w: Witness, prop_map=None) -> None:
    """Store the evaluator's table on the witness, extended to k+1 with
    the loop column."""
    table, _ = evaluate_lasso(formula, w, prop_map)
    w.subformula_truth = {sub: row + [row[w.loop]] for sub, row in table.items()}


# ---------------------------------------------------------------------------
# induced symbolic valuations
# ---------------------------------------------------------------------------

def sv_atom_family(terms, consts) -> list:
    """Order and equality atoms whose truth values determine a symbolic
    valuation: two per point pair, completed by trichotomy."""
    out = []
    for i in range(len(terms)):
        for j in range(i + 1, len(terms)):
            out.append(AtomicRelation(LT, (terms[i], terms[j])))
            out.append(AtomicRelation(EQ, (terms[i], terms[j])))
    for t in terms:
        for c in consts:
            out.append(AtomicRelation(LT_CONST, (t,), d=c))
            out.append(AtomicRelation(EQ_CONST, (t,), d=c))
    return out


@dataclass
class SymbolicLasso:
    """Valuation letters induced by a bounded valuation, with the value
    table retained for point-level comparisons."""

    valuations: list      # frozensets of AtomicRelation, positions 0..k
    loop: int
    k: int
    look_back: int
    look_ahead: int
    subjects: list        # variables then constants
    values: dict          # (subject, absolute position) -> value

    @property
    def periodic(self) -> bool:
        return self.valuations[self.loop - 1] == self.valuations[self.k]

    def point_value(self, p: PointRef):
        if isinstance(p.subject, str):
            return self.values[(p.subject, p.pos)]
        return p.subject


def induced_symbolic_model(w: Witness, formula: Formula,
                           consts_mode: str = "occurring",
                           theory=None) -> SymbolicLasso:
    """The unique locally consistent valuation sequence the table
    satisfies: at each position, the set of family atoms made true."""
    from .formulas import constants_of, terms_of

    terms = terms_of(formula)
    consts = constants_of(formula, consts_mode, theory)
    family = sv_atom_family(terms, consts)
    moduli = sorted({rel.c for rel in _mod_rels(formula)})
    valuations = []
    for i in range(w.k + 1):
        value_of = lambda t, i=i: w.value(t.var, i + t.depth)
        held = {rel for rel in family if rel.evaluate(value_of)}
        for t in terms:
            for c in moduli:
                held.add(AtomicRelation(MOD_CONST, (t,), c=c,
                                        d=int(value_of(t)) % c))
        valuations.append(frozenset(held))
    variables = sorted(w.sigma)
    values = {(x, pos): w.sigma[x][pos] for x in variables for pos in w.sigma[x]}
    return SymbolicLasso(valuations, w.loop, w.k, w.look_back, w.look_ahead,
                         variables + list(consts), values)


def _mod_rels(formula: Formula):
    out = {}
    for sub in subformulae(formula):
        if isinstance(sub, Atom) and sub.rel.is_mod:
            out[sub.rel] = None
    return list(out)


# ---------------------------------------------------------------------------
# graph-side existence check
# ---------------------------------------------------------------------------

def check_property_c_graph(lasso: SymbolicLasso,
                           partition: VarPartition | None = None,
                           mode: str = "strong",
                           theory=None) -> bool:
    """Search the finite point graph for the forbidden pattern: a forward
    chain and a backward chain both looping from the seam valuation to the
    last one, at least one strict, with a strictly-less edge between their
    seam points.  True means the lasso admits no arithmetic model.

    Only meaningful over discrete domains; dense domains never need it.
    """
    if theory is not None and not theory.discrete:
        raise FormulaError("existence check applies to discrete domains only")
    if mode == "weak" and partition is None:
        raise FormulaError("weak mode requires a variable partition")
    k, loop = lasso.k, lasso.loop
    lam = lasso.look_ahead - lasso.look_back + 1
    window = range(lasso.look_back, lasso.look_ahead + 1)
    subjects = lasso.subjects

    def allowed(a, b) -> bool:
        if mode != "weak":
            return True
        return partition.same_class(a, b)

    points = [PointRef(s, j, h) for s in subjects
              for j in range(k + 1) for h in window]
    val = {p: lasso.point_value(p) for p in points}

    def reach(start: PointRef, forward: bool):
        """Doubled-graph reachability: point -> strict-edge-seen flag."""
        best = {start: False}
        frontier = [(start, False)]
        while frontier:
            p, strict = frontier.pop()
            for q in points:
                d = q.pos - p.pos
                if d < 0 or d >= lam or not allowed(p.subject, q.subject):
                    continue
                if forward:
                    if val[p] > val[q]:
                        continue
                    step_strict = val[p] < val[q]
                else:
                    if val[p] < val[q]:
                        continue
                    step_strict = val[p] > val[q]
                flag = strict or step_strict
                if q not in best or (flag and not best[q]):
                    best[q] = flag
                    frontier.append((q, flag))
        return best

    fwd, bwd = {}, {}
    for s in subjects:
        for h in window:
            p1 = PointRef(s, loop - 1, h)
            p2 = PointRef(s, k, h)
            r = reach(p1, forward=True)
            if p2 in r:
                fwd[(s, h)] = r[p2]
            r = reach(p1, forward=False)
            if p2 in r:
                bwd[(s, h)] = r[p2]

    for (a, ha), f_strict in fwd.items():
        for (b, hb), b_strict in bwd.items():
            if not isinstance(a, str) and not isinstance(b, str):
                continue
            if not allowed(a, b):
                continue
            if not (f_strict or b_strict):
                continue
            pa = PointRef(a, loop - 1, ha)
            pb = PointRef(b, loop - 1, hb)
            if lasso.point_value(pa) < lasso.point_value(pb):
                return True
    return False
