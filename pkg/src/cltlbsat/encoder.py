"""Bounded encoding of a normalized formula at bound k: uninterpreted
functions indexed by time for terms, uninterpreted predicates for
subformulae, periodicity over a symbolic loop position, loop-closure of
the last state, and eventuality witnesses for until/release."""

from __future__ import annotations

from dataclasses import dataclass, field

from .formulas import (
    And, Atom, AtomicRelation, EQ, EQ_CONST, FALSE, FUTURE_NODES, Formula,
    FormulaError, LT, LT_CONST, MOD_CONST, MOD_TERM, Next, Not, Or, Prev,
    Prop, Release, Since, TRUE, Term, Theory, Trigger, Until, WeakPrev,
    bounds, constants_of, partition_variables, subformulae, terms_of,
    variables_of,
)
from .rewrite import is_pnf
from .smtbackend import SmtScript


@dataclass
class EncodeOptions:
    consts_mode: str = "occurring"      # occurring | interval
    valuation_mode: str = "weak"        # weak | strong
    with_existence: bool = True         # discrete theories only
    collect_model: bool = True


class EncodingContext:
    """Symbol tables and index helpers shared by all constraint families."""

    def __init__(self, formula: Formula, k: int, theory: Theory,
                 options: EncodeOptions | None = None):
        if k < 1:
            raise FormulaError("bound k must be at least 1")
        if not is_pnf(formula):
            raise FormulaError("encoder requires positive normal form")
        self.formula = formula
        self.k = k
        self.theory = theory
        self.options = options or EncodeOptions()

        self.bounds = bounds(formula)
        self.variables = variables_of(formula)
        self.terms = terms_of(formula)
        self.consts = constants_of(formula, self.options.consts_mode, theory)
        self.subs = subformulae(formula)
        self.partition = partition_variables(formula)
        for sub in self.subs:
            if isinstance(sub, Prop):
                raise FormulaError(
                    "encoder requires proposition-free input; apply the "
                    "proposition rewriting first")

        self.term_fn = {t: _term_name(t) for t in self.terms}
        self.pred = {s: f"sp{i}" for i, s in enumerate(self.subs)}
        self.ev_var = {s: f"ev{i}" for i, s in enumerate(self.subs)
                       if isinstance(s, (Until, Release))}
        self.moduli = sorted({rel.c for rel in self._mod_rels()})
        # quotient functions: one per formula mod-atom, one canonical
        # (residue 0) per term and modulus for the periodicity rows
        self.mod_aux = {}
        for rel in self._mod_rels():
            self.mod_aux.setdefault(_mod_key(rel), f"mq{len(self.mod_aux)}")
        for term in self.terms:
            for c in self.moduli:
                self.mod_aux.setdefault(("res", term, c), f"mq{len(self.mod_aux)}")

        self.logic = "QF_UFLIA" if theory.sort == "Int" else "QF_UFLRA"
        self.pos_sort = theory.sort  # positions share the domain sort

    def _mod_rels(self):
        rels = {}
        for sub in self.subs:
            if isinstance(sub, Atom) and sub.rel.is_mod:
                rels[sub.rel] = None
        return list(rels)

    # -- index and application helpers --------------------------------------

    def idx(self, i):
        """Position literal in the logic's numeric sort."""
        return i

    def term_app(self, term: Term, at):
        if term.is_const:
            return term.base
        return (self.term_fn[term], at)

    def sigma_app(self, subject, pos: int):
        """Value of a variable or constant at an absolute position of the
        bounded valuation, read through the canonical term function."""
        if not isinstance(subject, str):
            return subject
        if pos < 0:
            return (self.term_fn[Term(subject, pos)], 0)
        if pos <= self.k:
            return (self.term_fn[Term(subject, 0)], pos)
        return (self.term_fn[Term(subject, pos - self.k)], self.k)

    def pred_app(self, sub: Formula, at):
        return (self.pred[sub], at)

    def rel_app(self, rel: AtomicRelation, at):
        if rel.kind == LT:
            return ("<", self.term_app(rel.terms[0], at),
                    self.term_app(rel.terms[1], at))
        if rel.kind == EQ:
            return ("=", self.term_app(rel.terms[0], at),
                    self.term_app(rel.terms[1], at))
        if rel.kind == LT_CONST:
            return ("<", self.term_app(rel.terms[0], at), rel.d)
        if rel.kind == EQ_CONST:
            return ("=", self.term_app(rel.terms[0], at), rel.d)
        return ("=", self.residue_expr(_mod_key(rel), at), 0)

    def residue_expr(self, key, at):
        """Bounded remainder of the keyed mod constraint at a position."""
        q = self.mod_aux[key]
        if key[0] == "res":
            _, term, c = key
            d = 0
            diff = self.term_app(term, at)
        else:
            _, terms, c, d = key
            diff = self.term_app(terms[0], at)
            if len(terms) == 2:
                diff = ("-", diff, self.term_app(terms[1], at))
        if d:
            diff = ("-", diff, d)
        return ("-", diff, ("*", c, (q, at)))


def _term_name(t: Term) -> str:
    tag = f"m{-t.depth}" if t.depth < 0 else f"p{t.depth}"
    return f"tf_{t.var}_{tag}"


def _mod_key(rel: AtomicRelation):
    return ("atom", rel.terms, rel.c, rel.d)


# ---------------------------------------------------------------------------
# constraint families
# ---------------------------------------------------------------------------

def encode_arith_constraints(ctx: EncodingContext, script: SmtScript):
    """Chain every shifted term function to its one-step-shallower peer;
    boundary values outside [0, k] live in the deepest applications at the
    edge positions and need no rows of their own."""
    k = ctx.k
    for term in ctx.terms:
        if term.depth >= 1:
            shallower = term.shifted(-1)
            for i in range(k):
                script.add("arith", ("=", ctx.term_app(term, i),
                                     ctx.term_app(shallower, i + 1)))
        elif term.depth <= -1:
            shallower = term.shifted(1)
            for i in range(1, k + 2):
                script.add("arith", ("=", ctx.term_app(term, i),
                                     ctx.term_app(shallower, i - 1)))


def encode_prop_constraints(ctx: EncodingContext, script: SmtScript):
    """Definitional rows for atoms, negated atoms, boolean connectives and
    the boolean constants over positions 0..k+1."""
    for sub in ctx.subs:
        for i in range(ctx.k + 2):
            p = ctx.pred_app(sub, i)
            if sub == TRUE:
                script.add("prop", p)
            elif sub == FALSE:
                script.add("prop", ("not", p))
            elif isinstance(sub, Atom):
                script.add("prop", ("=", p, ctx.rel_app(sub.rel, i)))
            elif isinstance(sub, Not):
                if not isinstance(sub.child, Atom):
                    raise FormulaError("negation above a non-atom survived PNF")
                script.add("prop", ("=", p, ("not", ctx.rel_app(sub.child.rel, i))))
            elif isinstance(sub, And):
                script.add("prop", ("=", p, ("and", ctx.pred_app(sub.left, i),
                                             ctx.pred_app(sub.right, i))))
            elif isinstance(sub, Or):
                script.add("prop", ("=", p, ("or", ctx.pred_app(sub.left, i),
                                             ctx.pred_app(sub.right, i))))


def encode_temp_constraints(ctx: EncodingContext, script: SmtScript):
    """Fixpoint rows for the temporal operators: future rows over 0..k,
    past rows over 1..k+1 with their base cases at the origin."""
    k = ctx.k
    for sub in ctx.subs:
        p = lambda i: ctx.pred_app(sub, i)
        if isinstance(sub, Next):
            c = lambda i: ctx.pred_app(sub.child, i)
            for i in range(k + 1):
                script.add("temp", ("=", p(i), c(i + 1)))
        elif isinstance(sub, Until):
            l = lambda i: ctx.pred_app(sub.left, i)
            r = lambda i: ctx.pred_app(sub.right, i)
            for i in range(k + 1):
                script.add("temp", ("=", p(i), ("or", r(i), ("and", l(i), p(i + 1)))))
        elif isinstance(sub, Release):
            l = lambda i: ctx.pred_app(sub.left, i)
            r = lambda i: ctx.pred_app(sub.right, i)
            for i in range(k + 1):
                script.add("temp", ("=", p(i), ("and", r(i), ("or", l(i), p(i + 1)))))
        elif isinstance(sub, Prev):
            script.add("temp", ("not", p(0)))
            for i in range(1, k + 2):
                script.add("temp", ("=", p(i), ctx.pred_app(sub.child, i - 1)))
        elif isinstance(sub, WeakPrev):
            script.add("temp", p(0))
            for i in range(1, k + 2):
                script.add("temp", ("=", p(i), ctx.pred_app(sub.child, i - 1)))
        elif isinstance(sub, Since):
            l = lambda i: ctx.pred_app(sub.left, i)
            r = lambda i: ctx.pred_app(sub.right, i)
            script.add("temp", ("=", p(0), r(0)))
            for i in range(1, k + 2):
                script.add("temp", ("=", p(i), ("or", r(i), ("and", l(i), p(i - 1)))))
        elif isinstance(sub, Trigger):
            l = lambda i: ctx.pred_app(sub.left, i)
            r = lambda i: ctx.pred_app(sub.right, i)
            script.add("temp", ("=", p(0), r(0)))
            for i in range(1, k + 2):
                script.add("temp", ("=", p(i), ("and", r(i), ("or", l(i), p(i - 1)))))


def loop_atoms(ctx: EncodingContext):
    """Atoms whose agreement at loop-1 and k pins symbolic-valuation
    equality.

    Two atoms per point pair fix the whole order pattern by trichotomy;
    residue keys extend the pattern to the formula's moduli.  Returned as
    ``AtomicRelation`` entries plus ``('res', term, c)`` keys.
    """
    out = []
    terms = ctx.terms
    for a in range(len(terms)):
        for b in range(a + 1, len(terms)):
            out.append(AtomicRelation(LT, (terms[a], terms[b])))
            out.append(AtomicRelation(EQ, (terms[a], terms[b])))
    for t in terms:
        for c in ctx.consts:
            out.append(AtomicRelation(LT_CONST, (t,), d=c))
            out.append(AtomicRelation(EQ_CONST, (t,), d=c))
    for t in terms:
        for c in ctx.moduli:
            out.append(("res", t, c))
    return out


def encode_loop_constraints(ctx: EncodingContext, script: SmtScript):
    """Loop range plus one agreement row per relation atom between the
    symbolic position loop-1 and position k."""
    k = ctx.k
    script.add("loopbound", ("and", ("<=", 1, "loop"), ("<=", "loop", k)))
    if ctx.theory.sort == "Real":
        script.add("loopbound", ("or",) + tuple(("=", "loop", i)
                                                for i in range(1, k + 1)))
    at_loop = ("-", "loop", 1)
    atom_nodes = {s.rel: s for s in ctx.subs if isinstance(s, Atom)}
    for entry in loop_atoms(ctx):
        if isinstance(entry, AtomicRelation):
            node = atom_nodes.get(entry)
            if node is not None:
                lhs = ctx.pred_app(node, at_loop)
                rhs = ctx.pred_app(node, k)
            else:
                lhs = ctx.rel_app(entry, at_loop)
                rhs = ctx.rel_app(entry, k)
        else:
            lhs = ("=", ctx.residue_expr(entry, at_loop), ctx.residue_expr(entry, k))
            rhs = None
        script.add("loop", lhs if rhs is None else ("=", lhs, rhs))


def encode_last_state_constraints(ctx: EncodingContext, script: SmtScript):
    """Tie every subformula's value at k+1 to its value at the loop."""
    for sub in ctx.subs:
        script.add("last", ("=", ctx.pred_app(sub, ctx.k + 1),
                            ctx.pred_app(sub, "loop")))


def encode_eventualities(ctx: EncodingContext, script: SmtScript):
    """One witness position per until/release subformula, confined to the
    loop segment."""
    k = ctx.k
    for sub, ev in ctx.ev_var.items():
        inside = ("and", ("<=", "loop", ev), ("<=", ev, k))
        target = ctx.pred_app(sub.right, ev)
        if isinstance(sub, Until):
            script.add("event", ("=>", ctx.pred_app(sub, k),
                                 ("and", inside, target)))
        else:
            script.add("event", ("=>", ("not", ctx.pred_app(sub, k)),
                                 ("and", inside, ("not", target))))
        if ctx.theory.sort == "Real":
            script.add("event", ("or",) + tuple(("=", ev, i)
                                                for i in range(1, k + 1)))


def encode_domain_constraints(ctx: EncodingContext, script: SmtScript):
    """Theory-side value restrictions: non-negativity for the natural
    domain, and remainder bounds for every mod-constraint quotient."""
    k, b = ctx.k, ctx.bounds
    if ctx.theory.nonnegative:
        for x in ctx.variables:
            for pos in range(b.look_back, k + b.look_ahead + 1):
                script.add("domain", ("<=", 0, ctx.sigma_app(x, pos)))
    for key in ctx.mod_aux:
        c = key[2]
        for i in range(k + 2):
            r = ctx.residue_expr(key, i)
            script.add("modaux", ("and", ("<=", 0, r), ("<", r, c)))


def declare_symbols(ctx: EncodingContext, script: SmtScript):
    sort = ctx.theory.sort
    for term in ctx.terms:
        script.declare(ctx.term_fn[term], (ctx.pos_sort,), sort)
    for sub in ctx.subs:
        script.declare(ctx.pred[sub], (ctx.pos_sort,), "Bool")
    script.declare("loop", (), ctx.pos_sort)
    for ev in ctx.ev_var.values():
        script.declare(ev, (), ctx.pos_sort)
    for q in ctx.mod_aux.values():
        script.declare(q, (ctx.pos_sort,), sort)


def witness_requests(ctx: EncodingContext):
    """Ground applications whose model values reconstruct a witness."""
    reqs = ["loop"]
    b = ctx.bounds
    for x in ctx.variables:
        for pos in range(b.look_back, ctx.k + b.look_ahead + 1):
            reqs.append(ctx.sigma_app(x, pos))
    for sub in ctx.subs:
        for i in range(ctx.k + 2):
            reqs.append(ctx.pred_app(sub, i))
    return reqs


def build_encoding(formula: Formula, k: int, theory: Theory,
                   options: EncodeOptions | None = None) -> SmtScript:
    """Assemble the complete script: all constraint families, the formula
    asserted at the first instant, and (for discrete theories, unless
    disabled) the arithmetic-model existence condition."""
    return encode(EncodingContext(formula, k, theory, options))


def encode(ctx: EncodingContext) -> SmtScript:
    from . import existence

    script = SmtScript(logic=ctx.logic)
    script.meta.update(
        k=k, theory=theory.name, formula=str(formula),
        consts_mode=ctx.options.consts_mode,
        valuation_mode=ctx.options.valuation_mode,
        look_back=ctx.bounds.look_back, look_ahead=ctx.bounds.look_ahead,
    )
    declare_symbols(ctx, script)
    encode_arith_constraints(ctx, script)
    encode_prop_constraints(ctx, script)
    encode_temp_constraints(ctx, script)
    encode_loop_constraints(ctx, script)
    encode_last_state_constraints(ctx, script)
    encode_eventualities(ctx, script)
    encode_domain_constraints(ctx, script)
    if ctx.theory.discrete and ctx.options.with_existence:
        existence.declare_path_predicates(ctx, script)
        existence.encode_local_relations(ctx, script)
        existence.encode_path_closure(ctx, script)
        existence.encode_existence_condition(ctx, script)
    script.add("root", ctx.pred_app(ctx.formula, 0))
    if ctx.options.collect_model:
        script.get_values = witness_requests(ctx)
    script.meta["families"] = script.family_counts()
    script.meta["assertions"] = len(script.asserts)
    ctx.script = script
    return script
