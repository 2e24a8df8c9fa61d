"""Arithmetic-model existence condition for discrete domains.

A satisfiable script over a discrete domain only witnesses a symbolic
lasso; whether concrete values exist for its infinite unrolling depends
on the absence of an infinite (partly strict) increasing chain forced
below an infinite decreasing one.  This module grounds that condition:
local order relations between valuation points, their transitive path
closures anchored at the loop seam, and one negated firing condition per
subject pair.
"""

from __future__ import annotations

from dataclasses import dataclass

from .encoder import EncodingContext
from .smtbackend import SmtScript


@dataclass(frozen=True, order=True)
class PointRef:
    """A variable or constant at shift ``h`` inside valuation ``j``; its
    absolute position in the bounded valuation is ``j + h``."""

    subject: object  # str (variable) or int (constant)
    j: int
    h: int

    @property
    def pos(self) -> int:
        return self.j + self.h


LOCAL_KINDS = ("flt", "fle", "bgt", "bge")
PATH_KINDS = ("Flt", "Fle", "Bgt", "Bge")
_LOCAL_OF = {"Flt": "flt", "Fle": "fle", "Bgt": "bgt", "Bge": "bge"}
_WEAK_OF = {"Flt": "Fle", "Fle": "Fle", "Bgt": "Bge", "Bge": "Bge"}
_STRICT_LOCAL = {"Flt": "flt", "Bgt": "bgt"}
_WEAK_LOCAL = {"Flt": "fle", "Bgt": "bge"}


def subject_name(s) -> str:
    if isinstance(s, str):
        return f"V{s}"
    return f"K{s}".replace("-", "m")


def pred_name(kind: str, a, b) -> str:
    return f"{kind}_{subject_name(a)}__{subject_name(b)}"


def subjects_of(ctx: EncodingContext) -> list:
    return list(ctx.variables) + list(ctx.consts)


def pair_allowed(ctx: EncodingContext, a, b) -> bool:
    if ctx.options.valuation_mode == "strong":
        return True
    return ctx.partition.same_class(a, b)


def predicate_pairs(ctx: EncodingContext) -> list:
    """Ordered subject pairs carrying declared path predicates, diagonal
    pairs included: the firing condition compares a pair's own closures."""
    subs = subjects_of(ctx)
    return [(a, b) for a in subs for b in subs if pair_allowed(ctx, a, b)]


def condition_pairs(ctx: EncodingContext) -> list:
    """Ordered pairs tested by the firing condition.  Two constants can
    never fire (neither yields a strict path); a variable against itself
    can, through points at distinct shifts, so the diagonal stays."""
    return [(a, b) for a, b in predicate_pairs(ctx)
            if isinstance(a, str) or isinstance(b, str)]


def intermediates(ctx: EncodingContext, a, b) -> list:
    """Subjects a path from ``a`` to ``b`` may step through."""
    subs = subjects_of(ctx)
    if ctx.options.valuation_mode == "strong":
        return subs
    part = ctx.partition
    shared = part.subject_classes(a) & part.subject_classes(b)
    return [z for z in subs if part.subject_classes(z) & shared]


def _window(ctx):
    return range(ctx.bounds.look_back, ctx.bounds.look_ahead + 1)


def _value(ctx: EncodingContext, subject, pos: int):
    return ctx.sigma_app(subject, pos)


def declare_path_predicates(ctx: EncodingContext, script: SmtScript):
    ps = ctx.pos_sort
    for a, b in predicate_pairs(ctx):
        for kind in LOCAL_KINDS:
            script.declare(pred_name(kind, a, b), (ps, ps, ps), "Bool")
        for kind in PATH_KINDS:
            script.declare(pred_name(kind, a, b), (ps, ps, ps, ps), "Bool")


def encode_local_relations(ctx: EncodingContext, script: SmtScript):
    """Ground one-step order relations between points of valuation j:
    forward (value rises left to right) and backward (value falls), in
    strict and non-strict variants; shift-reversed cells are false."""
    ops = {"flt": "<", "fle": "<=", "bgt": ">", "bge": ">="}
    for a, b in predicate_pairs(ctx):
        both_const = not isinstance(a, str) and not isinstance(b, str)
        for kind in LOCAL_KINDS:
            name = pred_name(kind, a, b)
            for j in range(ctx.k + 1):
                for h in _window(ctx):
                    for m in _window(ctx):
                        app = (name, j, h, m)
                        if h > m:
                            script.add("exist_local", ("not", app))
                        elif both_const:
                            holds = {"flt": a < b, "fle": a <= b,
                                     "bgt": a > b, "bge": a >= b}[kind]
                            script.add("exist_local", app if holds else ("not", app))
                        else:
                            rel = (ops[kind], _value(ctx, a, j + h),
                                   _value(ctx, b, j + m))
                            script.add("exist_local", ("=", app, rel))


def _closure_row(ctx, kind, a, b, j, i, m):
    """Body of the anchored recursion: one step inside valuation j, then
    the remaining path from the stepped-to point."""
    lb = ctx.bounds.look_back
    disjuncts = []
    for z in intermediates(ctx, a, b):
        for u in _window(ctx):
            if z == a and u == lb:
                continue
            if kind in _STRICT_LOCAL:
                disjuncts.append(("and", (pred_name(_STRICT_LOCAL[kind], a, z), j, lb, u),
                                  (pred_name(_WEAK_OF[kind], z, b), j, u, i, m)))
                disjuncts.append(("and", (pred_name(_WEAK_LOCAL[kind], a, z), j, lb, u),
                                  (pred_name(kind, z, b), j, u, i, m)))
            else:
                disjuncts.append(("and", (pred_name(_LOCAL_OF[kind], a, z), j, lb, u),
                                  (pred_name(kind, z, b), j, u, i, m)))
    app = (pred_name(kind, a, b), j, lb, i, m)
    if not disjuncts:
        return ("not", app)
    return ("=", app, ("or",) + tuple(disjuncts))


def encode_path_closure(ctx: EncodingContext, script: SmtScript):
    """Transitive path closures: base cells collapse to the local
    relations, positionally reversed cells are false, far cells recurse on
    the first step with the source anchored at the window's left edge, and
    congruence rows identify the cells of locally equivalent points."""
    k, b = ctx.k, ctx.bounds
    lb, la = b.look_back, b.look_ahead
    lam = b.width
    for a, bb in predicate_pairs(ctx):
        for kind in PATH_KINDS:
            name = pred_name(kind, a, bb)
            local = pred_name(_LOCAL_OF[kind], a, bb)
            # base: same valuation
            for j in range(k + 1):
                for h in _window(ctx):
                    for m in _window(ctx):
                        if h <= m:
                            script.add("exist_far", ("=", (name, j, h, j, m),
                                                     (local, j, h, m)))
            # positionally reversed cells
            for j in range(k + 1):
                for i in range(j, k + 1):
                    for h in _window(ctx):
                        for m in _window(ctx):
                            if j + h > i + m:
                                script.add("exist_far", ("not", (name, j, h, i, m)))
            # anchored recursion for non-overlapping cells
            for j in range(k + 1):
                for i in range(j + 1, k + 1):
                    for m in _window(ctx):
                        if i + m - (j + lb) > la - lb:
                            script.add("exist_far",
                                       _closure_row(ctx, kind, a, bb, j, i, m))
            # congruence between locally equivalent cells
            for i in range(1, k + 1):
                for m in _window(ctx):
                    for j in range(0, i):
                        for h in range(lb + 1, la + 1):
                            script.add("exist_cc", ("=", (name, j, h, i, m),
                                                    (name, j + 1, h - 1, i, m)))
                    for j in range(1, i + 1):
                        for h in range(lb, la):
                            script.add("exist_cc", ("=", (name, j, h, i, m),
                                                    (name, j - 1, h + 1, i, m)))
            for j in range(0, k):
                for h in _window(ctx):
                    for i in range(j, k):
                        for m in range(lb + 1, la + 1):
                            script.add("exist_cc", ("=", (name, j, h, i, m),
                                                    (name, j, h, i + 1, m - 1)))
                    for i in range(j + 1, k + 1):
                        for m in range(lb, la):
                            script.add("exist_cc", ("=", (name, j, h, i, m),
                                                    (name, j, h, i - 1, m + 1)))


def condition_expr(ctx: EncodingContext, a, b):
    """Firing condition for the pair: an infinite forward path through
    ``a`` and an infinite backward path through ``b`` loop from the seam
    to the last valuation, at least one strict, with the forward point
    strictly below the backward point at the seam."""
    seam = ("-", "loop", 1)
    k = ctx.k
    disjuncts = []
    for h in _window(ctx):
        for h2 in _window(ctx):
            paths = ("or",
                     ("and", (pred_name("Fle", a, a), seam, h, k, h),
                      (pred_name("Bgt", b, b), seam, h2, k, h2)),
                     ("and", (pred_name("Flt", a, a), seam, h, k, h),
                      (pred_name("Bge", b, b), seam, h2, k, h2)))
            edge = ("or", (pred_name("flt", a, b), seam, h, h2),
                    (pred_name("bgt", b, a), seam, h2, h))
            disjuncts.append(("and", paths, edge))
    return ("or",) + tuple(disjuncts)


def encode_existence_condition(ctx: EncodingContext, script: SmtScript):
    for a, b in condition_pairs(ctx):
        script.add("exist_c", ("not", condition_expr(ctx, a, b)))
