"""Exhaustive finite-domain oracle for bounded satisfiability.

Enumerates every valuation table over a small domain and every loop
position, accepting exactly when the formula holds at the origin of the
repeated word, the seam valuations agree, and (on discrete domains) the
point graph admits an arithmetic model.  Used to cross-check the solver
pipeline; the evaluation here is vectorized over all assignments at once
but shares no code with the encoder.
"""

from __future__ import annotations

import numpy as np

from .formulas import (
    FALSE, Formula, FormulaError, Next, Prev, Release, Since, TRUE, Trigger,
    Until, WeakPrev, And, Or, Not, Atom, Prop, bounds, constants_of,
    partition_variables, subformulae, terms_of, variables_of,
)
from .rewrite import is_pnf
from .witness import (
    Witness, check_property_c_graph, fill_truth_table, induced_symbolic_model,
    verify_lasso,
)


class SearchCapExceeded(ValueError):
    pass


def brute_force_ksat(formula: Formula, k: int, finite_domain, theory,
                     mode: str = "weak", consts_mode: str = "occurring",
                     max_domain: int = 4, max_assignments: int = 1 << 24,
                     chunk_size: int = 1 << 17):
    """Exhaustively decide k-satisfiability over ``finite_domain``.

    The formula must be in positive normal form with propositions already
    rewritten away, and should confine its variables to the domain so the
    solver pipeline answers the same question.  Returns a verified
    ``Witness`` or ``None``.
    """
    if not is_pnf(formula):
        raise FormulaError("oracle requires positive normal form")
    if any(isinstance(s, Prop) for s in subformulae(formula)):
        raise FormulaError("oracle requires proposition-free input")
    domain = sorted(finite_domain)
    variables = variables_of(formula)
    if len(domain) > max_domain or len(variables) > 3 or k > 4:
        raise SearchCapExceeded("search-space cap exceeded")

    b = bounds(formula)
    cells = [(x, p) for x in variables
             for p in range(b.look_back, k + b.look_ahead + 1)]
    total = len(domain) ** len(cells) if cells else 1
    if total > max_assignments:
        raise SearchCapExceeded("search-space cap exceeded")

    dom = np.asarray(domain, dtype=np.int64)
    terms = terms_of(formula)
    consts = constants_of(formula, consts_mode, theory)
    moduli = sorted({s.rel.c for s in subformulae(formula)
                     if isinstance(s, Atom) and s.rel.is_mod})
    partition = partition_variables(formula)
    subs = subformulae(formula)
    has_future = _future_map(subs)

    for start in range(0, total, chunk_size):
        idxs = np.arange(start, min(start + chunk_size, total), dtype=np.int64)
        values = _decode(idxs, cells, dom)
        static = _static_rows(subs, has_future, values, k)
        for loop in range(1, k + 1):
            table = _full_rows(subs, has_future, static, values, k, loop)
            accept = table[formula][0].copy()
            accept &= _periodic_mask(values, terms, consts, moduli, k, loop,
                                     idxs.shape[0])
            accept &= _seam_mask(subs, table, k, loop, idxs.shape[0])
            if not accept.any():
                continue
            witness = _first_arithmetic_witness(
                formula, theory, mode, consts_mode, values, cells, dom,
                terms, consts, k, loop, b, np.flatnonzero(accept), partition)
            if witness is not None:
                return witness
    return None


def _future_map(subs):
    has_future = {}
    for sub in subs:
        own = isinstance(sub, (Next, Until, Release))
        has_future[sub] = own or any(has_future[c] for c in sub.children())
    return has_future


def _decode(idxs, cells, dom):
    values = {}
    radix = len(dom)
    work = idxs
    for cell in cells:
        values[cell] = dom[(work % radix)]
        work = work // radix
    return values


def _term_row(values, term, i):
    return values[(term.var, i + term.depth)]


def _atom_rows(rel, values, k, n):
    rows = []
    for i in range(k + 1):
        ops = [np.full(n, t.base, dtype=np.int64) if t.is_const
               else _term_row(values, t, i) for t in rel.terms]
        if rel.kind == "lt":
            rows.append(ops[0] < ops[1])
        elif rel.kind == "eq":
            rows.append(ops[0] == ops[1])
        elif rel.kind == "lt_const":
            rows.append(ops[0] < rel.d)
        elif rel.kind == "eq_const":
            rows.append(ops[0] == rel.d)
        elif rel.kind == "mod_const":
            rows.append((ops[0] - rel.d) % rel.c == 0)
        else:
            rows.append((ops[0] - ops[1] - rel.d) % rel.c == 0)
    return rows


def _node_rows(sub, table, values, k, n, succ):
    if sub == TRUE:
        return [np.ones(n, dtype=bool)] * (k + 1)
    if sub == FALSE:
        return [np.zeros(n, dtype=bool)] * (k + 1)
    if isinstance(sub, Atom):
        return _atom_rows(sub.rel, values, k, n)
    if isinstance(sub, Not):
        return [~v for v in table[sub.child]]
    if isinstance(sub, And):
        return [a & b for a, b in zip(table[sub.left], table[sub.right])]
    if isinstance(sub, Or):
        return [a | b for a, b in zip(table[sub.left], table[sub.right])]
    if isinstance(sub, Next):
        c = table[sub.child]
        return [c[succ[i]] for i in range(k + 1)]
    if isinstance(sub, (Until, Release)):
        l, r = table[sub.left], table[sub.right]
        least = isinstance(sub, Until)
        row = [np.zeros(n, dtype=bool) if least else np.ones(n, dtype=bool)
               for _ in range(k + 1)]
        for _ in range(k + 2):
            changed = False
            for i in range(k, -1, -1):
                nxt = row[succ[i]]
                v = (r[i] | (l[i] & nxt)) if least else (r[i] & (l[i] | nxt))
                if not np.array_equal(v, row[i]):
                    row[i] = v
                    changed = True
            if not changed:
                break
        return row
    if isinstance(sub, (Prev, WeakPrev)):
        c = table[sub.child]
        first = np.ones(n, dtype=bool) if isinstance(sub, WeakPrev) \
            else np.zeros(n, dtype=bool)
        return [first] + [c[i - 1] for i in range(1, k + 1)]
    if isinstance(sub, (Since, Trigger)):
        l, r = table[sub.left], table[sub.right]
        row = [r[0]]
        for i in range(1, k + 1):
            if isinstance(sub, Since):
                row.append(r[i] | (l[i] & row[i - 1]))
            else:
                row.append(r[i] & (l[i] | row[i - 1]))
        return row
    raise FormulaError(f"cannot evaluate node {type(sub).__name__}")


def _static_rows(subs, has_future, values, k):
    n = next(iter(values.values())).shape[0] if values else 1
    table = {}
    for sub in subs:
        if not has_future[sub]:
            table[sub] = _node_rows(sub, table, values, k, n, succ=None)
    return table


def _full_rows(subs, has_future, static, values, k, loop):
    n = next(iter(values.values())).shape[0] if values else 1
    succ = list(range(1, k + 1)) + [loop]
    table = dict(static)
    for sub in subs:
        if has_future[sub]:
            table[sub] = _node_rows(sub, table, values, k, n, succ)
    return table


def _point_rows(values, terms, consts, n):
    def row(point, i):
        if isinstance(point, int):
            return np.full(n, point, dtype=np.int64)
        return _term_row(values, point, i)
    return row


def _periodic_mask(values, terms, consts, moduli, k, loop, n):
    """Equality of the induced valuations at loop-1 and k: identical
    order pattern over all points, identical residues per modulus."""
    mask = np.ones(n, dtype=bool)
    row = _point_rows(values, terms, consts, n)
    points = list(terms) + list(consts)
    for a in range(len(points)):
        for b in range(a + 1, len(points)):
            if isinstance(points[a], int) and isinstance(points[b], int):
                continue
            cmp1 = np.sign(row(points[a], loop - 1) - row(points[b], loop - 1))
            cmp2 = np.sign(row(points[a], k) - row(points[b], k))
            mask &= cmp1 == cmp2
    for t in terms:
        for c in moduli:
            mask &= (row(t, loop - 1) % c) == (row(t, k) % c)
    return mask


def _seam_mask(subs, table, k, loop, n):
    """Past operators must derive the same value at k+1 as the loop
    column claims, otherwise the table is not periodic-word coherent."""
    mask = np.ones(n, dtype=bool)
    for sub in subs:
        row = table[sub]
        if isinstance(sub, (Prev, WeakPrev)):
            mask &= table[sub.child][k] == row[loop]
        elif isinstance(sub, Since):
            v = table[sub.right][loop] | (table[sub.left][loop] & row[k])
            mask &= v == row[loop]
        elif isinstance(sub, Trigger):
            v = table[sub.right][loop] & (table[sub.left][loop] | row[k])
            mask &= v == row[loop]
    return mask


def _first_arithmetic_witness(formula, theory, mode, consts_mode, values,
                              cells, dom, terms, consts, k, loop, b,
                              candidates, partition):
    """Among accepted assignments, find the first whose induced lasso
    admits an arithmetic model; assignments sharing a lasso share the
    verdict, so group candidates by their comparison pattern first."""
    if candidates.size == 0:
        return None
    if not theory.discrete:
        return _build_witness(formula, theory, mode, consts_mode, values,
                              cells, k, loop, b, int(candidates[0]), partition)

    n = candidates.size
    row = _point_rows({c: v[candidates] for c, v in values.items()},
                      terms, consts, n)
    points = list(terms) + list(consts)
    cols = []
    for i in range(k + 1):
        for a in range(len(points)):
            for bb in range(a + 1, len(points)):
                if isinstance(points[a], int) and isinstance(points[bb], int):
                    continue
                cols.append(np.sign(row(points[a], i) - row(points[bb], i))
                            .astype(np.int8))
    if cols:
        keymat = np.stack(cols, axis=1)
        _, first_idx = np.unique(keymat, axis=0, return_index=True)
        reps = np.sort(first_idx)
    else:
        reps = np.array([0])
    for rep in reps:
        witness = _build_witness(formula, theory, mode, consts_mode, values,
                                 cells, k, loop, b, int(candidates[rep]),
                                 partition)
        if witness is not None:
            return witness
    return None


def _build_witness(formula, theory, mode, consts_mode, values, cells, k,
                   loop, b, flat_index, partition):
    sigma = {}
    for (x, p), arr in values.items():
        sigma.setdefault(x, {})[p] = int(arr[flat_index])
    w = Witness(k, loop, b.look_back, b.look_ahead, sigma)
    if theory.discrete:
        lasso = induced_symbolic_model(w, formula, consts_mode, theory)
        if check_property_c_graph(lasso, partition, mode, theory):
            return None
    if not verify_lasso(formula, w):
        raise FormulaError("oracle accepted an assignment the scalar "
                           "evaluator rejects")
    fill_truth_table(formula, w)
    w.verified = True
    return w
