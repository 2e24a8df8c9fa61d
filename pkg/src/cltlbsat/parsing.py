"""Concrete syntax for problem files and formulae, plus the canonical
printer.  Files carry a theory header, variable declarations, options and
one or more formula statements (conjoined in order)."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .formulas import (
    EQ, EQ_CONST, FALSE, LT, LT_CONST, MOD_CONST, MOD_TERM, TRUE, And, Atom,
    AtomicRelation, F, Formula, G, H, Next, Not, O, Or, Prev, Prop, Release,
    Since, Term, Theory, Trigger, Until, WeakPrev, theory_by_name,
)
from .rewrite import FRESH_PREFIX


class ParseError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


@dataclass
class ProblemFile:
    theory: Theory
    variables: list
    formula: Formula
    options: dict = field(default_factory=dict)


KEYWORDS = {
    "theory", "var", "formula", "option", "true", "false", "mod",
    "X", "Y", "Z", "U", "S", "R", "T", "G", "F", "H", "O",
}
UNARY_OPS = {"X": Next, "Y": Prev, "Z": WeakPrev, "G": G, "F": F, "H": H, "O": O}
BINARY_TEMPORAL = {"U": Until, "S": Since, "R": Release, "T": Trigger}
REL_OPS = {"<", "<=", "=", "!=", ">", ">="}

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#[^\n]*)
  | (?P<nl>\n)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<int>\d+)
  | (?P<op><=|>=|!=|->|[<>=;,()&|!+-])
""", re.VERBOSE)


@dataclass(frozen=True)
class _Tok:
    kind: str  # 'ident' | 'int' | 'op' | 'kw' | 'eof'
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list:
    toks, line, col, pos = [], 1, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        lexeme = m.group()
        if kind == "nl":
            line += 1
            col = 1
        elif kind in ("ws", "comment"):
            col += len(lexeme)
        else:
            if kind == "ident" and lexeme in KEYWORDS:
                kind = "kw"
            toks.append(_Tok(kind, lexeme, line, col))
            col += len(lexeme)
        pos = m.end()
    toks.append(_Tok("eof", "", line, col))
    return toks


class _Parser:
    def __init__(self, text: str, variables=None, theory: Theory | None = None):
        self.toks = _tokenize(text)
        self.pos = 0
        self.variables = list(variables) if variables else []
        self.theory = theory

    # -- token helpers ----------------------------------------------------

    def peek(self) -> _Tok:
        return self.toks[self.pos]

    def next(self) -> _Tok:
        tok = self.toks[self.pos]
        self.pos += 1
        return tok

    def at(self, kind: str, text: str | None = None) -> bool:
        tok = self.peek()
        return tok.kind == kind and (text is None or tok.text == text)

    def expect(self, kind: str, text: str | None = None) -> _Tok:
        tok = self.peek()
        if not self.at(kind, text):
            want = text or kind
            raise ParseError(f"expected {want!r}, found {tok.text or 'end of input'!r}",
                             tok.line, tok.col)
        return self.next()

    def error(self, message: str, tok: _Tok | None = None):
        tok = tok or self.peek()
        raise ParseError(message, tok.line, tok.col)

    # -- file structure ----------------------------------------------------

    def parse_file(self) -> ProblemFile:
        options = {}
        conjuncts = []
        while not self.at("eof"):
            if self.at("kw", "theory"):
                self.next()
                name = self.expect("ident")
                try:
                    self.theory = theory_by_name(name.text)
                except ValueError as exc:
                    self.error(str(exc), name)
                self.expect("op", ";")
            elif self.at("kw", "var"):
                self.next()
                while True:
                    name = self.expect("ident")
                    if name.text.startswith(FRESH_PREFIX):
                        self.error(f"variable names may not start with {FRESH_PREFIX!r}", name)
                    if name.text in self.variables:
                        self.error(f"duplicate variable {name.text!r}", name)
                    self.variables.append(name.text)
                    if self.at("op", ","):
                        self.next()
                        continue
                    break
                self.expect("op", ";")
            elif self.at("kw", "option"):
                self.next()
                key = self.expect("ident")
                self.expect("op", "=")
                val = self.next()
                if val.kind not in ("ident", "int", "kw"):
                    self.error("expected option value", val)
                options[key.text] = val.text
                self.expect("op", ";")
            elif self.at("kw", "formula"):
                if self.theory is None:
                    self.error("theory must be declared before any formula")
                self.next()
                conjuncts.append(self.parse_formula())
                self.expect("op", ";")
            else:
                self.error(f"unexpected token {self.peek().text!r}")
        if self.theory is None:
            self.error("missing theory declaration")
        if not conjuncts:
            self.error("missing formula statement")
        formula = conjuncts[0]
        for extra in conjuncts[1:]:
            formula = And(formula, extra)
        return ProblemFile(self.theory, self.variables, formula, options)

    # -- formulae ----------------------------------------------------------
    # precedence, loosest first:  ->   |   &   U/S/R/T   unary

    def parse_formula(self) -> Formula:
        left = self.parse_or()
        if self.at("op", "->"):
            self.next()
            right = self.parse_formula()
            return Or(Not(left), right)
        return left

    def parse_or(self) -> Formula:
        left = self.parse_and()
        while self.at("op", "|"):
            self.next()
            left = Or(left, self.parse_and())
        return left

    def parse_and(self) -> Formula:
        left = self.parse_temporal()
        while self.at("op", "&"):
            self.next()
            left = And(left, self.parse_temporal())
        return left

    def parse_temporal(self) -> Formula:
        left = self.parse_unary()
        tok = self.peek()
        if tok.kind == "kw" and tok.text in BINARY_TEMPORAL:
            self.next()
            right = self.parse_temporal()
            return BINARY_TEMPORAL[tok.text](left, right)
        return left

    def parse_unary(self) -> Formula:
        tok = self.peek()
        if tok.kind == "op" and tok.text == "!":
            self.next()
            return Not(self.parse_unary())
        if tok.kind == "kw" and tok.text in UNARY_OPS:
            if tok.text in ("X", "Y"):
                atom = self._try_atom()
                if atom is not None:
                    return atom
            self.next()
            return UNARY_OPS[tok.text](self.parse_unary())
        return self.parse_primary()

    def parse_primary(self) -> Formula:
        tok = self.peek()
        atom = self._try_atom()
        if atom is not None:
            return atom
        if tok.kind == "op" and tok.text == "(":
            self.next()
            inner = self.parse_formula()
            self.expect("op", ")")
            return inner
        if tok.kind == "kw" and tok.text == "true":
            self.next()
            return TRUE
        if tok.kind == "kw" and tok.text == "false":
            self.next()
            return FALSE
        if tok.kind == "ident":
            self.next()
            if tok.text in self.variables:
                self.error(f"variable {tok.text!r} used as a proposition", tok)
            if tok.text.startswith(FRESH_PREFIX):
                self.error(f"proposition names may not start with {FRESH_PREFIX!r}", tok)
            return Prop(tok.text)
        self.error(f"expected formula, found {tok.text or 'end of input'!r}")

    # -- atoms and terms ---------------------------------------------------

    def _try_atom(self) -> Formula | None:
        """Attempt ``term relop term`` or ``term mod c = ...`` from the
        current position; backtrack silently when no relation follows."""
        save = self.pos
        lhs = self._try_term()
        if lhs is None:
            self.pos = save
            return None
        tok = self.peek()
        if tok.kind == "op" and tok.text in REL_OPS:
            self.next()
            rhs_tok = self.peek()
            rhs = self._try_term()
            if rhs is None:
                self.error("expected term after comparison operator", rhs_tok)
            self._check_terms(lhs[1] + rhs[1])
            return self._relation(tok.text, lhs[0], rhs[0])
        if tok.kind == "kw" and tok.text == "mod":
            self.next()
            return self._mod_atom(lhs)
        self.pos = save
        return None

    def _try_term(self):
        """Parse a term; returns ``(Term, [ident tokens])`` or None."""
        tok = self.peek()
        if tok.kind == "int":
            self.next()
            return Term(int(tok.text)), []
        if tok.kind == "op" and tok.text == "-" and self.toks[self.pos + 1].kind == "int":
            self.next()
            val = self.next()
            return Term(-int(val.text)), []
        if tok.kind == "ident":
            self.next()
            return Term(tok.text), [tok]
        if tok.kind == "kw" and tok.text in ("X", "Y"):
            self.next()
            parens = self.at("op", "(")
            if parens:
                self.next()
            inner = self._try_term()
            if inner is None:
                return None
            if parens:
                if not self.at("op", ")"):
                    return None
                self.next()
            term, idents = inner
            if term.is_const:
                return term, idents  # shifting a constant is the identity
            return term.shifted(1 if tok.text == "X" else -1), idents
        if tok.kind == "op" and tok.text == "(":
            self.next()
            inner = self._try_term()
            if inner is None or not self.at("op", ")"):
                return None
            self.next()
            return inner
        return None

    def _check_terms(self, ident_toks):
        for tok in ident_toks:
            if tok.text not in self.variables:
                self.error(f"undeclared variable {tok.text!r}", tok)

    def _relation(self, op: str, t1: Term, t2: Term) -> Formula:
        if t1.is_const and t2.is_const:
            a, b = t1.base, t2.base
            result = {"<": a < b, "<=": a <= b, "=": a == b,
                      "!=": a != b, ">": a > b, ">=": a >= b}[op]
            return TRUE if result else FALSE
        if op == "<=":
            return Or(self._relation("<", t1, t2), self._relation("=", t1, t2))
        if op == ">":
            return self._relation("<", t2, t1)
        if op == ">=":
            return Or(self._relation("<", t2, t1), self._relation("=", t2, t1))
        if op == "!=":
            return Or(self._relation("<", t1, t2), self._relation("<", t2, t1))
        if op == "<":
            if t2.is_const and not t1.is_const:
                return Atom(AtomicRelation(LT_CONST, (t1,), d=t2.base))
            return Atom(AtomicRelation(LT, (t1, t2)))
        if t1.is_const:
            t1, t2 = t2, t1
        if t2.is_const:
            return Atom(AtomicRelation(EQ_CONST, (t1,), d=t2.base))
        return Atom(AtomicRelation(EQ, (t1, t2)))

    def _mod_atom(self, lhs) -> Formula:
        term, idents = lhs
        mod_tok = self.toks[self.pos - 1]
        if self.theory is not None and not self.theory.allows_mod:
            self.error("mod constraint requires discrete theory", mod_tok)
        if term.is_const:
            self.error("mod constraint needs a variable term", mod_tok)
        c_tok = self.expect("int")
        c = int(c_tok.text)
        if c < 1:
            self.error("modulus must be positive", c_tok)
        self.expect("op", "=")
        rhs_tok = self.peek()
        rhs = self._try_term()
        if rhs is None:
            self.error("expected term after '='", rhs_tok)
        rhs_term, rhs_idents = rhs
        self._check_terms(idents + rhs_idents)
        offset = 0
        if self.at("op", "+") or self.at("op", "-"):
            sign = 1 if self.next().text == "+" else -1
            offset = sign * int(self.expect("int").text)
        if rhs_term.is_const:
            if offset:
                self.error("constant residue cannot carry an offset", rhs_tok)
            return Atom(AtomicRelation(MOD_CONST, (term,), c=c, d=rhs_term.base))
        return Atom(AtomicRelation(MOD_TERM, (term, rhs_term), c=c, d=offset))


def parse(text: str) -> ProblemFile:
    """Parse a complete problem file."""
    return _Parser(text).parse_file()


def parse_formula(text: str, variables, theory: str = "int") -> Formula:
    """Parse a bare formula against a given variable set (test helper)."""
    parser = _Parser(text, variables=variables, theory=theory_by_name(theory))
    formula = parser.parse_formula()
    parser.expect("eof")
    return formula


def render(f: Formula) -> str:
    """Canonical text form; ``parse`` of the result rebuilds ``f``."""
    if f == TRUE:
        return "true"
    if f == FALSE:
        return "false"
    if isinstance(f, Prop):
        return f.name
    if isinstance(f, Atom):
        return str(f.rel)
    if isinstance(f, Not):
        return f"!({render(f.child)})"
    if isinstance(f, Next):
        return f"X({render(f.child)})"
    if isinstance(f, Prev):
        return f"Y({render(f.child)})"
    if isinstance(f, WeakPrev):
        return f"Z({render(f.child)})"
    ops = {And: "&", Or: "|", Until: "U", Since: "S", Release: "R", Trigger: "T"}
    op = ops[type(f)]
    return f"({render(f.left)} {op} {render(f.right)})"
