"""SMT-LIB 2 serialization, external solver processes, and model-value
retrieval.

Scripts are abstract s-expressions (nested tuples of symbols/numbers)
rendered deterministically.  Solving is a single-shot dialogue with any
SMT-LIB 2 solver reading standard input; ``SolverSession`` additionally
keeps one solver process alive across scripts, which matters for the
bundled WASM build of Z3 whose per-process start-up dwarfs solve time.
"""

from __future__ import annotations

import os
import shlex
import shutil
import subprocess
import threading
import time
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources

SHIM_MARKER = ";;;REQUEST-END;;;"
_SHIM_RESOURCE = "z3smt2.mjs"


class SolverError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# s-expressions
# ---------------------------------------------------------------------------

def render_sexpr(e, real: bool = False) -> str:
    """Render one abstract s-expression.  Negative numbers become unary
    minus applications; rationals use division form."""
    if isinstance(e, bool):
        return "true" if e else "false"
    if isinstance(e, int):
        return str(e) if e >= 0 else f"(- {-e})"
    if isinstance(e, Fraction):
        if e.denominator == 1:
            v = f"{abs(e.numerator)}.0" if real else str(abs(e.numerator))
        else:
            v = f"(/ {e.numerator if e >= 0 else -e.numerator} {e.denominator})"
        return v if e >= 0 else f"(- {v})"
    if isinstance(e, str):
        return e
    return "(" + " ".join(render_sexpr(x, real) for x in e) + ")"


@dataclass
class SmtScript:
    """Ordered declarations and assertions with per-family bookkeeping."""

    logic: str
    decls: list = field(default_factory=list)   # (name, arg_sorts, ret_sort)
    asserts: list = field(default_factory=list)  # (family, sexpr)
    get_values: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def declare(self, name: str, arg_sorts, ret_sort: str):
        self.decls.append((name, tuple(arg_sorts), ret_sort))

    def add(self, family: str, expr):
        self.asserts.append((family, expr))

    def family_counts(self) -> dict:
        counts = {}
        for family, _ in self.asserts:
            counts[family] = counts.get(family, 0) + 1
        return counts


def emit_smtlib(script: SmtScript) -> str:
    real = script.logic.endswith("LRA")
    out = ["(set-option :produce-models true)", f"(set-logic {script.logic})"]
    for name, arg_sorts, ret in script.decls:
        if arg_sorts:
            out.append(f"(declare-fun {name} ({' '.join(arg_sorts)}) {ret})")
        else:
            out.append(f"(declare-const {name} {ret})")
    for _, expr in script.asserts:
        out.append(f"(assert {render_sexpr(expr, real)})")
    out.append("(check-sat)")
    if script.get_values:
        args = " ".join(render_sexpr(e, real=False) for e in script.get_values)
        out.append(f"(get-value ({args}))")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# solver output parsing
# ---------------------------------------------------------------------------

def _tokenize_sexpr(text: str):
    token = []
    for ch in text:
        if ch in "()":
            if token:
                yield "".join(token)
                token = []
            yield ch
        elif ch.isspace():
            if token:
                yield "".join(token)
                token = []
        else:
            token.append(ch)
    if token:
        yield "".join(token)


def _read_sexprs(tokens: list):
    stack = [[]]
    for tok in tokens:
        if tok == "(":
            stack.append([])
        elif tok == ")":
            if len(stack) < 2:
                raise SolverError("unbalanced solver response")
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(tok)
    if len(stack) != 1:
        raise SolverError("unbalanced solver response")
    return stack[0]


def _to_value(e):
    if isinstance(e, str):
        if e == "true":
            return True
        if e == "false":
            return False
        try:
            return int(e)
        except ValueError:
            pass
        try:
            return Fraction(e)
        except ValueError:
            raise SolverError(f"unparsable model value {e!r}") from None
    if isinstance(e, list) and len(e) == 2 and e[0] == "-":
        return -_to_value(e[1])
    if isinstance(e, list) and len(e) == 3 and e[0] == "/":
        return Fraction(_to_value(e[1]), _to_value(e[2]))
    raise SolverError(f"unparsable model value {e!r}")


def _to_key(e):
    if isinstance(e, str):
        return (e, ())
    name = e[0]
    args = tuple(int(_to_value(a)) for a in e[1:])
    return (name, args)


@dataclass
class SolverResult:
    verdict: str               # sat | unsat | unknown | solver-error
    model: dict | None = None  # (symbol, ground args) -> value
    raw: str = ""
    wall_time: float = 0.0
    reason: str | None = None


def parse_solver_output(raw: str, wall_time: float = 0.0) -> SolverResult:
    verdict = None
    for line in raw.splitlines():
        word = line.strip()
        if word in ("sat", "unsat", "unknown"):
            verdict = word
            break
    if verdict is None:
        return SolverResult("solver-error", raw=raw, wall_time=wall_time,
                            reason="no sat/unsat/unknown token in solver output")
    model = None
    if verdict == "sat":
        tail = raw.split(verdict, 1)[1]
        model = {}
        try:
            for entry in _read_sexprs(list(_tokenize_sexpr(tail))):
                if not isinstance(entry, list):
                    continue
                for pair in entry:
                    if isinstance(pair, list) and len(pair) == 2:
                        model[_to_key(pair[0])] = _to_value(pair[1])
        except SolverError as exc:
            return SolverResult("solver-error", raw=raw, wall_time=wall_time,
                                reason=str(exc))
    return SolverResult(verdict, model=model, raw=raw, wall_time=wall_time)


def get_model_values(result: SolverResult, requests) -> dict:
    """Look up ground applications in a sat model; total over requests."""
    if result.verdict != "sat" or result.model is None:
        raise SolverError("model values requested from a non-sat result")
    out = {}
    for req in requests:
        key = req if isinstance(req, tuple) else (req, ())
        if key not in result.model:
            raise SolverError(f"model has no value for {key}")
        out[key] = result.model[key]
    return out


# ---------------------------------------------------------------------------
# solver discovery
# ---------------------------------------------------------------------------

def shim_path() -> str:
    return str(resources.files("cltlbsat").joinpath("data", _SHIM_RESOURCE))


def _is_shim(command) -> bool:
    return any(str(part).endswith(_SHIM_RESOURCE) for part in command)


def find_default_solver():
    """Pick an SMT-LIB 2 solver: explicit override, a native binary on
    PATH, or the bundled Node/WASM Z3 adapter.  Returns argv or None."""
    override = os.environ.get("CLTLB_SOLVER")
    if override:
        return shlex.split(override)
    if shutil.which("z3"):
        return ["z3", "-smt2", "-in"]
    if shutil.which("cvc5"):
        return ["cvc5", "--lang", "smt2", "-q"]
    if shutil.which("node"):
        return ["node", shim_path()]
    return None


# ---------------------------------------------------------------------------
# solving
# ---------------------------------------------------------------------------

def solve(script_text: str, command, timeout: float | None = None) -> SolverResult:
    """Run one script through one solver process (stdin to stdout)."""
    start = time.monotonic()
    try:
        proc = subprocess.run(
            list(command), input=script_text, text=True,
            stdout=subprocess.PIPE, stderr=subprocess.STDOUT, timeout=timeout)
    except FileNotFoundError as exc:
        return SolverResult("solver-error", reason=f"cannot launch solver: {exc}")
    except subprocess.TimeoutExpired:
        return SolverResult("unknown", wall_time=time.monotonic() - start,
                            reason=f"solver timeout after {timeout}s")
    return parse_solver_output(proc.stdout, time.monotonic() - start)


class SolverSession:
    """One live solver process answering a sequence of independent scripts.

    The bundled shim frames requests with a marker line; native solvers
    get standard ``(echo ...)`` framing plus ``(reset)`` between scripts.
    A timed-out request kills the process; the next request respawns it.
    """

    def __init__(self, command, timeout: float | None = None):
        self.command = list(command)
        self.timeout = timeout
        self.is_shim = _is_shim(self.command)
        self._proc = None
        self._lock = threading.Lock()

    def _spawn(self):
        self._proc = subprocess.Popen(
            self.command, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL, text=True, bufsize=1)

    def solve(self, script_text: str, timeout: float | None = None) -> SolverResult:
        limit = timeout if timeout is not None else self.timeout
        with self._lock:
            if self._proc is None or self._proc.poll() is not None:
                try:
                    self._spawn()
                except FileNotFoundError as exc:
                    return SolverResult("solver-error",
                                        reason=f"cannot launch solver: {exc}")
            start = time.monotonic()
            timer = None
            timed_out = []
            if limit is not None:
                def _kill():
                    timed_out.append(True)
                    self._proc.kill()
                timer = threading.Timer(limit, _kill)
                timer.start()
            try:
                lines = self._exchange(script_text)
            except (BrokenPipeError, OSError):
                lines = None
            finally:
                if timer is not None:
                    timer.cancel()
            elapsed = time.monotonic() - start
            if timed_out:
                self.close()
                return SolverResult("unknown", wall_time=elapsed,
                                    reason=f"solver timeout after {limit}s")
            if lines is None:
                self.close()
                return SolverResult("solver-error", wall_time=elapsed,
                                    reason="solver process ended unexpectedly")
            return parse_solver_output("".join(lines), elapsed)

    def _exchange(self, script_text: str):
        proc = self._proc
        if self.is_shim:
            proc.stdin.write(script_text + "\n" + SHIM_MARKER + "\n")
        else:
            proc.stdin.write(script_text + f'\n(echo "{SHIM_MARKER}")\n')
        proc.stdin.flush()
        lines = []
        while True:
            line = proc.stdout.readline()
            if line == "":
                return None
            if line.strip() == SHIM_MARKER:
                break
            lines.append(line)
        if not self.is_shim:
            proc.stdin.write("(reset)\n")
            proc.stdin.flush()
        return lines

    def close(self):
        if self._proc is not None:
            try:
                self._proc.kill()
            except OSError:
                pass
            self._proc = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
