"""End-to-end checking: normalize, encode for increasing bounds, solve,
and verify every witness before reporting it.  Also the benchmark-suite
runner used for regression files."""

from __future__ import annotations

import csv
import os
import sys
import time
from dataclasses import dataclass, field, replace

from .encoder import EncodeOptions, EncodingContext, encode
from .formulas import Formula, FormulaError, Theory, bounds, theory_by_name
from .parsing import ProblemFile, parse
from .rewrite import remove_propositions, shift_left, to_pnf
from .smtbackend import (
    SolverResult, SolverSession, emit_smtlib, find_default_solver, solve,
)
from .witness import (
    Witness, check_property_c_graph, extract_witness, fill_truth_table,
    induced_symbolic_model, reframe_witness, verify_lasso,
)


class PipelineError(RuntimeError):
    """A solver said sat but the witness failed independent verification."""


@dataclass
class RunConfig:
    max_k: int = 10
    theory: str | None = None          # overrides the file header
    consts_mode: str = "occurring"
    valuation_mode: str = "weak"
    solver: list | None = None         # argv; discovered when absent
    timeout: float = 300.0
    emit_smt_path: str | None = None
    output_format: str = "text"
    apply_shift: bool = True
    with_existence: bool = True
    session: SolverSession | None = None

    def __post_init__(self):
        if self.max_k < 1:
            raise FormulaError("max_k must be at least 1")


@dataclass
class KReport:
    k: int
    verdict: str
    wall_time: float
    assertions: int
    reason: str | None = None


@dataclass
class Verdict:
    kind: str                      # sat | unsat-up-to | unknown
    k: int | None = None           # first sat bound
    max_k: int | None = None
    witness: Witness | None = None
    note: str | None = None
    per_k: list = field(default_factory=list)

    def exit_code(self) -> int:
        return {"sat": 0, "unsat-up-to": 1}.get(self.kind, 2)

    def to_json(self) -> dict:
        return {
            "verdict": self.kind,
            "k": self.k,
            "max_k": self.max_k,
            "note": self.note,
            "witness": self.witness.to_json() if self.witness else None,
            "per_k": [{"k": r.k, "verdict": r.verdict,
                       "wall_time": round(r.wall_time, 4),
                       "assertions": r.assertions, "reason": r.reason}
                      for r in self.per_k],
        }


@dataclass
class Prepared:
    """Normalization products shared by every bound."""

    theory: Theory
    pnf: Formula          # positive normal form, propositions intact
    prop_map: dict        # proposition -> fresh variable
    encoded: Formula      # proposition-free, optionally left-shifted
    check_base: Formula   # proposition-free, unshifted (verification frame)
    offset: int


def prepare(problem: ProblemFile, cfg: RunConfig) -> Prepared:
    theory = theory_by_name(cfg.theory) if cfg.theory else problem.theory
    pnf = to_pnf(problem.formula)
    no_props, prop_map = remove_propositions(pnf)
    if cfg.apply_shift:
        encoded, offset = shift_left(no_props)
    else:
        encoded, offset = no_props, 0
    return Prepared(theory, pnf, prop_map, encoded, no_props, offset)


def _verify(prep: Prepared, cfg: RunConfig, w: Witness) -> Witness:
    """Re-derive the verdict from the valuation table; reject anything the
    independent checks refuse."""
    if not verify_lasso(prep.pnf, w, prep.prop_map):
        raise PipelineError("witness fails the lasso evaluation")
    lasso = induced_symbolic_model(w, prep.check_base, cfg.consts_mode,
                                   prep.theory)
    if not lasso.periodic:
        raise PipelineError("witness valuations are not periodic at the seam")
    if prep.theory.discrete and cfg.with_existence:
        from .formulas import partition_variables
        partition = partition_variables(prep.check_base)
        if check_property_c_graph(lasso, partition, cfg.valuation_mode,
                                  prep.theory):
            raise PipelineError("witness lasso admits no arithmetic model")
    fill_truth_table(prep.pnf, w, prep.prop_map)
    if prep.prop_map:
        w.prop_back = [{p for p, x in prep.prop_map.items()
                        if w.value(x, i) == 1} for i in range(w.k + 1)]
    w.verified = True
    return w


def solve_at_k(prep: Prepared, k: int, cfg: RunConfig,
               session: SolverSession | None = None):
    """One bounded instance; returns (verdict string, witness or None,
    per-k report)."""
    opts = EncodeOptions(consts_mode=cfg.consts_mode,
                         valuation_mode=cfg.valuation_mode,
                         with_existence=cfg.with_existence)
    ctx = EncodingContext(prep.encoded, k, prep.theory, opts)
    script = encode(ctx)
    text = emit_smtlib(script)
    if cfg.emit_smt_path:
        path = cfg.emit_smt_path
        path = path.replace("{k}", str(k)) if "{k}" in path else f"{path}.k{k}.smt2"
        with open(path, "w") as fh:
            fh.write(text)
    if session is not None:
        result = session.solve(text, cfg.timeout)
    else:
        command = cfg.solver or find_default_solver()
        if command is None:
            result = SolverResult("solver-error",
                                  reason="no SMT solver found; pass --solver")
        else:
            result = solve(text, command, cfg.timeout)
    report = KReport(k, result.verdict, result.wall_time,
                     script.meta["assertions"], result.reason)
    if result.verdict != "sat":
        return result.verdict, None, report
    w = extract_witness(result, ctx)
    w = reframe_witness(w, prep.offset, bounds(prep.check_base))
    return "sat", _verify(prep, cfg, w), report


_THRESHOLD_NOTE = (
    "no lasso witness up to the tried bound; a completeness threshold "
    "exists but may be exponential in the formula size (on the order of "
    "the symbolic-valuation count times 2^|formula|), so rerun with a "
    "larger --max-k to push the search further")


def check_sat(problem: ProblemFile, cfg: RunConfig) -> Verdict:
    """Iterate bounds 1..max_k; the first verified witness wins."""
    prep = prepare(problem, cfg)
    session = cfg.session
    own_session = session is None
    if own_session:
        command = cfg.solver or find_default_solver()
        if command is None:
            return Verdict("unknown", max_k=cfg.max_k,
                           note="no SMT solver found; pass --solver or "
                                "install one (see README)")
        session = SolverSession(command, timeout=cfg.timeout)
    reports = []
    try:
        for k in range(1, cfg.max_k + 1):
            verdict, witness, report = solve_at_k(prep, k, cfg, session)
            reports.append(report)
            if verdict == "sat":
                return Verdict("sat", k=k, max_k=cfg.max_k, witness=witness,
                               per_k=reports)
            if verdict in ("unknown", "solver-error"):
                return Verdict("unknown", max_k=cfg.max_k, per_k=reports,
                               note=f"solver gave {verdict} at k={k}: "
                                    f"{report.reason or 'no detail'}")
        return Verdict("unsat-up-to", max_k=cfg.max_k, per_k=reports,
                       note=_THRESHOLD_NOTE)
    finally:
        if own_session:
            session.close()


# ---------------------------------------------------------------------------
# suite runner
# ---------------------------------------------------------------------------

_FILE_OPTION_KEYS = ("max_k", "theory", "consts", "mode", "timeout")


def apply_file_options(cfg: RunConfig, options: dict,
                       explicit: set | None = None) -> RunConfig:
    """Problem-file options fill any setting not given explicitly on the
    command line."""
    explicit = explicit or set()
    updates = {}
    for key, value in options.items():
        if key in explicit or key not in _FILE_OPTION_KEYS:
            continue
        if key == "max_k":
            updates["max_k"] = int(value)
        elif key == "theory":
            updates["theory"] = value
        elif key == "consts":
            updates["consts_mode"] = value
        elif key == "mode":
            updates["valuation_mode"] = value
        elif key == "timeout":
            updates["timeout"] = float(value)
    return replace(cfg, **updates)


def run_suite(directory: str, cfg: RunConfig, csv_path: str | None = None):
    """Check every .cltl file in a directory against its expected verdict.

    Returns (rows, exit_code); exit code is nonzero on any expectation
    mismatch, failed verification, or unreadable file.
    """
    rows = []
    exit_code = 0
    files = sorted(f for f in os.listdir(directory) if f.endswith(".cltl"))
    command = cfg.solver or find_default_solver()
    session = cfg.session
    own_session = session is None and command is not None
    if own_session:
        session = SolverSession(command, timeout=cfg.timeout)
    try:
        for name in files:
            path = os.path.join(directory, name)
            row = {"file": name, "expected": "", "verdict": "", "sat_k": "",
                   "wall_time": "", "assertions": "", "status": ""}
            start = time.monotonic()
            try:
                problem = parse(open(path).read())
                file_cfg = apply_file_options(cfg, problem.options)
                file_cfg.session = session
                expected = problem.options.get("expect", "")
                verdict = check_sat(problem, file_cfg)
                row["expected"] = expected
                row["verdict"] = verdict.kind
                row["sat_k"] = verdict.k if verdict.k is not None else ""
                row["assertions"] = (verdict.per_k[-1].assertions
                                     if verdict.per_k else "")
                ok = True
                if expected == "sat":
                    ok = verdict.kind == "sat"
                elif expected == "unsat":
                    ok = verdict.kind == "unsat-up-to"
                if verdict.kind == "sat" and not verdict.witness.verified:
                    ok = False
                row["status"] = "ok" if ok else "mismatch"
                if not ok:
                    exit_code = max(exit_code, 1)
            except (OSError, ValueError, PipelineError) as exc:
                row["status"] = f"error: {exc}"
                exit_code = max(exit_code, 2)
            row["wall_time"] = f"{time.monotonic() - start:.3f}"
            rows.append(row)
    finally:
        if own_session:
            session.close()
    if csv_path is not None:
        _write_csv(rows, csv_path)
    return rows, exit_code


def _write_csv(rows, csv_path):
    fieldnames = ["file", "expected", "verdict", "sat_k", "wall_time",
                  "assertions", "status"]
    if csv_path == "-":
        writer = csv.DictWriter(sys.stdout, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)
        return
    with open(csv_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)
