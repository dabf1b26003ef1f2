"""Conjunctive queries over chase results, and the differential harness
that makes the chase-equivalence properties executable.

A query with no output variables is Boolean: true iff its atoms map
homomorphically into the instance (variables may bind to nulls).  With
output variables it returns the projected bindings as sorted tuples.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .analysis import AnalysisReport, analyze
from .chase import (
    FIXPOINT,
    ChaseRun,
    ChaseVariant,
    PCHASE_R,
    exists_homomorphism,
    find_homomorphisms,
    ichase,
    oblivious,
    pchase_r,
    run_chase,
)
from .model import (
    Atom,
    Instance,
    Null,
    Program,
    Term,
    Variable,
    format_term,
    term_sort_key,
)


@dataclass(frozen=True)
class Query:
    atoms: tuple[Atom, ...]
    output_vars: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        names = {v.name for a in self.atoms for v in a.variables()}
        missing = [v for v in self.output_vars if v not in names]
        if missing:
            raise ValueError(f"output variables not in query: {', '.join(missing)}")

    @property
    def is_boolean(self) -> bool:
        return not self.output_vars

    def predicates(self) -> frozenset[str]:
        return frozenset(a.predicate for a in self.atoms)


@dataclass
class Answer:
    verdict: bool
    witness: Optional[dict[str, Term]] = None
    tuples: Optional[list[tuple[Term, ...]]] = None
    variant: Optional[str] = None
    chase_steps: Optional[int] = None
    chase_status: Optional[str] = None
    resumptions_used: Optional[int] = None
    warnings: list[str] = field(default_factory=list)

    def to_json_dict(self, certain: bool = False) -> dict:
        tuples = self.tuples
        if tuples is not None and certain:
            tuples = [t for t in tuples if not any(isinstance(x, Null) for x in t)]
        return {
            "verdict": self.verdict,
            "witness": (
                {name: format_term(t) for name, t in sorted(self.witness.items())}
                if self.witness is not None
                else None
            ),
            "tuples": (
                [[format_term(x) for x in t] for t in tuples]
                if tuples is not None
                else None
            ),
            "variant": self.variant,
            "chase": (
                {
                    "steps": self.chase_steps,
                    "status": self.chase_status,
                    "resumptionsUsed": self.resumptions_used,
                }
                if self.chase_status is not None
                else None
            ),
            "warnings": self.warnings,
        }


def evaluate_query(
    query: Query, instance: Instance, schema: Optional[dict[str, int]] = None
) -> Answer:
    """Evaluate against a fixed instance.

    With a ``schema``, querying a predicate the program never mentions
    answers false with a warning rather than erroring; a predicate that
    is merely empty is not a warning, just false.
    """
    if schema is not None:
        unknown = sorted(p for p in query.predicates() if p not in schema)
        if unknown:
            return Answer(
                verdict=False,
                tuples=[] if query.output_vars else None,
                warnings=[f"unknown predicate {p}; answering false" for p in unknown],
            )
    if query.is_boolean:
        hom = exists_homomorphism(query.atoms, instance)
        if hom is None:
            return Answer(verdict=False)
        witness = {v.name: t for v, t in hom.items() if isinstance(v, Variable)}
        return Answer(verdict=True, witness=witness)
    seen: set[tuple[Term, ...]] = set()
    for hom in find_homomorphisms(query.atoms, instance):
        row = tuple(hom[Variable(name)] for name in query.output_vars)
        seen.add(row)
    rows = sorted(seen, key=lambda r: tuple(term_sort_key(t) for t in r))
    return Answer(verdict=bool(rows), tuples=rows)


def default_resumptions(query: Query) -> int:
    """Resumption budget when none is given: one epoch per query atom."""
    return len(query.atoms)


def answer_with_variant(
    program: Program,
    query: Query,
    variant: ChaseVariant,
    *,
    max_steps: Optional[int] = None,
    trace: bool = False,
) -> tuple[Answer, ChaseRun]:
    """Chase, then answer.  Under pchase-r the query is re-evaluated after
    every resumption epoch and the run short-circuits on a true answer."""
    early: dict[str, Answer] = {}
    schema = program.schema

    def on_epoch(instance: Instance, epoch: int) -> bool:
        ans = evaluate_query(query, instance, schema)
        if ans.verdict:
            early["answer"] = ans
            return True
        return False

    run = run_chase(
        program,
        variant,
        max_steps=max_steps,
        trace=trace,
        on_epoch=on_epoch if variant.kind == PCHASE_R else None,
    )
    answer = early.get("answer") or evaluate_query(query, run.result, schema)
    answer.variant = str(variant)
    answer.chase_steps = run.fired_steps
    answer.chase_status = run.status
    answer.resumptions_used = run.resumptions_used
    return answer, run


# ---------------------------------------------------------------------------
# Differential Boolean query answering


@dataclass
class AssertionResult:
    name: str
    result: str  # "holds" | "violated" | "skipped"
    detail: str


@dataclass
class DifferentialReport:
    analysis: AnalysisReport
    answers: dict[str, Answer]
    assertions: list[AssertionResult]
    status: str  # "agreement" | "disagreement" | "inconclusive"
    notes: list[str]
    runs: dict[str, ChaseRun] = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "fragments": {
                "shy": self.analysis.verdicts.shy,
                "warded": self.analysis.verdicts.warded,
                "protected": self.analysis.verdicts.protected,
            },
            "answers": {
                name: {"verdict": a.verdict, "status": a.chase_status}
                for name, a in sorted(self.answers.items())
            },
            "assertions": [
                {"name": a.name, "result": a.result, "detail": a.detail}
                for a in self.assertions
            ],
            "status": self.status,
            "notes": self.notes,
        }


def _known_verdict(answer: Answer) -> Optional[bool]:
    """True answers survive truncation; false ones need a fixpoint."""
    if answer.verdict:
        return True
    if answer.chase_status == FIXPOINT:
        return False
    return None


def differential_bcqa(
    program: Program,
    query: Query,
    *,
    budget: int = 10_000,
    resumptions: Optional[int] = None,
) -> DifferentialReport:
    """Answer the query under pchase-r and ichase, with a budgeted
    oblivious run as oracle, and check every equivalence that applies to
    the fragment the program belongs to:

      protected          pchase-r and ichase must agree,
      shy + oracle       oblivious and pchase-r must agree,
      warded + oracle    oblivious and ichase must agree.

    A one-sided check still applies when a run was truncated while
    already true (extending a chase never retracts an answer).
    """
    report = analyze(program)
    k = default_resumptions(query) if resumptions is None else resumptions
    pr_answer, pr_run = answer_with_variant(
        program, query, pchase_r(k), max_steps=budget
    )
    ic_answer, ic_run = answer_with_variant(program, query, ichase(), max_steps=budget)
    ob_answer, ob_run = answer_with_variant(program, query, oblivious(), max_steps=budget)
    answers = {"pchase-r": pr_answer, "ichase": ic_answer, "oblivious": ob_answer}
    runs = {"pchase-r": pr_run, "ichase": ic_run, "oblivious": ob_run}

    notes: list[str] = []
    if not report.verdicts.protected:
        notes.append("program is not protected: pchase-r/ichase agreement is not required")
    checks: list[tuple[str, str, str]] = []
    if report.verdicts.protected:
        checks.append(("protected: pchase-r == ichase", "pchase-r", "ichase"))
    if report.verdicts.shy:
        checks.append(("shy: oblivious == pchase-r", "oblivious", "pchase-r"))
    if report.verdicts.warded:
        checks.append(("warded: oblivious == ichase", "oblivious", "ichase"))

    assertions: list[AssertionResult] = []
    for name, left, right in checks:
        lv = _known_verdict(answers[left])
        rv = _known_verdict(answers[right])
        if lv is None or rv is None:
            which = left if lv is None else right
            assertions.append(
                AssertionResult(name, "skipped", f"{which} hit the step budget while false")
            )
        elif lv == rv:
            assertions.append(AssertionResult(name, "holds", f"both {lv}"))
        else:
            assertions.append(
                AssertionResult(name, "violated", f"{left}={lv} but {right}={rv}")
            )

    if any(a.result == "violated" for a in assertions):
        status = "disagreement"
    elif any(a.result == "holds" for a in assertions):
        status = "agreement"
    else:
        status = "inconclusive"
        if not checks:
            notes.append("no equivalence applies: program is neither shy nor warded")
    return DifferentialReport(
        analysis=report,
        answers=answers,
        assertions=assertions,
        status=status,
        notes=notes,
        runs=runs,
    )
