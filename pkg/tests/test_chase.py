import json
from importlib import resources

import jsonschema
import pytest

from dlgx.chase import (
    ChaseRun,
    NonTerminationRiskError,
    compare_chase_containment,
    dump_instance,
    enumerate_triggers,
    exists_homomorphism,
    exists_isomorphic_embedding,
    find_homomorphisms,
    has_nontermination_risk,
    ichase,
    oblivious,
    parse_variant,
    pchase,
    pchase_r,
    run_chase,
)
from dlgx.generator import generate_random_program
from dlgx.model import (
    Atom,
    Instance,
    Null,
    Variable,
    constant,
    freeze_nulls,
)
from dlgx.parser import parse_program


def atom(pred: str, *syms) -> Atom:
    terms = []
    for s in syms:
        terms.append(s if isinstance(s, (Null, Variable)) else constant(s))
    return Atom(pred, tuple(terms))


# ---------------------------------------------------------------------------
# Matching primitives


class TestFindHomomorphisms:
    def test_variables_map_anywhere(self):
        target = Instance.from_facts([atom("q", "a", "b"), atom("q", "b", "c")])
        pattern = [Atom("q", (Variable("X"), Variable("Y")))]
        found = list(find_homomorphisms(pattern, target))
        assert len(found) == 2

    def test_join_respects_shared_variable(self):
        target = Instance.from_facts([atom("q", "a", "b"), atom("q", "b", "c")])
        pattern = [
            Atom("q", (Variable("X"), Variable("Y"))),
            Atom("q", (Variable("Y"), Variable("Z"))),
        ]
        found = list(find_homomorphisms(pattern, target))
        assert len(found) == 1
        subst = found[0]
        assert subst[Variable("Y")] == constant("b")

    def test_unfrozen_null_is_free_when_asked(self):
        nu = Null(0, 1)
        target = Instance.from_facts([atom("q", "a", "b")])
        pattern = [atom("q", "a", nu)]
        assert exists_homomorphism(pattern, target, free_nulls=True) is not None
        assert exists_homomorphism(pattern, target, free_nulls=False) is None

    def test_frozen_null_is_rigid_even_with_free_nulls(self):
        nu = Null(1, 0)  # epoch 0, so freezing the instance catches it
        base = Instance.from_facts([atom("q", "a", nu), atom("q", "c", "d")])
        frozen = freeze_nulls(base)
        pattern = [atom("q", "c", nu)]
        # mobile, the null would land on d; frozen, it stays itself
        assert exists_homomorphism(pattern, base, free_nulls=True) is not None
        assert exists_homomorphism(pattern, frozen, free_nulls=True) is None
        assert exists_homomorphism([atom("q", "a", nu)], frozen) is not None

    def test_initial_bindings_are_respected(self):
        target = Instance.from_facts([atom("q", "a", "b"), atom("q", "c", "d")])
        pattern = [Atom("q", (Variable("X"), Variable("Y")))]
        found = list(
            find_homomorphisms(pattern, target, initial={Variable("X"): constant("c")})
        )
        assert len(found) == 1
        assert found[0][Variable("Y")] == constant("d")

    def test_constants_are_rigid(self):
        target = Instance.from_facts([atom("q", "a", "b")])
        assert exists_homomorphism([atom("q", "a", "c")], target) is None


class TestIsomorphicEmbedding:
    def test_null_renaming_is_found(self):
        n1, n2 = Null(0, 1), Null(0, 2)
        target = Instance.from_facts([atom("q", "a", n1)])
        assert exists_isomorphic_embedding([atom("q", "a", n2)], target)

    def test_null_cannot_land_on_constant(self):
        n2 = Null(0, 2)
        target = Instance.from_facts([atom("q", "a", "b")])
        assert not exists_isomorphic_embedding([atom("q", "a", n2)], target)

    def test_injectivity_two_nulls_one_target(self):
        n1, n2, n3 = Null(0, 1), Null(0, 2), Null(0, 3)
        target = Instance.from_facts([atom("e", n1, n1)])
        # pattern needs two distinct nulls but the target has only one
        assert not exists_isomorphic_embedding([atom("e", n2, n3)], target)
        assert exists_isomorphic_embedding([atom("e", n2, n2)], target)

    def test_frozen_nulls_must_match_identically(self):
        n1, n2 = Null(1, 0), Null(2, 0)
        base = Instance.from_facts([atom("q", "a", n1), atom("q", "b", n2)])
        frozen = freeze_nulls(base)
        assert exists_isomorphic_embedding([atom("q", "a", n1)], frozen)
        # once frozen the two nulls are distinct rigid symbols, not
        # interchangeable renaming targets
        assert not exists_isomorphic_embedding([atom("q", "a", n2)], frozen)
        assert exists_isomorphic_embedding([atom("q", "a", n2)], base)


# ---------------------------------------------------------------------------
# Variant plumbing


def test_parse_variant_round_trip():
    assert str(parse_variant("oblivious")) == "oblivious"
    assert str(parse_variant("pchase")) == "pchase"
    assert str(parse_variant("ichase")) == "ichase"
    v = parse_variant("pchase-r", 3)
    assert v.resumptions == 3
    assert str(v) == "pchase-r(3)"


def test_parse_variant_rejects_unknown():
    with pytest.raises(ValueError):
        parse_variant("zchase")


def test_resumptions_only_for_pchase_r():
    with pytest.raises(ValueError):
        parse_variant("ichase", 2)
    with pytest.raises(ValueError):
        pchase_r(-1)


# ---------------------------------------------------------------------------
# Fixed programs with known chase results

BLOCKED_PAIR = """\
p(a).
q(a, b).
q(X, Z) :- p(X).
"""

TWO_PATH = """\
n(a).
e(X, Y) :- n(X).
n(Y) :- e(X, Y).
"""


def test_pchase_blocks_on_existing_witness():
    run = run_chase(parse_program(BLOCKED_PAIR), pchase())
    assert run.status == "fixpoint"
    assert len(run.result) == 2
    assert run.fired_steps == 0


def test_ichase_fires_despite_witness():
    run = run_chase(parse_program(BLOCKED_PAIR), ichase())
    assert run.status == "fixpoint"
    assert len(run.result) == 3
    fresh = [f for f in run.result if any(isinstance(t, Null) for t in f.terms)]
    assert len(fresh) == 1
    assert fresh[0].predicate == "q"
    assert fresh[0].terms[0] == constant("a")


def test_two_path_pchase_stops_after_one_hop():
    program = parse_program(TWO_PATH)
    run = run_chase(program, pchase())
    assert run.status == "fixpoint"
    # n(a), e(a, n1); the derived n(n1) maps onto n(a) with n1 free
    assert len(run.result) == 2
    assert run.fired_steps == 1
    assert sorted(f.predicate for f in run.result) == ["e", "n"]


def test_two_path_resumption_extends_the_frontier():
    program = parse_program(TWO_PATH)
    run = run_chase(program, pchase_r(1))
    preds = sorted(f.predicate for f in run.result)
    assert preds.count("e") == 2
    assert run.resumptions_used == 1


def test_two_path_ichase_builds_two_links():
    program = parse_program(TWO_PATH)
    run = run_chase(program, ichase())
    assert run.status == "fixpoint"
    assert sorted(f.predicate for f in run.result).count("e") == 2


def test_oblivious_needs_budget_on_recursive_existentials():
    program = parse_program(TWO_PATH)
    assert has_nontermination_risk(program)
    with pytest.raises(NonTerminationRiskError):
        run_chase(program, oblivious())
    run = run_chase(program, oblivious(), max_steps=10)
    assert run.status == "step-limit-reached"
    assert run.fired_steps == 10


def test_oblivious_no_risk_on_plain_datalog():
    program = parse_program("e(a, b).\ne(b, c).\nt(X, Y) :- e(X, Y).\nt(X, Z) :- t(X, Y), e(Y, Z).")
    assert not has_nontermination_risk(program)
    run = run_chase(program, oblivious())
    assert run.status == "fixpoint"
    assert atom("t", "a", "c") in run.result


def test_oblivious_fires_each_trigger_once():
    program = parse_program("p(a).\nq(X, Z) :- p(X).")
    run = run_chase(program, oblivious(), max_steps=50)
    assert run.status == "fixpoint"
    assert run.fired_steps == 1
    assert len(run.result) == 2


def test_max_steps_zero_fires_nothing():
    program = parse_program(TWO_PATH)
    run = run_chase(program, pchase(), max_steps=0)
    assert run.status == "step-limit-reached"
    assert run.fired_steps == 0
    assert len(run.result) == 1


def test_exact_budget_still_reports_fixpoint():
    program = parse_program(TWO_PATH)
    free = run_chase(program, pchase())
    budgeted = run_chase(program, pchase(), max_steps=free.fired_steps)
    assert budgeted.status == "fixpoint"
    assert dump_instance(budgeted.result) == dump_instance(free.result)


def test_runs_are_deterministic():
    for seed in (1, 17, 40):
        program = generate_random_program(seed)
        for variant in (pchase(), ichase(), pchase_r(2)):
            a = run_chase(program, variant, max_steps=2000)
            b = run_chase(program, variant, max_steps=2000)
            assert dump_instance(a.result) == dump_instance(b.result)
            assert a.fired_steps == b.fired_steps
            assert a.status == b.status


def test_trigger_enumeration_is_sorted_and_complete():
    program = parse_program(
        "e(a, b).\ne(b, c).\nt(X, Y) :- e(X, Y)."
    )
    instance = Instance.from_facts(program.facts)
    triggers = enumerate_triggers(program, instance)
    assert len(triggers) == 2
    keys = [t.sort_key() for t in triggers]
    assert keys == sorted(keys)


def test_resumption_freezes_then_extends():
    program = parse_program(TWO_PATH)
    run0 = run_chase(program, pchase_r(0))
    run2 = run_chase(program, pchase_r(2))
    assert len(run0.result) < len(run2.result)
    assert run2.resumptions_used == 2
    # frozen chain facts survive in the final result
    assert dump_instance(run0.result) != dump_instance(run2.result)


def test_on_epoch_can_stop_early():
    program = parse_program(TWO_PATH)
    calls = []

    def stop(instance, epoch):
        calls.append(epoch)
        return True

    run = run_chase(program, pchase_r(5), on_epoch=stop)
    assert run.resumptions_used == 0
    assert calls == [0]


def test_trace_records_match_schema():
    schema = json.loads(
        resources.files("dlgx.schemas").joinpath("trace_record.schema.json").read_text()
    )
    program = parse_program(BLOCKED_PAIR)
    run = run_chase(program, pchase(), trace=True)
    assert run.trace is not None and run.trace
    for record in run.trace:
        jsonschema.validate(record.to_json_dict(), schema)
    blocked = [r for r in run.trace if not r.fired]
    assert blocked and blocked[0].block_reason == "homomorphism"


def test_trace_reports_duplicate_triggers():
    program = parse_program("p(a).\nq(X, Z) :- p(X).")
    run = run_chase(program, oblivious(), max_steps=50, trace=True)
    reasons = {r.block_reason for r in run.trace if not r.fired}
    assert reasons <= {"duplicate-trigger"}


def test_ichase_blocks_with_isomorphism_reason():
    program = parse_program(TWO_PATH)
    run = run_chase(program, ichase(), trace=True)
    reasons = {r.block_reason for r in run.trace if not r.fired}
    assert "isomorphism" in reasons


# ---------------------------------------------------------------------------
# Containment checking


def test_containment_holds_on_two_path():
    report = compare_chase_containment(parse_program(TWO_PATH))
    assert report.status == "holds"
    assert report.witness is None


def test_containment_holds_across_generated_programs():
    for seed in range(60):
        program = generate_random_program(seed)
        report = compare_chase_containment(program, max_steps=10_000)
        assert report.status in ("holds", "inconclusive")
        assert report.status != "violated"


def test_containment_inconclusive_when_budget_too_small():
    report = compare_chase_containment(parse_program(TWO_PATH), max_steps=1)
    assert report.status == "inconclusive"


def test_dump_instance_is_sorted_text():
    program = parse_program(BLOCKED_PAIR)
    run = run_chase(program, ichase())
    text = dump_instance(run.result)
    lines = text.strip().splitlines()
    assert lines == sorted(lines)
    assert all(line.endswith(".") for line in lines)
