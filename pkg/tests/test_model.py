import pytest

from dlgx.model import (
    Atom,
    Constant,
    Instance,
    Null,
    NullFactory,
    Position,
    Program,
    Rule,
    SchemaError,
    UnboundVariableError,
    Variable,
    apply_substitution,
    constant,
    format_instance,
    format_term,
    freeze_nulls,
    term_sort_key,
)


def test_term_namespaces_are_disjoint():
    assert Constant("a") != Variable("a")
    assert Constant("a") != Null(1)
    assert Variable("X") != Null(1)
    assert len({Constant("a"), Variable("a"), Null(1)}) == 3


def test_constant_interning():
    assert constant("abc") is constant("abc")
    assert constant("abc") == Constant("abc")


def test_null_identity_includes_epoch():
    assert Null(1, 0) != Null(1, 1)
    assert Null(1, 0) == Null(1, 0)


def test_term_formatting():
    assert format_term(constant("abc")) == "abc"
    assert format_term(constant("New York")) == '"New York"'
    assert format_term(constant('say "hi"')) == '"say \\"hi\\""'
    assert format_term(constant("42")) == "42"
    assert format_term(Variable("X")) == "X"
    assert format_term(Null(3)) == "_:e0n3"
    assert format_term(Null(3, 2)) == "_:e2n3"


def test_term_sort_key_orders_constants_nulls_variables():
    terms = [Variable("A"), Null(1), constant("z"), constant("a"), Null(2, 1)]
    ordered = sorted(terms, key=term_sort_key)
    assert ordered == [constant("a"), constant("z"), Null(1), Null(2, 1), Variable("A")]


def test_atom_basics():
    a = Atom("p", [constant("a"), Variable("X")])
    assert a.predicate == "p"
    assert a.arity == 2
    assert not a.is_ground
    assert set(a.variables()) == {Variable("X")}
    assert Atom("p", [constant("a"), Variable("X")]) == a
    assert hash(Atom("p", [constant("a"), Variable("X")])) == hash(a)


def test_atom_requires_terms():
    with pytest.raises(ValueError):
        Atom("p", [])


def test_apply_substitution():
    a = Atom("p", [Variable("X"), constant("c")])
    out = apply_substitution({Variable("X"): constant("a")}, a)
    assert out == Atom("p", [constant("a"), constant("c")])


def test_apply_substitution_rejects_unbound():
    a = Atom("p", [Variable("X"), Variable("Y")])
    with pytest.raises(UnboundVariableError):
        apply_substitution({Variable("X"): constant("a")}, a)


def test_position_is_one_based():
    assert str(Position("p", 2)) == "p[2]"


def test_rule_frontier_and_existentials():
    body = [Atom("e", [Variable("X")])]
    head = [Atom("i", [Variable("X"), Variable("Y")])]
    rule = Rule.make(0, body, head)
    assert rule.frontier == frozenset({"X"})
    assert rule.existential_vars == frozenset({"Y"})


def test_rule_rejects_empty_parts_and_nulls():
    with pytest.raises(ValueError):
        Rule.make(0, [], [Atom("p", [Variable("X")])])
    with pytest.raises(ValueError):
        Rule.make(0, [Atom("p", [Variable("X")])], [])
    with pytest.raises(ValueError):
        Rule.make(0, [Atom("p", [Null(1)])], [Atom("q", [Null(1)])])


def test_program_schema_consistency():
    rule = Rule.make(0, [Atom("e", [Variable("X")])], [Atom("i", [Variable("X")])])
    program = Program(rules=(rule,), facts=(Atom("e", [constant("a")]),))
    assert program.schema == {"e": 1, "i": 1}
    with pytest.raises(SchemaError):
        bad = Program(
            rules=(rule,),
            facts=(Atom("e", [constant("a"), constant("b")]),),
        )
        bad.schema  # noqa: B018 - arity clash surfaces on schema access


def test_program_facts_must_be_ground():
    with pytest.raises(ValueError):
        Program(rules=(), facts=(Atom("e", [Variable("X")]),))


def test_instance_set_semantics():
    inst = Instance()
    f = Atom("p", [constant("a")])
    assert inst.add(f)
    assert not inst.add(f)
    assert len(inst) == 1


def test_instance_null_registry():
    inst = Instance()
    inst.add(Atom("p", [Null(1), constant("a")]))
    assert Null(1) in inst.null_registry


def test_instance_candidates_use_most_selective_index():
    inst = Instance()
    inst.add(Atom("p", [constant("a"), constant("b")]))
    inst.add(Atom("p", [constant("a"), constant("c")]))
    only_b = inst.candidates("p", [(1, constant("b"))])
    assert only_b == [Atom("p", [constant("a"), constant("b")])]
    both = inst.candidates("p", [(0, constant("a"))])
    assert len(both) == 2
    assert inst.candidates("p", [(0, constant("zzz"))]) == []


def test_freeze_nulls_marks_prior_epochs():
    inst = Instance()
    inst.add(Atom("p", [Null(1, 0)]))
    frozen = freeze_nulls(inst)
    assert frozen.active_epoch == 1
    assert frozen.is_frozen(Null(1, 0))
    assert not frozen.is_frozen(Null(2, 1))
    # original untouched
    assert inst.active_epoch == 0
    assert not inst.is_frozen(Null(1, 0))


def test_format_instance_is_sorted_and_stable():
    inst = Instance()
    inst.add(Atom("q", [constant("b")]))
    inst.add(Atom("p", [constant("a"), Null(1)]))
    assert format_instance(inst) == "p(a, _:e0n1).\nq(b).\n"


def test_null_factory_preview_does_not_consume():
    nf = NullFactory()
    first = nf.preview(2, 0)
    assert first == nf.preview(2, 0)
    taken = nf.take(2, 0)
    assert taken == first
    assert nf.preview(1, 0) != [first[0]]
