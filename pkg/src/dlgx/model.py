"""Core syntactic objects: terms, atoms, rules, programs, and instances.

Terms are constants, variables, and labelled nulls.  Nulls carry the
resumption epoch they were created in; an :class:`Instance` tracks the
current epoch, and nulls from earlier epochs are "frozen": they behave
like constants in homomorphism checks while still printing as nulls.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Optional, Sequence, Union


class UnboundVariableError(Exception):
    """A substitution was applied to an atom with an unmapped variable."""


@dataclass(frozen=True, slots=True)
class Constant:
    symbol: str

    def __str__(self) -> str:
        return format_term(self)


@dataclass(frozen=True, slots=True)
class Variable:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, slots=True)
class Null:
    counter: int
    epoch: int = 0

    def __str__(self) -> str:
        return format_term(self)


Term = Union[Constant, Variable, Null]

_constants: dict[str, Constant] = {}


def constant(symbol: str) -> Constant:
    """Interned constant factory; equal symbols share one object."""
    c = _constants.get(symbol)
    if c is None:
        c = Constant(symbol)
        _constants[symbol] = c
    return c


def variable(name: str) -> Variable:
    return Variable(name)


def term_sort_key(term: Term) -> tuple:
    """Total deterministic order over terms: constants, then nulls, then variables."""
    if isinstance(term, Constant):
        return (0, term.symbol)
    if isinstance(term, Null):
        return (1, term.epoch, term.counter)
    return (2, term.name)


_BARE_CONSTANT = re.compile(r"[a-z][A-Za-z0-9_]*$|[0-9][0-9]*$")


def format_term(term: Term) -> str:
    if isinstance(term, Constant):
        if _BARE_CONSTANT.match(term.symbol):
            return term.symbol
        escaped = term.symbol.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    if isinstance(term, Null):
        return f"_:e{term.epoch}n{term.counter}"
    return term.name


class Atom:
    """A predicate applied to a tuple of terms.  Immutable, hash-cached.

    A ground atom over constants and nulls doubles as a fact.
    """

    __slots__ = ("predicate", "terms", "_hash")

    def __init__(self, predicate: str, terms: Iterable[Term]):
        self.predicate = predicate
        self.terms = tuple(terms)
        if not self.terms:
            raise ValueError(f"atom {predicate} needs at least one term")
        self._hash = hash((predicate, self.terms))

    @property
    def arity(self) -> int:
        return len(self.terms)

    def variables(self) -> Iterator[Variable]:
        for t in self.terms:
            if isinstance(t, Variable):
                yield t

    def nulls(self) -> Iterator[Null]:
        for t in self.terms:
            if isinstance(t, Null):
                yield t

    @property
    def is_ground(self) -> bool:
        return not any(isinstance(t, Variable) for t in self.terms)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Atom)
            and self._hash == other._hash
            and self.predicate == other.predicate
            and self.terms == other.terms
        )

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return f"Atom({format_atom(self)})"

    def __str__(self) -> str:
        return format_atom(self)


def format_atom(atom: Atom) -> str:
    return f"{atom.predicate}({', '.join(format_term(t) for t in atom.terms)})"


# A substitution maps variables (and, in null-mapping homomorphism checks,
# nulls) to constants or nulls.  It is the identity on constants.
Substitution = Mapping[Term, Term]


def apply_substitution(subst: Substitution, atom: Atom) -> Atom:
    """Instantiate ``atom`` under ``subst``.

    Every variable of the atom must be in the domain of the substitution;
    nulls map to themselves unless explicitly remapped.
    """
    out = []
    for t in atom.terms:
        if isinstance(t, Constant):
            out.append(t)
        elif isinstance(t, Variable):
            try:
                out.append(subst[t])
            except KeyError:
                raise UnboundVariableError(
                    f"variable {t.name} of {format_atom(atom)} is not bound"
                ) from None
        else:
            out.append(subst.get(t, t))
    return Atom(atom.predicate, out)


def compose_substitutions(outer: Substitution, inner: Substitution) -> dict[Term, Term]:
    """Return the substitution equivalent to applying ``inner`` then ``outer``."""
    composed: dict[Term, Term] = {}
    for key, value in inner.items():
        composed[key] = outer.get(value, value)
    for key, value in outer.items():
        composed.setdefault(key, value)
    return composed


@dataclass(frozen=True)
class Position:
    """A predicate attribute, 1-based: p[2] is the second argument of p."""

    predicate: str
    index: int

    def __str__(self) -> str:
        return f"{self.predicate}[{self.index}]"


@dataclass(frozen=True)
class ExistentialVarId:
    """Program-global identity of an existential variable: rule plus name."""

    rule_id: int
    name: str

    def __str__(self) -> str:
        return f"r{self.rule_id}.{self.name}"


@dataclass(frozen=True)
class Rule:
    """body -> head rule; head variables missing from the body are existential.

    Rules never contain nulls.  ``frontier`` is the set of variable names
    shared between body and head; ``existential_vars`` the head-only ones.
    """

    id: int
    body: tuple[Atom, ...]
    head: tuple[Atom, ...]
    frontier: frozenset[str]
    existential_vars: frozenset[str]

    @staticmethod
    def make(rule_id: int, body: Sequence[Atom], head: Sequence[Atom]) -> "Rule":
        body = tuple(body)
        head = tuple(head)
        if not body:
            raise ValueError(f"rule {rule_id}: empty body")
        if not head:
            raise ValueError(f"rule {rule_id}: empty head")
        for atom in body + head:
            if any(isinstance(t, Null) for t in atom.terms):
                raise ValueError(f"rule {rule_id}: nulls are not allowed in rules")
        body_vars = {v.name for a in body for v in a.variables()}
        head_vars = {v.name for a in head for v in a.variables()}
        return Rule(
            id=rule_id,
            body=body,
            head=head,
            frontier=frozenset(body_vars & head_vars),
            existential_vars=frozenset(head_vars - body_vars),
        )

    def body_variable_names(self) -> frozenset[str]:
        return frozenset(v.name for a in self.body for v in a.variables())

    def __str__(self) -> str:
        heads = ", ".join(format_atom(a) for a in self.head)
        bodies = ", ".join(format_atom(a) for a in self.body)
        return f"{heads} :- {bodies}."


class SchemaError(ValueError):
    """Inconsistent predicate arities across a program's rules and facts."""


@dataclass(frozen=True)
class Program:
    """A rule set plus an initial database of ground facts."""

    rules: tuple[Rule, ...]
    facts: tuple[Atom, ...] = ()

    def __post_init__(self) -> None:
        for fact in self.facts:
            if not all(isinstance(t, Constant) for t in fact.terms):
                raise ValueError(f"fact {format_atom(fact)} must contain constants only")
        self.schema  # force arity validation

    @property
    def schema(self) -> dict[str, int]:
        """Predicate -> arity, validated for consistency."""
        schema: dict[str, int] = {}
        for atom in self._all_atoms():
            seen = schema.get(atom.predicate)
            if seen is None:
                schema[atom.predicate] = atom.arity
            elif seen != atom.arity:
                raise SchemaError(
                    f"predicate {atom.predicate} used with arities {seen} and {atom.arity}"
                )
        return schema

    def _all_atoms(self) -> Iterator[Atom]:
        for rule in self.rules:
            yield from rule.body
            yield from rule.head
        yield from self.facts

    def rule_by_id(self, rule_id: int) -> Rule:
        for rule in self.rules:
            if rule.id == rule_id:
                return rule
        raise KeyError(rule_id)

    def with_facts(self, extra: Iterable[Atom]) -> "Program":
        return Program(rules=self.rules, facts=self.facts + tuple(extra))

    def has_existential_rules(self) -> bool:
        return any(r.existential_vars for r in self.rules)


class Instance:
    """A set of facts with per-predicate and per-position indexes.

    Iteration order is insertion order, which keeps chase runs
    deterministic.  ``active_epoch`` marks the current resumption epoch:
    nulls created in earlier epochs are frozen (rigid in homomorphism
    checks).
    """

    __slots__ = ("_facts", "_by_predicate", "_index", "null_registry", "active_epoch")

    def __init__(self) -> None:
        self._facts: dict[Atom, None] = {}
        self._by_predicate: dict[str, list[Atom]] = {}
        self._index: dict[tuple[str, int, Term], list[Atom]] = {}
        self.null_registry: set[Null] = set()
        self.active_epoch: int = 0

    @classmethod
    def from_facts(cls, facts: Iterable[Atom]) -> "Instance":
        inst = cls()
        for f in facts:
            inst.add(f)
        return inst

    def add(self, fact: Atom) -> bool:
        """Insert a fact; returns False if it was already present."""
        if fact in self._facts:
            return False
        self._facts[fact] = None
        self._by_predicate.setdefault(fact.predicate, []).append(fact)
        for i, t in enumerate(fact.terms):
            self._index.setdefault((fact.predicate, i, t), []).append(fact)
            if isinstance(t, Null):
                self.null_registry.add(t)
        return True

    def __contains__(self, fact: Atom) -> bool:
        return fact in self._facts

    def __len__(self) -> int:
        return len(self._facts)

    def __iter__(self) -> Iterator[Atom]:
        return iter(self._facts)

    def facts_for(self, predicate: str) -> list[Atom]:
        return self._by_predicate.get(predicate, [])

    def candidates(self, predicate: str, bound: Sequence[tuple[int, Term]]) -> list[Atom]:
        """Facts of ``predicate`` matching the given (position, term) bindings.

        Picks the most selective single-position index; callers still verify
        the remaining positions.
        """
        if not bound:
            return self.facts_for(predicate)
        best: Optional[list[Atom]] = None
        for i, t in bound:
            lst = self._index.get((predicate, i, t))
            if lst is None:
                return []
            if best is None or len(lst) < len(best):
                best = lst
        return best if best is not None else []

    def is_frozen(self, null: Null) -> bool:
        return null.epoch < self.active_epoch

    def copy(self) -> "Instance":
        dup = Instance()
        dup._facts = dict(self._facts)
        dup._by_predicate = {p: list(fs) for p, fs in self._by_predicate.items()}
        dup._index = {k: list(fs) for k, fs in self._index.items()}
        dup.null_registry = set(self.null_registry)
        dup.active_epoch = self.active_epoch
        return dup


def freeze_nulls(instance: Instance) -> Instance:
    """Start a new resumption epoch: existing nulls become rigid.

    Facts are unchanged; only the epoch boundary moves, so repeated
    freezing is idempotent with respect to homomorphism behavior.
    """
    out = instance.copy()
    out.active_epoch += 1
    return out


def format_instance(instance: Instance) -> str:
    """Canonical dump: one ``fact.`` line per fact, lexicographically sorted."""
    lines = sorted(f"{format_atom(f)}." for f in instance)
    return "\n".join(lines) + ("\n" if lines else "")


class NullFactory:
    """Deterministic source of fresh nulls; the counter is global per run."""

    __slots__ = ("counter",)

    def __init__(self) -> None:
        self.counter = 0

    def preview(self, count: int, epoch: int) -> list[Null]:
        """Nulls the next ``take`` would produce, without consuming them."""
        return [Null(self.counter + k + 1, epoch) for k in range(count)]

    def take(self, count: int, epoch: int) -> list[Null]:
        fresh = self.preview(count, epoch)
        self.counter += count
        return fresh
