"""A small production-rule engine with forward and backward chaining.

Facts are (subject, attribute, value) triples held in a working memory that
keeps one value per (subject, attribute) pair plus a recency counter. Rules
pair a condition list (pattern matches, comparisons, and aggregates) with an
action list (assert, retract, emit-decision).

Forward chaining runs to fixpoint under a deterministic conflict-resolution
order: descending salience, then ascending recency of the matched facts,
then rule name. Refraction keeps an activation from firing twice on the
same fact basis. Matching is naive re-evaluation each cycle; fleets here
are small enough that an incremental match network would be overkill.

Backward chaining proves a goal condition from present facts or from rule
consequences, depth-bounded, trying rules in descending salience order.
Aggregate and test conditions are evaluated against the working memory as
it stands; only plain matches chain through rules.
"""

from __future__ import annotations

import operator
from dataclasses import dataclass, field, replace
from typing import Callable, Iterator, Mapping, Optional, Union


class EngineError(Exception):
    pass


class UnboundVariable(EngineError):
    pass


class CycleLimitExceeded(EngineError):
    """The forward run did not reach a fixpoint within max_cycles fires."""


class DepthLimitExceeded(EngineError):
    """The backward search was cut off before it could decide the goal."""


class _AnyToken:
    def __repr__(self) -> str:
        return "ANY"


ANY = _AnyToken()

Value = Union[str, int, float, bool]
Bindings = dict


@dataclass(frozen=True)
class Var:
    name: str

    def __repr__(self) -> str:
        return f"?{self.name}"


@dataclass(frozen=True)
class Plus:
    """Deferred sum, evaluated against bindings when an action fires."""

    left: object
    right: object


Term = Union[Value, Var, _AnyToken, Plus]


def _resolve(term, bindings: Bindings):
    """Ground a term; raises if a variable is still unbound."""
    if isinstance(term, Var):
        seen = set()
        while isinstance(term, Var):
            if term.name in seen or term.name not in bindings:
                raise UnboundVariable(f"variable {term!r} is unbound")
            seen.add(term.name)
            term = bindings[term.name]
    if isinstance(term, Plus):
        return _resolve(term.left, bindings) + _resolve(term.right, bindings)
    return term


def _grounded(bindings: Bindings) -> Bindings:
    """The ground subset of a binding set that may contain var-to-var links."""
    out = {}
    for name in bindings:
        try:
            out[name] = _resolve(Var(name), bindings)
        except UnboundVariable:
            continue
    return out


def _match_term(template, actual, bindings: Bindings) -> Optional[Bindings]:
    """Match one template position against a concrete fact field."""
    if template is ANY:
        return bindings
    if isinstance(template, Var):
        if template.name in bindings:
            template = bindings[template.name]
            if isinstance(template, Var):  # unresolved link; bind through
                return _match_term(template, actual, bindings)
        else:
            out = dict(bindings)
            out[template.name] = actual
            return out
    return bindings if template == actual else None


# A fact basis is the set of (subject, attribute, recency) triples a
# condition read; refraction and agenda ordering both key off it.
Basis = frozenset


class WorkingMemory:
    """Mutable fact store with one value per (subject, attribute) pair."""

    def __init__(self) -> None:
        self._facts: dict[tuple, tuple] = {}
        self._tick = 0

    def put(self, subject, attribute, value) -> None:
        self._tick += 1
        self._facts[(subject, attribute)] = (value, self._tick)

    def delete(self, subject, attribute) -> None:
        self._facts.pop((subject, attribute), None)

    def get(self, subject, attribute, default=None):
        entry = self._facts.get((subject, attribute))
        return default if entry is None else entry[0]

    def recency(self, subject, attribute) -> int:
        return self._facts[(subject, attribute)][1]

    def __contains__(self, key) -> bool:
        return key in self._facts

    def __len__(self) -> int:
        return len(self._facts)

    def facts(self) -> Iterator[tuple]:
        for (subject, attribute), (value, recency) in self._facts.items():
            yield subject, attribute, value, recency

    def seed(self, triples) -> "WorkingMemory":
        for subject, attribute, value in triples:
            self.put(subject, attribute, value)
        return self


def _rename_term(term, suffix: str):
    if isinstance(term, Var):
        return Var(term.name + suffix)
    if isinstance(term, Plus):
        return Plus(_rename_term(term.left, suffix), _rename_term(term.right, suffix))
    return term


@dataclass(frozen=True)
class Match:
    """Pattern over one fact; variables bind, ANY matches anything."""

    subject: Term
    attribute: Term
    value: Term = ANY

    def solutions(self, wm: WorkingMemory, bindings: Bindings):
        for subject, attribute, value, recency in wm.facts():
            b = _match_term(self.subject, subject, bindings)
            if b is None:
                continue
            b = _match_term(self.attribute, attribute, b)
            if b is None:
                continue
            b = _match_term(self.value, value, b)
            if b is None:
                continue
            yield b, Basis({(subject, attribute, recency)})

    def rename(self, suffix: str) -> "Match":
        return Match(
            _rename_term(self.subject, suffix),
            _rename_term(self.attribute, suffix),
            _rename_term(self.value, suffix),
        )


_OPS: Mapping[str, Callable] = {
    "==": operator.eq,
    "!=": operator.ne,
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
}


@dataclass(frozen=True)
class Test:
    """Comparison between two ground terms; yields no new bindings."""

    left: Term
    op: str
    right: Term

    def solutions(self, wm: WorkingMemory, bindings: Bindings):
        if _OPS[self.op](_resolve(self.left, bindings), _resolve(self.right, bindings)):
            yield bindings, Basis()

    def rename(self, suffix: str) -> "Test":
        return Test(_rename_term(self.left, suffix), self.op, _rename_term(self.right, suffix))


def _template_matches(template, actual, bindings: Bindings) -> bool:
    """Wildcard check: unbound variables match without binding."""
    if template is ANY or (isinstance(template, Var) and template.name not in bindings):
        return True
    try:
        return _resolve(template, bindings) == actual
    except UnboundVariable:
        return True


@dataclass(frozen=True)
class Count:
    """Bind the number of facts matching a wildcard template."""

    subject: Term
    attribute: Term
    value: Term
    into: str

    def solutions(self, wm: WorkingMemory, bindings: Bindings):
        n = 0
        basis = set()
        for subject, attribute, value, recency in wm.facts():
            if (
                _template_matches(self.subject, subject, bindings)
                and _template_matches(self.attribute, attribute, bindings)
                and _template_matches(self.value, value, bindings)
            ):
                n += 1
                basis.add((subject, attribute, recency))
        out = dict(bindings)
        out[self.into] = n
        yield out, Basis(basis)

    def rename(self, suffix: str) -> "Count":
        return Count(
            _rename_term(self.subject, suffix),
            _rename_term(self.attribute, suffix),
            _rename_term(self.value, suffix),
            self.into + suffix,
        )


@dataclass(frozen=True)
class Exists:
    subject: Term
    attribute: Term
    value: Term = ANY

    def solutions(self, wm: WorkingMemory, bindings: Bindings):
        for _, basis in Match(self.subject, self.attribute, self.value).solutions(wm, bindings):
            yield bindings, basis
            return

    def rename(self, suffix: str) -> "Exists":
        inner = Match(self.subject, self.attribute, self.value).rename(suffix)
        return Exists(inner.subject, inner.attribute, inner.value)


@dataclass(frozen=True)
class Absent:
    subject: Term
    attribute: Term
    value: Term = ANY

    def solutions(self, wm: WorkingMemory, bindings: Bindings):
        for _ in Match(self.subject, self.attribute, self.value).solutions(wm, bindings):
            return
        yield bindings, Basis()

    def rename(self, suffix: str) -> "Absent":
        inner = Match(self.subject, self.attribute, self.value).rename(suffix)
        return Absent(inner.subject, inner.attribute, inner.value)


@dataclass(frozen=True)
class Least:
    """Bind ``subject`` to the matching fact subject with the smallest key.

    The key is the tuple of the subject's values for each ``order_by``
    attribute; the pseudo-attribute ``$id`` stands for the subject itself.
    Every candidate fact inspected joins the basis, so any change among the
    candidates re-enables rules built on this condition.
    """

    subject: Var
    attribute: str
    value: Term
    order_by: tuple
    reverse: bool = False

    def solutions(self, wm: WorkingMemory, bindings: Bindings):
        if self.subject.name in bindings:
            raise EngineError(f"{self.subject!r} must be unbound in a Least condition")
        candidates = []
        basis = set()
        for subject, attribute, value, recency in wm.facts():
            if attribute != self.attribute:
                continue
            if not _template_matches(self.value, value, bindings):
                continue
            basis.add((subject, attribute, recency))
            key = []
            for attr in self.order_by:
                if attr == "$id":
                    key.append(str(subject))
                else:
                    if (subject, attr) not in wm:
                        raise EngineError(f"candidate {subject!r} lacks key attribute {attr!r}")
                    key.append(wm.get(subject, attr))
                    basis.add((subject, attr, wm.recency(subject, attr)))
            candidates.append((tuple(key), str(subject), subject))
        if not candidates:
            return
        pick = max(candidates) if self.reverse else min(candidates)
        out = dict(bindings)
        out[self.subject.name] = pick[2]
        yield out, Basis(basis)

    def rename(self, suffix: str) -> "Least":
        return replace(self, subject=Var(self.subject.name + suffix))


def Greatest(subject: Var, attribute: str, value: Term, order_by: tuple) -> Least:
    return Least(subject, attribute, value, order_by, reverse=True)


Condition = Union[Match, Test, Count, Exists, Absent, Least]


@dataclass(frozen=True)
class Put:
    subject: Term
    attribute: Term
    value: Term

    def rename(self, suffix: str) -> "Put":
        return Put(
            _rename_term(self.subject, suffix),
            _rename_term(self.attribute, suffix),
            _rename_term(self.value, suffix),
        )


@dataclass(frozen=True)
class Del:
    subject: Term
    attribute: Term


@dataclass(frozen=True)
class Emit:
    """Record a decision; payload values may reference bound variables."""

    tag: str
    payload: tuple = ()  # tuple of (key, term) pairs, kept hashable

    @staticmethod
    def of(tag: str, **payload) -> "Emit":
        return Emit(tag, tuple(sorted(payload.items())))


Action = Union[Put, Del, Emit]


@dataclass(frozen=True)
class Decision:
    rule: str
    tag: str
    payload: Mapping


@dataclass(frozen=True)
class Rule:
    name: str
    salience: int
    conditions: tuple
    actions: tuple

    def activations(self, wm: WorkingMemory, bindings: Bindings, basis: Basis = Basis()):
        if not self.conditions:
            yield bindings, basis
            return
        head, *rest = self.conditions
        for b, extra in head.solutions(wm, bindings):
            yield from replace(self, conditions=tuple(rest)).activations(wm, b, basis | extra)


def rule(name: str, salience: int, conditions, actions) -> Rule:
    return Rule(name, salience, tuple(conditions), tuple(actions))


def _fire(rule_: Rule, bindings: Bindings, wm: WorkingMemory, decisions: list) -> None:
    for action in rule_.actions:
        if isinstance(action, Put):
            wm.put(
                _resolve(action.subject, bindings),
                _resolve(action.attribute, bindings),
                _resolve(action.value, bindings),
            )
        elif isinstance(action, Del):
            wm.delete(_resolve(action.subject, bindings), _resolve(action.attribute, bindings))
        else:
            payload = {key: _resolve(term, bindings) for key, term in action.payload}
            decisions.append(Decision(rule=rule_.name, tag=action.tag, payload=payload))


def run_forward(wm: WorkingMemory, rules, max_cycles: int = 1000):
    """Fire rules to fixpoint; returns the memory and the decision log.

    Raises CycleLimitExceeded after max_cycles fires, which signals a rule
    set that keeps rewriting its own trigger facts.
    """
    if max_cycles <= 0:
        raise ValueError("max_cycles must be positive")
    decisions: list[Decision] = []
    refracted: set = set()
    fires = 0
    while True:
        agenda = []
        for rule_ in rules:
            for bindings, basis in rule_.activations(wm, {}):
                token = (rule_.name, frozenset(bindings.items()), basis)
                if token in refracted:
                    continue
                recency = max((entry[2] for entry in basis), default=0)
                order = (-rule_.salience, recency, rule_.name, repr(sorted(bindings.items(), key=repr)))
                agenda.append((order, rule_, bindings, token))
        if not agenda:
            return wm, decisions
        _, rule_, bindings, token = min(agenda, key=lambda item: item[0])
        refracted.add(token)
        _fire(rule_, bindings, wm, decisions)
        fires += 1
        if fires > max_cycles:
            raise CycleLimitExceeded(f"no fixpoint after {max_cycles} fires")


@dataclass
class _Search:
    wm: WorkingMemory
    rules: tuple
    max_depth: int
    fresh: int = 0
    truncated: bool = field(default=False)

    def prove(self, cond, bindings: Bindings, depth: int):
        if depth > self.max_depth:
            self.truncated = True
            return
        if isinstance(cond, Match):
            for found, _ in cond.solutions(self.wm, _grounded(bindings)):
                yield {**bindings, **found}
            yield from self._via_rules(cond, bindings, depth)
        else:
            # Tests and aggregates evaluate against present facts only.
            for found, _ in cond.solutions(self.wm, _grounded(bindings)):
                yield {**bindings, **found}

    def _via_rules(self, goal: Match, bindings: Bindings, depth: int):
        for rule_ in self.rules:
            for action in rule_.actions:
                if not isinstance(action, Put):
                    continue
                self.fresh += 1
                suffix = f"#{self.fresh}"
                head = action.rename(suffix)
                b = _match_template(goal.subject, head.subject, bindings)
                if b is not None:
                    b = _match_template(goal.attribute, head.attribute, b)
                if b is not None and not isinstance(head.value, Plus):
                    b = _match_template(goal.value, head.value, b)
                if b is None:
                    continue
                conditions = tuple(c.rename(suffix) for c in rule_.conditions)
                for proven in self.prove_all(conditions, b, depth + 1):
                    if isinstance(head.value, Plus):
                        try:
                            value = _resolve(head.value, proven)
                        except UnboundVariable:
                            continue
                        checked = _match_template(goal.value, value, proven)
                        if checked is None:
                            continue
                        yield checked
                    else:
                        yield proven

    def prove_all(self, conditions, bindings: Bindings, depth: int):
        if not conditions:
            yield bindings
            return
        head, rest = conditions[0], conditions[1:]
        for b in self.prove(head, bindings, depth):
            yield from self.prove_all(rest, b, depth)


def _match_template(goal_term, head_term, bindings: Bindings) -> Optional[Bindings]:
    """Unify a goal template position with a rule-action position."""
    for term in (goal_term, head_term):
        if term is ANY:
            return bindings
    a, b = goal_term, head_term
    while isinstance(a, Var) and a.name in bindings:
        a = bindings[a.name]
    while isinstance(b, Var) and b.name in bindings:
        b = bindings[b.name]
    if isinstance(a, Var) or isinstance(b, Var):
        out = dict(bindings)
        if isinstance(a, Var):
            out[a.name] = b
        else:
            out[b.name] = a
        return out
    return bindings if a == b else None


def run_backward(wm: WorkingMemory, rules, goal: Match, max_depth: int = 16) -> Optional[Bindings]:
    """Prove a goal from facts or rule consequences; None if unprovable.

    Rules are tried in descending salience then name order, facts before
    rules, so the first proof is deterministic. If the depth bound cut off
    part of the search and no proof was found, DepthLimitExceeded is raised
    rather than returning a misleading None.
    """
    ordered = tuple(sorted(rules, key=lambda r: (-r.salience, r.name)))
    search = _Search(wm, ordered, max_depth)
    goal_vars = _goal_vars(goal)
    for proven in search.prove(goal, {}, 0):
        result = {}
        for name in goal_vars:
            try:
                result[name] = _resolve(Var(name), proven)
            except UnboundVariable:
                break
        else:
            return result
    if search.truncated:
        raise DepthLimitExceeded(f"goal {goal} undecided within depth {search.max_depth}")
    return None


def _goal_vars(goal: Match) -> list:
    out = []
    for term in (goal.subject, goal.attribute, goal.value):
        if isinstance(term, Var):
            out.append(term.name)
    return out
