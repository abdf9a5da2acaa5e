"""Unmanned-vehicle domain types: identity, behavioral state machine, clocks.

Every UV runs the same hierarchical state machine: it starts in ``Initial``,
becomes available (unregistered) on an init event, registers with the MCC,
and then alternates between controlled (on a mission) and uncontrolled.
Failures and battery recharges push it back to ``Unavailable``.

Time spent in each state is accumulated into :class:`StateClocks` using exact
rational minutes, so the partition identities ``t_av == t_unr + t_r`` and
``t_r == t_unc + t_c`` hold without rounding drift.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Union

Minutes = Union[int, Fraction]


class UvKind(str, Enum):
    UAV = "UAV"
    UGV = "UGV"


@dataclass(frozen=True, order=True)
class UvId:
    """Fleet-unique vehicle identifier, e.g. ``UAV1`` or ``UGV3``."""

    name: str

    def __str__(self) -> str:
        return self.name


class UvState(Enum):
    """Leaf states of the UV behavioral state machine.

    ``REGISTERED_*`` implies available, and ``*_CONTROLLED`` implies
    registered; the composite nesting is encoded in the helper predicates
    below rather than in separate state objects.
    """

    INITIAL = "initial"
    UNAVAILABLE = "unavailable"
    AVAILABLE_UNREGISTERED = "available.unregistered"
    REGISTERED_UNCONTROLLED = "available.registered.uncontrolled"
    REGISTERED_CONTROLLED = "available.registered.controlled"

    @property
    def is_available(self) -> bool:
        return self in _AVAILABLE

    @property
    def is_registered(self) -> bool:
        return self in _REGISTERED

    @property
    def is_controlled(self) -> bool:
        return self is UvState.REGISTERED_CONTROLLED


_AVAILABLE = {
    UvState.AVAILABLE_UNREGISTERED,
    UvState.REGISTERED_UNCONTROLLED,
    UvState.REGISTERED_CONTROLLED,
}
_REGISTERED = {UvState.REGISTERED_UNCONTROLLED, UvState.REGISTERED_CONTROLLED}


class UvEvent(str, Enum):
    INIT = "init"
    REGISTER_ACCEPTED = "register_accepted"
    ASSIGN_MISSION = "assign_mission"
    MISSION_COMPLETE = "mission_complete"
    RECONFIGURE = "reconfigure"
    FAIL = "fail"
    RECHARGE_NEEDED = "recharge_needed"
    BECOME_AVAILABLE = "become_available"


# Legal (state, event) -> next state. Everything absent is an illegal
# transition.
TRANSITIONS: dict[tuple[UvState, UvEvent], UvState] = {
    (UvState.INITIAL, UvEvent.INIT): UvState.AVAILABLE_UNREGISTERED,
    (UvState.AVAILABLE_UNREGISTERED, UvEvent.REGISTER_ACCEPTED): UvState.REGISTERED_UNCONTROLLED,
    (UvState.REGISTERED_UNCONTROLLED, UvEvent.ASSIGN_MISSION): UvState.REGISTERED_CONTROLLED,
    (UvState.REGISTERED_CONTROLLED, UvEvent.MISSION_COMPLETE): UvState.REGISTERED_UNCONTROLLED,
    (UvState.REGISTERED_UNCONTROLLED, UvEvent.RECONFIGURE): UvState.AVAILABLE_UNREGISTERED,
    (UvState.REGISTERED_CONTROLLED, UvEvent.RECONFIGURE): UvState.AVAILABLE_UNREGISTERED,
    (UvState.UNAVAILABLE, UvEvent.BECOME_AVAILABLE): UvState.AVAILABLE_UNREGISTERED,
}
for _avail in _AVAILABLE:
    TRANSITIONS[(_avail, UvEvent.FAIL)] = UvState.UNAVAILABLE
    TRANSITIONS[(_avail, UvEvent.RECHARGE_NEEDED)] = UvState.UNAVAILABLE


class IllegalTransition(Exception):
    """An event arrived in a state from which it is not legal."""

    def __init__(self, state: UvState, event: UvEvent) -> None:
        super().__init__(f"event {event.value!r} is illegal in state {state.value!r}")
        self.state = state
        self.event = event


@dataclass(frozen=True)
class StateClocks:
    """Accumulated minutes per state, exact.

    ``t_av`` covers both registered and unregistered availability, and
    ``t_r`` covers both controlled and uncontrolled registration, so the
    composite clocks always advance together with their leaves.
    """

    t_av: Fraction = Fraction(0)
    t_unav: Fraction = Fraction(0)
    t_unr: Fraction = Fraction(0)
    t_r: Fraction = Fraction(0)
    t_unc: Fraction = Fraction(0)
    t_c: Fraction = Fraction(0)

    def check_partitions(self) -> None:
        assert self.t_av == self.t_unr + self.t_r
        assert self.t_r == self.t_unc + self.t_c


# Clocks advanced while sitting in a given leaf state (leaf plus enclosing
# composites). INITIAL accrues nothing: the vehicle is not yet operating.
_CLOCKS_FOR_STATE: dict[UvState, tuple[str, ...]] = {
    UvState.INITIAL: (),
    UvState.UNAVAILABLE: ("t_unav",),
    UvState.AVAILABLE_UNREGISTERED: ("t_av", "t_unr"),
    UvState.REGISTERED_UNCONTROLLED: ("t_av", "t_r", "t_unc"),
    UvState.REGISTERED_CONTROLLED: ("t_av", "t_r", "t_c"),
}


@dataclass(frozen=True)
class UvRecord:
    """One vehicle's identity, kind, range flag, state, and time accounting.

    ``updated_at`` is the simulation time through which the clocks are
    current; :func:`apply_event` uses it to attribute the elapsed interval
    to the outgoing state.
    """

    id: UvId
    kind: UvKind
    in_mcc_range: bool
    state: UvState = UvState.INITIAL
    clocks: StateClocks = field(default_factory=StateClocks)
    updated_at: Fraction = Fraction(0)
    capability_tag: str = ""

    def __post_init__(self) -> None:
        if not self.capability_tag:
            # Capabilities are uniform per kind in this model.
            object.__setattr__(self, "capability_tag", self.kind.value.lower())


def advance_clocks(record: UvRecord, dt: Minutes) -> UvRecord:
    """Advance the current state's clocks (and enclosing composites) by dt."""
    dt = Fraction(dt)
    if dt < 0:
        raise ValueError(f"negative clock advance: {dt}")
    if dt == 0:
        return record
    updates = {name: getattr(record.clocks, name) + dt for name in _CLOCKS_FOR_STATE[record.state]}
    return replace(
        record,
        clocks=replace(record.clocks, **updates),
        updated_at=record.updated_at + dt,
    )


def apply_event(record: UvRecord, event: UvEvent, now: Minutes) -> UvRecord:
    """Apply a behavioral event at simulation time ``now``.

    The interval since the record was last updated is attributed to the
    outgoing state before the switch, so a transition at time t cleanly
    splits the accounting.

    Raises :class:`IllegalTransition` (record unchanged) if the event is not
    legal from the current state, and ``ValueError`` if ``now`` precedes the
    record's clock horizon.
    """
    now = Fraction(now)
    target = TRANSITIONS.get((record.state, event))
    if target is None:
        raise IllegalTransition(record.state, event)
    if now < record.updated_at:
        raise ValueError(f"event at {now} precedes clock horizon {record.updated_at}")
    record = advance_clocks(record, now - record.updated_at)
    return replace(record, state=target)


def utilization(clocks: StateClocks) -> float:
    """Controlled share of registered time, as a percentage in [0, 100].

    A vehicle that has never been registered (or never been eligible for
    control) reports 0%, which makes fresh vehicles the most eligible for
    leadership roles.
    """
    denom = clocks.t_c + clocks.t_unc
    if denom == 0:
        return 0.0
    return float(100 * clocks.t_c / denom)
