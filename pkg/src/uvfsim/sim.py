"""Deterministic simulation loop producing a replayable trace.

Time advances through a merged timeline of scenario event times and
sample times. At each point, queued external commands apply first, then
scripted operator commands, then vehicle events. At sample points the
loop synthesizes a topology from the current snapshot, reconciles
mission control states with the links, runs one bus telemetry cycle, and
appends snapshot/decision/message trace events. A failure injection
triggers an immediate off-schedule repair sample.

Traces serialize to JSON lines with sorted keys, so equal runs are
byte-identical and a SHA-256 hash identifies a run.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .bus import Bus, run_telemetry_cycle
from .fleet import (
    IllegalTransition,
    TRANSITIONS,
    UvEvent,
    UvId,
    UvRecord,
    advance_clocks,
    apply_event,
    utilization,
)
from .mcc import FleetSnapshot, OperationMode, SynthesisResult, handle_failure, synthesize_topology
from .scenario import (
    FailureInjection,
    OperatorCommand,
    Scenario,
    ScenarioEvent,
    UtilizationOverride,
    UvStateEvent,
)
from .topology import topology_as_dict


class SimulationError(RuntimeError):
    """An event could not be applied; carries the offending context."""


@dataclass(frozen=True)
class TraceEvent:
    at: Fraction
    kind: str  # snapshot | message | decision | transition
    payload: dict

    def as_dict(self) -> dict:
        return {"at": _num(self.at), "kind": self.kind, "payload": self.payload}


def _num(value: Fraction):
    return int(value) if value.denominator == 1 else str(value)


@dataclass(frozen=True)
class Trace:
    events: tuple[TraceEvent, ...]

    def to_jsonl(self) -> str:
        return "\n".join(
            json.dumps(e.as_dict(), sort_keys=True, separators=(",", ":"))
            for e in self.events
        )

    def digest(self) -> str:
        return hashlib.sha256(self.to_jsonl().encode()).hexdigest()

    def snapshots(self) -> list[TraceEvent]:
        return [e for e in self.events if e.kind == "snapshot"]

    def patterns(self) -> list[Optional[str]]:
        return [e.payload["pattern"] for e in self.snapshots()]


def trace_from_jsonl(text: str) -> Trace:
    events = []
    for line in text.splitlines():
        if not line.strip():
            continue
        raw = json.loads(line)
        events.append(TraceEvent(Fraction(str(raw["at"])), raw["kind"], raw["payload"]))
    return Trace(tuple(events))


class Simulation:
    """Single-threaded simulation; the gateway feeds commands between points."""

    def __init__(self, scenario: Scenario, seed: int):
        self.scenario = scenario
        self.seed = seed
        self.now = Fraction(0)
        self.mode = OperationMode.auto()
        self.records: dict[UvId, UvRecord] = {
            uv.id: UvRecord(id=uv.id, kind=uv.kind, in_mcc_range=uv.in_mcc_range)
            for uv in scenario.fleet
        }
        self.overrides: dict[UvId, float] = {}
        self.previous: Optional[SynthesisResult] = None
        self.bus = Bus(scenario.limits)
        self.events: list[TraceEvent] = []
        self._samples = set(scenario.sample_at)
        self._churn_rng = (
            random.Random(f"churn-{seed}-{scenario.churn.seed}") if scenario.churn else None
        )
        self._timeline = self._build_timeline()
        self._cursor = 0  # next timeline index to process

    def _build_timeline(self) -> list[Fraction]:
        times = {e.at for e in self.scenario.events} | self._samples
        if self.scenario.churn is not None:
            minute = Fraction(1)
            while minute <= self.scenario.horizon:
                times.add(minute)
                minute += 1
        return sorted(times)

    # -- public drive ---------------------------------------------------

    def run(self) -> Trace:
        while self.step():
            pass
        return self.trace()

    def step(self, injected: Sequence[ScenarioEvent] = ()) -> bool:
        """Process the next timeline point; returns False when exhausted."""
        if self._cursor >= len(self._timeline):
            return False
        t = self._timeline[self._cursor]
        self._cursor += 1
        self._process_point(t, injected)
        return True

    def finished(self) -> bool:
        return self._cursor >= len(self._timeline)

    def next_time(self) -> Optional[Fraction]:
        if self.finished():
            return None
        return self._timeline[self._cursor]

    def trace(self) -> Trace:
        return Trace(tuple(self.events))

    def latest_snapshot(self) -> Optional[TraceEvent]:
        for event in reversed(self.events):
            if event.kind == "snapshot":
                return event
        return None

    # -- loop internals -------------------------------------------------

    def _process_point(self, t: Fraction, injected: Sequence[ScenarioEvent]) -> None:
        self.now = t
        # Injected commands come first within each class; the stable sort
        # applies operator commands ahead of other events, mirroring how a
        # replayed scenario file orders the same times.
        merged = [*injected, *(e for e in self.scenario.events if e.at == t)]
        merged.sort(key=lambda e: 0 if isinstance(e, OperatorCommand) else 1)
        failures: list[UvId] = []
        for event in merged:
            failures.extend(self._apply(event, t))
        if self._churn_rng is not None and t.denominator == 1:
            self._churn(t)
        if t in self._samples:
            # A failure at a sample time folds into that sample's repair.
            self._sample(t, failed=failures.pop(0) if failures else None)
        for uv in failures:
            # Off-schedule repair: the architecture never waits on a casualty.
            self._sample(t, failed=uv)

    def _apply(self, event: ScenarioEvent, t: Fraction) -> list[UvId]:
        if isinstance(event, OperatorCommand):
            self.mode = (
                OperationMode.auto() if event.automatic else OperationMode.manual(event.pattern)
            )
            return []
        if isinstance(event, UtilizationOverride):
            self.overrides.update(event.values)
            return []
        if isinstance(event, UvStateEvent):
            self._transition(event.uv, event.event, t)
            return []
        if isinstance(event, FailureInjection):
            self._transition(event.uv, UvEvent.FAIL, t)
            return [event.uv]
        raise SimulationError(f"unknown event {event!r}")

    def _transition(self, uv: UvId, uv_event: UvEvent, t: Fraction) -> None:
        record = self.records.get(uv)
        if record is None:
            raise SimulationError(f"event for unknown vehicle {uv} at {t}")
        try:
            updated = apply_event(record, uv_event, t)
        except IllegalTransition as err:
            raise SimulationError(f"{uv} at {t}: {err}") from err
        self.records[uv] = updated
        self.events.append(
            TraceEvent(
                t,
                "transition",
                {
                    "uv": str(uv),
                    "event": uv_event.value,
                    "from": record.state.name,
                    "to": updated.state.name,
                },
            )
        )

    def _churn(self, t: Fraction) -> None:
        rng = self._churn_rng
        for uv in sorted(self.records):
            state = self.records[uv].state
            for uv_event, rate in self.scenario.churn.rates:
                if (state, uv_event) in TRANSITIONS and rng.random() < rate:
                    self._transition(uv, uv_event, t)
                    break

    def _snapshot_now(self, t: Fraction) -> FleetSnapshot:
        self.records = {
            uv: advance_clocks(r, t - r.updated_at) for uv, r in self.records.items()
        }
        utils = {}
        for uv, record in self.records.items():
            if record.state.is_registered:
                utils[uv] = self.overrides.get(uv, utilization(record.clocks))
        return FleetSnapshot(
            uvs=tuple(self.records[uv] for uv in sorted(self.records)),
            utilizations=utils,
            limits=self.scenario.limits,
            mode=self.mode,
            seed=self.seed,
        )

    def _sample(self, t: Fraction, failed: Optional[UvId] = None) -> None:
        snapshot = self._snapshot_now(t)
        if failed is not None and self.previous is not None:
            result = handle_failure(self.previous, failed, snapshot)
        else:
            result = synthesize_topology(snapshot, previous=self.previous)

        if result is not self.previous:  # unchanged repair makes no decisions
            for entry in result.decision_log:
                self.events.append(TraceEvent(t, "decision", entry.as_dict()))
        self._reconcile(result, t)

        log_mark = len(self.bus.log())
        ledger = run_telemetry_cycle(self.bus, result.topology, cycle=int(t))
        for msg in self.bus.log()[log_mark:]:
            receiver = msg.receiver.name if hasattr(msg.receiver, "name") else "*"
            self.events.append(
                TraceEvent(
                    t,
                    "message",
                    {
                        "performative": msg.performative.value,
                        "sender": msg.sender.name,
                        "receiver": receiver,
                        "conversation": msg.conversation_id,
                        "content": {k: v for k, v in msg.content},
                    },
                )
            )

        snapshot_after = self._snapshot_now(t)  # states changed in reconcile
        payload = {
            "pattern": result.pattern.value if result.pattern else None,
            "mode": "automatic" if self.mode.automatic else "manual",
            "requested": self.mode.requested.value if self.mode.requested else None,
            "topology": topology_as_dict(result.topology),
            "traffic": {str(node): kbit for node, kbit in sorted(ledger.items(), key=lambda kv: str(kv[0]))},
            "utilizations": {str(uv): pct for uv, pct in sorted(snapshot_after.utilizations.items())},
            "uncontrolled": sorted(str(uv) for uv in result.uncontrolled),
            "states": {str(uv): r.state.name for uv, r in sorted(self.records.items())},
            "clocks": {
                str(uv): {
                    "t_av": str(r.clocks.t_av),
                    "t_unav": str(r.clocks.t_unav),
                    "t_unr": str(r.clocks.t_unr),
                    "t_r": str(r.clocks.t_r),
                    "t_unc": str(r.clocks.t_unc),
                    "t_c": str(r.clocks.t_c),
                }
                for uv, r in sorted(self.records.items())
            },
        }
        self.events.append(TraceEvent(t, "snapshot", payload))
        self.previous = result

    def _reconcile(self, result: SynthesisResult, t: Fraction) -> None:
        connected = result.topology.connected()
        for uv in sorted(self.records):
            record = self.records[uv]
            if not record.state.is_registered:
                continue
            if uv in connected and not record.state.is_controlled:
                self._transition(uv, UvEvent.ASSIGN_MISSION, t)
            elif uv not in connected and record.state.is_controlled:
                self._transition(uv, UvEvent.MISSION_COMPLETE, t)


def run(scenario: Scenario, seed: int) -> Trace:
    return Simulation(scenario, seed).run()
