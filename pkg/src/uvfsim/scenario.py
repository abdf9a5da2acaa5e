"""Scenario schema: fleet roster, timed events, sampling plan, churn.

A scenario file is JSON with a ``schema_version`` field. Events come in
four variants: vehicle state-machine events, operator commands (mode and
pattern), utilization overrides (sticky until replaced, used to drive
recorded decision sequences), and failure injections. Events are kept in
stable time order; at equal times operator commands apply first.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Optional, Union

from .fleet import UvEvent, UvId, UvKind
from .topology import CapacityLimits, Pattern


class ParseError(ValueError):
    """Scenario text that does not parse or misses required fields."""


class ValidationError(ValueError):
    """A structurally valid file describing an inconsistent scenario."""


@dataclass(frozen=True)
class FleetUv:
    id: UvId
    kind: UvKind
    in_mcc_range: bool


@dataclass(frozen=True)
class UvStateEvent:
    at: Fraction
    uv: UvId
    event: UvEvent


@dataclass(frozen=True)
class OperatorCommand:
    at: Fraction
    automatic: bool
    pattern: Optional[Pattern] = None

    def __post_init__(self):
        if self.automatic and self.pattern is not None:
            raise ValidationError("automatic mode takes no pattern")
        if not self.automatic and self.pattern is None:
            raise ValidationError("manual mode requires a pattern")


@dataclass(frozen=True)
class UtilizationOverride:
    at: Fraction
    values: tuple[tuple[UvId, float], ...]


@dataclass(frozen=True)
class FailureInjection:
    at: Fraction
    uv: UvId


ScenarioEvent = Union[UvStateEvent, OperatorCommand, UtilizationOverride, FailureInjection]

SCHEMA_VERSION = 1

# Exploratory churn profile: per-minute transition probabilities.
DEFAULT_CHURN_RATES: tuple[tuple[UvEvent, float], ...] = (
    (UvEvent.FAIL, 0.05),
    (UvEvent.MISSION_COMPLETE, 0.10),
    (UvEvent.BECOME_AVAILABLE, 0.20),
)


@dataclass(frozen=True)
class ChurnProfile:
    seed: int
    rates: tuple[tuple[UvEvent, float], ...] = DEFAULT_CHURN_RATES


@dataclass(frozen=True)
class Scenario:
    fleet: tuple[FleetUv, ...]
    horizon: Fraction
    sample_at: tuple[Fraction, ...]
    events: tuple[ScenarioEvent, ...] = ()
    limits: CapacityLimits = CapacityLimits()
    churn: Optional[ChurnProfile] = None

    def uv_ids(self) -> set[UvId]:
        return {uv.id for uv in self.fleet}


def _order_key(event: ScenarioEvent) -> tuple:
    # Operator commands sort ahead of other events at the same time.
    return (event.at, 0 if isinstance(event, OperatorCommand) else 1)


def validate_scenario(scenario: Scenario) -> Scenario:
    ids = [uv.id for uv in scenario.fleet]
    if len(set(ids)) != len(ids):
        raise ValidationError("duplicate vehicle ids in fleet")
    n_uav = sum(1 for uv in scenario.fleet if uv.kind is UvKind.UAV)
    n_ugv = sum(1 for uv in scenario.fleet if uv.kind is UvKind.UGV)
    if n_uav > scenario.limits.max_uavs:
        raise ValidationError(f"{n_uav} UAVs exceed the {scenario.limits.max_uavs} allowed")
    if n_ugv > scenario.limits.max_ugvs:
        raise ValidationError(f"{n_ugv} UGVs exceed the {scenario.limits.max_ugvs} allowed")
    known = scenario.uv_ids()
    for event in scenario.events:
        for uv in _event_uvs(event):
            if uv not in known:
                raise ValidationError(f"event at {event.at} references unknown vehicle {uv}")
        if event.at < 0 or event.at > scenario.horizon:
            raise ValidationError(f"event at {event.at} outside horizon {scenario.horizon}")
    for t in scenario.sample_at:
        if t < 0 or t > scenario.horizon:
            raise ValidationError(f"sample time {t} outside horizon {scenario.horizon}")
    return scenario


def _event_uvs(event: ScenarioEvent) -> list[UvId]:
    if isinstance(event, UvStateEvent):
        return [event.uv]
    if isinstance(event, FailureInjection):
        return [event.uv]
    if isinstance(event, UtilizationOverride):
        return [uv for uv, _ in event.values]
    return []


# -- JSON form ----------------------------------------------------------


def _frac(value, where: str) -> Fraction:
    try:
        return Fraction(str(value))
    except (ValueError, ZeroDivisionError, TypeError):
        raise ParseError(f"{where}: not a number: {value!r}") from None


def parse_event(raw: Mapping, where: str) -> ScenarioEvent:
    kind = raw.get("type")
    at = _frac(raw.get("at"), f"{where}.at")
    try:
        if kind == "uv_state":
            return UvStateEvent(at, UvId(raw["uv"]), UvEvent(raw["event"]))
        if kind == "operator":
            mode = raw["mode"]
            if mode not in ("automatic", "manual"):
                raise ParseError(f"{where}.mode: expected automatic|manual, got {mode!r}")
            pattern = Pattern(raw["pattern"]) if "pattern" in raw else None
            return OperatorCommand(at, automatic=(mode == "automatic"), pattern=pattern)
        if kind == "utilization":
            values = tuple(
                sorted((UvId(name), float(pct)) for name, pct in raw["values"].items())
            )
            return UtilizationOverride(at, values)
        if kind == "failure":
            return FailureInjection(at, UvId(raw["uv"]))
    except KeyError as missing:
        raise ParseError(f"{where}: missing field {missing}") from None
    except ValueError as bad:
        raise ParseError(f"{where}: {bad}") from None
    raise ParseError(f"{where}.type: unknown event type {kind!r}")


def parse_scenario(data: Mapping, source: str = "<scenario>") -> Scenario:
    if not isinstance(data, Mapping):
        raise ParseError(f"{source}: top level must be an object")
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ParseError(f"{source}: unsupported schema_version {version!r}")

    fleet = []
    for i, raw in enumerate(data.get("fleet", [])):
        where = f"{source}.fleet[{i}]"
        try:
            fleet.append(
                FleetUv(UvId(raw["id"]), UvKind(raw["kind"]), bool(raw["in_mcc_range"]))
            )
        except KeyError as missing:
            raise ParseError(f"{where}: missing field {missing}") from None
        except ValueError as bad:
            raise ParseError(f"{where}: {bad}") from None

    horizon = _frac(data.get("horizon"), f"{source}.horizon")
    if "sample_at" in data:
        sample_at = tuple(
            _frac(t, f"{source}.sample_at[{i}]") for i, t in enumerate(data["sample_at"])
        )
    else:
        every = _frac(data.get("sample_every", 2), f"{source}.sample_every")
        if every <= 0:
            raise ParseError(f"{source}.sample_every: must be positive")
        sample_at, t = [], every
        while t <= horizon:
            sample_at.append(t)
            t += every
        sample_at = tuple(sample_at)

    events = [
        parse_event(raw, f"{source}.events[{i}]")
        for i, raw in enumerate(data.get("events", []))
    ]
    events.sort(key=_order_key)

    limits = CapacityLimits(**data["limits"]) if "limits" in data else CapacityLimits()

    churn = None
    if data.get("churn") is not None:
        raw = data["churn"]
        rates = DEFAULT_CHURN_RATES
        if "rates" in raw:
            rates = tuple(
                sorted((UvEvent(name), float(p)) for name, p in raw["rates"].items())
            )
        churn = ChurnProfile(seed=int(raw.get("seed", 0)), rates=rates)

    return validate_scenario(
        Scenario(
            fleet=tuple(fleet),
            horizon=horizon,
            sample_at=sample_at,
            events=tuple(events),
            limits=limits,
            churn=churn,
        )
    )


# Fixed seed for reproducing the bundled reference tables.
GOLDEN_SEED = 42


def golden_scenario() -> Scenario:
    """The bundled 20-minute demonstration scenario."""
    from importlib import resources

    text = resources.files("uvfsim").joinpath("data/golden_scenario.json").read_text()
    return parse_scenario(json.loads(text), source="golden_scenario.json")


def load_scenario(path: Union[str, Path]) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        raise ParseError(f"{path}: {err}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise ParseError(f"{path}:{err.lineno}:{err.colno}: {err.msg}") from None
    return parse_scenario(data, source=str(path))


def _num(value: Fraction):
    return int(value) if value.denominator == 1 else str(value)


def event_as_dict(event: ScenarioEvent) -> dict:
    if isinstance(event, UvStateEvent):
        return {
            "at": _num(event.at), "type": "uv_state",
            "uv": str(event.uv), "event": event.event.value,
        }
    if isinstance(event, OperatorCommand):
        out = {"at": _num(event.at), "type": "operator",
               "mode": "automatic" if event.automatic else "manual"}
        if event.pattern is not None:
            out["pattern"] = event.pattern.value
        return out
    if isinstance(event, UtilizationOverride):
        return {
            "at": _num(event.at), "type": "utilization",
            "values": {str(uv): pct for uv, pct in event.values},
        }
    return {"at": _num(event.at), "type": "failure", "uv": str(event.uv)}


def scenario_as_dict(scenario: Scenario) -> dict:
    out = {
        "schema_version": SCHEMA_VERSION,
        "fleet": [
            {"id": str(uv.id), "kind": uv.kind.value, "in_mcc_range": uv.in_mcc_range}
            for uv in scenario.fleet
        ],
        "horizon": _num(scenario.horizon),
        "sample_at": [_num(t) for t in scenario.sample_at],
        "events": [event_as_dict(e) for e in scenario.events],
    }
    if scenario.limits != CapacityLimits():
        out["limits"] = {
            "mcc_max_links": scenario.limits.mcc_max_links,
            "leader_max_followers": scenario.limits.leader_max_followers,
            "uplink_rate": scenario.limits.uplink_rate,
            "max_uavs": scenario.limits.max_uavs,
            "max_ugvs": scenario.limits.max_ugvs,
        }
    if scenario.churn is not None:
        out["churn"] = {
            "seed": scenario.churn.seed,
            "rates": {ev.value: p for ev, p in scenario.churn.rates},
        }
    return out
