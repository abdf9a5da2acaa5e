"""HTTP/WebSocket gateway around one live simulation session.

Endpoints:

* ``GET /state`` - the latest snapshot (empty shell before the first one).
* ``GET /trace`` - every trace event produced so far.
* ``POST /command`` - operator verbs: set_mode, set_pattern (manual mode
  only), inject_failure, set_pace, step.
* ``GET /session/export`` - the session re-expressed as a scenario file:
  drained commands merged into the scripted timeline, replayable to the
  same trace.
* ``WS /events`` - pushes each trace event exactly once, in order, with
  ``resume_from`` backlog replay; accepts the same command payloads.

All mutation funnels through :meth:`Session.handle_command` on the event
loop, so processing is serialized without explicit locking. Commands are
stamped with the sim-time of the next processed point, which is what
makes the export replayable.
"""

from __future__ import annotations

import asyncio
from contextlib import asynccontextmanager
from typing import Optional

from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect

from .fleet import UvId
from .scenario import (
    FailureInjection,
    OperatorCommand,
    Scenario,
    ScenarioEvent,
    ValidationError,
    golden_scenario,
    scenario_as_dict,
    GOLDEN_SEED,
)
from .sim import Simulation
from .topology import Pattern


class CommandError(Exception):
    def __init__(self, status: int, detail: str):
        self.status = status
        self.detail = detail
        super().__init__(detail)


class Session:
    def __init__(self, scenario: Scenario, seed: int, pace: float = 0.0):
        self.scenario = scenario
        self.seed = seed
        self.sim = Simulation(scenario, seed)
        self.pace = pace
        self.pending: list[ScenarioEvent] = []  # placeholders, stamped at drain
        self.drained: list[ScenarioEvent] = []
        self.subscribers: list[asyncio.Queue] = []
        self._pace_task: Optional[asyncio.Task] = None

    # -- stepping ------------------------------------------------------

    def step(self, count: int = 1) -> dict:
        advanced_to = None
        for _ in range(count):
            t = self.sim.next_time()
            if t is None:
                break
            injected = [self._stamp(e, t) for e in self.pending]
            self.pending.clear()
            self.drained.extend(injected)
            before = len(self.sim.events)
            self.sim.step(injected)
            advanced_to = t
            self._publish(self.sim.events[before:])
        return {
            "advanced_to": None if advanced_to is None else float(advanced_to),
            "finished": self.sim.finished(),
        }

    @staticmethod
    def _stamp(event: ScenarioEvent, at) -> ScenarioEvent:
        import dataclasses

        return dataclasses.replace(event, at=at)

    def _publish(self, events) -> None:
        for queue in self.subscribers:
            for event in events:
                queue.put_nowait(event.as_dict())

    # -- commands ------------------------------------------------------

    def handle_command(self, payload: dict) -> dict:
        if not isinstance(payload, dict) or not payload:
            raise CommandError(400, "empty command")
        known = {"set_mode", "pattern", "set_pattern", "inject_failure", "set_pace", "step"}
        unknown = set(payload) - known
        if unknown:
            raise CommandError(400, f"unknown command fields: {sorted(unknown)}")

        if "set_mode" in payload:
            return self._queue_mode(payload)
        if "set_pattern" in payload:
            if self._current_mode_automatic():
                raise CommandError(
                    409, "pattern assignment requires manual mode; switch mode first"
                )
            return self._queue(self._operator(False, payload["set_pattern"]))
        if "inject_failure" in payload:
            uv = UvId(str(payload["inject_failure"]))
            if uv not in self.scenario.uv_ids():
                raise CommandError(400, f"unknown vehicle {uv}")
            return self._queue(FailureInjection(at=self.sim.now, uv=uv))
        if "set_pace" in payload:
            return self.set_pace(payload["set_pace"])
        if "step" in payload:
            raw = payload["step"]
            count = 1 if raw in (True, None) else int(raw)
            if count < 1:
                raise CommandError(400, "step must be >= 1")
            return self.step(count)
        raise CommandError(400, "no recognized command")

    def _current_mode_automatic(self) -> bool:
        # Pending mode switches count: the check reflects what the next
        # processed point will see.
        for event in reversed(self.pending):
            if isinstance(event, OperatorCommand):
                return event.automatic
        return self.sim.mode.automatic

    def _queue_mode(self, payload: dict) -> dict:
        mode = payload["set_mode"]
        if mode == "automatic":
            if "pattern" in payload:
                raise CommandError(400, "automatic mode takes no pattern")
            return self._queue(OperatorCommand(at=self.sim.now, automatic=True))
        if mode == "manual":
            if "pattern" not in payload:
                raise CommandError(400, "manual mode requires a pattern")
            return self._queue(self._operator(False, payload["pattern"]))
        raise CommandError(400, f"set_mode expects automatic|manual, got {mode!r}")

    def _operator(self, automatic: bool, pattern) -> OperatorCommand:
        try:
            parsed = Pattern(str(pattern).lower())
        except ValueError:
            raise CommandError(400, f"unknown pattern {pattern!r}") from None
        try:
            return OperatorCommand(at=self.sim.now, automatic=automatic, pattern=parsed)
        except ValidationError as err:
            raise CommandError(400, str(err)) from None

    def _queue(self, event: ScenarioEvent) -> dict:
        self.pending.append(event)
        return {"queued": type(event).__name__, "applies_at_next_step": True}

    def set_pace(self, pace) -> dict:
        if pace == "max":
            while not self.sim.finished():
                self.step()
            return {"pace": "max", "finished": True}
        try:
            self.pace = float(pace)
        except (TypeError, ValueError):
            raise CommandError(400, f"set_pace expects a number or 'max', got {pace!r}") from None
        if self.pace < 0:
            raise CommandError(400, "pace must be >= 0")
        self._restart_pace_task()
        return {"pace": self.pace}

    def _restart_pace_task(self) -> None:
        if self._pace_task is not None:
            self._pace_task.cancel()
            self._pace_task = None
        if self.pace > 0:
            self._pace_task = asyncio.get_event_loop().create_task(self._pace_loop())

    async def _pace_loop(self) -> None:
        # pace = simulated minutes per wall second
        while not self.sim.finished() and self.pace > 0:
            now = self.sim.now
            target = self.sim.next_time()
            gap = float(target - now) if target > now else 0.0
            await asyncio.sleep(gap / self.pace if self.pace else 0)
            self.step()

    # -- views ---------------------------------------------------------

    def state(self) -> dict:
        snap = self.sim.latest_snapshot()
        if snap is None:
            return {
                "time": 0.0,
                "pattern": None,
                "mode": "automatic",
                "requested": None,
                "topology": {"layers": {}, "masters": {}, "peer_links": []},
                "traffic": {"MCC": 0},
                "utilizations": {},
                "uncontrolled": [],
                "states": {},
                "finished": self.sim.finished(),
            }
        return {"time": float(snap.at), **snap.payload, "finished": self.sim.finished()}

    def export_scenario(self) -> dict:
        from .scenario import _order_key

        merged = [*self.drained, *self.scenario.events]
        merged.sort(key=_order_key)
        scenario = Scenario(
            fleet=self.scenario.fleet,
            horizon=self.scenario.horizon,
            sample_at=self.scenario.sample_at,
            events=tuple(merged),
            limits=self.scenario.limits,
            churn=self.scenario.churn,
        )
        out = scenario_as_dict(scenario)
        out["seed"] = self.seed
        return out


def create_app(
    scenario: Optional[Scenario] = None,
    seed: int = GOLDEN_SEED,
    pace: float = 0.0,
) -> FastAPI:
    session = Session(scenario if scenario is not None else golden_scenario(), seed, pace)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        if session.pace > 0:
            session._restart_pace_task()
        yield

    app = FastAPI(title="uvfsim gateway", lifespan=lifespan)
    app.state.session = session

    @app.get("/state")
    def state():
        return session.state()

    @app.get("/trace")
    def trace():
        return {"events": [e.as_dict() for e in session.sim.events]}

    @app.post("/command")
    def command(payload: dict):
        try:
            return session.handle_command(payload)
        except CommandError as err:
            raise HTTPException(status_code=err.status, detail=err.detail) from None

    @app.get("/session/export")
    def export_session():
        return session.export_scenario()

    @app.websocket("/events")
    async def events(ws: WebSocket):
        await ws.accept()
        resume_from = int(ws.query_params.get("resume_from", 0))
        queue: asyncio.Queue = asyncio.Queue()
        session.subscribers.append(queue)
        recv = push = None  # backlog send may fail before the tasks exist
        try:
            for event in session.sim.events[resume_from:]:
                await ws.send_json(event.as_dict())
            recv = asyncio.create_task(ws.receive_json())
            push = asyncio.create_task(queue.get())
            while True:
                done, _ = await asyncio.wait({recv, push}, return_when=asyncio.FIRST_COMPLETED)
                if push in done:
                    await ws.send_json(push.result())
                    push = asyncio.create_task(queue.get())
                if recv in done:
                    payload = recv.result()
                    try:
                        result = session.handle_command(payload)
                        await ws.send_json({"ack": result})
                    except CommandError as err:
                        await ws.send_json({"error": err.detail, "status": err.status})
                    recv = asyncio.create_task(ws.receive_json())
        except (WebSocketDisconnect, RuntimeError):
            pass
        finally:
            session.subscribers.remove(queue)
            for task in (recv, push):
                if task is not None and not task.done():
                    task.cancel()

    return app
