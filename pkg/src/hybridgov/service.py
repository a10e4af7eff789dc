"""HTTP service over the governance engine.

Same engine the CLI uses, so the event stream for any operation is
identical regardless of which surface performed it. One process owns the
registry: every write happens under a single lock, reads share it (the
fold mutates the snapshot in place, so unlocked reads could tear), and a
condition variable wakes long-poll clients the moment an event lands.

Identity is an ``X-Actor`` header checked against the team roster from
the config file. That is deliberate: this is a team-scale tool running
next to the board, not a multi-tenant product.
"""

from __future__ import annotations

import json
import threading
import time
from datetime import datetime, timezone
from pathlib import Path

from fastapi import Body, Depends, FastAPI, HTTPException, Query, Request
from fastapi.responses import JSONResponse, PlainTextResponse

from .coproduction import SessionBlocked, checkpoint_due, transcript
from .engine import GovernanceEngine
from .planning import SprintPlan
from .registry import SCHEMA_VERSION, RegistryEvent
from .simulator import SWEEPABLE, SimConfig, run_simulation, sweep
from .tiers import GovernanceError
from .transitions import PromotionBlocked

ACTOR_HEADER = "X-Actor"
MAX_EVENT_WAIT_SECONDS = 25.0


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds").replace("+00:00", "Z")


def _event_wire(event: RegistryEvent) -> dict:
    return {
        "event_id": event.event_id,
        "timestamp": event.timestamp,
        "actor": event.actor,
        "kind": event.kind.wire,
        "payload": event.payload,
    }


def _need(payload: dict, *keys: str) -> None:
    missing = [k for k in keys if k not in payload]
    if missing:
        raise HTTPException(status_code=400, detail=f"missing fields: {', '.join(missing)}")


class ServiceState:
    """Engine plus the locks that make it safe to share."""

    def __init__(self, engine: GovernanceEngine):
        self.engine = engine
        self.lock = threading.RLock()
        # changed shares the engine lock so wait() releases it atomically
        self.changed = threading.Condition(self.lock)

    def notify(self) -> None:
        with self.lock:
            self.changed.notify_all()


def create_app(config_path: Path | str) -> FastAPI:
    """Build the service. Opens the registry eagerly, so a corrupt log or
    a missing config refuses to start instead of failing per-request."""
    engine = GovernanceEngine.from_config_file(config_path)
    state = ServiceState(engine)
    roster = set(engine.config.team.roster)

    app = FastAPI(title="hybridgov", version=str(SCHEMA_VERSION))
    app.state.governance = state

    def require_actor(request: Request) -> str:
        actor = request.headers.get(ACTOR_HEADER)
        if not actor:
            raise HTTPException(status_code=401, detail=f"missing {ACTOR_HEADER} header")
        if actor not in roster:
            raise HTTPException(status_code=403, detail=f"{actor} is not on the team roster")
        return actor

    @app.middleware("http")
    async def stamp_schema_version(request: Request, call_next):
        response = await call_next(request)
        response.headers["X-Schema-Version"] = str(SCHEMA_VERSION)
        return response

    @app.exception_handler(SessionBlocked)
    async def session_blocked(request: Request, exc: SessionBlocked):
        return JSONResponse(
            status_code=409, content={"error": str(exc), "blockers": exc.blockers}
        )

    @app.exception_handler(PromotionBlocked)
    async def promotion_blocked(request: Request, exc: PromotionBlocked):
        return JSONResponse(
            status_code=409, content={"error": str(exc), "blockers": exc.blockers}
        )

    @app.exception_handler(GovernanceError)
    async def governance_error(request: Request, exc: GovernanceError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.exception_handler(ValueError)
    async def value_error(request: Request, exc: ValueError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    def task_type_or_404(task_type_id: str):
        task_type = engine.snapshot.task_types.get(task_type_id)
        if task_type is None:
            raise HTTPException(status_code=404, detail=f"unknown task type {task_type_id!r}")
        return task_type

    def item_or_404(item_id: str):
        item = engine.snapshot.items.get(item_id)
        if item is None:
            raise HTTPException(status_code=404, detail=f"unknown item {item_id!r}")
        return item

    def session_or_404(session_id: str):
        session = engine.snapshot.sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")
        return session

    # -- health and plumbing

    @app.get("/api/health")
    def health():
        with state.lock:
            return {
                "status": "ok",
                "schema_version": SCHEMA_VERSION,
                "last_event_id": engine.snapshot.last_event_id,
                "current_cycle": engine.snapshot.current_cycle,
            }

    @app.get("/api/events")
    def events(
        after: int = Query(0, ge=0),
        wait: float = Query(0.0, ge=0.0),
        actor: str = Depends(require_actor),
    ):
        """New events past ``after``; long-polls up to ``wait`` seconds."""
        wait = min(wait, MAX_EVENT_WAIT_SECONDS)
        deadline = time.monotonic() + wait
        with state.changed:
            while True:
                fresh = engine.events_after(after)
                remaining = deadline - time.monotonic()
                if fresh or remaining <= 0:
                    return {
                        "events": [_event_wire(e) for e in fresh],
                        "last_event_id": engine.snapshot.last_event_id,
                    }
                state.changed.wait(timeout=remaining)

    @app.get("/api/board")
    def board(actor: str = Depends(require_actor)):
        with state.lock:
            return engine.board()

    @app.get("/api/snapshot")
    def snapshot(include_hidden: bool = False, actor: str = Depends(require_actor)):
        with state.lock:
            return engine.document(include_hidden=include_hidden)

    @app.get("/api/export/{entity}")
    def export(entity: str, actor: str = Depends(require_actor)):
        with state.lock:
            return PlainTextResponse(engine.export(entity), media_type="text/csv")

    # -- task types and transitions

    @app.get("/api/task-types")
    def task_types(actor: str = Depends(require_actor)):
        with state.lock:
            return {"task_types": engine.document()["task_types"]}

    @app.get("/api/task-types/{task_type_id}")
    def task_type_detail(task_type_id: str, actor: str = Depends(require_actor)):
        with state.lock:
            task_type_or_404(task_type_id)
            return engine.document()["task_types"][task_type_id]

    @app.post("/api/task-types", status_code=201)
    def register_task_type(
        payload: dict = Body(...), actor: str = Depends(require_actor)
    ):
        _need(payload, "task_type_id", "name", "domain", "cycle")
        with state.lock:
            event = engine.register_task_type(
                actor,
                payload.get("timestamp") or _now(),
                task_type_id=payload["task_type_id"],
                name=payload["name"],
                domain=payload["domain"],
                cycle=payload["cycle"],
                note=payload.get("note", ""),
            )
        state.notify()
        return {"event_id": event.event_id}

    @app.get("/api/task-types/{task_type_id}/eligibility")
    def eligibility(
        task_type_id: str,
        capacity_confirmed: bool = True,
        actor: str = Depends(require_actor),
    ):
        with state.lock:
            task_type_or_404(task_type_id)
            return engine.promotion_status(task_type_id, capacity_ok=capacity_confirmed).to_payload()

    @app.get("/api/task-types/{task_type_id}/metrics")
    def metrics(
        task_type_id: str,
        cycle: int | None = None,
        actor: str = Depends(require_actor),
    ):
        with state.lock:
            task_type_or_404(task_type_id)
            if cycle is None:
                cycle = engine.snapshot.current_cycle
            return engine.metrics(task_type_id, cycle).to_payload()

    @app.post("/api/transitions/demotions")
    def demote(payload: dict = Body(...), actor: str = Depends(require_actor)):
        _need(payload, "task_type_id", "cycle")
        with state.lock:
            task_type = task_type_or_404(payload["task_type_id"])
            # optimistic guard: a client that saw a stale tier gets a 409
            # with the current one instead of stacking a second demotion
            expected = payload.get("expected_tier")
            current = task_type.current_tier.wire if task_type.current_tier else None
            if expected is not None and expected != current:
                return JSONResponse(
                    status_code=409,
                    content={
                        "error": f"tier is {current}, not {expected}; someone got there first",
                        "current_tier": current,
                    },
                )
            events = engine.demote(
                actor,
                payload.get("timestamp") or _now(),
                task_type_id=payload["task_type_id"],
                trigger=payload.get("trigger", "member_request"),
                cycle=payload["cycle"],
                rationale=payload.get("rationale", ""),
            )
        state.notify()
        return {
            "events": [e.event_id for e in events],
            "transition": events[-1].payload,
        }

    @app.post("/api/transitions/promotions")
    def promote(payload: dict = Body(...), actor: str = Depends(require_actor)):
        _need(payload, "task_type_id", "cycle", "capacity_confirmed")
        with state.lock:
            task_type_or_404(payload["task_type_id"])
            event = engine.promote(
                actor,
                payload.get("timestamp") or _now(),
                task_type_id=payload["task_type_id"],
                cycle=payload["cycle"],
                capacity_confirmed=bool(payload["capacity_confirmed"]),
                rationale=payload.get("rationale", ""),
            )
        state.notify()
        return {"applied": True, "event_id": event.event_id, "transition": event.payload}

    # -- items, classification, outcomes

    @app.get("/api/items")
    def items(actor: str = Depends(require_actor)):
        with state.lock:
            return {"items": engine.document()["items"]}

    @app.get("/api/items/{item_id}")
    def item_detail(item_id: str, actor: str = Depends(require_actor)):
        with state.lock:
            item_or_404(item_id)
            return engine.document()["items"][item_id]

    @app.post("/api/classifications", status_code=201)
    def classify(payload: dict = Body(...), actor: str = Depends(require_actor)):
        _need(payload, "item_id", "title", "task_type_id", "cycle", "assessment")
        with state.lock:
            event, decision = engine.classify_item(
                actor,
                payload.get("timestamp") or _now(),
                item_id=payload["item_id"],
                title=payload["title"],
                task_type_id=payload["task_type_id"],
                cycle=payload["cycle"],
                assessment=payload["assessment"],
                applied_tier=payload.get("applied_tier"),
                rationale=payload.get("rationale", ""),
                owner=payload.get("owner"),
                baseline_points=payload.get("baseline_points"),
            )
        state.notify()
        return {
            "event_id": event.event_id,
            "decision": decision.to_payload(),
            "applied_tier": event.payload["applied_tier"],
        }

    @app.post("/api/outcomes", status_code=201)
    def record_outcome(payload: dict = Body(...), actor: str = Depends(require_actor)):
        _need(payload, "item_id", "cycle")
        with state.lock:
            events = engine.record_outcome(
                actor,
                payload.get("timestamp") or _now(),
                item_id=payload["item_id"],
                reviewer=payload.get("reviewer") or actor,
                cycle=payload["cycle"],
                detected_in=payload.get("detected_in", "review"),
                first_pass_accept=bool(payload.get("first_pass_accept", True)),
                findings=payload.get("findings", []),
                checklist_results=payload.get("checklist_results"),
                review_minutes=payload.get("review_minutes"),
                auto_demote=bool(payload.get("auto_demote", True)),
            )
            item = engine.snapshot.items.get(payload["item_id"])
            task_type = engine.snapshot.task_types.get(item.task_type_id or "") if item else None
            tier_after = (
                task_type.current_tier.wire
                if task_type and task_type.current_tier
                else None
            )
        state.notify()
        return {
            "events": [{"event_id": e.event_id, "kind": e.kind.wire} for e in events],
            "task_type_tier": tier_after,
        }

    @app.post("/api/items/{item_id}/status")
    def set_status(
        item_id: str, payload: dict = Body(...), actor: str = Depends(require_actor)
    ):
        _need(payload, "status", "cycle")
        with state.lock:
            event = engine.set_item_status(
                actor,
                payload.get("timestamp") or _now(),
                item_id=item_id,
                status=payload["status"],
                cycle=payload["cycle"],
                title=payload.get("title", ""),
                note=payload.get("note", ""),
            )
        state.notify()
        return {"event_id": event.event_id}

    @app.post("/api/items/{item_id}/owner")
    def set_owner(
        item_id: str, payload: dict = Body(...), actor: str = Depends(require_actor)
    ):
        _need(payload, "owner", "cycle")
        with state.lock:
            item_or_404(item_id)
            event = engine.assign_owner(
                actor,
                payload.get("timestamp") or _now(),
                item_id=item_id,
                owner=payload["owner"],
                cycle=payload["cycle"],
                note=payload.get("note", ""),
            )
        state.notify()
        return {"event_id": event.event_id}

    @app.post("/api/items/{item_id}/provenance")
    def record_provenance(
        item_id: str, payload: dict = Body(...), actor: str = Depends(require_actor)
    ):
        _need(payload, "producer")
        with state.lock:
            item_or_404(item_id)
            event = engine.record_provenance(
                actor,
                payload.get("timestamp") or _now(),
                item_id=item_id,
                producer=payload["producer"],
                tool=payload.get("tool", ""),
                prompt_ref=payload.get("prompt_ref", ""),
                generated_at=payload.get("generated_at", ""),
                cycle=payload.get("cycle", 0),
                note=payload.get("note", ""),
            )
        state.notify()
        return {"event_id": event.event_id}

    @app.get("/api/items/{item_id}/dod")
    def dod(item_id: str, actor: str = Depends(require_actor)):
        with state.lock:
            item_or_404(item_id)
            return engine.dod(item_id).to_payload()

    @app.get("/api/items/{item_id}/estimate")
    def estimate(
        item_id: str, tier: str | None = None, actor: str = Depends(require_actor)
    ):
        """Effort breakdown for one item; ``tier`` runs it as a what-if."""
        with state.lock:
            item_or_404(item_id)
            return engine.estimate_item(item_id, tier=tier).to_payload()

    @app.get("/api/preview/classification")
    def preview_classification(
        structuredness: str,
        verifiability: str,
        consequence: str,
        capability: str,
        baseline_points: float | None = None,
        tier: str | None = None,
        task_type_id: str | None = None,
        actor: str = Depends(require_actor),
    ):
        """Decision and estimate for a draft classification; appends nothing."""
        with state.lock:
            return engine.preview_classification(
                {
                    "structuredness": structuredness,
                    "verifiability": verifiability,
                    "consequence": consequence,
                    "capability": capability,
                },
                baseline_points=baseline_points,
                tier=tier,
                task_type_id=task_type_id,
            )

    # -- plans, lint, erosion, retro

    @app.post("/api/plans")
    def build_plan(payload: dict = Body(...), actor: str = Depends(require_actor)):
        _need(payload, "sprint_id", "cycle", "item_ids")
        with state.lock:
            plan = engine.build_plan(
                payload["sprint_id"],
                payload["cycle"],
                payload["item_ids"],
                team_validation_capacity=payload.get("team_validation_capacity"),
            )
            report = engine.budget(plan)
        return {"plan": plan.to_payload(), "budget": report.to_payload()}

    @app.get("/api/lint")
    def lint_registry(actor: str = Depends(require_actor)):
        with state.lock:
            findings = engine.lint_report()
        return {"findings": [f.to_payload() for f in findings], "count": len(findings)}

    @app.post("/api/lint")
    def lint_plan(payload: dict = Body(...), actor: str = Depends(require_actor)):
        plan = SprintPlan.from_payload(payload["plan"]) if payload.get("plan") else None
        with state.lock:
            findings = engine.lint_report(plan)
        return {"findings": [f.to_payload() for f in findings], "count": len(findings)}

    @app.get("/api/erosion")
    def erosion(actor: str = Depends(require_actor)):
        with state.lock:
            return {"task_types": [s.to_payload() for s in engine.erosion_report()]}

    @app.post("/api/retro")
    def retro(payload: dict = Body(default={}), actor: str = Depends(require_actor)):
        with state.lock:
            cycle = payload.get("cycle")
            if cycle is None:
                cycle = engine.snapshot.current_cycle
            report = engine.retro(
                actor,
                payload.get("timestamp") or _now(),
                cycle=cycle,
                capacity_ok=bool(payload.get("capacity_confirmed", True)),
            )
        if report["events_appended"]:
            state.notify()
        return report

    @app.post("/api/violations", status_code=201)
    def note_violation(payload: dict = Body(...), actor: str = Depends(require_actor)):
        _need(payload, "note", "cycle")
        with state.lock:
            event = engine.note_violation(
                actor,
                payload.get("timestamp") or _now(),
                note=payload["note"],
                cycle=payload["cycle"],
                person=payload.get("person"),
                task_type_id=payload.get("task_type_id"),
                item_id=payload.get("item_id"),
            )
        state.notify()
        return {"event_id": event.event_id}

    @app.post("/api/human-only-cycles", status_code=201)
    def human_only_cycle(payload: dict = Body(...), actor: str = Depends(require_actor)):
        _need(payload, "task_type_id", "cycle")
        with state.lock:
            task_type_or_404(payload["task_type_id"])
            event = engine.complete_human_only_cycle(
                actor,
                payload.get("timestamp") or _now(),
                task_type_id=payload["task_type_id"],
                cycle=payload["cycle"],
                note=payload.get("note", ""),
                participants=payload.get("participants", []),
            )
        state.notify()
        return {"event_id": event.event_id}

    # -- co-production sessions

    @app.get("/api/sessions")
    def sessions(actor: str = Depends(require_actor)):
        with state.lock:
            return {
                "sessions": {
                    sid: s.to_payload() for sid, s in sorted(engine.snapshot.sessions.items())
                }
            }

    @app.get("/api/sessions/{session_id}")
    def session_detail(
        session_id: str,
        at_minutes: float | None = Query(None, ge=0.0),
        actor: str = Depends(require_actor),
    ):
        with state.lock:
            session = session_or_404(session_id)
            timer = None
            if session.open:
                timer = {
                    "last_checkpoint_at_minutes": session.last_checkpoint_at,
                    "next_checkpoint_at_minutes": (
                        session.last_checkpoint_at + session.checkpoint_interval_minutes
                    ),
                }
                if at_minutes is not None:
                    timer["checkpoint_due"] = checkpoint_due(session, at_minutes)
            return {"session": session.to_payload(), "timer": timer}

    @app.get("/api/sessions/{session_id}/transcript")
    def session_transcript(session_id: str, actor: str = Depends(require_actor)):
        with state.lock:
            session = session_or_404(session_id)
            return PlainTextResponse(transcript(session))

    @app.post("/api/sessions/{session_id}/events", status_code=201)
    def session_event(
        session_id: str, payload: dict = Body(...), actor: str = Depends(require_actor)
    ):
        _need(payload, "action", "cycle")
        fields = {
            k: v
            for k, v in payload.items()
            if k not in ("action", "cycle", "timestamp", "session_id")
        }
        with state.lock:
            event = engine.session_action(
                actor,
                payload.get("timestamp") or _now(),
                session_id=session_id,
                action=payload["action"],
                cycle=payload["cycle"],
                **fields,
            )
            session = engine.snapshot.sessions[session_id]
        state.notify()
        return {"event_id": event.event_id, "session": session.to_payload()}

    # -- simulator

    @app.post("/api/sim")
    def simulate(payload: dict = Body(...), actor: str = Depends(require_actor)):
        """Run a simulation (or a parameter sweep) and return the result.

        Runs are seconds-scale, so this stays synchronous; nothing here
        touches the registry.
        """
        _need(payload, "config")
        config = SimConfig.from_payload(payload["config"])
        if payload.get("sweep"):
            parameter = payload["sweep"]
            if parameter not in SWEEPABLE:
                raise HTTPException(
                    status_code=400, detail=f"sweep must be one of {SWEEPABLE}"
                )
            values = [float(v) for v in payload.get("values", [])]
            if not values:
                raise HTTPException(status_code=400, detail="sweep needs values")
            return {"rows": sweep(config, parameter, values)}
        result = run_simulation(config)
        return {"summary": result.summary}

    return app
