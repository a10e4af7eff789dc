"""Co-production sessions: structured human-AI working sessions.

A session is a timer plus an honesty protocol. Periodic checkpoints force
the human to re-read direction instead of drifting on autopilot; pivots
get logged when the approach changes; a session cannot close until the
human has recorded enough counterarguments to prove they pushed back, and
every adopted pivot has been reviewed on its merits.

Session state lives in the registry as ``session_event`` entries, one per
action, so sessions survive restarts and replay deterministically. Times
are minutes since session start, supplied by the caller; the fold never
reads a clock.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

from .tiers import GovernanceError

MIN_CHECKPOINT_INTERVAL = 25
MAX_CHECKPOINT_INTERVAL = 30
DEFAULT_CHECKPOINT_INTERVAL = 25
CHECKPOINT_GRACE_MINUTES = 5
MIN_COUNTERARGUMENTS = 3

SESSION_ACTIONS = (
    "opened",
    "checkpoint",
    "pivot",
    "merit_review",
    "counterargument",
    "finalized",
    "abandoned",
)


class SessionError(GovernanceError):
    pass


class SessionBlocked(SessionError):
    """Finalization refused; carries everything still missing."""

    def __init__(self, blockers: list[str]):
        super().__init__("session cannot finalize: " + "; ".join(blockers))
        self.blockers = list(blockers)


@dataclass(frozen=True)
class Pivot:
    index: int
    at_minutes: float
    description: str
    significant: bool
    adopted: bool
    merit_reviewed: bool = False
    merit_rationale: str = ""

    def to_payload(self) -> dict:
        return {
            "index": self.index,
            "at_minutes": self.at_minutes,
            "description": self.description,
            "significant": self.significant,
            "adopted": self.adopted,
            "merit_reviewed": self.merit_reviewed,
            "merit_rationale": self.merit_rationale,
        }


@dataclass(frozen=True)
class Checkpoint:
    at_minutes: float
    note: str = ""
    missed: bool = False

    def to_payload(self) -> dict:
        return {"at_minutes": self.at_minutes, "note": self.note, "missed": self.missed}


@dataclass(frozen=True)
class Session:
    """Folded state of one co-production session."""

    session_id: str
    owner: str
    opened_cycle: int
    task_type_id: Optional[str] = None
    item_id: Optional[str] = None
    checkpoint_interval_minutes: float = DEFAULT_CHECKPOINT_INTERVAL
    attested_notes: bool = False
    checkpoints: tuple[Checkpoint, ...] = ()
    pivots: tuple[Pivot, ...] = ()
    counterarguments: tuple[str, ...] = ()
    status: str = "open"  # open | finalized | abandoned
    closed_at_minutes: Optional[float] = None
    summary: str = ""

    @property
    def open(self) -> bool:
        return self.status == "open"

    @property
    def last_checkpoint_at(self) -> float:
        return self.checkpoints[-1].at_minutes if self.checkpoints else 0.0

    @property
    def missed_checkpoint_count(self) -> int:
        return sum(1 for c in self.checkpoints if c.missed)

    def to_payload(self) -> dict:
        return {
            "session_id": self.session_id,
            "owner": self.owner,
            "opened_cycle": self.opened_cycle,
            "task_type_id": self.task_type_id,
            "item_id": self.item_id,
            "checkpoint_interval_minutes": self.checkpoint_interval_minutes,
            "attested_notes": self.attested_notes,
            "checkpoints": [c.to_payload() for c in self.checkpoints],
            "pivots": [p.to_payload() for p in self.pivots],
            "counterarguments": list(self.counterarguments),
            "status": self.status,
            "closed_at_minutes": self.closed_at_minutes,
            "summary": self.summary,
            "missed_checkpoints": self.missed_checkpoint_count,
        }


def open_session(
    session_id: str,
    owner: str,
    cycle: int,
    task_type_id: Optional[str] = None,
    item_id: Optional[str] = None,
    checkpoint_interval_minutes: float = DEFAULT_CHECKPOINT_INTERVAL,
    attested_notes: bool = False,
) -> Session:
    if not session_id:
        raise SessionError("session_id is required")
    if not owner:
        raise SessionError("sessions need a human owner")
    if not MIN_CHECKPOINT_INTERVAL <= checkpoint_interval_minutes <= MAX_CHECKPOINT_INTERVAL:
        raise SessionError(
            f"checkpoint interval must be within [{MIN_CHECKPOINT_INTERVAL}, "
            f"{MAX_CHECKPOINT_INTERVAL}] minutes"
        )
    return Session(
        session_id=session_id,
        owner=owner,
        opened_cycle=cycle,
        task_type_id=task_type_id,
        item_id=item_id,
        checkpoint_interval_minutes=checkpoint_interval_minutes,
        attested_notes=attested_notes,
    )


def _require_open(session: Session) -> None:
    if not session.open:
        raise SessionError(f"session {session.session_id} is {session.status}")


def checkpoint_due(session: Session, at_minutes: float) -> bool:
    """Is a direction checkpoint due right now?

    Due when the interval has elapsed since the last checkpoint (or since
    start), or immediately once a significant pivot happened after the
    last checkpoint.
    """
    _require_open(session)
    if at_minutes < 0:
        raise SessionError("at_minutes must be >= 0")
    if at_minutes - session.last_checkpoint_at >= session.checkpoint_interval_minutes:
        return True
    return any(
        p.significant and p.at_minutes > session.last_checkpoint_at for p in session.pivots
    )


def record_checkpoint(session: Session, at_minutes: float, note: str = "") -> Session:
    """Append a checkpoint; late ones are marked missed but never blocked."""
    _require_open(session)
    if at_minutes < session.last_checkpoint_at:
        raise SessionError("checkpoints must move forward in time")
    late_by = at_minutes - session.last_checkpoint_at - session.checkpoint_interval_minutes
    missed = late_by > CHECKPOINT_GRACE_MINUTES
    return replace(
        session,
        checkpoints=session.checkpoints + (Checkpoint(at_minutes, note, missed),),
    )


def log_pivot(
    session: Session,
    at_minutes: float,
    description: str,
    significant: bool = False,
    adopted: bool = False,
) -> Session:
    _require_open(session)
    if not description.strip():
        raise SessionError("pivots need a description")
    pivot = Pivot(
        index=len(session.pivots),
        at_minutes=at_minutes,
        description=description,
        significant=significant,
        adopted=adopted,
    )
    return replace(session, pivots=session.pivots + (pivot,))


def record_merit_review(
    session: Session, pivot_index: int, rationale: str, at_minutes: float
) -> Session:
    """Mark an adopted pivot as reviewed on its merits, not on momentum."""
    _require_open(session)
    if not rationale.strip():
        raise SessionError("merit reviews need a rationale")
    if not 0 <= pivot_index < len(session.pivots):
        raise SessionError(f"no pivot at index {pivot_index}")
    pivots = list(session.pivots)
    pivots[pivot_index] = replace(
        pivots[pivot_index], merit_reviewed=True, merit_rationale=rationale
    )
    return replace(session, pivots=tuple(pivots))


def record_counterargument(session: Session, text: str, at_minutes: float) -> Session:
    _require_open(session)
    if not text.strip():
        raise SessionError("counterarguments must be non-empty")
    return replace(session, counterarguments=session.counterarguments + (text.strip(),))


def finalize_blockers(session: Session) -> list[str]:
    """Everything still standing between this session and a clean close."""
    blockers = []
    have = len(session.counterarguments)
    if have < MIN_COUNTERARGUMENTS:
        blockers.append(
            f"only {have} of {MIN_COUNTERARGUMENTS} required counterarguments recorded"
        )
    for pivot in session.pivots:
        if pivot.adopted and not pivot.merit_reviewed:
            blockers.append(
                f"adopted pivot {pivot.index} ({pivot.description[:40]!r}) lacks a merit review"
            )
    return blockers


def finalize_session(session: Session, at_minutes: float, summary: str = "") -> Session:
    """Close the session, or raise SessionBlocked listing what is missing."""
    _require_open(session)
    blockers = finalize_blockers(session)
    if blockers:
        raise SessionBlocked(blockers)
    return replace(
        session, status="finalized", closed_at_minutes=at_minutes, summary=summary
    )


def abandon_session(session: Session, at_minutes: float, reason: str = "") -> Session:
    """Abandonment is always allowed; it is recorded, not judged."""
    _require_open(session)
    return replace(
        session, status="abandoned", closed_at_minutes=at_minutes, summary=reason
    )


def transcript(session: Session) -> str:
    """Render the session timeline as plain text for humans to read."""
    lines = [
        f"co-production session {session.session_id}",
        f"owner: {session.owner} (opened cycle {session.opened_cycle})",
    ]
    if session.item_id:
        lines.append(f"item: {session.item_id}")
    if session.task_type_id:
        lines.append(f"task type: {session.task_type_id}")
    lines.append(
        f"checkpoint interval: {session.checkpoint_interval_minutes:g} min; "
        f"notes attested: {'yes' if session.attested_notes else 'no'}"
    )
    closed = (
        f" (closed at t+{session.closed_at_minutes:g})"
        if session.closed_at_minutes is not None
        else ""
    )
    lines.append(f"status: {session.status}{closed}")

    entries = [(c.at_minutes, 0, c) for c in session.checkpoints]
    entries += [(p.at_minutes, 1, p) for p in session.pivots]
    if entries:
        lines.append("")
        lines.append("timeline:")
    for at, _, entry in sorted(entries, key=lambda e: (e[0], e[1])):
        if isinstance(entry, Checkpoint):
            late = " (late)" if entry.missed else ""
            note = f": {entry.note}" if entry.note else ""
            lines.append(f"  t+{at:g}  checkpoint{late}{note}")
        else:
            flags = ", ".join(
                f for f, on in (("significant", entry.significant), ("adopted", entry.adopted)) if on
            )
            flags = f" [{flags}]" if flags else ""
            lines.append(f"  t+{at:g}  pivot {entry.index}{flags}: {entry.description}")
            if entry.merit_reviewed:
                lines.append(f"          merit review: {entry.merit_rationale}")

    if session.counterarguments:
        lines.append("")
        lines.append(f"counterarguments ({len(session.counterarguments)}):")
        for n, text in enumerate(session.counterarguments, start=1):
            lines.append(f"  {n}. {text}")

    if session.summary:
        lines.append("")
        lines.append(f"summary: {session.summary}")
    return "\n".join(lines) + "\n"


def apply_session_action(
    session: Optional[Session], action: str, payload: dict, cycle: int
) -> Session:
    """Fold one session_event payload into session state.

    This is the single code path used both when appending live events and
    when replaying the log, so the two can never disagree.
    """
    if action not in SESSION_ACTIONS:
        raise SessionError(f"unknown session action: {action}")
    if action == "opened":
        if session is not None:
            raise SessionError(f"session {payload.get('session_id')} already opened")
        return open_session(
            session_id=str(payload["session_id"]),
            owner=str(payload["owner"]),
            cycle=cycle,
            task_type_id=payload.get("task_type_id"),
            item_id=payload.get("item_id"),
            checkpoint_interval_minutes=float(
                payload.get("checkpoint_interval_minutes", DEFAULT_CHECKPOINT_INTERVAL)
            ),
            attested_notes=bool(payload.get("attested_notes", False)),
        )
    if session is None:
        raise SessionError("session must be opened first")
    at = float(payload.get("at_minutes", 0.0))
    if action == "checkpoint":
        return record_checkpoint(session, at, str(payload.get("note", "")))
    if action == "pivot":
        return log_pivot(
            session,
            at,
            str(payload.get("description", "")),
            significant=bool(payload.get("significant", False)),
            adopted=bool(payload.get("adopted", False)),
        )
    if action == "merit_review":
        return record_merit_review(
            session, int(payload["pivot_index"]), str(payload.get("rationale", "")), at
        )
    if action == "counterargument":
        return record_counterargument(session, str(payload.get("text", "")), at)
    if action == "finalized":
        return finalize_session(session, at, str(payload.get("summary", "")))
    if action == "abandoned":
        return abandon_session(session, at, str(payload.get("reason", "")))
    raise SessionError(f"unhandled action: {action}")  # pragma: no cover
