"""Durable session state: an append-only JSONL event log with snapshots.

Every observable session transition is appended as one JSON line — ``open``
carries the full initial state, ``advance``/``abort``/``annotate`` carry
deltas, and every ``snapshot_every`` events per session a full ``snapshot``
line is written so replay never has to walk the whole history of a long
session.  :meth:`SessionStore.load` folds the log back into per-session
state; a reloaded session continues exactly where it stopped, and a finished
session's handoff payload is byte-identical across restarts.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from .backends import ChatBackend, ChatMessage
from .engine import ClarifiedGoal, ClarifierPolicy, SessionState
from .errors import SessionStateError
from .grammar import AssistantMove, Inquiry, MenuItem, Summary


def move_to_dict(move: AssistantMove) -> dict:
    """JSON form of an assistant move, tagged with its type."""
    if isinstance(move, Inquiry):
        return {
            "type": "inquiry",
            "thought": move.thought,
            "question": move.question,
            "options": list(move.options),
        }
    if isinstance(move, Summary):
        return {
            "type": "summary",
            "thought": move.thought,
            "constraints": list(move.constraints),
            "summary": move.summary,
        }
    raise TypeError(f"cannot serialize move of type {type(move).__name__}")


def move_from_dict(raw: Mapping) -> AssistantMove:
    if raw["type"] == "inquiry":
        return Inquiry(
            thought=raw["thought"],
            question=raw["question"],
            options=tuple(raw.get("options", [])),
        )
    if raw["type"] == "summary":
        return Summary(
            thought=raw["thought"],
            constraints=tuple(raw["constraints"]),
            summary=raw["summary"],
        )
    raise ValueError(f"unknown move type {raw.get('type')!r}")


def menu_to_dicts(menu: tuple[MenuItem, ...]) -> list[dict]:
    return [{"description": m.description, "options": list(m.options)} for m in menu]


def menu_from_dicts(raw: list[dict]) -> tuple[MenuItem, ...]:
    return tuple(
        MenuItem(description=m["description"], options=tuple(m["options"])) for m in raw
    )


@dataclass
class StoredSession:
    """Replayed observable state of one session, plus recorded annotations."""

    session_id: str
    task: str
    backend_name: str
    policy: dict
    phase: str
    rounds_used: int
    judged_vague: bool | None
    menu: list[dict]
    transcript: list[dict]
    last_move: dict | None
    result: dict | None
    constraint_count_ok: bool | None
    annotations: list[dict] = field(default_factory=list)

    def state_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "task": self.task,
            "backend": self.backend_name,
            "policy": dict(self.policy),
            "phase": self.phase,
            "rounds_used": self.rounds_used,
            "judged_vague": self.judged_vague,
            "menu": [dict(m) for m in self.menu],
            "transcript": [dict(m) for m in self.transcript],
            "last_move": dict(self.last_move) if self.last_move else None,
            "result": dict(self.result) if self.result else None,
            "constraint_count_ok": self.constraint_count_ok,
            "annotations": [dict(a) for a in self.annotations],
        }

    @classmethod
    def from_state_dict(cls, raw: Mapping) -> "StoredSession":
        return cls(
            session_id=raw["session_id"],
            task=raw["task"],
            backend_name=raw["backend"],
            policy=dict(raw["policy"]),
            phase=raw["phase"],
            rounds_used=raw["rounds_used"],
            judged_vague=raw["judged_vague"],
            menu=list(raw["menu"]),
            transcript=list(raw["transcript"]),
            last_move=raw.get("last_move"),
            result=raw.get("result"),
            constraint_count_ok=raw.get("constraint_count_ok"),
            annotations=list(raw.get("annotations", [])),
        )


def snapshot_session(session: SessionState, backend_name: str) -> StoredSession:
    """Capture a live session's observable state."""
    return StoredSession(
        session_id=session.id,
        task=session.task,
        backend_name=backend_name,
        policy={
            "max_rounds": session.policy.max_rounds,
            "force_summary_at_cap": session.policy.force_summary_at_cap,
            "parse_retries": session.policy.parse_retries,
        },
        phase=session.phase,
        rounds_used=session.rounds_used,
        judged_vague=session.judged_vague,
        menu=menu_to_dicts(session.menu),
        transcript=session.transcript_dicts(),
        last_move=move_to_dict(session.last_move) if session.last_move else None,
        result=session.result.to_dict() if session.result else None,
        constraint_count_ok=session.constraint_count_ok,
    )


def revive_session(stored: StoredSession, backend: ChatBackend) -> SessionState:
    """Rebuild a live, advanceable session from its stored state."""
    return SessionState(
        id=stored.session_id,
        task=stored.task,
        backend=backend,
        policy=ClarifierPolicy(**stored.policy),
        phase=stored.phase,
        rounds_used=stored.rounds_used,
        judged_vague=stored.judged_vague,
        menu=menu_from_dicts(stored.menu),
        transcript=[
            ChatMessage(role=m["role"], content=m["content"]) for m in stored.transcript
        ],
        last_move=move_from_dict(stored.last_move) if stored.last_move else None,
        result=ClarifiedGoal(
            task=stored.result["task"],
            t_user=stored.result["t_user"],
            judged_vague=stored.result["judged_vague"],
            constraints=tuple(stored.result["constraints"]),
            rounds_used=stored.result["rounds_used"],
        )
        if stored.result
        else None,
        constraint_count_ok=stored.constraint_count_ok,
    )


class SessionStore:
    """Append-only JSONL persistence for clarification sessions.

    Thread-safe for the service's use; every mutation is flushed before the
    call returns so a crash loses at most the in-flight event.
    """

    def __init__(self, path: str | Path, snapshot_every: int = 20):
        if snapshot_every < 2:
            raise ValueError("snapshot_every must be at least 2")
        self.path = Path(path)
        self.snapshot_every = snapshot_every
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._event_counts: dict[str, int] = {}
        self._backend_names: dict[str, str] = {}
        # Annotations seen this process, so snapshots can carry them along.
        self._annotations: dict[str, list[dict]] = {}

    def _append(self, payload: dict) -> None:
        line = json.dumps(payload, ensure_ascii=False)
        with self._lock:
            with self.path.open("a", encoding="utf-8") as f:
                f.write(line + "\n")
                f.flush()

    def _bump(self, session: SessionState) -> None:
        """Count an event; emit a full snapshot every ``snapshot_every``."""
        count = self._event_counts.get(session.id, 0) + 1
        self._event_counts[session.id] = count
        if count % self.snapshot_every == 0:
            name = self._backend_names.get(session.id, "")
            stored = snapshot_session(session, name)
            stored.annotations = list(self._annotations.get(session.id, []))
            self._append({"event": "snapshot", "id": session.id, "state": stored.state_dict()})

    def adopt(self, stored: StoredSession) -> None:
        """Register a replayed session so later events snapshot correctly."""
        self._backend_names[stored.session_id] = stored.backend_name
        self._event_counts.setdefault(stored.session_id, 0)
        self._annotations[stored.session_id] = list(stored.annotations)

    def record_open(self, session: SessionState, backend_name: str) -> None:
        self._backend_names[session.id] = backend_name
        stored = snapshot_session(session, backend_name)
        self._append({"event": "open", "id": session.id, "state": stored.state_dict()})
        self._bump(session)

    def record_advance(
        self, session: SessionState, reply: str, transcript_start: int
    ) -> None:
        """Persist one advance; ``transcript_start`` is the transcript length
        captured before the engine call, so only new messages are stored."""
        self._append(
            {
                "event": "advance",
                "id": session.id,
                "reply": reply,
                "phase": session.phase,
                "rounds_used": session.rounds_used,
                "transcript_append": [
                    m.to_dict() for m in session.transcript[transcript_start:]
                ],
                "move": move_to_dict(session.last_move) if session.last_move else None,
                "result": session.result.to_dict() if session.result else None,
                "constraint_count_ok": session.constraint_count_ok,
            }
        )
        self._bump(session)

    def record_abort(self, session: SessionState) -> None:
        self._append({"event": "abort", "id": session.id})
        self._bump(session)

    def record_annotation(self, session: SessionState, annotation: dict) -> None:
        self._annotations.setdefault(session.id, []).append(dict(annotation))
        self._append({"event": "annotate", "id": session.id, "annotation": annotation})
        self._bump(session)

    def load(self) -> dict[str, StoredSession]:
        """Fold the event log into the latest state of every session."""
        sessions: dict[str, StoredSession] = {}
        counts: dict[str, int] = {}
        if not self.path.exists():
            return sessions
        with self.path.open("r", encoding="utf-8") as f:
            for line_no, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                event = json.loads(line)
                kind = event["event"]
                sid = event["id"]
                counts[sid] = counts.get(sid, 0) + 1
                if kind in ("open", "snapshot"):
                    sessions[sid] = StoredSession.from_state_dict(event["state"])
                    continue
                if sid not in sessions:
                    raise SessionStateError(
                        f"line {line_no}: {kind!r} event for unknown session {sid!r}"
                    )
                stored = sessions[sid]
                if kind == "advance":
                    stored.phase = event["phase"]
                    stored.rounds_used = event["rounds_used"]
                    stored.transcript.extend(event["transcript_append"])
                    stored.last_move = event["move"]
                    stored.result = event["result"]
                    stored.constraint_count_ok = event["constraint_count_ok"]
                elif kind == "abort":
                    stored.phase = "aborted"
                elif kind == "annotate":
                    stored.annotations.append(event["annotation"])
                else:
                    raise SessionStateError(f"line {line_no}: unknown event {kind!r}")
        with self._lock:
            self._event_counts.update(counts)
            for sid, stored in sessions.items():
                self._backend_names[sid] = stored.backend_name
                self._annotations[sid] = list(stored.annotations)
        return sessions
