"""Clarification sessions: drive a chat backend through the marker protocol.

A session opens with the task, gets the model's vagueness call plus either a
first inquiry (vague) or an immediate summary (clear), then alternates user
replies and inquiries until the model summarizes.  The engine enforces the
round cap, repairs grammar slips by re-prompting, and exposes the final
clarified goal for handoff to an executor.
"""

from __future__ import annotations

import secrets
import threading
from dataclasses import dataclass, field, replace

from .backends import ChatBackend, ChatMessage
from .errors import ProtocolError, SessionBusyError, SessionStateError
from .grammar import (
    PHASE_INQUIRING,
    PHASE_SUMMARIZING,
    AssistantMove,
    GrammarError,
    Inquiry,
    MenuItem,
    Summary,
    derive_inquiry_options,
    parse_assistant_text,
    parse_opening,
)
from .prompts import (
    CLARIFIER_SYSTEM_PROMPT,
    FORCE_SUMMARY_INSTRUCTION,
    FORMAT_REPAIR_INSTRUCTION,
    TASK_HEADER,
)

PHASE_DONE = "done"
PHASE_ABORTED = "aborted"


@dataclass(frozen=True)
class ClarifierPolicy:
    """Knobs for session control.

    ``max_rounds`` caps user-visible inquiries; with ``force_summary_at_cap``
    the engine converts a would-be sixth inquiry into a demanded summary,
    without it the session fails at the cap.  ``parse_retries`` is how many
    corrective re-prompts a malformed model response gets before the session
    errors out.
    """

    max_rounds: int = 5
    force_summary_at_cap: bool = True
    parse_retries: int = 2

    def __post_init__(self):
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be at least 1")
        if self.parse_retries < 0:
            raise ValueError("parse_retries must be >= 0")


@dataclass(frozen=True)
class ClarifiedGoal:
    """What the gateway hands to an executor once intention is explicit."""

    task: str
    t_user: str
    judged_vague: bool
    constraints: tuple[str, ...]
    rounds_used: int

    def __post_init__(self):
        if not self.judged_vague and self.constraints:
            raise ValueError("a task judged clear cannot carry constraints")

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "t_user": self.t_user,
            "judged_vague": self.judged_vague,
            "constraints": list(self.constraints),
            "rounds_used": self.rounds_used,
        }


@dataclass
class SessionState:
    """Mutable state of one clarification dialogue."""

    id: str
    task: str
    backend: ChatBackend
    policy: ClarifierPolicy
    phase: str = PHASE_INQUIRING
    rounds_used: int = 0
    judged_vague: bool | None = None
    menu: tuple[MenuItem, ...] = ()
    transcript: list[ChatMessage] = field(default_factory=list)
    last_move: AssistantMove | None = None
    result: ClarifiedGoal | None = None
    constraint_count_ok: bool | None = None
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def transcript_dicts(self) -> list[dict]:
        return [m.to_dict() for m in self.transcript]


def _strip_boundary_tokens(text: str) -> str:
    """Models tuned on serialized records may echo <s>/</s>; drop them."""
    s = text.strip()
    for token in ("<s>", "</s>"):
        while s.startswith(token):
            s = s[len(token) :].lstrip()
        while s.endswith(token):
            s = s[: -len(token)].rstrip()
    return s


def _prompted_move(session: SessionState, parse):
    """Call the backend and parse; re-prompt on grammar slips, then fail."""
    last_error: GrammarError | None = None
    for _attempt in range(session.policy.parse_retries + 1):
        reply = session.backend.complete(session.transcript)
        session.transcript.append(reply)
        try:
            return parse(_strip_boundary_tokens(reply.content))
        except GrammarError as exc:
            last_error = exc
            session.transcript.append(
                ChatMessage(role="user", content=FORMAT_REPAIR_INSTRUCTION)
            )
    raise ProtocolError(
        f"model failed the dialogue grammar after {session.policy.parse_retries} "
        f"repair attempts: {last_error}",
        transcript=session.transcript_dicts(),
    )


def _with_options(session: SessionState, inquiry: Inquiry) -> Inquiry:
    options = derive_inquiry_options(session.menu, inquiry.thought, inquiry.question)
    return replace(inquiry, options=options)


def _finalize(session: SessionState, summary: Summary) -> Summary:
    session.constraint_count_ok = len(summary.constraints) == session.rounds_used
    constraints = summary.constraints if session.judged_vague else ()
    session.result = ClarifiedGoal(
        task=session.task,
        t_user=summary.summary,
        judged_vague=bool(session.judged_vague),
        constraints=constraints,
        rounds_used=session.rounds_used,
    )
    session.phase = PHASE_DONE
    session.last_move = summary
    return summary


def open_session(
    task_text: str,
    backend: ChatBackend,
    policy: ClarifierPolicy | None = None,
) -> tuple[SessionState, AssistantMove]:
    """Start a clarification dialogue for a task.

    Returns the session plus the first assistant move: an :class:`Inquiry`
    when the model judged the task vague, otherwise the final
    :class:`Summary` (clear tasks pass straight through to done).
    """
    if not task_text or not task_text.strip():
        raise ValueError("task text must be non-empty")
    policy = policy or ClarifierPolicy()
    session = SessionState(
        id=secrets.token_hex(16),
        task=task_text.strip(),
        backend=backend,
        policy=policy,
        transcript=[
            ChatMessage(role="system", content=CLARIFIER_SYSTEM_PROMPT),
            ChatMessage(role="user", content=f"{TASK_HEADER}\n{task_text.strip()}"),
        ],
    )
    initial, follow = _prompted_move(session, parse_opening)
    session.menu = initial.detail_menu
    session.judged_vague = isinstance(follow, Inquiry)
    if isinstance(follow, Inquiry):
        session.rounds_used = 1
        session.phase = PHASE_INQUIRING
        session.last_move = _with_options(session, follow)
        return session, session.last_move
    return session, _finalize(session, follow)


def advance(session: SessionState, user_reply: str) -> AssistantMove:
    """Feed the user's reply in and get the next move.

    Returns the next :class:`Inquiry`, or the :class:`Summary` that closes
    the session — either because the model chose to summarize or because the
    round cap forced it.

    Raises:
        SessionStateError: if the session is already done or aborted.
        SessionBusyError: if another thread is advancing this session.
        ProtocolError: when the model cannot be repaired onto the grammar,
            or keeps inquiring past the cap with forcing disabled.
    """
    if not user_reply or not user_reply.strip():
        raise ValueError("user reply must be non-empty")
    if session.phase != PHASE_INQUIRING:
        raise SessionStateError(f"cannot advance a session in phase {session.phase!r}")
    if not session._lock.acquire(blocking=False):
        raise SessionBusyError(f"session {session.id} is busy")
    try:
        session.transcript.append(ChatMessage(role="user", content=user_reply.strip()))
        move = _prompted_move(
            session, lambda text: parse_assistant_text(text, PHASE_INQUIRING)
        )
        if isinstance(move, Summary):
            return _finalize(session, move)
        if session.rounds_used >= session.policy.max_rounds:
            # The model asked one question too many; it is never shown.
            if not session.policy.force_summary_at_cap:
                raise ProtocolError(
                    f"model kept inquiring past the {session.policy.max_rounds}-round cap",
                    transcript=session.transcript_dicts(),
                )
            session.transcript.append(
                ChatMessage(role="user", content=FORCE_SUMMARY_INSTRUCTION)
            )
            forced = _prompted_move(
                session, lambda text: parse_assistant_text(text, PHASE_SUMMARIZING)
            )
            return _finalize(session, forced)
        session.rounds_used += 1
        session.last_move = _with_options(session, move)
        return session.last_move
    finally:
        session._lock.release()


def handoff(session: SessionState) -> ClarifiedGoal:
    """The clarified goal of a finished session."""
    if session.phase != PHASE_DONE or session.result is None:
        raise SessionStateError(f"no handoff for a session in phase {session.phase!r}")
    return session.result


def handoff_payload(session: SessionState) -> dict:
    """JSON-ready handoff: goal fields plus the full raw transcript."""
    goal = handoff(session)
    payload = {"session_id": session.id}
    payload.update(goal.to_dict())
    payload["transcript"] = session.transcript_dicts()
    return payload


def abort(session: SessionState) -> None:
    """Mark an unfinished session abandoned; its transcript stays auditable."""
    if session.phase == PHASE_DONE:
        raise SessionStateError("cannot abort a completed session")
    session.phase = PHASE_ABORTED
