"""HTTP gateway around clarification sessions.

The service exposes the engine over a small JSON API so any client — the
bundled browser UI, an executor agent, curl — can run a clarify-then-handoff
loop without touching Python:

    POST /sessions                    open a session for a task
    POST /sessions/{id}/reply         answer the current inquiry
    GET  /sessions/{id}               read the session envelope
    GET  /sessions/{id}/handoff       final goal + transcript (done sessions)
    DELETE /sessions/{id}             abandon an unfinished session
    GET  /healthz                     liveness probe

Every session-facing response is the same envelope shape; errors use
``{"error": {"code", "message"}}``.  With a store configured, each
transition is persisted and unfinished sessions survive restarts; a reply on
a finished session is rejected unless it is an annotations-only body, which
is accepted exactly once to record evaluation counts.
"""

from __future__ import annotations

import logging
from typing import Mapping

from fastapi import Depends, FastAPI, Header, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import __version__
from .backends import ChatBackend
from .config import AppConfig, build_backends, resolve_auth_token
from .engine import (
    PHASE_DONE,
    PHASE_INQUIRING,
    ClarifierPolicy,
    SessionState,
    abort,
    advance,
    handoff_payload,
    open_session,
)
from .errors import (
    BackendError,
    ProtocolError,
    SessionBusyError,
    SessionStateError,
)
from .store import SessionStore, StoredSession, menu_to_dicts, move_to_dict, revive_session

logger = logging.getLogger(__name__)


class OpenRequest(BaseModel):
    task: str
    backend: str | None = None


class ReplyRequest(BaseModel):
    reply: str | None = None
    annotations: dict | None = None


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(
        status_code=status, content={"error": {"code": code, "message": message}}
    )


class _Gateway:
    """Mutable service state: live sessions, read-only replays, the store."""

    def __init__(
        self,
        backends: Mapping[str, ChatBackend],
        default_backend: str,
        policy: ClarifierPolicy,
        store: SessionStore | None,
    ):
        self.backends = dict(backends)
        self.default_backend = default_backend
        self.policy = policy
        self.store = store
        self.sessions: dict[str, SessionState] = {}
        self.stored: dict[str, StoredSession] = {}
        self.backend_names: dict[str, str] = {}
        self.annotation_counts: dict[str, int] = {}
        self.outcome_annotated: set[str] = set()
        if store is not None:
            for sid, stored in store.load().items():
                self.annotation_counts[sid] = len(stored.annotations)
                if any(a.get("kind") == "outcome" for a in stored.annotations):
                    self.outcome_annotated.add(sid)
                backend = self.backends.get(stored.backend_name)
                if backend is not None:
                    self.sessions[sid] = revive_session(stored, backend)
                    self.backend_names[sid] = stored.backend_name
                    store.adopt(stored)
                else:
                    self.stored[sid] = stored
                    logger.warning(
                        "session %s uses unconfigured backend %r; read-only",
                        sid,
                        stored.backend_name,
                    )

    def envelope(self, sid: str) -> dict:
        if sid in self.sessions:
            session = self.sessions[sid]
            return {
                "session_id": session.id,
                "task": session.task,
                "phase": session.phase,
                "rounds_used": session.rounds_used,
                "max_rounds": session.policy.max_rounds,
                "judged_vague": session.judged_vague,
                "menu": menu_to_dicts(session.menu),
                "move": move_to_dict(session.last_move) if session.last_move else None,
                "constraint_count_ok": session.constraint_count_ok,
                "annotations_recorded": self.annotation_counts.get(sid, 0),
            }
        stored = self.stored[sid]
        return {
            "session_id": stored.session_id,
            "task": stored.task,
            "phase": stored.phase,
            "rounds_used": stored.rounds_used,
            "max_rounds": stored.policy["max_rounds"],
            "judged_vague": stored.judged_vague,
            "menu": list(stored.menu),
            "move": dict(stored.last_move) if stored.last_move else None,
            "constraint_count_ok": stored.constraint_count_ok,
            "annotations_recorded": self.annotation_counts.get(sid, 0),
        }


def create_app(
    config: AppConfig | None = None,
    backends: Mapping[str, ChatBackend] | None = None,
    store: SessionStore | None = None,
    auth_token: str | None = None,
) -> FastAPI:
    """Build the service.

    ``backends`` (name -> instance) overrides the config-built ones — tests
    and the CLI inject mock backends this way.  With ``config`` omitted an
    all-defaults config is used; the store falls back to
    ``config.service.store_path`` when not given directly.
    """
    config = config or AppConfig()
    if backends is None:
        backends = build_backends(config)
    if not backends:
        raise ValueError("at least one backend must be configured")
    default_backend = config.service.default_backend
    if default_backend not in backends:
        default_backend = sorted(backends)[0]
    if store is None and config.service.store_path:
        store = SessionStore(
            config.service.store_path, snapshot_every=config.service.snapshot_every
        )
    if auth_token is None:
        auth_token = resolve_auth_token(config)
    policy = ClarifierPolicy(
        max_rounds=config.policy.max_rounds,
        force_summary_at_cap=config.policy.force_summary_at_cap,
        parse_retries=config.policy.parse_retries,
    )

    gateway = _Gateway(backends, default_backend, policy, store)
    app = FastAPI(title="clarigate", version=__version__)
    app.state.gateway = gateway

    class _Unauthorized(Exception):
        pass

    async def require_auth(authorization: str | None = Header(default=None)):
        if auth_token is None:
            return
        if authorization != f"Bearer {auth_token}":
            raise _Unauthorized()

    @app.exception_handler(_Unauthorized)
    async def _unauthorized_handler(request: Request, exc: _Unauthorized):
        return _error(401, "unauthorized", "missing or invalid bearer token")

    @app.exception_handler(RequestValidationError)
    async def _validation_handler(request: Request, exc: RequestValidationError):
        return _error(400, "invalid_request", str(exc.errors()))

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok", "version": __version__}

    @app.post("/sessions", status_code=201, dependencies=[Depends(require_auth)])
    async def open_(body: OpenRequest):
        if not body.task.strip():
            return _error(400, "invalid_request", "task must be non-empty")
        name = body.backend or gateway.default_backend
        backend = gateway.backends.get(name)
        if backend is None:
            return _error(400, "invalid_request", f"unknown backend {name!r}")
        try:
            session, _move = open_session(body.task, backend, gateway.policy)
        except ProtocolError as exc:
            return _error(502, "protocol_error", str(exc))
        except BackendError as exc:
            return _error(502, "backend_error", str(exc))
        gateway.sessions[session.id] = session
        gateway.backend_names[session.id] = name
        if gateway.store is not None:
            gateway.store.record_open(session, name)
        return JSONResponse(status_code=201, content=gateway.envelope(session.id))

    @app.get("/sessions/{sid}", dependencies=[Depends(require_auth)])
    async def get_session(sid: str):
        if sid not in gateway.sessions and sid not in gateway.stored:
            return _error(404, "unknown_session", f"no session {sid!r}")
        return gateway.envelope(sid)

    @app.post("/sessions/{sid}/reply", dependencies=[Depends(require_auth)])
    async def reply(sid: str, body: ReplyRequest):
        session = gateway.sessions.get(sid)
        if session is None:
            if sid in gateway.stored:
                return _error(409, "wrong_phase", "session is read-only after restart")
            return _error(404, "unknown_session", f"no session {sid!r}")

        text = (body.reply or "").strip()
        if not text:
            # An annotations-only body is the post-completion evaluation
            # hook: accepted once on a finished session, never elsewhere.
            if body.annotations is None:
                return _error(400, "invalid_request", "reply must be non-empty")
            if session.phase != PHASE_DONE:
                return _error(
                    400, "invalid_request", "annotations-only replies need a finished session"
                )
            if sid in gateway.outcome_annotated:
                return _error(409, "wrong_phase", "outcome already annotated")
            gateway.outcome_annotated.add(sid)
            _record_annotation(gateway, session, {"kind": "outcome", **body.annotations})
            return gateway.envelope(sid)

        if session.phase != PHASE_INQUIRING:
            return _error(
                409, "wrong_phase", f"cannot reply in phase {session.phase!r}"
            )
        if body.annotations is not None:
            # Round annotations describe the inquiry this reply answers.
            _record_annotation(
                gateway,
                session,
                {"kind": "round", "round": session.rounds_used, **body.annotations},
            )
        transcript_start = len(session.transcript)
        try:
            advance(session, text)
        except SessionBusyError as exc:
            return _error(409, "busy", str(exc))
        except SessionStateError as exc:
            return _error(409, "wrong_phase", str(exc))
        except ProtocolError as exc:
            return _error(502, "protocol_error", str(exc))
        except BackendError as exc:
            return _error(502, "backend_error", str(exc))
        if gateway.store is not None:
            gateway.store.record_advance(session, text, transcript_start)
        return gateway.envelope(sid)

    @app.get("/sessions/{sid}/handoff", dependencies=[Depends(require_auth)])
    async def get_handoff(sid: str):
        session = gateway.sessions.get(sid)
        if session is not None:
            if session.phase != PHASE_DONE:
                return _error(
                    409, "wrong_phase", f"no handoff in phase {session.phase!r}"
                )
            return handoff_payload(session)
        stored = gateway.stored.get(sid)
        if stored is None:
            return _error(404, "unknown_session", f"no session {sid!r}")
        if stored.phase != PHASE_DONE or not stored.result:
            return _error(409, "wrong_phase", f"no handoff in phase {stored.phase!r}")
        payload = {"session_id": stored.session_id}
        payload.update(stored.result)
        payload["transcript"] = list(stored.transcript)
        return payload

    @app.delete("/sessions/{sid}", dependencies=[Depends(require_auth)])
    async def delete_session(sid: str):
        session = gateway.sessions.get(sid)
        if session is None:
            if sid in gateway.stored:
                return _error(409, "wrong_phase", "session is read-only after restart")
            return _error(404, "unknown_session", f"no session {sid!r}")
        try:
            abort(session)
        except SessionStateError as exc:
            return _error(409, "wrong_phase", str(exc))
        if gateway.store is not None:
            gateway.store.record_abort(session)
        return gateway.envelope(sid)

    return app


def _record_annotation(gateway: _Gateway, session: SessionState, payload: dict) -> None:
    gateway.annotation_counts[session.id] = gateway.annotation_counts.get(session.id, 0) + 1
    if gateway.store is not None:
        gateway.store.record_annotation(session, payload)
