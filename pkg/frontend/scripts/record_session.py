"""Record a real gateway session for the UI replay tests.

Drives the bundled scripted backend through the actual HTTP app (with the
JSONL store enabled), capturing every request body, every response envelope,
the handoff, and the annotation events the store persisted.  The resulting
fixture is what the frontend test suite replays, so the UI is always checked
against genuine gateway output rather than hand-typed JSON.

Run from the repository root:

    python3 frontend/scripts/record_session.py
"""

from __future__ import annotations

import json
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from clarigate.config import AppConfig, ServiceConfig
from clarigate.backends import MockBackend
from clarigate.grammar import InitialJudgment, Summary, serialize_segment
from clarigate.service import create_app
from clarigate.synthetic import build_demo_session_script

FIXTURE = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "recorded_session.json"

# What a user would do in the UI: answer each inquiry with one of its chips,
# toggling some "reasonable option" annotations along the way, then file the
# outcome annotation from the summary panel.
REPLIES = [
    {
        "reply": "50 to 200 dollars",
        "annotations": {"options_provided": 3, "options_reasonable": 2},
    },
    {
        "reply": "Within a month",
        "annotations": {"options_provided": 3, "options_reasonable": 3},
    },
]
OUTCOME = {"annotations": {"intentions_provided": 2, "intentions_summarized": 2}}

CLEAR_TASK = "Export the quarterly sales figures to one CSV file by Friday."
CLEAR_SCRIPT = [
    serialize_segment(
        InitialJudgment(
            thought="Everything needed is stated: scope, deadline and format "
            "are all explicit."
        )
    )
    + "\n"
    + serialize_segment(
        Summary(
            thought="The task is already fully specified.",
            constraints=(),
            summary="The user wants the quarterly sales figures exported to "
            "one CSV file by Friday.",
        )
    )
]


def _record_clear_exchange() -> dict:
    config = AppConfig(service=ServiceConfig(default_backend="demo"))
    app = create_app(config, backends={"demo": MockBackend(list(CLEAR_SCRIPT))})
    with TestClient(app) as client:
        body = {"task": CLEAR_TASK}
        opened = client.post("/sessions", json=body)
        assert opened.status_code == 201, opened.text
        assert opened.json()["phase"] == "done", opened.text
        return {"request": body, "envelope": opened.json()}


def main() -> None:
    with tempfile.TemporaryDirectory() as tmp:
        store_path = Path(tmp) / "sessions.jsonl"
        config = AppConfig(
            service=ServiceConfig(default_backend="demo", store_path=str(store_path))
        )
        app = create_app(
            config, backends={"demo": MockBackend(build_demo_session_script())}
        )
        exchanges = []
        with TestClient(app) as client:
            body = {"task": "Plan a trip."}
            opened = client.post("/sessions", json=body)
            assert opened.status_code == 201, opened.text
            exchanges.append({"request": body, "envelope": opened.json()})
            sid = opened.json()["session_id"]

            for body in REPLIES:
                reply = client.post(f"/sessions/{sid}/reply", json=body)
                assert reply.status_code == 200, reply.text
                exchanges.append({"request": body, "envelope": reply.json()})

            handoff = client.get(f"/sessions/{sid}/handoff")
            assert handoff.status_code == 200, handoff.text

            outcome = client.post(f"/sessions/{sid}/reply", json=OUTCOME)
            assert outcome.status_code == 200, outcome.text
            exchanges.append({"request": OUTCOME, "envelope": outcome.json()})

        persisted = [
            json.loads(line)
            for line in store_path.read_text(encoding="utf-8").splitlines()
        ]
        annotations = [e for e in persisted if e.get("event") == "annotate"]

    fixture = {
        "exchanges": exchanges,
        "handoff": handoff.json(),
        "persisted_annotations": annotations,
        "clear_exchange": _record_clear_exchange(),
    }
    FIXTURE.parent.mkdir(parents=True, exist_ok=True)
    FIXTURE.write_text(json.dumps(fixture, indent=2, ensure_ascii=False) + "\n")
    print(f"wrote {FIXTURE} ({len(exchanges)} exchanges, {len(annotations)} annotations)")


if __name__ == "__main__":
    main()
