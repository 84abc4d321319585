"""Release gate: one test per headline guarantee, with explicit budgets.

Each test prints a single ``[PASS]``/``[FAIL]`` line naming the guarantee and
the measured values (run with ``pytest -s`` to see the lines as they happen),
then asserts.  Everything here runs offline against scripted backends; the
whole gate is expected to finish in well under a minute.
"""

from __future__ import annotations

import itertools
import math
import random
import threading
import time

import httpx
import uvicorn

from clarigate.backends import MockBackend, load_script
from clarigate.config import AppConfig, ServiceConfig
from clarigate.dataset import compute_stats, load_dataset
from clarigate.grammar import (
    InitialJudgment,
    Inquiry,
    MenuItem,
    Summary,
    assemble_training_instances,
    parse_record,
    marker_sequence,
    serializable_violations,
    serialize_record,
    serialize_segment,
)
from clarigate.metrics import (
    compute_execution_metrics,
    compute_metrics,
    read_eval_logs,
    read_execution_logs,
)
from clarigate.service import create_app
from clarigate.simulate import simulate_records
from clarigate.synthetic import TEST_EXPECTED, TRAIN_EXPECTED, build_demo_session_script
from clarigate.taskgen import CandidateTask, dedup

from conftest import DATA_DIR, FIXTURES_DIR
from helpers import random_eval_log, random_execution_log, random_record
from oracle import close, oracle_execution_metrics, oracle_interaction_metrics


def _gate(name: str, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


def test_bundled_split_statistics_match_ground_truth():
    started = time.monotonic()
    problems = []
    for path, expected in (
        ("synthetic_train.jsonl", TRAIN_EXPECTED),
        ("synthetic_test.jsonl", TEST_EXPECTED),
    ):
        stats = compute_stats(load_dataset(DATA_DIR / path))
        if stats != expected:
            problems.append(f"{path} stats diverge from precomputed ground truth")
        if dict(stats.display_rows()) != dict(expected.display_rows()):
            problems.append(f"{path} display rounding diverges")
    train = compute_stats(load_dataset(DATA_DIR / "synthetic_train.jsonl"))
    headline = dict(train.display_rows())
    for label, value in (
        ("Number of Tasks", "1261"),
        ("Number of Vague Tasks", "1012"),
        ("Number of Clear Tasks", "249"),
        ("Avg. Missing Details per Vague Task", "3.57"),
        ("Share of Level 1 Details (%)", "15.44"),
        ("Share of Level 2 Details (%)", "67.75"),
        ("Number of Options", "11523"),
        ("Avg. Options per Vague Task", "11.39"),
    ):
        if headline.get(label) != value:
            problems.append(f"{label}: got {headline.get(label)!r}, want {value!r}")
    elapsed = time.monotonic() - started
    if elapsed >= 5.0:
        problems.append(f"took {elapsed:.2f}s, budget 5s")
    _gate(
        "dataset statistics",
        not problems,
        "; ".join(problems)
        or f"train+test exact vs precomputed ground truth in {elapsed:.2f}s",
    )


def test_grammar_roundtrip_thousand_records_and_published_sample(
    published_sample_text,
):
    started = time.monotonic()
    rng = random.Random(2024)
    mismatches = 0
    for _ in range(1000):
        record = random_record(rng)
        text = serialize_record(record)
        if serialize_record(parse_record(text).record) != text:
            mismatches += 1

    parsed = parse_record(published_sample_text)
    sample = parsed.record
    sample_ok = (
        len(sample.rounds) == 5
        and len(sample.final.constraints) == 5
        and marker_sequence(
            serialize_record(sample, system_prompt=parsed.system_prompt)
        )
        == marker_sequence(published_sample_text)
    )
    elapsed = time.monotonic() - started
    ok = mismatches == 0 and sample_ok and elapsed < 10.0
    _gate(
        "grammar round-trip",
        ok,
        f"1000 records, {mismatches} byte mismatches; trip sample "
        f"{len(sample.rounds)} rounds / {len(sample.final.constraints)} "
        f"constraints, markers preserved={sample_ok}; {elapsed:.2f}s",
    )


def test_training_instances_count_and_prefix_property():
    rng = random.Random(31337)
    failures = 0
    for _ in range(1000):
        record = random_record(rng)
        instances = assemble_training_instances(record)
        expected = len(record.rounds) + 1 if record.vague else 1
        texts = [inst.text for inst in instances]
        good = len(instances) == expected and texts[-1] == serialize_record(record)
        for shorter, longer in zip(texts, texts[1:]):
            good = good and longer.startswith(shorter) and longer != shorter
        failures += 0 if good else 1
    _gate(
        "instance assembly",
        failures == 0,
        f"1000 records, {failures} count/prefix violations",
    )


def test_metrics_agree_with_independent_oracle():
    started = time.monotonic()
    worst = 0.0
    checked = 0

    def gap(a, b):
        if a is None and b is None:
            return 0.0
        return abs(a - b)

    rng = random.Random(9009)
    counter = itertools.count()
    for batch in range(20):
        logs = [
            random_eval_log(rng, f"t-{next(counter):04d}")
            for _ in range(50)
        ]
        for average in ("macro", "micro"):
            report = compute_metrics(logs, average=average)
            expected = oracle_interaction_metrics(
                [log.to_dict() for log in logs], average
            )
            for name in (
                "judgment_accuracy",
                "avg_rounds",
                "coverage_rate",
                "options_presenting_rate",
                "options_reasonable_rate",
                "avg_provided_options",
                "avg_inquired_details",
                "avg_details_per_round",
            ):
                worst = max(worst, gap(getattr(report, name), expected[name]))
                checked += 1
            for level in (1, 2, 3):
                worst = max(
                    worst,
                    gap(report.recover_rate[level], expected["recover_rate"][level]),
                )
                checked += 1

    exec_logs = [random_execution_log(rng, f"x-{i:04d}") for i in range(1000)]
    exec_report = compute_execution_metrics(exec_logs)
    exec_expected = oracle_execution_metrics([log.to_dict() for log in exec_logs])
    for name, value in exec_expected.items():
        worst = max(worst, gap(getattr(exec_report, name), value))
        checked += 1

    fixture = compute_metrics(read_eval_logs(FIXTURES_DIR / "eval_logs_sample.jsonl"))
    execution = compute_execution_metrics(
        read_execution_logs(FIXTURES_DIR / "execution_logs_sample.jsonl")
    )
    hand_ok = (
        math.isclose(fixture.judgment_accuracy, 0.80)
        and math.isclose(fixture.recover_rate[3], 0.75)
        and math.isclose(fixture.avg_rounds, 2.0)
        and round(execution.unnecessary_subtask_pct, 2) == 22.22
    )
    elapsed = time.monotonic() - started
    ok = worst <= 1e-9 and hand_ok and elapsed < 30.0
    _gate(
        "metrics oracle equivalence",
        ok,
        f"1000 interaction + 1000 execution logs, {checked} values, worst gap "
        f"{worst:.2e}; fixtures 0.80/0.75/2.0/22.22%={hand_ok}; {elapsed:.2f}s",
    )


def _forced_summary_script() -> list[str]:
    menu = tuple(
        MenuItem(f"aspect {i}", (f"Choice {i}A", f"Choice {i}B")) for i in range(1, 7)
    )
    opening = serialize_segment(
        InitialJudgment(thought="Vague; six aspects are unsettled.", detail_menu=menu)
    ) + "\n" + serialize_segment(
        Inquiry(thought="Start with aspect 1.", question="Aspect 1: A or B?")
    )
    script: list = [opening]
    for i in range(2, 7):  # inquiry 6 arrives after the cap and must be swallowed
        script.append(
            serialize_segment(
                Inquiry(thought=f"Next aspect {i}.", question=f"Aspect {i}: A or B?")
            )
        )
    script.append(
        serialize_segment(
            Summary(
                thought="Cap reached, wrapping up.",
                constraints=tuple(f"aspect {i}: settled" for i in range(1, 6)),
                summary="The user settled five aspects; proceed with those.",
            )
        )
    )
    return script


def test_http_session_flow_and_forced_summary_cap():
    app = create_app(
        AppConfig(service=ServiceConfig(default_backend="demo")),
        backends={
            "demo": MockBackend(build_demo_session_script()),
            "adversarial": MockBackend(_forced_summary_script()),
        },
    )
    server = uvicorn.Server(
        uvicorn.Config(app, host="127.0.0.1", port=0, log_level="critical")
    )
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.monotonic() + 10
    while not server.started:
        assert time.monotonic() < deadline, "server failed to start"
        time.sleep(0.01)
    port = server.servers[0].sockets[0].getsockname()[1]
    base = f"http://127.0.0.1:{port}"
    try:
        with httpx.Client(timeout=5.0) as client:
            started = time.monotonic()
            opened = client.post(f"{base}/sessions", json={"task": "Plan a trip."})
            sid = opened.json()["session_id"]
            envelope = opened.json()
            while envelope["phase"] == "inquiring":
                envelope = client.post(
                    f"{base}/sessions/{sid}/reply", json={"reply": "The first option."}
                ).json()
            handoff = client.get(f"{base}/sessions/{sid}/handoff").json()
            elapsed = time.monotonic() - started

            flow_ok = (
                opened.status_code == 201
                and envelope["phase"] == "done"
                and envelope["rounds_used"] <= 5
                and envelope["constraint_count_ok"]
                and len(handoff["constraints"]) == envelope["rounds_used"]
            )

            adv = client.post(
                f"{base}/sessions", json={"task": "Do it.", "backend": "adversarial"}
            ).json()
            for _ in range(5):
                adv = client.post(
                    f"{base}/sessions/{adv['session_id']}/reply",
                    json={"reply": "Either is fine."},
                ).json()
            cap_ok = (
                adv["phase"] == "done"
                and adv["rounds_used"] == 5
                and adv["constraint_count_ok"]
            )
    finally:
        server.should_exit = True
        thread.join(timeout=5)

    ok = flow_ok and cap_ok and elapsed < 2.0
    _gate(
        "scripted session over HTTP",
        ok,
        f"create->replies->handoff in {elapsed:.3f}s, rounds="
        f"{envelope['rounds_used']}, constraints==rounds={flow_ok}; "
        f"forced summary at round {adv['rounds_used']}={cap_ok}",
    )


def test_simulator_emits_grammar_valid_records_with_tone_prompts():
    tasks = load_dataset(FIXTURES_DIR / "tasks_sample.jsonl")
    asker = MockBackend(load_script(FIXTURES_DIR / "scripts" / "sim_assistant.json"))
    user = MockBackend(load_script(FIXTURES_DIR / "scripts" / "sim_user.json"))
    report = simulate_records(tasks, ["succinct", "passionate"], asker, user)

    problems = []
    if len(report.records) != 20 or report.rejections:
        problems.append(
            f"{len(report.records)} records, {len(report.rejections)} rejections"
        )
    for record in report.records:
        if serializable_violations(record):
            problems.append(f"{record.task_id}/{record.tone} not grammar-safe")
        if serialize_record(parse_record(serialize_record(record)).record) != (
            serialize_record(record)
        ):
            problems.append(f"{record.task_id}/{record.tone} does not round-trip")
        if len(record.final.constraints) != len(record.rounds):
            problems.append(f"{record.task_id}/{record.tone} constraints != rounds")

    persona_prompts = [call[0].content for call in user.calls]
    lazy = sum("you are lazy" in p for p in persona_prompts)
    passionate = sum("you are passionate" in p for p in persona_prompts)
    if not (lazy and passionate and lazy + passionate == len(persona_prompts)):
        problems.append(
            f"tone phrases missing: lazy={lazy}, passionate={passionate}, "
            f"calls={len(persona_prompts)}"
        )
    _gate(
        "simulator record construction",
        not problems,
        "; ".join(problems)
        or f"20 grammar-valid records, tone phrases verbatim in "
        f"{len(persona_prompts)} persona prompts",
    )


def test_dedup_matches_hand_derived_kept_set():
    def cosine(a, b):
        dot = sum(x * y for x, y in zip(a, b))
        return dot / (math.hypot(*a) * math.hypot(*b))

    candidates = [
        CandidateTask("alpha", "cat", embedding=(1.0, 0.0)),
        CandidateTask("beta", "cat", embedding=(0.0, 1.0)),
        CandidateTask("gamma", "cat", embedding=(0.9, 0.436)),  # cos ~0.90 to alpha
    ]
    kept = dedup(candidates, threshold=0.8)
    kept_texts = [c.text for c in kept]
    pairwise = [
        cosine(a.embedding, b.embedding)
        for a, b in itertools.combinations(kept, 2)
    ]
    hand_ok = kept_texts == ["alpha", "beta"] and all(c < 0.8 for c in pairwise)

    twins = [
        CandidateTask("the same text", "cat", embedding=(1.0, 0.0)),
        CandidateTask("the same text", "cat", embedding=(0.0, 1.0)),
    ]
    exact_ok = [c.text for c in dedup(twins, threshold=1.0)] == ["the same text"]
    _gate(
        "embedding deduplication",
        hand_ok and exact_ok,
        f"kept={kept_texts}, max pairwise cosine="
        f"{max(pairwise):.3f}; identical text deduped at threshold 1.0={exact_ok}",
    )
