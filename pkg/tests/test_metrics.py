import json
import logging
import random

import jsonschema
import pytest

from clarigate.backends import MockBackend
from clarigate.dataset import MissingDetail
from clarigate.metrics import (
    EvalLog,
    ExactMatcher,
    ExecutionLog,
    Milestone,
    ModelMatcher,
    RoundLog,
    Subtask,
    compute_execution_metrics,
    compute_metrics,
    match_details,
    read_eval_logs,
    read_execution_logs,
    write_eval_logs,
    write_execution_logs,
)

from conftest import FIXTURES_DIR, SCHEMAS_DIR
from helpers import random_eval_log, random_execution_log
from oracle import close, oracle_execution_metrics, oracle_interaction_metrics

REPORT_FIELDS = (
    "task_count",
    "vague_task_count",
    "judgment_accuracy",
    "avg_rounds",
    "coverage_rate",
    "options_presenting_rate",
    "options_reasonable_rate",
    "avg_provided_options",
    "avg_inquired_details",
    "avg_details_per_round",
)


def _assert_matches_oracle(logs, average):
    report = compute_metrics(logs, average=average)
    expected = oracle_interaction_metrics([log.to_dict() for log in logs], average)
    for name in REPORT_FIELDS:
        assert close(getattr(report, name), expected[name]), (
            name,
            getattr(report, name),
            expected[name],
        )
    for level in (1, 2, 3):
        assert close(report.recover_rate[level], expected["recover_rate"][level]), level


# --- log validation ---------------------------------------------------------------


def test_round_log_validation():
    with pytest.raises(ValueError):
        RoundLog(("a", "b"), (1,))
    with pytest.raises(ValueError):
        RoundLog(("a",), (-1,))
    with pytest.raises(ValueError):
        RoundLog(("a",), (2,), reasonable_options=3)
    log = RoundLog(("a", "b"), (2, 0), reasonable_options=1)
    assert log.reasonable_options == 1


def test_eval_log_validation():
    with pytest.raises(ValueError):
        EvalLog("t", "fuzzy", "vague")
    with pytest.raises(ValueError):
        EvalLog("t", "vague", "blurred")
    with pytest.raises(ValueError):
        EvalLog("t", "vague", "vague", summarized_count=3, provided_count=2)
    with pytest.raises(ValueError, match="inquired"):
        EvalLog("t", "vague", "vague", matched={3: frozenset({"ghost"})}, truth_counts={3: 1})
    rounds = (RoundLog(("budget",), (2,)),)
    with pytest.raises(ValueError, match="exceeds"):
        EvalLog(
            "t", "vague", "vague", rounds=rounds,
            matched={3: frozenset({"budget"})}, truth_counts={3: 0},
        )
    with pytest.raises(ValueError, match="level"):
        EvalLog(
            "t", "vague", "vague", rounds=rounds,
            matched={7: frozenset({"budget"})}, truth_counts={7: 1},
        )


def test_eval_log_derived_properties():
    log = EvalLog(
        "t",
        "vague",
        "vague",
        rounds=(RoundLog(("a", "b"), (3, 0), 2), RoundLog(("c",), (1,), 1)),
    )
    assert log.judged_vague
    assert log.inquired_total == 3
    assert log.options_total == 4


def test_eval_log_dict_roundtrip():
    rng = random.Random(31)
    for _ in range(50):
        log = random_eval_log(rng, "rt")
        raw = log.to_dict()
        assert all(isinstance(k, str) for k in raw["matched"])
        assert EvalLog.from_dict(json.loads(json.dumps(raw))) == log


# --- detail matching -----------------------------------------------------------


TRUTH = (
    MissingDetail("Budget for the trip", 3, "How much?", ("Low", "High")),
    MissingDetail("Travel dates", 2, "When?", ("Spring", "Fall")),
    MissingDetail("Group size", 2, "How many people?", ("Solo", "Family")),
)


def test_exact_matcher_normalizes_case_and_spacing():
    matcher = ExactMatcher()
    assert matcher.match("  budget FOR the   trip ", TRUTH) == 0
    assert matcher.match("travel dates", TRUTH) == 1
    assert matcher.match("hotel stars", TRUTH) is None


def test_match_details_pairs_injectively():
    matched = match_details(
        ["Budget for the trip", "budget for the trip", "Travel dates"], TRUTH
    )
    # the second budget inquiry finds the annotation already consumed
    assert matched[3] == frozenset({"Budget for the trip"})
    assert matched[2] == frozenset({"Travel dates"})
    assert matched[1] == frozenset()


def test_match_details_feeds_eval_log():
    matched = match_details(["Budget for the trip"], TRUTH)
    log = EvalLog(
        "t",
        "vague",
        "vague",
        rounds=(RoundLog(("Budget for the trip",), (2,), 1),),
        matched={k: v for k, v in matched.items() if v},
        truth_counts={3: 1, 2: 2},
    )
    assert log.matched[3] == frozenset({"Budget for the trip"})


def test_model_matcher_uses_tool_answer():
    backend = MockBackend([{"match": "d3"}])
    assert ModelMatcher(backend).match("people going", TRUTH) == 2
    prompt = backend.calls[0][1].content
    assert "d1: Budget for the trip" in prompt
    assert "people going" in prompt


def test_model_matcher_none_answer():
    backend = MockBackend([{"match": "none"}])
    assert ModelMatcher(backend).match("hotel stars", TRUTH) is None


def test_model_matcher_empty_candidates_short_circuits():
    backend = MockBackend([])
    assert ModelMatcher(backend).match("anything", []) is None
    assert backend.calls == []


def test_model_matcher_failure_is_no_match(caplog):
    backend = MockBackend([{"match": "zzz"}, {"match": "zzz"}])
    with caplog.at_level(logging.WARNING, logger="clarigate.metrics"):
        assert ModelMatcher(backend).match("budget", TRUTH) is None
    assert any("match query failed" in r.message for r in caplog.records)


# --- interaction metrics: hand-computed cases -------------------------------------


def test_metrics_single_log_hand_values():
    log = EvalLog(
        task_id="hand",
        judgment="vague",
        judgment_truth="vague",
        rounds=(
            RoundLog(("budget", "dates"), (3, 0), 2),
            RoundLog(("place",), (1,), 1),
        ),
        summarized_count=2,
        provided_count=3,
        matched={3: frozenset({"budget"})},
        truth_counts={3: 2, 2: 1},
    )
    report = compute_metrics([log])
    assert report.judgment_accuracy == 1.0
    assert report.avg_rounds == 2.0
    assert report.recover_rate[3] == 0.5
    assert report.recover_rate[2] == 0.0
    assert report.recover_rate[1] is None  # no level-1 annotations at all
    assert close(report.coverage_rate, 2 / 3)
    assert close(report.options_presenting_rate, 2 / 3)
    assert report.options_reasonable_rate == 0.75
    assert close(report.avg_provided_options, 4 / 3)
    assert report.avg_inquired_details == 3.0
    assert report.avg_details_per_round == 1.5
    assert any("recover_rate[1]" in w for w in report.warnings)


def test_macro_and_micro_disagree_by_construction():
    logs = [
        EvalLog(
            "a", "vague", "vague",
            rounds=(RoundLog(("x",), (1,), 1),),
        ),
        EvalLog(
            "b", "vague", "vague",
            rounds=(RoundLog(("y",), (4,), 1),),
        ),
    ]
    macro = compute_metrics(logs, average="macro")
    micro = compute_metrics(logs, average="micro")
    assert macro.options_reasonable_rate == (1 / 1 + 1 / 4) / 2  # 0.625
    assert micro.options_reasonable_rate == 2 / 5  # 0.4
    assert macro.average == "macro"
    assert micro.average == "micro"


def test_judgment_metrics_cover_all_logs_not_just_vague():
    logs = [
        EvalLog("v", "vague", "vague", rounds=(RoundLog(("x",), (1,)),)),
        EvalLog("c", "clear", "vague"),
    ]
    report = compute_metrics(logs)
    assert report.task_count == 2
    assert report.vague_task_count == 1
    assert report.judgment_accuracy == 0.5
    assert report.avg_rounds == 0.5


def test_zero_denominator_task_is_excluded_with_warning():
    logs = [
        EvalLog("ok", "vague", "vague", rounds=(RoundLog(("x",), (2,), 1),)),
        EvalLog("empty", "vague", "clear"),  # judged vague, zero rounds
    ]
    report = compute_metrics(logs)
    assert report.avg_details_per_round == 1.0  # only task "ok" qualifies
    assert any("empty" in w and "avg_details_per_round" in w for w in report.warnings)


def test_no_vague_logs_yields_none_metrics():
    logs = [EvalLog("a", "clear", "clear"), EvalLog("b", "clear", "vague")]
    report = compute_metrics(logs)
    assert report.vague_task_count == 0
    assert report.judgment_accuracy == 0.5
    assert report.coverage_rate is None
    assert report.recover_rate == {1: None, 2: None, 3: None}
    assert any("no task was judged vague" in w for w in report.warnings)


def test_compute_metrics_input_validation():
    with pytest.raises(ValueError):
        compute_metrics([])
    with pytest.raises(ValueError):
        compute_metrics([EvalLog("a", "clear", "clear")], average="harmonic")


# --- interaction metrics: oracle equivalence ---------------------------------------


@pytest.mark.parametrize("average", ["macro", "micro"])
@pytest.mark.parametrize("seed", [1, 2, 3])
def test_metrics_match_oracle_on_random_logs(average, seed):
    rng = random.Random(seed * 1000)
    logs = [random_eval_log(rng, f"task-{i}") for i in range(150)]
    _assert_matches_oracle(logs, average)


def test_metrics_match_oracle_on_bundled_fixture():
    logs = read_eval_logs(FIXTURES_DIR / "eval_logs_sample.jsonl")
    assert len(logs) == 10
    _assert_matches_oracle(logs, "macro")
    _assert_matches_oracle(logs, "micro")


def test_report_to_dict_uses_string_levels():
    logs = [EvalLog("a", "vague", "vague", rounds=(RoundLog(("x",), (1,)),))]
    raw = compute_metrics(logs).to_dict()
    assert set(raw["recover_rate"]) == {"1", "2", "3"}
    jsonschema.validate(raw, json.loads((SCHEMAS_DIR / "eval_report.schema.json").read_text()))


# --- execution metrics --------------------------------------------------------------


def test_execution_metrics_hand_values():
    logs = [
        ExecutionLog(
            "e1",
            subtasks=(
                Subtask(True, False, 3, (Milestone(False, False, 1), Milestone(True, True, 2))),
                Subtask(False, True, 0),
            ),
        ),
        ExecutionLog("e2", subtasks=(Subtask(False, False, 3),)),
    ]
    report = compute_execution_metrics(logs)
    assert report.subtask_count == 3
    assert report.milestone_count == 2
    assert close(report.unnecessary_subtask_pct, 100 / 3)
    assert close(report.general_subtask_pct, 100 / 3)
    assert report.tool_invocations_per_subtask == 2.0
    assert report.unnecessary_milestone_pct == 50.0
    assert report.general_milestone_pct == 50.0
    assert report.tool_invocations_per_milestone == 1.5
    assert report.warnings == ()


def test_execution_metrics_match_oracle_on_random_logs():
    rng = random.Random(777)
    logs = [random_execution_log(rng, f"x-{i}") for i in range(60)]
    report = compute_execution_metrics(logs)
    expected = oracle_execution_metrics([log.to_dict() for log in logs])
    for name, value in expected.items():
        assert close(getattr(report, name), value), name


def test_execution_metrics_without_milestones():
    logs = [ExecutionLog("e", subtasks=(Subtask(False, False, 2),))]
    report = compute_execution_metrics(logs)
    assert report.milestone_count == 0
    assert report.unnecessary_milestone_pct is None
    assert report.general_milestone_pct is None
    assert report.tool_invocations_per_milestone is None
    assert any("no milestones" in w for w in report.warnings)


def test_execution_metrics_without_subtasks_is_an_error():
    with pytest.raises(ValueError, match="no subtasks"):
        compute_execution_metrics([ExecutionLog("e")])


def test_milestone_and_subtask_validation():
    with pytest.raises(ValueError):
        Milestone(False, False, -1)
    with pytest.raises(ValueError):
        Subtask(False, False, -2)


# --- log files ------------------------------------------------------------------


def test_eval_log_file_roundtrip(tmp_path):
    rng = random.Random(88)
    logs = [random_eval_log(rng, f"f-{i}") for i in range(25)]
    path = tmp_path / "logs.jsonl"
    write_eval_logs(logs, path)
    assert read_eval_logs(path) == logs


def test_execution_log_file_roundtrip(tmp_path):
    rng = random.Random(89)
    logs = [random_execution_log(rng, f"f-{i}") for i in range(25)]
    path = tmp_path / "exec.jsonl"
    write_execution_logs(logs, path)
    assert read_execution_logs(path) == logs


def test_bundled_fixture_logs_validate_against_schemas():
    eval_schema = json.loads((SCHEMAS_DIR / "eval_log.schema.json").read_text())
    for log in read_eval_logs(FIXTURES_DIR / "eval_logs_sample.jsonl"):
        jsonschema.validate(log.to_dict(), eval_schema)
    exec_schema = json.loads((SCHEMAS_DIR / "execution_log.schema.json").read_text())
    for log in read_execution_logs(FIXTURES_DIR / "execution_logs_sample.jsonl"):
        jsonschema.validate(log.to_dict(), exec_schema)
