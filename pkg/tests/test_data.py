import json
import random

import pytest
from jsonschema import Draft7Validator

from clarigate.dataset import (
    MissingDetail,
    TaskRecord,
    compute_stats,
    load_dataset,
    save_dataset,
    validate,
    validate_dataset,
)
from clarigate.errors import DatasetSchemaError

from conftest import DATA_DIR, SCHEMAS_DIR
from oracle import close, oracle_split_stats


def make_record(i=0, vague=True, n_details=2, importance=2):
    details = tuple(
        MissingDetail(
            description=f"missing thing {j}",
            importance=importance,
            inquiry=f"What about thing {j}?",
            options=(f"Option A{j}", f"Option B{j}"),
        )
        for j in range(n_details if vague else 0)
    )
    return TaskRecord(
        id=f"t-{i:03d}",
        category="Weekend Cooking",
        description="Help me cook something nice.",
        vague=vague,
        missing_details=details,
        split="training",
    )


def test_roundtrip_save_load(tmp_path):
    records = [make_record(i, vague=i % 3 != 0) for i in range(9)]
    path = tmp_path / "split.jsonl"
    save_dataset(records, path)
    loaded = load_dataset(path)
    assert loaded == records


def test_load_rejects_wrong_types(tmp_jsonl):
    raw = make_record().to_dict()
    raw["vague"] = "yes"  # string instead of bool
    path = tmp_jsonl("bad.jsonl", [raw])
    with pytest.raises(DatasetSchemaError) as err:
        load_dataset(path)
    assert err.value.field == "vague"
    assert err.value.index == 0


def test_load_rejects_importance_out_of_range(tmp_jsonl):
    raw = make_record().to_dict()
    raw["missing_details"][0]["importance"] = 5
    with pytest.raises(DatasetSchemaError):
        load_dataset(tmp_jsonl("bad.jsonl", [raw]))


def test_clear_task_with_details_is_invalid():
    record = TaskRecord(
        id="x",
        category="c",
        description="d",
        vague=False,
        missing_details=(MissingDetail("a", 2, "b?", ("O",)),),
    )
    problems = validate(record)
    assert any("clear" in v.message for v in problems)


def test_duplicate_ids_flagged_by_validate_dataset():
    records = [make_record(1), make_record(1)]
    flagged = validate_dataset(records)
    assert any(v.field == "id" for _, v in flagged)


def test_empty_options_warns_but_loads(tmp_jsonl, caplog):
    raw = make_record().to_dict()
    raw["missing_details"][0]["options"] = []
    with caplog.at_level("WARNING"):
        records = load_dataset(tmp_jsonl("warn.jsonl", [raw]))
    assert records[0].missing_details[0].options == ()
    assert any("options" in m for m in caplog.messages)


def test_split_filter(tmp_path):
    records = [make_record(i) for i in range(3)]
    records.append(
        TaskRecord(id="te-0", category="c", description="d.", vague=False, split="test")
    )
    path = tmp_path / "mixed.jsonl"
    save_dataset(records, path)
    assert len(load_dataset(path, split="test")) == 1
    assert len(load_dataset(path, split="training")) == 3


def test_compute_stats_against_oracle():
    rng = random.Random(4021)
    records = []
    for i in range(300):
        vague = rng.random() < 0.8
        records.append(
            TaskRecord(
                id=f"r-{i}",
                category=f"Cat {rng.randint(0, 19)}",
                description="Do the thing.",
                vague=vague,
                missing_details=tuple(
                    MissingDetail(
                        description=f"d{i}-{j}",
                        importance=rng.randint(1, 3),
                        inquiry="What?",
                        options=tuple("O" + str(k) for k in range(rng.randint(0, 4))),
                    )
                    for j in range(rng.randint(1, 5))
                )
                if vague
                else (),
            )
        )
    stats = compute_stats(records)
    expected = oracle_split_stats([r.to_dict() for r in records])
    assert stats.task_count == expected["task_count"]
    assert stats.vague_count == expected["vague_count"]
    assert stats.clear_count == expected["clear_count"]
    assert stats.category_count == expected["category_count"]
    assert stats.detail_count == expected["detail_count"]
    assert stats.option_count == expected["option_count"]
    assert close(stats.avg_details_per_vague_task, expected["avg_details_per_vague_task"])
    assert close(stats.avg_options_per_vague_task, expected["avg_options_per_vague_task"])
    for lvl in (1, 2, 3):
        assert close(stats.level_shares[lvl], expected["level_shares"][lvl])


def test_compute_stats_rejects_empty_and_inconsistent():
    with pytest.raises(ValueError):
        compute_stats([])
    bad = TaskRecord(
        id="x",
        category="c",
        description="d",
        vague=False,
        missing_details=(MissingDetail("a", 2, "b?", ("O",)),),
    )
    with pytest.raises(ValueError):
        compute_stats([bad])


def test_display_rows_use_two_decimals():
    records = [make_record(0, vague=True, n_details=3), make_record(1, vague=False)]
    rows = dict(compute_stats(records).display_rows())
    assert rows["Avg. Missing Details per Vague Task"] == "3.00"
    assert rows["Share of Level 2 Details (%)"] == "100.00"


def test_bundled_splits_validate_against_schema():
    schema = json.loads((SCHEMAS_DIR / "task_record.schema.json").read_text())
    validator = Draft7Validator(schema)
    for name in ("synthetic_train.jsonl", "synthetic_test.jsonl"):
        lines = (DATA_DIR / name).read_text(encoding="utf-8").splitlines()
        # Spot-check a deterministic sample; full validation happens via load.
        for line in lines[::97]:
            errors = list(validator.iter_errors(json.loads(line)))
            assert errors == []
        records = load_dataset(DATA_DIR / name)
        assert not validate_dataset(records)
