"""Task benchmark records: loading, validation, and split statistics.

On disk a split is a JSON-lines file, one task per line:

    {"id": "train-0001", "category": "Trip Planning", "description": "I would
     like to plan a trip to Paris next month.", "vague": true,
     "missing_details": [{"description": "Duration of the trip",
     "importance": 3, "inquiry": "How long are you planning to stay?",
     "options": ["3-5 days", "1 week", "More than a week"]}],
     "split": "training"}

Clear tasks carry an empty ``missing_details`` list.  The machine-readable
schema ships in ``schemas/task_record.schema.json``.
"""

from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import DatasetSchemaError

logger = logging.getLogger(__name__)

IMPORTANCE_LEVELS = (1, 2, 3)
SPLITS = ("training", "test")


@dataclass(frozen=True)
class MissingDetail:
    """One annotated gap in a vague task.

    ``importance`` is 3 for details the task cannot be executed without,
    2 for details that help but are not strictly necessary, and 1 for
    details that are too fine-grained to matter much.
    """

    description: str
    importance: int
    inquiry: str
    options: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "description": self.description,
            "importance": self.importance,
            "inquiry": self.inquiry,
            "options": list(self.options),
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "MissingDetail":
        return cls(
            description=raw["description"],
            importance=raw["importance"],
            inquiry=raw["inquiry"],
            options=tuple(raw.get("options", [])),
        )


@dataclass(frozen=True)
class TaskRecord:
    """A single benchmark task with its vagueness annotation."""

    id: str
    category: str
    description: str
    vague: bool
    missing_details: tuple[MissingDetail, ...] = ()
    split: str = "training"

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "category": self.category,
            "description": self.description,
            "vague": self.vague,
            "missing_details": [d.to_dict() for d in self.missing_details],
            "split": self.split,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "TaskRecord":
        return cls(
            id=raw["id"],
            category=raw["category"],
            description=raw["description"],
            vague=raw["vague"],
            missing_details=tuple(
                MissingDetail.from_dict(d) for d in raw.get("missing_details", [])
            ),
            split=raw.get("split", "training"),
        )


@dataclass(frozen=True)
class Violation:
    """One validation failure, tied to the field that caused it."""

    field: str
    message: str

    def __str__(self) -> str:  # pragma: no cover - debugging convenience
        return f"{self.field}: {self.message}"


# Fields every raw record must carry, with their JSON types.
_RECORD_FIELDS = {
    "id": str,
    "category": str,
    "description": str,
    "vague": bool,
    "missing_details": list,
    "split": str,
}
_DETAIL_FIELDS = {
    "description": str,
    "importance": int,
    "inquiry": str,
    "options": list,
}


def validate(record: TaskRecord) -> list[Violation]:
    """Check a record against the schema invariants.

    Returns a list of violations; an empty list means the record is valid.
    Empty option lists are legal (they merely limit what a clarifier can
    suggest) and are therefore not violations.
    """
    problems: list[Violation] = []
    if not record.id:
        problems.append(Violation("id", "must be non-empty"))
    if not record.description.strip():
        problems.append(Violation("description", "must be non-empty"))
    if record.split not in SPLITS:
        problems.append(Violation("split", f"must be one of {SPLITS}, got {record.split!r}"))
    if not record.vague and record.missing_details:
        problems.append(
            Violation("missing_details", "clear tasks must not carry missing details")
        )
    for i, detail in enumerate(record.missing_details):
        prefix = f"missing_details[{i}]"
        if detail.importance not in IMPORTANCE_LEVELS:
            problems.append(
                Violation(
                    f"{prefix}.importance",
                    f"must be one of {IMPORTANCE_LEVELS}, got {detail.importance!r}",
                )
            )
        if not detail.description.strip():
            problems.append(Violation(f"{prefix}.description", "must be non-empty"))
        if not detail.inquiry.strip():
            problems.append(Violation(f"{prefix}.inquiry", "must be non-empty"))
        if any(not isinstance(o, str) for o in detail.options):
            problems.append(Violation(f"{prefix}.options", "options must be strings"))
    return problems


def validate_dataset(records: Sequence[TaskRecord]) -> list[tuple[int, Violation]]:
    """Dataset-level validation: per-record checks plus id uniqueness.

    Duplicate ids are reported here rather than failing the load, so a
    damaged split can still be inspected.
    """
    problems: list[tuple[int, Violation]] = []
    for i, record in enumerate(records):
        problems.extend((i, v) for v in validate(record))
    seen: dict[str, int] = {}
    for i, record in enumerate(records):
        if record.id in seen:
            problems.append(
                (i, Violation("id", f"duplicate id {record.id!r} (first at record {seen[record.id]})"))
            )
        else:
            seen[record.id] = i
    return problems


def _check_types(raw: dict, index: int) -> None:
    for name, typ in _RECORD_FIELDS.items():
        if name not in raw:
            raise DatasetSchemaError(f"missing field {name!r}", index=index, field=name)
        value = raw[name]
        # bool is an int subclass; keep the checks strict.
        if typ is bool and not isinstance(value, bool):
            raise DatasetSchemaError(f"field {name!r} must be a boolean", index=index, field=name)
        if typ is not bool and (not isinstance(value, typ) or isinstance(value, bool)):
            raise DatasetSchemaError(
                f"field {name!r} must be {typ.__name__}", index=index, field=name
            )
    for j, detail in enumerate(raw["missing_details"]):
        if not isinstance(detail, dict):
            raise DatasetSchemaError(
                "missing_details entries must be objects",
                index=index,
                field=f"missing_details[{j}]",
            )
        for name, typ in _DETAIL_FIELDS.items():
            if name not in detail:
                raise DatasetSchemaError(
                    f"missing field {name!r}", index=index, field=f"missing_details[{j}].{name}"
                )
            if not isinstance(detail[name], typ) or isinstance(detail[name], bool):
                raise DatasetSchemaError(
                    f"field {name!r} must be {typ.__name__}",
                    index=index,
                    field=f"missing_details[{j}].{name}",
                )


def load_dataset(path: str | Path, split: str | None = None) -> list[TaskRecord]:
    """Load task records from a JSON-lines file, in file order.

    Args:
        path: the JSONL file to read.
        split: optional split tag; when given, only records carrying that
            tag are returned.

    Raises:
        DatasetSchemaError: on unparseable lines, missing/mistyped fields,
            or records violating the schema invariants.  The error names the
            record index (0-based line position among non-blank lines) and
            field.
    """
    path = Path(path)
    records: list[TaskRecord] = []
    index = 0
    with path.open("r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetSchemaError(
                    f"line {line_no} is not valid JSON: {exc}", index=index
                ) from exc
            if not isinstance(raw, dict):
                raise DatasetSchemaError(f"line {line_no} is not an object", index=index)
            _check_types(raw, index)
            record = TaskRecord.from_dict(raw)
            problems = validate(record)
            if problems:
                first = problems[0]
                raise DatasetSchemaError(first.message, index=index, field=first.field)
            for i, detail in enumerate(record.missing_details):
                if not detail.options:
                    logger.warning(
                        "record %s: missing_details[%d] has no options", record.id, i
                    )
            if split is None or record.split == split:
                records.append(record)
            index += 1
    return records


def save_dataset(records: Iterable[TaskRecord], path: str | Path) -> None:
    """Write records as JSON lines (UTF-8, one object per line)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        for record in records:
            f.write(json.dumps(record.to_dict(), ensure_ascii=False) + "\n")


@dataclass(frozen=True)
class SplitStats:
    """Aggregate statistics over one split.

    Averages divide by the vague-task count (details and options only exist
    on vague tasks); ``level_shares`` maps importance level to its share of
    all details, pooled across the split.
    """

    task_count: int
    vague_count: int
    clear_count: int
    category_count: int
    detail_count: int
    avg_details_per_vague_task: float
    level_shares: dict[int, float] = field(default_factory=dict)
    option_count: int = 0
    avg_options_per_vague_task: float = 0.0

    def to_dict(self) -> dict:
        return {
            "task_count": self.task_count,
            "vague_count": self.vague_count,
            "clear_count": self.clear_count,
            "category_count": self.category_count,
            "detail_count": self.detail_count,
            "avg_details_per_vague_task": self.avg_details_per_vague_task,
            "level_shares": {str(k): v for k, v in sorted(self.level_shares.items())},
            "option_count": self.option_count,
            "avg_options_per_vague_task": self.avg_options_per_vague_task,
        }

    def display_rows(self) -> list[tuple[str, str]]:
        """Rows for the stats table; averages and shares use 2 decimals."""
        return [
            ("Number of Tasks", str(self.task_count)),
            ("Number of Vague Tasks", str(self.vague_count)),
            ("Number of Clear Tasks", str(self.clear_count)),
            ("Number of Categories", str(self.category_count)),
            ("Number of Missing Details", str(self.detail_count)),
            ("Avg. Missing Details per Vague Task", f"{self.avg_details_per_vague_task:.2f}"),
            ("Share of Level 1 Details (%)", f"{100 * self.level_shares.get(1, 0.0):.2f}"),
            ("Share of Level 2 Details (%)", f"{100 * self.level_shares.get(2, 0.0):.2f}"),
            ("Share of Level 3 Details (%)", f"{100 * self.level_shares.get(3, 0.0):.2f}"),
            ("Number of Options", str(self.option_count)),
            ("Avg. Options per Vague Task", f"{self.avg_options_per_vague_task:.2f}"),
        ]


def compute_stats(records: Sequence[TaskRecord]) -> SplitStats:
    """Compute split statistics over loaded records.

    Raises:
        ValueError: for an empty record list, or the inconsistent case of
            missing details present while no task is vague.
    """
    if not records:
        raise ValueError("cannot compute statistics over an empty record list")
    vague = [r for r in records if r.vague]
    details = [d for r in vague for d in r.missing_details]
    stray = sum(len(r.missing_details) for r in records if not r.vague)
    if stray:
        raise ValueError(f"{stray} missing details attached to clear tasks")
    if details and not vague:
        raise ValueError("missing details present but no task is vague")

    level_counts = Counter(d.importance for d in details)
    detail_count = len(details)
    option_count = sum(len(d.options) for d in details)
    shares = {
        lvl: (level_counts.get(lvl, 0) / detail_count if detail_count else 0.0)
        for lvl in IMPORTANCE_LEVELS
    }
    vague_count = len(vague)
    return SplitStats(
        task_count=len(records),
        vague_count=vague_count,
        clear_count=len(records) - vague_count,
        category_count=len({r.category for r in records}),
        detail_count=detail_count,
        avg_details_per_vague_task=(detail_count / vague_count if vague_count else 0.0),
        level_shares=shares,
        option_count=option_count,
        avg_options_per_vague_task=(option_count / vague_count if vague_count else 0.0),
    )
