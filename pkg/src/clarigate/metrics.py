"""Interaction and execution metrics for clarification evaluation.

Interaction metrics are computed from per-task :class:`EvalLog` entries that
combine automatic fields (judgment, rounds, option counts) with human
annotation (which options were reasonable, how many intentions the user
offered and how many the summary kept).  All rate-style metrics are
macro-averaged: the ratio is formed per task, then averaged over tasks —
over all tasks for judgment accuracy and average rounds, over the tasks the
model judged vague for everything else.  A micro-averaged variant (pool
numerators and denominators across tasks first) is available behind a flag.

Per-task ratios whose denominator is zero are excluded from the macro mean
with a warning; if no task qualifies for a metric at all, its field is None.

Execution metrics summarize downstream executor traces: the share of
subtasks/milestones flagged unnecessary or overly general, pooled across
all logs, and the mean tool invocations per subtask and per milestone.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Protocol, Sequence

from .backends import ChatBackend, ChatMessage, ToolSchema
from .dataset import IMPORTANCE_LEVELS, MissingDetail
from .errors import StructuredOutputError

logger = logging.getLogger(__name__)

JUDGMENTS = ("vague", "clear")


@dataclass(frozen=True)
class RoundLog:
    """What the model asked in one round, with its annotation.

    ``inquired_details`` are the detail descriptions the round's question
    addressed; ``options_per_detail`` is aligned with it (0 means the detail
    was asked about without offering options); ``reasonable_options`` is the
    annotated count of presented options deemed reasonable.
    """

    inquired_details: tuple[str, ...]
    options_per_detail: tuple[int, ...]
    reasonable_options: int = 0

    def __post_init__(self):
        if len(self.inquired_details) != len(self.options_per_detail):
            raise ValueError("options_per_detail must align with inquired_details")
        if any(n < 0 for n in self.options_per_detail) or self.reasonable_options < 0:
            raise ValueError("counts must be non-negative")
        if self.reasonable_options > sum(self.options_per_detail):
            raise ValueError("reasonable_options cannot exceed options presented")

    def to_dict(self) -> dict:
        return {
            "inquired_details": list(self.inquired_details),
            "options_per_detail": list(self.options_per_detail),
            "reasonable_options": self.reasonable_options,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "RoundLog":
        return cls(
            inquired_details=tuple(raw["inquired_details"]),
            options_per_detail=tuple(raw["options_per_detail"]),
            reasonable_options=raw.get("reasonable_options", 0),
        )


@dataclass(frozen=True)
class EvalLog:
    """One task's complete evaluation trace.

    ``matched`` maps importance level to the set of inquired-detail ids that
    were paired with a ground-truth detail of that level (see
    :func:`match_details`); ``truth_counts`` is the per-level size of the
    task's annotated detail set.  ``provided_count``/``summarized_count``
    are the user-annotated totals of intentions offered during chat and
    intentions surviving into the summary.
    """

    task_id: str
    judgment: str
    judgment_truth: str
    rounds: tuple[RoundLog, ...] = ()
    summarized_count: int = 0
    provided_count: int = 0
    matched: dict[int, frozenset[str]] = field(default_factory=dict)
    truth_counts: dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.judgment not in JUDGMENTS or self.judgment_truth not in JUDGMENTS:
            raise ValueError(f"judgments must be one of {JUDGMENTS}")
        if self.summarized_count > self.provided_count:
            raise ValueError("summarized_count cannot exceed provided_count")
        if min(self.summarized_count, self.provided_count, 0) < 0:
            raise ValueError("counts must be non-negative")
        inquired = {d for r in self.rounds for d in r.inquired_details}
        for level, ids in self.matched.items():
            if level not in IMPORTANCE_LEVELS:
                raise ValueError(f"matched level {level!r} out of range")
            if not ids <= inquired:
                raise ValueError("matched ids must be inquired details")
            if len(ids) > self.truth_counts.get(level, 0):
                raise ValueError("matched count exceeds ground-truth count")

    @property
    def judged_vague(self) -> bool:
        return self.judgment == "vague"

    @property
    def inquired_total(self) -> int:
        return sum(len(r.inquired_details) for r in self.rounds)

    @property
    def options_total(self) -> int:
        return sum(sum(r.options_per_detail) for r in self.rounds)

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "judgment": self.judgment,
            "judgment_truth": self.judgment_truth,
            "rounds": [r.to_dict() for r in self.rounds],
            "summarized_count": self.summarized_count,
            "provided_count": self.provided_count,
            "matched": {str(k): sorted(v) for k, v in sorted(self.matched.items())},
            "truth_counts": {str(k): v for k, v in sorted(self.truth_counts.items())},
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "EvalLog":
        return cls(
            task_id=raw["task_id"],
            judgment=raw["judgment"],
            judgment_truth=raw["judgment_truth"],
            rounds=tuple(RoundLog.from_dict(r) for r in raw.get("rounds", [])),
            summarized_count=raw.get("summarized_count", 0),
            provided_count=raw.get("provided_count", 0),
            matched={int(k): frozenset(v) for k, v in raw.get("matched", {}).items()},
            truth_counts={int(k): v for k, v in raw.get("truth_counts", {}).items()},
        )


# --- detail matching -------------------------------------------------------


class DetailMatcher(Protocol):
    def match(self, inquired: str, candidates: Sequence[MissingDetail]) -> int | None:
        """Index of the candidate the inquired detail pairs with, or None."""


def _normalize(text: str) -> str:
    return " ".join(text.casefold().split())


class ExactMatcher:
    """Pairs details by normalized text equality (casefold, squeezed spaces)."""

    def match(self, inquired: str, candidates: Sequence[MissingDetail]) -> int | None:
        wanted = _normalize(inquired)
        for i, candidate in enumerate(candidates):
            if _normalize(candidate.description) == wanted:
                return i
        return None


class ModelMatcher:
    """Asks a backend which annotated detail an inquiry addressed.

    One structured query per inquired detail; an answer outside the offered
    candidate ids (or a failed tool call) is logged and treated as no-match.
    """

    def __init__(self, backend: ChatBackend):
        self.backend = backend

    def match(self, inquired: str, candidates: Sequence[MissingDetail]) -> int | None:
        if not candidates:
            return None
        ids = [f"d{i + 1}" for i in range(len(candidates))]
        listing = "\n".join(
            f"{id_}: {c.description}" for id_, c in zip(ids, candidates)
        )
        tool = ToolSchema(
            name="pick_match",
            description="Pick which annotated missing detail the inquiry is asking about.",
            parameters={
                "type": "object",
                "properties": {
                    "match": {
                        "type": "string",
                        "enum": ids + ["none"],
                        "description": "The id of the matching detail, or 'none'.",
                    }
                },
                "required": ["match"],
            },
        )
        messages = [
            ChatMessage(
                role="system",
                content=(
                    "You decide which of the annotated missing details an inquiry was "
                    "about. Answer through the tool; use 'none' when nothing fits."
                ),
            ),
            ChatMessage(
                role="user",
                content=f"Inquired detail: {inquired}\nAnnotated details:\n{listing}",
            ),
        ]
        try:
            answer = self.backend.complete_structured(messages, tool)["match"]
        except StructuredOutputError as exc:
            logger.warning("match query failed for %r: %s", inquired, exc)
            return None
        return None if answer == "none" else ids.index(answer)


def match_details(
    inquired: Sequence[str],
    ground_truth: Sequence[MissingDetail],
    matcher: DetailMatcher | None = None,
) -> dict[int, frozenset[str]]:
    """Pair inquired details with ground-truth details, injectively.

    Each ground-truth detail can absorb at most one inquired detail: once
    paired it leaves the candidate pool, so a second inquiry about the same
    annotation finds no match.  Returns per-importance-level sets of the
    inquired-detail ids that found a pair.
    """
    matcher = matcher or ExactMatcher()
    remaining = list(ground_truth)
    matched: dict[int, set[str]] = {lvl: set() for lvl in IMPORTANCE_LEVELS}
    for text in inquired:
        idx = matcher.match(text, remaining)
        if idx is None:
            continue
        if not 0 <= idx < len(remaining):
            logger.warning("matcher returned out-of-range index %r for %r", idx, text)
            continue
        detail = remaining.pop(idx)
        matched[detail.importance].add(text)
    return {lvl: frozenset(ids) for lvl, ids in matched.items()}


# --- interaction metrics ------------------------------------------------------


@dataclass(frozen=True)
class MetricReport:
    """Macro- (or micro-) averaged interaction metrics.

    Fields that only exist for model-judged-vague tasks are None when no
    task qualified; ``warnings`` lists every exclusion that occurred.
    """

    task_count: int
    vague_task_count: int
    judgment_accuracy: float
    avg_rounds: float
    recover_rate: dict[int, float | None]
    coverage_rate: float | None
    options_presenting_rate: float | None
    options_reasonable_rate: float | None
    avg_provided_options: float | None
    avg_inquired_details: float | None
    avg_details_per_round: float | None
    average: str = "macro"
    warnings: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "task_count": self.task_count,
            "vague_task_count": self.vague_task_count,
            "judgment_accuracy": self.judgment_accuracy,
            "avg_rounds": self.avg_rounds,
            "recover_rate": {str(k): v for k, v in sorted(self.recover_rate.items())},
            "coverage_rate": self.coverage_rate,
            "options_presenting_rate": self.options_presenting_rate,
            "options_reasonable_rate": self.options_reasonable_rate,
            "avg_provided_options": self.avg_provided_options,
            "avg_inquired_details": self.avg_inquired_details,
            "avg_details_per_round": self.avg_details_per_round,
            "average": self.average,
            "warnings": list(self.warnings),
        }


def _ratio_mean(
    pairs: list[tuple[float, float]],
    metric: str,
    task_ids: list[str],
    warnings: list[str],
    average: str,
) -> float | None:
    """Mean of per-task ratios (macro) or ratio of pooled sums (micro)."""
    if average == "micro":
        denom = sum(d for _, d in pairs)
        if denom == 0:
            warnings.append(f"{metric}: no task has a non-zero denominator")
            return None
        return sum(n for n, _ in pairs) / denom
    ratios = []
    for (num, denom), task_id in zip(pairs, task_ids):
        if denom == 0:
            warnings.append(f"{metric}: task {task_id} excluded (zero denominator)")
            continue
        ratios.append(num / denom)
    if not ratios:
        warnings.append(f"{metric}: no task has a non-zero denominator")
        return None
    return sum(ratios) / len(ratios)


def compute_metrics(logs: Sequence[EvalLog], average: str = "macro") -> MetricReport:
    """Compute the interaction metric suite over evaluation logs."""
    if not logs:
        raise ValueError("cannot compute metrics over an empty log list")
    if average not in ("macro", "micro"):
        raise ValueError("average must be 'macro' or 'micro'")

    warnings: list[str] = []
    vague = [log for log in logs if log.judged_vague]
    vague_ids = [log.task_id for log in vague]

    judgment_accuracy = sum(
        1 for log in logs if log.judgment == log.judgment_truth
    ) / len(logs)
    avg_rounds = sum(len(log.rounds) for log in logs) / len(logs)

    if not vague:
        warnings.append("no task was judged vague; inquiry metrics are undefined")
        return MetricReport(
            task_count=len(logs),
            vague_task_count=0,
            judgment_accuracy=judgment_accuracy,
            avg_rounds=avg_rounds,
            recover_rate={lvl: None for lvl in IMPORTANCE_LEVELS},
            coverage_rate=None,
            options_presenting_rate=None,
            options_reasonable_rate=None,
            avg_provided_options=None,
            avg_inquired_details=None,
            avg_details_per_round=None,
            average=average,
            warnings=tuple(warnings),
        )

    recover_rate = {}
    for lvl in IMPORTANCE_LEVELS:
        pairs = [
            (len(log.matched.get(lvl, frozenset())), log.truth_counts.get(lvl, 0))
            for log in vague
        ]
        recover_rate[lvl] = _ratio_mean(
            pairs, f"recover_rate[{lvl}]", vague_ids, warnings, average
        )

    coverage = _ratio_mean(
        [(log.summarized_count, log.provided_count) for log in vague],
        "coverage_rate",
        vague_ids,
        warnings,
        average,
    )
    presenting = _ratio_mean(
        [
            (
                sum(1 for r in log.rounds for n in r.options_per_detail if n > 0),
                log.inquired_total,
            )
            for log in vague
        ],
        "options_presenting_rate",
        vague_ids,
        warnings,
        average,
    )
    reasonable = _ratio_mean(
        [
            (sum(r.reasonable_options for r in log.rounds), log.options_total)
            for log in vague
        ],
        "options_reasonable_rate",
        vague_ids,
        warnings,
        average,
    )
    provided_options = _ratio_mean(
        [(log.options_total, log.inquired_total) for log in vague],
        "avg_provided_options",
        vague_ids,
        warnings,
        average,
    )
    details_per_round = _ratio_mean(
        [(log.inquired_total, len(log.rounds)) for log in vague],
        "avg_details_per_round",
        vague_ids,
        warnings,
        average,
    )
    avg_inquired = sum(log.inquired_total for log in vague) / len(vague)

    return MetricReport(
        task_count=len(logs),
        vague_task_count=len(vague),
        judgment_accuracy=judgment_accuracy,
        avg_rounds=avg_rounds,
        recover_rate=recover_rate,
        coverage_rate=coverage,
        options_presenting_rate=presenting,
        options_reasonable_rate=reasonable,
        avg_provided_options=provided_options,
        avg_inquired_details=avg_inquired,
        avg_details_per_round=details_per_round,
        average=average,
        warnings=tuple(warnings),
    )


# --- execution metrics ---------------------------------------------------------


@dataclass(frozen=True)
class Milestone:
    unnecessary: bool
    general: bool
    tool_invocations: int

    def __post_init__(self):
        if self.tool_invocations < 0:
            raise ValueError("tool_invocations must be non-negative")

    def to_dict(self) -> dict:
        return {
            "unnecessary": self.unnecessary,
            "general": self.general,
            "tool_invocations": self.tool_invocations,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "Milestone":
        return cls(
            unnecessary=raw["unnecessary"],
            general=raw["general"],
            tool_invocations=raw["tool_invocations"],
        )


@dataclass(frozen=True)
class Subtask:
    unnecessary: bool
    general: bool
    tool_invocations: int
    milestones: tuple[Milestone, ...] = ()

    def __post_init__(self):
        if self.tool_invocations < 0:
            raise ValueError("tool_invocations must be non-negative")

    def to_dict(self) -> dict:
        return {
            "unnecessary": self.unnecessary,
            "general": self.general,
            "tool_invocations": self.tool_invocations,
            "milestones": [m.to_dict() for m in self.milestones],
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "Subtask":
        return cls(
            unnecessary=raw["unnecessary"],
            general=raw["general"],
            tool_invocations=raw["tool_invocations"],
            milestones=tuple(Milestone.from_dict(m) for m in raw.get("milestones", [])),
        )


@dataclass(frozen=True)
class ExecutionLog:
    """One executor trace: the planned subtasks with their milestones."""

    task_id: str
    subtasks: tuple[Subtask, ...] = ()

    def to_dict(self) -> dict:
        return {"task_id": self.task_id, "subtasks": [s.to_dict() for s in self.subtasks]}

    @classmethod
    def from_dict(cls, raw: dict) -> "ExecutionLog":
        return cls(
            task_id=raw["task_id"],
            subtasks=tuple(Subtask.from_dict(s) for s in raw.get("subtasks", [])),
        )


@dataclass(frozen=True)
class ExecutionReport:
    """Pooled execution quality: percentages over all subtasks/milestones."""

    subtask_count: int
    milestone_count: int
    unnecessary_subtask_pct: float
    general_subtask_pct: float
    tool_invocations_per_subtask: float
    unnecessary_milestone_pct: float | None
    general_milestone_pct: float | None
    tool_invocations_per_milestone: float | None
    warnings: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "subtask_count": self.subtask_count,
            "milestone_count": self.milestone_count,
            "unnecessary_subtask_pct": self.unnecessary_subtask_pct,
            "general_subtask_pct": self.general_subtask_pct,
            "tool_invocations_per_subtask": self.tool_invocations_per_subtask,
            "unnecessary_milestone_pct": self.unnecessary_milestone_pct,
            "general_milestone_pct": self.general_milestone_pct,
            "tool_invocations_per_milestone": self.tool_invocations_per_milestone,
            "warnings": list(self.warnings),
        }


def compute_execution_metrics(logs: Sequence[ExecutionLog]) -> ExecutionReport:
    """Pool subtasks and milestones across logs and summarize them."""
    subtasks = [s for log in logs for s in log.subtasks]
    if not subtasks:
        raise ValueError("no subtasks present in execution logs")
    milestones = [m for s in subtasks for m in s.milestones]
    warnings: list[str] = []
    if milestones:
        unnecessary_ms = 100 * sum(m.unnecessary for m in milestones) / len(milestones)
        general_ms = 100 * sum(m.general for m in milestones) / len(milestones)
        tools_ms = sum(m.tool_invocations for m in milestones) / len(milestones)
    else:
        warnings.append("no milestones present; milestone metrics are undefined")
        unnecessary_ms = general_ms = tools_ms = None
    return ExecutionReport(
        subtask_count=len(subtasks),
        milestone_count=len(milestones),
        unnecessary_subtask_pct=100 * sum(s.unnecessary for s in subtasks) / len(subtasks),
        general_subtask_pct=100 * sum(s.general for s in subtasks) / len(subtasks),
        tool_invocations_per_subtask=sum(s.tool_invocations for s in subtasks)
        / len(subtasks),
        unnecessary_milestone_pct=unnecessary_ms,
        general_milestone_pct=general_ms,
        tool_invocations_per_milestone=tools_ms,
        warnings=tuple(warnings),
    )


# --- log files ------------------------------------------------------------------


def read_eval_logs(path: str | Path) -> list[EvalLog]:
    return [
        EvalLog.from_dict(json.loads(line))
        for line in Path(path).read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]


def write_eval_logs(logs: Iterable[EvalLog], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        for log in logs:
            f.write(json.dumps(log.to_dict(), ensure_ascii=False) + "\n")


def read_execution_logs(path: str | Path) -> list[ExecutionLog]:
    return [
        ExecutionLog.from_dict(json.loads(line))
        for line in Path(path).read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]


def write_execution_logs(logs: Iterable[ExecutionLog], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        for log in logs:
            f.write(json.dumps(log.to_dict(), ensure_ascii=False) + "\n")
