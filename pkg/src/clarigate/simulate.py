"""Scripted-persona conversation construction for annotated tasks.

Given an annotated task, one backend plays the asker (seeded with the
annotation as a reference list) and another plays the user in a chosen tone.
The exchange is assembled into a :class:`ConversationRecord` whose summary is
produced through a structured tool call; records whose constraint list does
not line up with the number of chat rounds are retried once and then
rejected.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .backends import ChatBackend, ChatMessage, ToolSchema
from .dataset import MissingDetail, TaskRecord
from .errors import GrammarError, RecordRejectedError
from .grammar import (
    ConversationRecord,
    Inquiry,
    Summary,
    derive_inquiry_options,
    parse_moves,
    render_initial_thought,
    serialize_record,
)
from .prompts import (
    ANNOTATION_SYSTEM_PROMPT,
    ASSISTANT_INQUIRY_PROMPT,
    COMPLETE_SUMMARY_TOOL,
    JUDGE_VAGUENESS_TOOL,
    PASSIONATE_USER_PROMPT,
    SUCCINCT_USER_PROMPT,
    SUMMARY_SYSTEM_PROMPT,
)

logger = logging.getLogger(__name__)

TONE_SUCCINCT = "succinct"
TONE_PASSIONATE = "passionate"
TONES = (TONE_SUCCINCT, TONE_PASSIONATE)


@dataclass(frozen=True)
class UserToneProfile:
    """A simulated user persona: tone tag plus its system prompt template."""

    tone: str
    template: str

    def render(self, category: str, task: str) -> str:
        return self.template.replace("<category>", category).replace("<task>", task)


TONE_PROFILES = {
    TONE_SUCCINCT: UserToneProfile(TONE_SUCCINCT, SUCCINCT_USER_PROMPT),
    TONE_PASSIONATE: UserToneProfile(TONE_PASSIONATE, PASSIONATE_USER_PROMPT),
}


def _profile(tone: str) -> UserToneProfile:
    try:
        return TONE_PROFILES[tone]
    except KeyError:
        raise ValueError(f"unknown tone {tone!r}, expected one of {TONES}") from None


def simulate_user(
    task: TaskRecord,
    transcript: Sequence[ChatMessage],
    tone: str,
    backend: ChatBackend,
) -> str:
    """Produce the simulated user's next reply.

    ``transcript`` is the dialogue from the asker's point of view (assistant
    messages are inquiries, user messages are earlier replies) and must end
    with the inquiry awaiting an answer.  Roles are flipped before prompting
    so the persona model answers as the "user".
    """
    if not transcript or transcript[-1].role != "assistant":
        raise ValueError("transcript must end with an assistant inquiry")
    profile = _profile(tone)
    messages = [
        ChatMessage(role="system", content=profile.render(task.category, task.description))
    ]
    for message in transcript:
        if message.role == "assistant":
            messages.append(ChatMessage(role="user", content=message.content))
        elif message.role == "user":
            messages.append(ChatMessage(role="assistant", content=message.content))
    return backend.complete(messages).content.strip()


def _reference_list(details: Sequence[MissingDetail]) -> str:
    lines = []
    for d in details:
        line = f"- {d.description} (importance {d.importance}). Inquiry: {d.inquiry}"
        if d.options:
            line += f" Options: {', '.join(d.options)}"
        lines.append(line)
    return "\n".join(lines)


def _parse_inquiry(text: str) -> Inquiry | None:
    """An inquiry turn keeps the loop going; anything else is a stop signal."""
    try:
        moves = parse_moves(text)
    except GrammarError:
        return None
    if len(moves) == 1 and isinstance(moves[0], Inquiry):
        return moves[0]
    return None


def _summary_arguments(
    backend: ChatBackend,
    task: TaskRecord,
    exchange: Sequence[tuple[str, str]],
    rounds: int,
) -> dict:
    tool = ToolSchema.from_dict(COMPLETE_SUMMARY_TOOL)
    messages = [
        ChatMessage(
            role="system",
            content=SUMMARY_SYSTEM_PROMPT.replace("<task>", task.description),
        )
    ]
    for question, reply in exchange:
        messages.append(ChatMessage(role="assistant", content=question))
        messages.append(ChatMessage(role="user", content=reply))

    args = backend.complete_structured(messages, tool)
    if len(args["constraints"]) == rounds:
        return args
    logger.info(
        "summary listed %d constraints for %d rounds, retrying once",
        len(args["constraints"]),
        rounds,
    )
    messages.append(
        ChatMessage(
            role="user",
            content=(
                f"The constraints list must contain exactly {rounds} items, one per "
                "round of chatting. Call the tool again with a corrected list."
            ),
        )
    )
    return backend.complete_structured(messages, tool)


def construct_record(
    task: TaskRecord,
    tone: str,
    assistant_backend: ChatBackend,
    user_backend: ChatBackend,
    max_rounds: int = 5,
) -> ConversationRecord:
    """Build one full conversation record for an annotated task.

    Clear tasks skip the inquiry loop entirely (zero rounds, empty
    constraints).  Vague tasks run the asker/user exchange for at most
    ``max_rounds`` rounds, then close with the structured summary call.

    Raises:
        RecordRejectedError: when the summary persistently disagrees with
            the round count, a vague task produced no inquiries, or the
            resulting record fails dialogue-grammar validation.  The audit
            payload on the exception records what went wrong.
    """
    _profile(tone)  # validate early
    initial = render_initial_thought(task)

    def reject(reason: str, **extra) -> RecordRejectedError:
        audit = {"task_id": task.id, "tone": tone, "reason": reason}
        audit.update(extra)
        return RecordRejectedError(f"record for task {task.id!r} rejected: {reason}", audit=audit)

    rounds: list[tuple[Inquiry, str]] = []
    exchange: list[tuple[str, str]] = []
    if task.vague:
        system = (
            ASSISTANT_INQUIRY_PROMPT.replace("<category>", task.category)
            .replace("<task>", task.description)
            .replace("<thought>", initial.thought)
            .replace("<missing details>", _reference_list(task.missing_details))
        )
        asker_log = [ChatMessage(role="system", content=system)]
        user_view: list[ChatMessage] = []
        while len(rounds) < max_rounds:
            text = assistant_backend.complete(asker_log).content
            inquiry = _parse_inquiry(text)
            if inquiry is None:
                break  # the asker chose to stop
            asker_log.append(ChatMessage(role="assistant", content=text))
            user_view.append(ChatMessage(role="assistant", content=inquiry.question))
            reply = simulate_user(task, user_view, tone, user_backend)
            if not reply:
                raise reject("simulated user produced an empty reply")
            asker_log.append(ChatMessage(role="user", content=reply))
            user_view.append(ChatMessage(role="user", content=reply))
            options = derive_inquiry_options(
                initial.detail_menu, inquiry.thought, inquiry.question
            )
            rounds.append((Inquiry(inquiry.thought, inquiry.question, options), reply))
            exchange.append((inquiry.question, reply))
        if not rounds:
            raise reject("asker stopped before making any inquiry")

    args = _summary_arguments(assistant_backend, task, exchange, len(rounds))
    if len(args["constraints"]) != len(rounds):
        raise reject(
            f"summary listed {len(args['constraints'])} constraints for {len(rounds)} rounds",
            summary=args,
        )
    try:
        final = Summary(
            thought=args["thought"].strip(),
            constraints=tuple(c.strip() for c in args["constraints"]),
            summary=args["summary"].strip(),
        )
        record = ConversationRecord(
            task=task.description,
            initial=initial,
            rounds=tuple(rounds),
            final=final,
            tone=tone,
            task_id=task.id,
            category=task.category,
        )
        serialize_record(record)  # grammar validation; result discarded
    except (ValueError, GrammarError) as exc:
        raise reject(f"record failed grammar validation: {exc}", summary=args) from exc
    return record


@dataclass(frozen=True)
class SimulationReport:
    """Everything a batch run produced: kept records plus rejection audits."""

    records: tuple[ConversationRecord, ...]
    rejections: tuple[dict, ...]


def simulate_records(
    tasks: Sequence[TaskRecord],
    tones: Sequence[str],
    assistant_backend: ChatBackend,
    user_backend: ChatBackend,
    max_rounds: int = 5,
    max_workers: int = 1,
) -> SimulationReport:
    """Construct one record per (task, tone) pair, task-major order.

    ``max_workers`` > 1 runs constructions concurrently; output order stays
    input order either way.  Rejected records land in the report's
    ``rejections`` instead of raising.
    """
    jobs = [(task, tone) for task in tasks for tone in tones]

    def run(job: tuple[TaskRecord, str]):
        task, tone = job
        try:
            return construct_record(task, tone, assistant_backend, user_backend, max_rounds)
        except RecordRejectedError as exc:
            return exc.audit

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            outcomes = list(pool.map(run, jobs))
    else:
        outcomes = [run(job) for job in jobs]

    records = tuple(o for o in outcomes if isinstance(o, ConversationRecord))
    rejections = tuple(o for o in outcomes if isinstance(o, dict))
    return SimulationReport(records=records, rejections=rejections)


# --- annotation assistance ----------------------------------------------------


@dataclass(frozen=True)
class AnnotationSuggestion:
    """Machine-suggested vagueness annotation for a human to filter."""

    thought: str
    judgment: str  # "vague" | "clear"
    missings: tuple[MissingDetail, ...]

    @property
    def vague(self) -> bool:
        return self.judgment == "vague"


def assist_annotation(task_text: str, backend: ChatBackend) -> AnnotationSuggestion:
    """Ask a backend to pre-annotate a task's vagueness and missing details."""
    if not task_text.strip():
        raise ValueError("task text must be non-empty")
    tool = ToolSchema.from_dict(JUDGE_VAGUENESS_TOOL)
    args = backend.complete_structured(
        [
            ChatMessage(role="system", content=ANNOTATION_SYSTEM_PROMPT),
            ChatMessage(role="user", content=task_text.strip()),
        ],
        tool,
    )
    missings = tuple(
        MissingDetail(
            description=m["description"],
            importance=int(m["importance"]),
            inquiry=m["inquiry"],
            options=tuple(m["options"]),
        )
        for m in args["missings"]
    )
    return AnnotationSuggestion(
        thought=args["thought"], judgment=args["judgment"], missings=missings
    )


# --- record files ----------------------------------------------------------------


def record_to_line(record: ConversationRecord) -> dict:
    """The JSONL form of a record: serialized text plus its metadata."""
    return {
        "task_id": record.task_id,
        "category": record.category,
        "tone": record.tone,
        "vague": record.vague,
        "rounds": len(record.rounds),
        "text": serialize_record(record),
    }


def write_records(records: Iterable[ConversationRecord], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        for record in records:
            f.write(json.dumps(record_to_line(record), ensure_ascii=False) + "\n")


def read_records(path: str | Path) -> list[ConversationRecord]:
    """Load records written by :func:`write_records`, metadata restored."""
    from dataclasses import replace

    from .grammar import parse_record

    out = []
    with Path(path).open("r", encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            raw = json.loads(line)
            parsed = parse_record(raw["text"])
            out.append(
                replace(
                    parsed.record,
                    tone=raw.get("tone"),
                    task_id=raw.get("task_id"),
                    category=raw.get("category"),
                )
            )
    return out
