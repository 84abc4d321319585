"""Marker grammar for clarification dialogues.

A serialized conversation looks like::

    <s> User: {system prompt}

    Here is the task:
    {task text}

    Agent: [INITIAL THOUGHT] {thought} Some aspects of missing details and potential options are as follows:
    - {detail}: {option}, {option}
    [INQUIRY THOUGHT] {thought}
    [INQUIRY] {question}</s>

    User: {reply}

    Agent: [SUMMARY THOUGHT] {thought}
    - {constraint}
    [SUMMARY] {summary}</s>

Clear tasks collapse to a single agent turn holding the initial thought,
summary thought and summary, with no inquiry section.  The full grammar,
including exactly which characters may appear where, is documented in
``docs/grammar.md``.

Parsing tolerates leading/trailing whitespace and stray spaces around turn
boundaries (model output is messy); serialization is canonical and
byte-deterministic, so ``parse(serialize(record))`` reproduces the record and
re-serializing reproduces the bytes.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Sequence, Union

from .dataset import TaskRecord
from .errors import GrammarError, PhaseError
from .prompts import CLARIFIER_SYSTEM_PROMPT, DETAIL_MENU_LEADIN, TASK_HEADER

INITIAL_THOUGHT = "[INITIAL THOUGHT]"
INQUIRY_THOUGHT = "[INQUIRY THOUGHT]"
INQUIRY = "[INQUIRY]"
SUMMARY_THOUGHT = "[SUMMARY THOUGHT]"
SUMMARY = "[SUMMARY]"
ALL_MARKERS = (INITIAL_THOUGHT, INQUIRY_THOUGHT, INQUIRY, SUMMARY_THOUGHT, SUMMARY)

PHASE_JUDGING = "judging"
PHASE_INQUIRING = "inquiring"
PHASE_SUMMARIZING = "summarizing"


@dataclass(frozen=True)
class MarkerConfig:
    """Sequence boundary tokens wrapped around assistant turns."""

    bos: str = "<s>"
    eos: str = "</s>"


DEFAULT_MARKERS = MarkerConfig()


def _clean(value: str, what: str) -> None:
    if not value or value != value.strip():
        raise ValueError(f"{what} must be non-empty with no surrounding whitespace")


@dataclass(frozen=True)
class MenuItem:
    """One line of the missing-detail menu inside an initial thought."""

    description: str
    options: tuple[str, ...] = ()

    def __post_init__(self):
        _clean(self.description, "menu item description")


@dataclass(frozen=True)
class InitialJudgment:
    """First-turn vagueness call.  A non-empty menu means the task is vague."""

    thought: str
    detail_menu: tuple[MenuItem, ...] = ()

    def __post_init__(self):
        _clean(self.thought, "initial thought")

    @property
    def vague(self) -> bool:
        return bool(self.detail_menu)


@dataclass(frozen=True)
class Inquiry:
    """One clarifying question.  ``options`` are presentation hints for the
    asker's menu and are not serialized; they are re-derived from the menu on
    parse."""

    thought: str
    question: str
    options: tuple[str, ...] = ()

    def __post_init__(self):
        _clean(self.thought, "inquiry thought")
        _clean(self.question, "inquiry question")


@dataclass(frozen=True)
class Summary:
    """Closing move: constraint list plus the clarified goal in prose."""

    thought: str
    constraints: tuple[str, ...]
    summary: str

    def __post_init__(self):
        _clean(self.thought, "summary thought")
        _clean(self.summary, "summary text")
        for c in self.constraints:
            _clean(c, "constraint")
            if "\n" in c:
                raise ValueError("constraints must be single-line")
        if len(set(self.constraints)) != len(self.constraints):
            raise ValueError("constraints must be distinct")


AssistantMove = Union[InitialJudgment, Inquiry, Summary]


@dataclass(frozen=True)
class ConversationRecord:
    """A full clarification dialogue for one task."""

    task: str
    initial: InitialJudgment
    rounds: tuple[tuple[Inquiry, str], ...]
    final: Summary
    tone: str | None = None
    task_id: str | None = None
    category: str | None = None

    def __post_init__(self):
        _clean(self.task, "task text")
        for inquiry, reply in self.rounds:
            _clean(reply, "user reply")

    @property
    def vague(self) -> bool:
        return self.initial.vague


@dataclass(frozen=True)
class ParsedRecord:
    """Result of parsing a serialized conversation."""

    system_prompt: str
    record: ConversationRecord


# --- segment-level rendering -------------------------------------------------


def _render_menu(menu: Sequence[MenuItem]) -> str:
    lines = []
    for item in menu:
        if item.options:
            lines.append(f"- {item.description}: {', '.join(item.options)}")
        else:
            lines.append(f"- {item.description}")
    return "\n".join(lines)


def serialize_segment(move: AssistantMove) -> str:
    """Render a single move in canonical form (no boundary tokens)."""
    if isinstance(move, InitialJudgment):
        if move.detail_menu:
            return (
                f"{INITIAL_THOUGHT} {move.thought} {DETAIL_MENU_LEADIN}\n"
                f"{_render_menu(move.detail_menu)}"
            )
        return f"{INITIAL_THOUGHT} {move.thought}"
    if isinstance(move, Inquiry):
        return f"{INQUIRY_THOUGHT} {move.thought}\n{INQUIRY} {move.question}"
    if isinstance(move, Summary):
        bullets = "".join(f"\n- {c}" for c in move.constraints)
        return f"{SUMMARY_THOUGHT} {move.thought}{bullets}\n{SUMMARY} {move.summary}"
    raise TypeError(f"not an assistant move: {move!r}")


# --- segment-level parsing -----------------------------------------------------

_MARKER_RE = re.compile(
    r"(?m)^(\[INITIAL THOUGHT\]|\[INQUIRY THOUGHT\]|\[INQUIRY\]|\[SUMMARY THOUGHT\]|\[SUMMARY\]) ?"
)


def _split_segments(text: str) -> list[tuple[str, str]]:
    """Split turn text into (marker, body) pairs, in order of appearance."""
    matches = list(_MARKER_RE.finditer(text))
    if not matches:
        raise GrammarError("no grammar markers found", span=text)
    if text[: matches[0].start()].strip():
        raise GrammarError("text before first marker", span=text[: matches[0].start()])
    segments = []
    for i, m in enumerate(matches):
        end = matches[i + 1].start() if i + 1 < len(matches) else len(text)
        segments.append((m.group(1), text[m.end() : end].strip()))
    return segments


def _parse_menu(body: str) -> tuple[str, tuple[MenuItem, ...]]:
    """Split an initial-thought body into (thought, menu)."""
    idx = body.find(DETAIL_MENU_LEADIN)
    if idx < 0:
        return body, ()
    thought = body[:idx].rstrip()
    if not thought:
        raise GrammarError("initial thought is empty before the detail menu", span=body)
    items = []
    for line in body[idx + len(DETAIL_MENU_LEADIN) :].splitlines():
        line = line.strip()
        if not line:
            continue
        if not line.startswith("- "):
            raise GrammarError("detail menu line is not a bullet", span=line)
        entry = line[2:]
        if ": " in entry:
            desc, _, opts = entry.partition(": ")
            options = tuple(o for o in (p.strip() for p in opts.split(", ")) if o)
        else:
            desc, options = entry, ()
        try:
            items.append(MenuItem(description=desc.strip(), options=options))
        except ValueError as exc:
            raise GrammarError(str(exc), span=line) from exc
    if not items:
        raise GrammarError("detail menu lead-in present but no menu lines", span=body)
    return thought, tuple(items)


def _parse_summary_thought(body: str) -> tuple[str, tuple[str, ...]]:
    """Split a summary-thought body into (thought, constraint bullets)."""
    lines = body.splitlines()
    head: list[str] = []
    constraints: list[str] = []
    for line in lines:
        stripped = line.strip()
        if stripped.startswith("- "):
            constraints.append(stripped[2:].strip())
        elif constraints:
            raise GrammarError("free text after constraint bullets", span=line)
        else:
            head.append(line)
    return "\n".join(head).strip(), tuple(constraints)


def parse_moves(text: str) -> list[AssistantMove]:
    """Parse one assistant turn into its sequence of moves.

    Valid turn compositions are: an initial judgment optionally followed by
    one inquiry or one summary; a lone inquiry; a lone summary.  Anything
    else (duplicated markers, a dangling thought, text before the first
    marker) raises :class:`GrammarError`.
    """
    segments = _split_segments(text)
    moves: list[AssistantMove] = []
    i = 0
    while i < len(segments):
        marker, body = segments[i]
        try:
            if marker == INITIAL_THOUGHT:
                if moves:
                    raise GrammarError(f"{INITIAL_THOUGHT} not at start of turn", span=body)
                thought, menu = _parse_menu(body)
                moves.append(InitialJudgment(thought=thought.strip(), detail_menu=menu))
                i += 1
            elif marker == INQUIRY_THOUGHT:
                if i + 1 >= len(segments) or segments[i + 1][0] != INQUIRY:
                    raise GrammarError(f"{INQUIRY_THOUGHT} without {INQUIRY}", span=body)
                moves.append(Inquiry(thought=body, question=segments[i + 1][1]))
                i += 2
            elif marker == SUMMARY_THOUGHT:
                if i + 1 >= len(segments) or segments[i + 1][0] != SUMMARY:
                    raise GrammarError(f"{SUMMARY_THOUGHT} without {SUMMARY}", span=body)
                thought, constraints = _parse_summary_thought(body)
                moves.append(
                    Summary(thought=thought, constraints=constraints, summary=segments[i + 1][1])
                )
                i += 2
            else:
                raise GrammarError(f"{marker} without its thought marker", span=body)
        except ValueError as exc:
            raise GrammarError(str(exc), span=body) from exc
    kinds = [type(m) for m in moves]
    if kinds.count(Inquiry) > 1 or kinds.count(Summary) > 1 or kinds.count(InitialJudgment) > 1:
        raise GrammarError("duplicated move in one turn", span=text)
    if isinstance(moves[-1], InitialJudgment) and len(moves) > 1:
        raise GrammarError("initial judgment after another move", span=text)
    return moves


def parse_assistant_text(text: str, expected_phase: str) -> AssistantMove:
    """Parse raw model output and check it fits the session phase.

    ``judging`` expects a turn opening with an initial judgment and returns
    it; ``inquiring`` accepts either an inquiry or a summary; ``summarizing``
    accepts only a summary.  A well-formed move of the wrong kind raises
    :class:`PhaseError`, malformed text raises :class:`GrammarError`.
    """
    moves = parse_moves(text)
    if expected_phase == PHASE_JUDGING:
        if not isinstance(moves[0], InitialJudgment):
            raise PhaseError("expected an initial judgment first", span=text)
        return moves[0]
    if len(moves) != 1 or isinstance(moves[0], InitialJudgment):
        raise PhaseError(f"expected a single move in phase {expected_phase!r}", span=text)
    move = moves[0]
    if expected_phase == PHASE_INQUIRING:
        return move
    if expected_phase == PHASE_SUMMARIZING:
        if not isinstance(move, Summary):
            raise PhaseError("expected a summary", span=text)
        return move
    raise ValueError(f"unknown phase {expected_phase!r}")


def parse_opening(text: str) -> tuple[InitialJudgment, Inquiry | Summary]:
    """Parse a session-opening turn: initial judgment plus its follow move."""
    moves = parse_moves(text)
    if not isinstance(moves[0], InitialJudgment):
        raise PhaseError("expected an initial judgment first", span=text)
    if len(moves) != 2:
        raise GrammarError("judgment must be followed by an inquiry or a summary", span=text)
    follow = moves[1]
    assert isinstance(follow, (Inquiry, Summary))
    return moves[0], follow


# --- option derivation ---------------------------------------------------------

_WORD_RE = re.compile(r"[a-z0-9']+")


def _tokens(text: str) -> set[str]:
    return {w for w in _WORD_RE.findall(text.casefold()) if len(w) >= 4}


def derive_inquiry_options(
    menu: Sequence[MenuItem], thought: str, question: str
) -> tuple[str, ...]:
    """Pick the menu item an inquiry is asking about and return its options.

    Scores each menu item by how many of its option phrases occur in the
    question (weight 2) or the thought (weight 1); ties fall back to overlap
    between the item description's words and the inquiry text.  Returns an
    empty tuple when nothing matches, e.g. for follow-up questions outside
    the menu.
    """
    if not menu:
        return ()
    q = question.casefold()
    t = thought.casefold()
    best: tuple[int, int, int] | None = None
    best_item: MenuItem | None = None
    q_tokens = _tokens(question)
    t_tokens = _tokens(thought)
    for pos, item in enumerate(menu):
        score = 0
        for opt in item.options:
            o = opt.casefold()
            if o and o in q:
                score += 2
            elif o and o in t:
                score += 1
        desc = _tokens(item.description)
        overlap = 2 * len(desc & q_tokens) + len(desc & t_tokens)
        key = (score, overlap, -pos)
        if score + overlap > 0 and (best is None or key > best):
            best = key
            best_item = item
    return best_item.options if best_item is not None else ()


# --- record-level serialization -----------------------------------------------


def _first_turn_text(record: ConversationRecord) -> str:
    first = serialize_segment(record.initial)
    if record.rounds:
        first += "\n" + serialize_segment(record.rounds[0][0])
    else:
        first += "\n" + serialize_segment(record.final)
    return first


def _turn_texts(record: ConversationRecord) -> list[str]:
    turns = [_first_turn_text(record)]
    for inquiry, _reply in record.rounds[1:]:
        turns.append(serialize_segment(inquiry))
    if record.rounds:
        turns.append(serialize_segment(record.final))
    return turns


_BOUNDARY = ("\n\nUser: ", "\n\nAgent: ")


def _field_violations(name: str, value: str, markers: MarkerConfig) -> list[str]:
    problems = []
    if value != value.strip() or not value:
        problems.append(f"{name}: must be non-empty and stripped")
    for token in (markers.bos, markers.eos, *_BOUNDARY):
        if token in value:
            problems.append(f"{name}: must not contain {token!r}")
    return problems


def _agent_text_violations(name: str, value: str, markers: MarkerConfig) -> list[str]:
    problems = _field_violations(name, value, markers)
    for line in value.splitlines():
        if any(line.lstrip().startswith(m) for m in ALL_MARKERS):
            problems.append(f"{name}: line must not start with a grammar marker")
            break
    return problems


def serializable_violations(
    record: ConversationRecord,
    system_prompt: str = CLARIFIER_SYSTEM_PROMPT,
    markers: MarkerConfig = DEFAULT_MARKERS,
) -> list[str]:
    """List the reasons a record cannot be canonically serialized.

    Empty means serialization will be byte-exact reversible.
    """
    problems = _field_violations("system_prompt", system_prompt, markers)
    problems += _field_violations("task", record.task, markers)
    if any(line.strip() == TASK_HEADER for line in record.task.splitlines()):
        problems.append("task: must not contain the task header line")
    problems += _agent_text_violations("initial.thought", record.initial.thought, markers)
    if DETAIL_MENU_LEADIN in record.initial.thought:
        problems.append("initial.thought: must not contain the detail menu lead-in")
    for i, item in enumerate(record.initial.detail_menu):
        name = f"initial.detail_menu[{i}]"
        problems += _field_violations(f"{name}.description", item.description, markers)
        if "\n" in item.description:
            problems.append(f"{name}.description: must be single-line")
        if ": " in item.description:
            problems.append(f"{name}.description: must not contain ': '")
        for j, opt in enumerate(item.options):
            problems += _field_violations(f"{name}.options[{j}]", opt, markers)
            if "," in opt or "\n" in opt:
                problems.append(f"{name}.options[{j}]: must be single-line without commas")
    for r, (inquiry, reply) in enumerate(record.rounds):
        problems += _agent_text_violations(f"rounds[{r}].thought", inquiry.thought, markers)
        problems += _agent_text_violations(f"rounds[{r}].question", inquiry.question, markers)
        problems += _field_violations(f"rounds[{r}].reply", reply, markers)
    problems += _agent_text_violations("final.thought", record.final.thought, markers)
    for line in record.final.thought.splitlines():
        if line.strip().startswith("- "):
            problems.append("final.thought: must not contain bullet lines")
            break
    for i, c in enumerate(record.final.constraints):
        problems += _agent_text_violations(f"final.constraints[{i}]", c, markers)
    problems += _agent_text_violations("final.summary", record.final.summary, markers)
    return problems


def serialize_record(
    record: ConversationRecord,
    system_prompt: str = CLARIFIER_SYSTEM_PROMPT,
    markers: MarkerConfig = DEFAULT_MARKERS,
) -> str:
    """Render a conversation in canonical serialized form.

    Raises:
        GrammarError: when a field would make the text unparsable (see
            :func:`serializable_violations`).
    """
    problems = serializable_violations(record, system_prompt, markers)
    if problems:
        raise GrammarError("record is not serializable: " + "; ".join(problems))
    turns = _turn_texts(record)
    parts = [
        f"{markers.bos} User: {system_prompt}\n\n{TASK_HEADER}\n{record.task}"
        f"\n\nAgent: {turns[0]}{markers.eos}"
    ]
    for (_, reply), turn in zip(record.rounds, turns[1:]):
        parts.append(f"\n\nUser: {reply}\n\nAgent: {turn}{markers.eos}")
    return "".join(parts)


_TURN_SPLIT_RE = re.compile(r"[ \t]*\n[ \t]*\n(User|Agent):[ \t]+")


def parse_record(text: str, markers: MarkerConfig = DEFAULT_MARKERS) -> ParsedRecord:
    """Parse a serialized conversation back into structured form.

    Tolerates surrounding whitespace and trailing spaces on lines; raises
    :class:`GrammarError` on anything structurally off (missing boundary
    tokens, broken speaker alternation, a record that never summarizes).
    """
    s = text.strip()
    prefix = f"{markers.bos} User: "
    if not s.startswith(prefix):
        raise GrammarError(f"record must start with {prefix!r}", span=s[:40])
    body = s[len(prefix) :]
    pieces = _TURN_SPLIT_RE.split(body)
    # pieces = [first chunk, speaker, chunk, speaker, chunk, ...]
    header_chunk = pieces[0]
    matches = list(re.finditer(rf"(?m)^{re.escape(TASK_HEADER)}[ \t]*$", header_chunk))
    if not matches:
        raise GrammarError("missing task header block", span=header_chunk[-80:])
    m = matches[-1]
    system_prompt = header_chunk[: m.start()].strip()
    task = header_chunk[m.end() :].strip()
    if not task:
        raise GrammarError("empty task text")

    speakers = pieces[1::2]
    chunks = [c.strip() for c in pieces[2::2]]
    if not speakers or speakers[0] != "Agent":
        raise GrammarError("first turn after the task must be the agent's")
    expected = "Agent"
    for spk in speakers:
        if spk != expected:
            raise GrammarError("speakers must alternate starting with the agent")
        expected = "User" if expected == "Agent" else "Agent"
    if speakers[-1] != "Agent":
        raise GrammarError("record must end with an agent turn")

    agent_turns: list[list[AssistantMove]] = []
    replies: list[str] = []
    for spk, chunk in zip(speakers, chunks):
        if spk == "User":
            if not chunk:
                raise GrammarError("empty user reply")
            replies.append(chunk)
            continue
        if not chunk.endswith(markers.eos):
            raise GrammarError("agent turn missing end-of-sequence token", span=chunk[-40:])
        agent_turns.append(parse_moves(chunk[: -len(markers.eos)].strip()))

    first = agent_turns[0]
    if not isinstance(first[0], InitialJudgment):
        raise GrammarError("first agent turn must open with an initial judgment")
    if len(first) != 2:
        raise GrammarError("first agent turn must pair the judgment with a move")
    initial = first[0]

    moves: list[AssistantMove] = [first[1]]
    for turn in agent_turns[1:]:
        if len(turn) != 1 or isinstance(turn[0], InitialJudgment):
            raise GrammarError("non-opening turns must hold exactly one move")
        moves.append(turn[0])
    if not isinstance(moves[-1], Summary):
        raise GrammarError("record ends before a summary")
    inquiries = moves[:-1]
    if any(not isinstance(mv, Inquiry) for mv in inquiries):
        raise GrammarError("only the final move may be a summary")
    if len(replies) != len(inquiries):
        raise GrammarError(
            f"{len(inquiries)} inquiries but {len(replies)} user replies"
        )
    rounds = tuple(
        (
            replace(
                inq, options=derive_inquiry_options(initial.detail_menu, inq.thought, inq.question)
            ),
            reply,
        )
        for inq, reply in zip(inquiries, replies)
    )
    record = ConversationRecord(
        task=task, initial=initial, rounds=rounds, final=moves[-1]
    )
    return ParsedRecord(system_prompt=system_prompt, record=record)


# --- rendering from annotations -------------------------------------------------


def _natural_join(items: Sequence[str]) -> str:
    if len(items) == 1:
        return items[0]
    return ", ".join(items[:-1]) + " and " + items[-1]


def render_initial_thought(task: TaskRecord) -> InitialJudgment:
    """Deterministically build the opening judgment from an annotated task.

    Vague tasks get a judgment sentence naming the annotated gaps plus one
    menu line per missing detail, in annotation order; clear tasks get a
    judgment sentence only.
    """
    if not task.vague:
        return InitialJudgment(
            thought=(
                "The user's task is clear. It already provides the details needed to "
                "understand the intention, so no further inquiry is required."
            )
        )
    if not task.missing_details:
        raise ValueError(f"vague task {task.id!r} has no annotated missing details")
    gaps = _natural_join(
        [d.description[:1].lower() + d.description[1:] for d in task.missing_details]
    )
    menu = tuple(
        MenuItem(description=d.description, options=d.options) for d in task.missing_details
    )
    return InitialJudgment(
        thought=(
            f"The user's task is vague because it lacks specific details such as {gaps}."
        ),
        detail_menu=menu,
    )


# --- training instances ---------------------------------------------------------


@dataclass(frozen=True)
class TrainingInstance:
    """One supervised example: a dialogue prefix and the turn to learn."""

    stage: int
    stage_count: int
    context: str
    target: str
    task_id: str | None = None
    tone: str | None = None

    def __post_init__(self):
        if self.stage < 1 or self.stage > self.stage_count:
            raise ValueError("stage must be within 1..stage_count")

    @property
    def text(self) -> str:
        return self.context + self.target

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "tone": self.tone,
            "stage": self.stage,
            "stage_count": self.stage_count,
            "context": self.context,
            "target": self.target,
            "text": self.text,
        }


def assemble_training_instances(
    record: ConversationRecord,
    system_prompt: str = CLARIFIER_SYSTEM_PROMPT,
    markers: MarkerConfig = DEFAULT_MARKERS,
) -> list[TrainingInstance]:
    """Cut one conversation into cumulative training instances.

    A vague record with R rounds yields R+1 instances: the first supervises
    the initial thought, judgment and opening inquiry; instances 2..R the
    follow-up inquiries; instance R+1 the summary.  Each instance's context
    is the previous instance's full text plus the next user reply.  Clear
    records yield a single instance.

    Raises:
        GrammarError: for protocol-shape violations (a vague record with no
            rounds, a clear record with rounds) or unserializable fields.
    """
    if record.initial.vague and not record.rounds:
        raise GrammarError("vague record has no inquiry rounds to train on")
    if not record.initial.vague and record.rounds:
        raise GrammarError("clear record must not contain inquiry rounds")
    problems = serializable_violations(record, system_prompt, markers)
    if problems:
        raise GrammarError("record is not serializable: " + "; ".join(problems))

    turns = _turn_texts(record)
    stage_count = len(turns)
    context = f"{markers.bos} User: {system_prompt}\n\n{TASK_HEADER}\n{record.task}\n\nAgent: "
    instances = []
    for stage, turn in enumerate(turns, start=1):
        target = turn + markers.eos
        instances.append(
            TrainingInstance(
                stage=stage,
                stage_count=stage_count,
                context=context,
                target=target,
                task_id=record.task_id,
                tone=record.tone,
            )
        )
        if stage <= len(record.rounds):
            reply = record.rounds[stage - 1][1]
            context = context + target + f"\n\nUser: {reply}\n\nAgent: "
    return instances


# --- marker sequence -------------------------------------------------------------


def marker_sequence(text: str, markers: MarkerConfig = DEFAULT_MARKERS) -> list[str]:
    """All boundary tokens, speaker tags and grammar markers, in order.

    Used to compare two serializations structurally when byte equality is
    too strict (e.g. texts that differ only in incidental whitespace).
    """
    tokens = [markers.bos, markers.eos, "User:", "Agent:", *ALL_MARKERS]
    pattern = re.compile("|".join(re.escape(t) for t in sorted(tokens, key=len, reverse=True)))
    return [m.group(0) for m in pattern.finditer(text)]
