"""Seeded random generators for records and logs used across the test suite."""

from __future__ import annotations

import random

from clarigate.grammar import (
    ConversationRecord,
    InitialJudgment,
    Inquiry,
    MenuItem,
    Summary,
    derive_inquiry_options,
)
from clarigate.metrics import EvalLog, ExecutionLog, Milestone, RoundLog, Subtask

_WORDS = (
    "plan", "trip", "budget", "garden", "photo", "dinner", "route", "style",
    "coach", "paris", "week", "month", "group", "venue", "detail", "option",
    "cheap", "fancy", "quick", "slow", "local", "remote", "indoor", "outdoor",
    "guide", "draft", "sketch", "review", "meal", "track", "story", "metric",
)


def words(rng: random.Random, low: int = 3, high: int = 8) -> str:
    return " ".join(rng.choice(_WORDS) for _ in range(rng.randint(low, high)))


def _option(rng: random.Random) -> str:
    # Options must stay comma-free to survive menu serialization.
    return " ".join(rng.choice(_WORDS) for _ in range(rng.randint(1, 3))).title()


def random_menu(rng: random.Random, n: int | None = None) -> tuple[MenuItem, ...]:
    n = n or rng.randint(1, 6)
    items = []
    used = set()
    for _ in range(n):
        while True:
            # Descriptions must not contain ": " (the menu separator); plain
            # word runs never do, but they must also be unique per menu.
            desc = words(rng, 2, 4)
            if desc not in used:
                used.add(desc)
                break
        opts = []
        while len(opts) < rng.randint(2, 4):
            opt = _option(rng)
            if opt not in opts:
                opts.append(opt)
        items.append(MenuItem(description=desc, options=tuple(opts)))
    return tuple(items)


def random_record(rng: random.Random, vague: bool | None = None) -> ConversationRecord:
    """A grammar-safe conversation record with random but valid content."""
    if vague is None:
        vague = rng.random() < 0.8
    task = f"I want to {words(rng, 2, 5)}."
    if not vague:
        initial = InitialJudgment(thought=f"The task is clear: {words(rng)}.")
        final = Summary(
            thought=f"No chatting was needed. {words(rng).capitalize()}.",
            constraints=(),
            summary=f"The user intends to {words(rng)}.",
        )
        return ConversationRecord(
            task=task, initial=initial, rounds=(), final=final,
            tone=rng.choice(("succinct", "passionate")),
            task_id=f"rnd-{rng.randrange(10**6):06d}", category=words(rng, 1, 2).title(),
        )

    menu = random_menu(rng)
    initial = InitialJudgment(
        thought=f"The task is vague because it lacks {words(rng)}.",
        detail_menu=menu,
    )
    n_rounds = rng.randint(1, min(5, len(menu) + 2))
    rounds = []
    for i in range(n_rounds):
        item = menu[i % len(menu)]
        # Mention the item's first option verbatim so chip derivation has a
        # deterministic winner when the record is re-parsed.
        question = f"Could you settle the {item.description}? Maybe {item.options[0]}?"
        inquiry = Inquiry(
            thought=f"Next I should ask about the {item.description}.",
            question=question,
        )
        inquiry = Inquiry(
            inquiry.thought,
            inquiry.question,
            derive_inquiry_options(menu, inquiry.thought, inquiry.question),
        )
        rounds.append((inquiry, f"I prefer {item.options[0]} for round {i + 1}."))
    constraints = tuple(
        f"Constraint {i + 1}: the user chose {words(rng, 1, 3)}" for i in range(n_rounds)
    )
    final = Summary(
        thought=f"To summarize, {words(rng)}.",
        constraints=constraints,
        summary=f"The user intends to {words(rng)}.",
    )
    return ConversationRecord(
        task=task, initial=initial, rounds=tuple(rounds), final=final,
        tone=rng.choice(("succinct", "passionate")),
        task_id=f"rnd-{rng.randrange(10**6):06d}", category=words(rng, 1, 2).title(),
    )


def random_eval_log(rng: random.Random, task_id: str) -> EvalLog:
    judgment = rng.choice(("vague", "clear"))
    truth = rng.choice(("vague", "clear"))
    if judgment == "clear":
        return EvalLog(task_id=task_id, judgment=judgment, judgment_truth=truth)

    rounds = []
    detail_names = []
    serial = 0
    for _ in range(rng.randint(0, 5)):
        names = []
        for _ in range(rng.randint(0, 3)):
            names.append(f"detail-{task_id}-{serial}")
            serial += 1
        counts = [rng.choice((0, 0, 2, 3, 4)) for _ in names]
        reasonable = rng.randint(0, sum(counts)) if counts else 0
        rounds.append(RoundLog(tuple(names), tuple(counts), reasonable))
        detail_names.extend(names)

    truth_counts = {lvl: rng.randint(0, 3) for lvl in (1, 2, 3)}
    available = list(detail_names)
    rng.shuffle(available)
    matched = {}
    for lvl in (1, 2, 3):
        take = min(truth_counts[lvl], len(available), rng.randint(0, 2))
        matched[lvl] = frozenset(available.pop() for _ in range(take))
    provided = rng.randint(0, 5)
    return EvalLog(
        task_id=task_id,
        judgment=judgment,
        judgment_truth=truth,
        rounds=tuple(rounds),
        summarized_count=rng.randint(0, provided),
        provided_count=provided,
        matched=matched,
        truth_counts=truth_counts,
    )


def random_execution_log(rng: random.Random, task_id: str) -> ExecutionLog:
    subtasks = []
    for _ in range(rng.randint(1, 4)):
        milestones = tuple(
            Milestone(
                unnecessary=rng.random() < 0.2,
                general=rng.random() < 0.2,
                tool_invocations=rng.randint(0, 5),
            )
            for _ in range(rng.randint(0, 3))
        )
        subtasks.append(
            Subtask(
                unnecessary=rng.random() < 0.2,
                general=rng.random() < 0.2,
                tool_invocations=rng.randint(0, 6),
                milestones=milestones,
            )
        )
    return ExecutionLog(task_id=task_id, subtasks=tuple(subtasks))
