"""Deterministic synthetic benchmark data and demo fixtures.

The bundled splits under ``data/`` are generated here with a fixed seed, so
they can be regenerated byte-for-byte at any time (``clarigate synth-data``
or :func:`write_bundled_data`).  The generator engineers the split-level
statistics — task/category counts, detail counts per importance level,
option counts — to exact target values while drawing the surface text from
template pools.

Also built here: a ten-task sample split, mock-backend scripts that drive
the simulator and the chat engine offline, and hand-written evaluation /
execution log fixtures with externally verifiable metric values.
"""

from __future__ import annotations

import json
import random
from pathlib import Path
from typing import Sequence

from .dataset import MissingDetail, SplitStats, TaskRecord, save_dataset
from .metrics import (
    EvalLog,
    ExecutionLog,
    Milestone,
    RoundLog,
    Subtask,
    write_eval_logs,
    write_execution_logs,
)
from .simulate import TONES

DEFAULT_SEED = 20240511

# Engineered composition of the bundled splits.  Every number below is a
# target the generator hits exactly; the expected-stats constants further
# down are derived from the same figures.
_TRAIN = {
    "tasks": 1261,
    "vague": 1012,
    "details_per_task": {4: 579, 3: 433},  # 3615 details
    "levels": {1: 558, 2: 2449, 3: 608},
    "options_per_detail": {4: 678, 3: 2937},  # 11523 options
    "categories": 250,
    "prefix": "train",
    "split": "training",
}
_TEST = {
    "tasks": 108,
    "vague": 95,
    "details_per_task": {4: 65, 3: 30},  # 350 details
    "levels": {1: 32, 2: 253, 3: 65},
    "options_per_detail": {3: 342, 2: 8},  # 1042 options
    "categories": 50,
    "prefix": "test",
    "split": "test",
}

_ADJECTIVES = (
    "Home", "Urban", "Outdoor", "Digital", "Family",
    "Personal", "Office", "Weekend", "Seasonal", "Budget",
    "Creative", "Local", "Remote", "Daily", "Smart",
    "Modern", "Community", "Healthy", "Quick", "Custom",
    "Vintage", "Mobile", "Shared", "Green", "Social",
)
_DOMAINS = (
    "Cooking", "Travel", "Fitness", "Photography", "Gardening",
    "Finance", "Software", "Events", "Research", "Writing",
)
_ACTIVITIES = {
    "Cooking": (
        "prepare a special dinner", "cook a new dish", "plan my weekly meals",
        "bake something for a gathering",
    ),
    "Travel": (
        "plan a trip", "organize a weekend getaway", "arrange a guided tour",
        "put together a vacation",
    ),
    "Fitness": (
        "start a workout routine", "train for a race", "improve my endurance",
        "set up an exercise plan",
    ),
    "Photography": (
        "shoot a photo series", "improve my photos", "organize a photo walk",
        "edit my picture collection",
    ),
    "Gardening": (
        "start a garden", "grow my own vegetables", "redesign my yard",
        "take better care of my plants",
    ),
    "Finance": (
        "make a savings plan", "sort out my budget", "plan an investment",
        "track my spending",
    ),
    "Software": (
        "build a small app", "automate a routine chore", "set up a website",
        "write a helper script",
    ),
    "Events": (
        "organize a party", "plan a celebration", "host a get-together",
        "arrange a meetup",
    ),
    "Research": (
        "research a topic in depth", "write a literature review",
        "survey recent developments", "compare competing approaches",
    ),
    "Writing": (
        "write a short story", "draft an article", "start a blog",
        "put together a newsletter",
    ),
}
_VAGUE_TEMPLATES = (
    "Help me {act}.",
    "I want to {act}.",
    "I would like to {act}.",
    "Can you help me {act}?",
    "I'm hoping to {act} soon.",
)
_CLEAR_TEMPLATES = (
    "I want to {act} next {day} for {n} people at {place}, keeping the total "
    "cost under {amount} dollars.",
    "Help me {act} this {period}; I am a complete beginner, can spend "
    "{hours} hours per week on it, and prefer free online resources.",
    "I plan to {act} over the coming {period} together with my {companion}; "
    "the dates and the location are fixed and the budget is {amount} dollars.",
    "I need to {act} by the end of next {period}, working alone with the "
    "tools I already own, and the result should stay simple and practical.",
)
_CLEAR_SLOTS = {
    "day": ("Saturday", "Sunday", "Friday"),
    "n": ("four", "six", "eight", "ten"),
    "place": ("my home", "the office", "the community hall", "a rented studio"),
    "amount": ("100", "150", "200", "300", "500"),
    "period": ("week", "month", "quarter"),
    "hours": ("three", "five", "seven"),
    "companion": ("partner", "family", "two colleagues", "best friend"),
}

# Reusable missing-detail archetypes.  Option texts avoid commas and
# descriptions avoid ": " so every generated record is dialogue-grammar safe.
_ARCHETYPES = (
    ("preferred budget range", "How much are you planning to spend?",
     ("Under 50 dollars", "50 to 200 dollars", "200 to 500 dollars",
      "More than 500 dollars", "No fixed budget")),
    ("time frame or deadline", "When does this need to happen?",
     ("Within a week", "Within a month", "Within three months",
      "No strict deadline", "This weekend")),
    ("experience level", "How experienced are you with this?",
     ("Complete beginner", "Some basic experience", "Intermediate",
      "Advanced", "Professional level")),
    ("number of people involved", "How many people will take part?",
     ("Just myself", "Two people", "Three to five", "Six to ten",
      "More than ten")),
    ("preferred location", "Where should it take place?",
     ("At home", "Outdoors", "At a rented venue", "Online", "No preference")),
    ("style or theme preference", "What style or theme do you have in mind?",
     ("Classic", "Modern", "Casual", "Formal", "Playful")),
    ("available equipment", "What equipment do you already have?",
     ("Nothing yet", "Basic essentials", "A full setup", "Professional gear",
      "Not sure")),
    ("dietary needs or restrictions", "Are there any dietary needs to respect?",
     ("None", "Vegetarian", "Vegan", "Gluten free", "Several allergies")),
    ("desired duration", "How long should it last?",
     ("Under an hour", "A few hours", "A full day", "Several days",
      "Open ended")),
    ("weekly time commitment", "How much time can you commit each week?",
     ("One hour", "Two to three hours", "Four to six hours",
      "Seven to ten hours", "As much as needed")),
    ("target audience", "Who is this intended for?",
     ("Myself", "Family", "Friends", "Colleagues", "The general public")),
    ("preferred format of the result", "In what form would you like the result?",
     ("A written plan", "A checklist", "A schedule", "A short guide",
      "A detailed report")),
    ("skill or goal focus", "What would you most like to achieve?",
     ("Learn the basics", "Improve speed", "Polish the details",
      "Reach a milestone", "Just enjoy the process")),
    ("frequency of the activity", "How often should it happen?",
     ("Daily", "Twice a week", "Weekly", "Monthly", "Only once")),
    ("season or weather plan", "Which season or weather are you planning around?",
     ("Spring", "Summer", "Autumn", "Winter", "Indoors regardless of weather")),
    ("transport arrangements", "How do you plan to get around?",
     ("On foot", "By bicycle", "Public transport", "Own car",
      "Rental vehicle")),
    ("accommodation preference", "What kind of accommodation do you prefer?",
     ("Hostel", "Budget hotel", "Mid-range hotel", "Vacation rental",
      "Staying with friends")),
    ("preferred tools or platform", "Which tools or platform should be used?",
     ("Whatever is free", "Popular mainstream tools", "Open source options",
      "Professional software", "No preference")),
    ("level of guidance wanted", "How much guidance would you like?",
     ("Step by step instructions", "A rough outline", "Occasional check-ins",
      "Full delegation", "Only final review")),
    ("priority between cost and quality", "What matters more to you here?",
     ("Lowest cost", "Balanced cost and quality", "Highest quality",
      "Fastest result", "Least effort")),
    ("accessibility requirements", "Are there accessibility needs to account for?",
     ("None", "Wheelchair access", "Low physical strain", "Child friendly",
      "Pet friendly")),
    ("language preference", "Which language should be used?",
     ("English", "Spanish", "French", "German", "Mandarin")),
    ("indoor or outdoor setting", "Should it be indoors or outdoors?",
     ("Strictly indoors", "Mostly indoors", "Mixed", "Mostly outdoors",
      "Strictly outdoors")),
    ("group or solo arrangement", "Will you do this alone or with others?",
     ("Alone", "With a partner", "In a small group", "In a large group",
      "Undecided")),
)


def _pool(counts: dict[int, int], rng: random.Random) -> list[int]:
    """A shuffled list with ``counts[value]`` copies of each value."""
    pool = [value for value, count in sorted(counts.items()) for _ in range(count)]
    rng.shuffle(pool)
    return pool


def _categories(n: int) -> list[str]:
    pairs = [f"{adj} {dom}" for adj in _ADJECTIVES for dom in _DOMAINS]
    return pairs[:n]


def _clear_description(rng: random.Random, act: str) -> str:
    template = rng.choice(_CLEAR_TEMPLATES)
    filled = template.replace("{act}", act)
    for slot, values in _CLEAR_SLOTS.items():
        if "{" + slot + "}" in filled:
            filled = filled.replace("{" + slot + "}", rng.choice(values))
    return filled


def build_split(split: str, seed: int = DEFAULT_SEED) -> list[TaskRecord]:
    """Generate one bundled split with exactly the engineered statistics."""
    try:
        plan = {"training": _TRAIN, "test": _TEST}[split]
    except KeyError:
        raise ValueError(f"unknown split {split!r}") from None
    rng = random.Random(f"{seed}:{split}")
    categories = _categories(plan["categories"])

    flags = [True] * plan["vague"] + [False] * (plan["tasks"] - plan["vague"])
    rng.shuffle(flags)
    detail_counts = _pool(plan["details_per_task"], rng)
    level_pool = _pool(plan["levels"], rng)
    option_pool = _pool(plan["options_per_detail"], rng)

    width = len(str(plan["tasks"] - 1))
    records = []
    dealt = 0
    vague_seen = 0
    for i, vague in enumerate(flags):
        category = categories[i % len(categories)]
        domain = category.split()[-1]
        act = rng.choice(_ACTIVITIES[domain])
        details: list[MissingDetail] = []
        if vague:
            description = rng.choice(_VAGUE_TEMPLATES).replace("{act}", act)
            for archetype in rng.sample(_ARCHETYPES, detail_counts[vague_seen]):
                name, inquiry, options = archetype
                details.append(
                    MissingDetail(
                        description=name,
                        importance=level_pool[dealt],
                        inquiry=inquiry,
                        options=options[: option_pool[dealt]],
                    )
                )
                dealt += 1
            vague_seen += 1
        else:
            description = _clear_description(rng, act)
        records.append(
            TaskRecord(
                id=f"{plan['prefix']}-{i:0{width}d}",
                category=category,
                description=description,
                vague=vague,
                missing_details=tuple(details),
                split=plan["split"],
            )
        )
    return records


def _expected_stats(plan: dict) -> SplitStats:
    detail_count = sum(k * v for k, v in plan["details_per_task"].items())
    option_count = sum(k * v for k, v in plan["options_per_detail"].items())
    return SplitStats(
        task_count=plan["tasks"],
        vague_count=plan["vague"],
        clear_count=plan["tasks"] - plan["vague"],
        category_count=plan["categories"],
        detail_count=detail_count,
        avg_details_per_vague_task=detail_count / plan["vague"],
        level_shares={lvl: n / detail_count for lvl, n in plan["levels"].items()},
        option_count=option_count,
        avg_options_per_vague_task=option_count / plan["vague"],
    )


TRAIN_EXPECTED = _expected_stats(_TRAIN)
TEST_EXPECTED = _expected_stats(_TEST)


# --- sample tasks and mock scripts ---------------------------------------------


def build_sample_tasks() -> list[TaskRecord]:
    """Ten tasks (eight vague, two clear) for demos and simulator fixtures."""
    rng = random.Random("sample-tasks")
    base = build_split("test", seed=7)
    vague = [t for t in base if t.vague][:8]
    clear = [t for t in base if not t.vague][:2]
    chosen = vague + clear
    rng.shuffle(chosen)
    return [
        TaskRecord(
            id=f"sample-{i:02d}",
            category=t.category,
            description=t.description,
            vague=t.vague,
            missing_details=t.missing_details,
            split="test",
        )
        for i, t in enumerate(chosen)
    ]


def _fixture_rounds(task: TaskRecord) -> int:
    return min(len(task.missing_details), 3)


def _scripted_inquiry(detail: MissingDetail) -> str:
    menu = " or ".join(detail.options)
    return (
        f"[INQUIRY THOUGHT] The task does not specify the {detail.description}, "
        "so I will ask about it directly.\n"
        f"[INQUIRY] Could you tell me the {detail.description}? "
        f"For example {menu}."
    )


def _scripted_reply(detail: MissingDetail, tone: str) -> str:
    choice = detail.options[0] if detail.options else "whatever you suggest"
    if tone == "succinct":
        return f"{choice}."
    return (
        f"Oh, great question! I have thought about it a lot and {choice} "
        "would really suit me best."
    )


def _scripted_summary(task: TaskRecord, rounds: int) -> dict:
    constraints = [
        f"{d.description}: {d.options[0] if d.options else 'as discussed'}"
        for d in task.missing_details[:rounds]
    ]
    if constraints:
        thought = (
            f"To summarize the chat, the user settled {rounds} missing details "
            "and the goal can now be stated fully."
        )
        summary = (
            f"The user's complete intention: {task.description[:-1]} with "
            + "; ".join(constraints) + "."
        )
    else:
        thought = "The task is already clear and complete, so the summary restates it."
        summary = f"The user's complete intention: {task.description}"
    return {"thought": thought, "constraints": constraints, "summary": summary}


def build_simulation_scripts(
    tasks: Sequence[TaskRecord], tones: Sequence[str] = TONES
) -> tuple[list, list]:
    """Mock-backend scripts that drive :func:`simulate_records` offline.

    Entries follow the simulator's consumption order exactly (task-major,
    then tone): for a vague task the asker script holds each round's inquiry,
    a plain-text stop turn, then the summary tool payload, while the user
    script holds one reply per round.  Clear tasks consume only a summary
    payload.  Run the batch with ``max_workers=1`` so the order holds.
    """
    assistant: list = []
    user: list = []
    for task in tasks:
        for tone in tones:
            if task.vague:
                rounds = _fixture_rounds(task)
                for detail in task.missing_details[:rounds]:
                    assistant.append(_scripted_inquiry(detail))
                    user.append(_scripted_reply(detail, tone))
                assistant.append("No further questions come to mind.")
                assistant.append(_scripted_summary(task, rounds))
            else:
                assistant.append(_scripted_summary(task, 0))
    return assistant, user


def build_demo_session_script() -> list[str]:
    """A scripted two-round chat session for the CLI and HTTP demos."""
    turn_one = (
        "[INITIAL THOUGHT] The user's task is vague because it lacks specific "
        "details such as the preferred budget range and the time frame.\n"
        "Some aspects of missing details and potential options are as follows:\n"
        "- preferred budget range: Under 50 dollars, 50 to 200 dollars, "
        "More than 200 dollars\n"
        "- time frame or deadline: Within a week, Within a month, No strict deadline\n"
        "[INQUIRY THOUGHT] The budget shapes every other choice, so I will ask "
        "about the preferred budget range first.\n"
        "[INQUIRY] What budget do you have in mind? For example Under 50 dollars, "
        "50 to 200 dollars, or More than 200 dollars."
    )
    turn_two = (
        "[INQUIRY THOUGHT] With the budget settled, the time frame or deadline "
        "is the next blocking detail.\n"
        "[INQUIRY] When does this need to happen? For example Within a week, "
        "Within a month, or with No strict deadline."
    )
    turn_three = (
        "[SUMMARY THOUGHT] To summarize the chat, the user settled the budget "
        "and the deadline, so the goal can be stated fully.\n"
        "- preferred budget range: 50 to 200 dollars\n"
        "- time frame or deadline: Within a month\n"
        "[SUMMARY] The user wants this done within a month on a budget of 50 to "
        "200 dollars."
    )
    return [turn_one, turn_two, turn_three]


# --- evaluation fixtures --------------------------------------------------------


def build_eval_fixture_logs() -> list[EvalLog]:
    """Ten hand-written evaluation logs with externally checkable metrics.

    Judgment accuracy is 8/10.  Exactly two model-vague tasks carry level-3
    ground truth (1 of 2 and 1 of 1 recovered, macro 0.75), and the round
    counts over all ten logs sum to 20 (average 2.0).
    """

    def rl(details: list[str], options: list[int], reasonable: int) -> RoundLog:
        return RoundLog(tuple(details), tuple(options), reasonable)

    logs = [
        EvalLog(  # vague, judged vague; recovers 1 of 2 level-3 details
            task_id="fx-00", judgment="vague", judgment_truth="vague",
            rounds=(rl(["budget", "deadline"], [3, 3], 5), rl(["audience"], [0], 0)),
            summarized_count=3, provided_count=3,
            matched={2: frozenset({"audience"}), 3: frozenset({"budget"})},
            truth_counts={1: 0, 2: 1, 3: 2},
        ),
        EvalLog(  # vague, judged vague; recovers its single level-3 detail
            task_id="fx-01", judgment="vague", judgment_truth="vague",
            rounds=(
                rl(["location"], [4], 4),
                rl(["duration"], [3], 2),
                rl(["equipment"], [0], 0),
            ),
            summarized_count=2, provided_count=3,
            matched={2: frozenset({"duration"}), 3: frozenset({"location"})},
            truth_counts={1: 1, 2: 2, 3: 1},
        ),
        EvalLog(
            task_id="fx-02", judgment="vague", judgment_truth="vague",
            rounds=(rl(["style", "frequency"], [3, 2], 4),),
            summarized_count=2, provided_count=2,
            matched={1: frozenset({"style"}), 2: frozenset({"frequency"})},
            truth_counts={1: 1, 2: 2, 3: 0},
        ),
        EvalLog(
            task_id="fx-03", judgment="vague", judgment_truth="vague",
            rounds=(rl(["audience"], [3], 3), rl(["format"], [3], 1)),
            summarized_count=1, provided_count=2,
            matched={2: frozenset({"audience", "format"})},
            truth_counts={1: 0, 2: 3, 3: 0},
        ),
        EvalLog(
            task_id="fx-04", judgment="vague", judgment_truth="vague",
            rounds=(
                rl(["transport"], [4], 2),
                rl(["season"], [0], 0),
                rl(["group size"], [3], 3),
            ),
            summarized_count=3, provided_count=3,
            matched={1: frozenset({"season"}), 2: frozenset({"transport", "group size"})},
            truth_counts={1: 2, 2: 2, 3: 0},
        ),
        EvalLog(
            task_id="fx-05", judgment="vague", judgment_truth="vague",
            rounds=(
                rl(["budget"], [3], 3),
                rl(["deadline"], [2], 2),
                rl(["tools", "priority"], [3, 0], 1),
                rl(["language"], [2], 2),
            ),
            summarized_count=4, provided_count=4,
            matched={2: frozenset({"budget", "deadline", "tools"})},
            truth_counts={1: 1, 2: 3, 3: 0},
        ),
        EvalLog(
            task_id="fx-06", judgment="vague", judgment_truth="vague",
            rounds=(rl(["setting"], [2], 1), rl(["guidance"], [3], 3), rl(["goal"], [0], 0)),
            summarized_count=2, provided_count=3,
            matched={1: frozenset({"setting"}), 2: frozenset({"goal"})},
            truth_counts={1: 1, 2: 2, 3: 0},
        ),
        EvalLog(  # vague task the model wrongly judged clear
            task_id="fx-07", judgment="clear", judgment_truth="vague",
            rounds=(), summarized_count=0, provided_count=0,
            matched={}, truth_counts={1: 0, 2: 2, 3: 1},
        ),
        EvalLog(  # clear task, judged clear
            task_id="fx-08", judgment="clear", judgment_truth="clear",
            rounds=(), summarized_count=0, provided_count=0,
            matched={}, truth_counts={},
        ),
        EvalLog(  # clear task the model wrongly judged vague
            task_id="fx-09", judgment="vague", judgment_truth="clear",
            rounds=(rl(["budget"], [3], 2), rl(["deadline"], [2], 2)),
            summarized_count=2, provided_count=2,
            matched={}, truth_counts={},
        ),
    ]
    assert sum(len(log.rounds) for log in logs) == 20
    return logs


def build_execution_fixture_logs() -> list[ExecutionLog]:
    """Three executor traces: 9 subtasks (2 unnecessary, 1 general, 18 tool
    calls) over 18 milestones (3 unnecessary, 2 general, one tool call each).
    """

    def ms(unnecessary: bool = False, general: bool = False) -> Milestone:
        return Milestone(unnecessary=unnecessary, general=general, tool_invocations=1)

    def st(tools: int, unnecessary=False, general=False, milestones=()) -> Subtask:
        return Subtask(
            unnecessary=unnecessary,
            general=general,
            tool_invocations=tools,
            milestones=milestones or (ms(), ms()),
        )

    return [
        ExecutionLog(
            task_id="fx-exec-0",
            subtasks=(
                st(2, unnecessary=True, milestones=(ms(unnecessary=True), ms())),
                st(1),
                st(3, milestones=(ms(general=True), ms())),
            ),
        ),
        ExecutionLog(
            task_id="fx-exec-1",
            subtasks=(
                st(0),
                st(2, unnecessary=True, milestones=(ms(unnecessary=True), ms(unnecessary=True))),
                st(4, general=True, milestones=(ms(general=True), ms())),
            ),
        ),
        ExecutionLog(
            task_id="fx-exec-2",
            subtasks=(st(1), st(2), st(3)),
        ),
    ]


# --- bundled files ----------------------------------------------------------------


def write_bundled_data(root: str | Path) -> list[Path]:
    """Write every bundled artifact under ``root`` and return the paths.

    Output is byte-deterministic: regenerating over an existing tree must
    produce identical files.
    """
    root = Path(root)
    fixtures = root / "fixtures"
    scripts = fixtures / "scripts"
    scripts.mkdir(parents=True, exist_ok=True)

    written = []

    def emit_json(path: Path, payload) -> None:
        path.write_text(
            json.dumps(payload, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
        )
        written.append(path)

    train_path = root / "synthetic_train.jsonl"
    save_dataset(build_split("training"), train_path)
    written.append(train_path)
    test_path = root / "synthetic_test.jsonl"
    save_dataset(build_split("test"), test_path)
    written.append(test_path)

    samples = build_sample_tasks()
    sample_path = fixtures / "tasks_sample.jsonl"
    save_dataset(samples, sample_path)
    written.append(sample_path)

    assistant, user = build_simulation_scripts(samples)
    emit_json(scripts / "sim_assistant.json", assistant)
    emit_json(scripts / "sim_user.json", user)
    emit_json(scripts / "demo_session.json", build_demo_session_script())

    eval_path = fixtures / "eval_logs_sample.jsonl"
    write_eval_logs(build_eval_fixture_logs(), eval_path)
    written.append(eval_path)
    exec_path = fixtures / "execution_logs_sample.jsonl"
    write_execution_logs(build_execution_fixture_logs(), exec_path)
    written.append(exec_path)
    return written
