"""clarigate: an intention-clarification gateway for agent tasks.

Sits between a user and a task executor: judges whether the stated task is
vague, asks targeted questions with options until the intention is explicit,
then hands off a summarized goal with the user's constraints.
"""

from .backends import (
    ChatBackend,
    ChatMessage,
    GenerationParams,
    MockBackend,
    OpenAIChatBackend,
    ToolSchema,
)
from .dataset import (
    MissingDetail,
    SplitStats,
    TaskRecord,
    compute_stats,
    load_dataset,
    save_dataset,
    validate,
    validate_dataset,
)
from .engine import (
    ClarifiedGoal,
    ClarifierPolicy,
    SessionState,
    abort,
    advance,
    handoff,
    handoff_payload,
    open_session,
)
from .grammar import (
    ConversationRecord,
    InitialJudgment,
    Inquiry,
    MarkerConfig,
    MenuItem,
    Summary,
    TrainingInstance,
    assemble_training_instances,
    parse_assistant_text,
    parse_record,
    render_initial_thought,
    serialize_record,
)
from .metrics import (
    EvalLog,
    ExecutionLog,
    MetricReport,
    RoundLog,
    compute_execution_metrics,
    compute_metrics,
    match_details,
)
from .simulate import construct_record, simulate_records
from .store import SessionStore
from .taskgen import CandidateTask, HashingEmbedder, dedup, generate_candidates

__version__ = "0.1.0"

__all__ = [
    "CandidateTask",
    "ChatBackend",
    "ChatMessage",
    "ClarifiedGoal",
    "ClarifierPolicy",
    "ConversationRecord",
    "EvalLog",
    "ExecutionLog",
    "GenerationParams",
    "HashingEmbedder",
    "InitialJudgment",
    "Inquiry",
    "MarkerConfig",
    "MenuItem",
    "MetricReport",
    "MissingDetail",
    "MockBackend",
    "OpenAIChatBackend",
    "RoundLog",
    "SessionState",
    "SessionStore",
    "SplitStats",
    "Summary",
    "TaskRecord",
    "ToolSchema",
    "TrainingInstance",
    "abort",
    "advance",
    "assemble_training_instances",
    "compute_execution_metrics",
    "compute_metrics",
    "compute_stats",
    "construct_record",
    "dedup",
    "generate_candidates",
    "handoff",
    "handoff_payload",
    "load_dataset",
    "match_details",
    "open_session",
    "parse_assistant_text",
    "parse_record",
    "render_initial_thought",
    "save_dataset",
    "serialize_record",
    "simulate_records",
    "validate",
    "validate_dataset",
]
