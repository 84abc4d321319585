"""Task candidate generation and embedding-based deduplication.

New task descriptions are produced by repeatedly prompting a backend with a
small sample of demonstrations (seed tasks plus already-accepted candidates)
and collecting the structured batch it returns.  Generation stops once the
requested count is reached or the call budget runs out; a short batch simply
leaves room for the next call.

Deduplication embeds every candidate, then greedily walks the list keeping a
candidate only if its cosine similarity to every already-kept candidate is
strictly below the threshold; the first occurrence always wins.  Exact text
duplicates are dropped outright so they never survive on a float technicality.
The embedder is pluggable; :class:`HashingEmbedder` is a deterministic,
offline default built from per-token hash-seeded Gaussian vectors.
"""

from __future__ import annotations

import hashlib
import logging
import random
import re
from dataclasses import dataclass, replace
from typing import Protocol, Sequence

import numpy as np

from .backends import ChatBackend, ChatMessage, ToolSchema
from .errors import BackendError, StructuredOutputError
from .prompts import GENERATE_TASKS_TOOL, TASKGEN_SYSTEM_PROMPT

logger = logging.getLogger(__name__)

_TOKEN_RE = re.compile(r"[\w']+")


@dataclass(frozen=True)
class CandidateTask:
    """A generated task description, optionally carrying its embedding."""

    text: str
    category: str
    embedding: tuple[float, ...] | None = None

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("candidate text must be non-empty")


class Embedder(Protocol):
    def embed(self, texts: Sequence[str]) -> np.ndarray:
        """Return one embedding row per input text."""


class HashingEmbedder:
    """Deterministic bag-of-tokens embedder for offline deduplication.

    Each token contributes a Gaussian vector seeded from its BLAKE2 digest,
    so identical texts embed identically on every platform and run.
    """

    def __init__(self, dim: int = 64):
        if dim < 1:
            raise ValueError("embedding dimension must be positive")
        self.dim = dim

    def _token_vector(self, token: str) -> np.ndarray:
        digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
        seed = int.from_bytes(digest, "big")
        return np.random.default_rng(seed).standard_normal(self.dim)

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        rows = np.zeros((len(texts), self.dim))
        for i, text in enumerate(texts):
            for token in _TOKEN_RE.findall(text.casefold()):
                rows[i] += self._token_vector(token)
        return rows


def _demonstration_message(category: str, demos: Sequence[str], want: int) -> str:
    listing = "\n".join(f"- {demo}" for demo in demos)
    return (
        f"Category: {category}\n"
        f"Example tasks:\n{listing}\n\n"
        f"Generate {want} new user tasks for this category. Each task must be a "
        "single instruction differing from every example in scenario and wording."
    )


def generate_candidates(
    seeds: Sequence[str],
    category: str,
    n: int,
    backend: ChatBackend,
    k: int = 4,
    max_calls: int = 20,
    seed: int = 0,
) -> list[CandidateTask]:
    """Generate up to ``n`` distinct task candidates for one category.

    Each call samples ``k`` demonstrations from the seeds plus everything
    accepted so far.  Texts already seen (seed or accepted, exact match) are
    skipped.  If the call budget is exhausted or the backend fails after its
    own retries, the partial result is returned with a warning.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if not seeds:
        raise ValueError("at least one seed task is required")
    tool = ToolSchema.from_dict(GENERATE_TASKS_TOOL)
    rng = random.Random(seed)
    pool = [s.strip() for s in seeds]
    seen = set(pool)
    accepted: list[CandidateTask] = []
    calls = 0
    while len(accepted) < n and calls < max_calls:
        demos = rng.sample(pool, min(k, len(pool)))
        messages = [
            ChatMessage(role="system", content=TASKGEN_SYSTEM_PROMPT),
            ChatMessage(
                role="user",
                content=_demonstration_message(category, demos, n - len(accepted)),
            ),
        ]
        calls += 1
        try:
            arguments = backend.complete_structured(messages, tool)
        except (BackendError, StructuredOutputError) as exc:
            logger.warning(
                "task generation stopped after %d candidates: %s", len(accepted), exc
            )
            return accepted
        for text in arguments["tasks"]:
            text = text.strip()
            if not text or text in seen:
                continue
            seen.add(text)
            pool.append(text)
            accepted.append(CandidateTask(text=text, category=category))
            if len(accepted) == n:
                break
    if len(accepted) < n:
        logger.warning(
            "call budget exhausted: produced %d of %d candidates", len(accepted), n
        )
    return accepted


def _embedding_matrix(
    candidates: Sequence[CandidateTask], embedder: Embedder | None
) -> np.ndarray:
    """Stack candidate embeddings, computing the missing ones in one batch."""
    missing = [i for i, c in enumerate(candidates) if c.embedding is None]
    computed = {}
    if missing:
        if embedder is None:
            raise ValueError("an embedder is required when candidates lack embeddings")
        batch = embedder.embed([candidates[i].text for i in missing])
        computed = {i: np.asarray(batch[j], dtype=float) for j, i in enumerate(missing)}
    rows = [
        computed[i] if i in computed else np.asarray(c.embedding, dtype=float)
        for i, c in enumerate(candidates)
    ]
    dims = {row.shape for row in rows}
    if len(dims) > 1:
        raise ValueError(f"inconsistent embedding dimensions: {sorted(dims)}")
    if rows and rows[0].ndim != 1:
        raise ValueError("embeddings must be one-dimensional")
    return np.stack(rows)


def dedup(
    candidates: Sequence[CandidateTask],
    embedder: Embedder | None = None,
    threshold: float = 0.8,
) -> list[CandidateTask]:
    """Drop near-duplicate candidates, keeping the first of each cluster.

    A candidate survives only if its cosine similarity to every kept
    candidate is strictly below ``threshold``.  Exact text duplicates are
    always dropped, whatever the threshold.  Returned candidates carry the
    embedding that was used for the decision.
    """
    if not 0 < threshold <= 1:
        raise ValueError("threshold must be in (0, 1]")
    if not candidates:
        return []
    matrix = _embedding_matrix(candidates, embedder)
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    unit = matrix / np.maximum(norms, 1e-10)
    kept: list[CandidateTask] = []
    kept_rows: list[np.ndarray] = []
    kept_texts: set[str] = set()
    for candidate, raw, row in zip(candidates, matrix, unit):
        if candidate.text in kept_texts:
            continue
        if kept_rows and float(np.max(np.stack(kept_rows) @ row)) >= threshold:
            continue
        kept.append(replace(candidate, embedding=tuple(float(x) for x in raw)))
        kept_rows.append(row)
        kept_texts.add(candidate.text)
    return kept
