"""Drill-down heuristic beam search over chart templates.

The frontier is a max-priority pool of scored partial sequences. Each round
pops the top ``beam_size`` states; every popped state greedily follows the
best-scored legal action until a complete sequence lands in the result
list, while each non-chosen child goes back to the frontier carrying the
score of the action that produced it. Searching stops when the number of
expansions (one scorer call over one state) exceeds ``expand_limit`` or the
frontier drains.

Ties break deterministically everywhere: higher score first, then shorter
state, then token order ([Line] < [Bar] < [Scatter] < [Pie] < [Area] <
[Radar] < [SEP] < [Cluster] < [Stack] < fields by index, i.e. command
tokens sort before field references).
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field as dc_field
from typing import Protocol

import numpy as np

from .errors import NoLegalSeed, UnsatisfiableConstraints
from .features import token_segments
from .grammar import (
    DEFAULT_CONSTRAINTS,
    MAJOR_TYPES,
    ChartSequence,
    ChartType,
    HardConstraints,
    Token,
    field_index,
    is_complete,
    is_field_token,
    legal_actions,
)
from .oracle import OracleScorer
from .tables import Table


class Scorer(Protocol):
    def q_values(self, table: Table, state: ChartSequence) -> dict[Token, float]: ...


@dataclass(frozen=True)
class SearchConfig:
    beam_size: int = 4
    expand_limit: int = 100
    chart_types: tuple[ChartType, ...] = MAJOR_TYPES
    constraints: HardConstraints = DEFAULT_CONSTRAINTS
    max_results: int | None = None

    def __post_init__(self):
        if self.beam_size < 1 or self.expand_limit < 1:
            raise ValueError("beam_size and expand_limit must be >= 1")


@dataclass(frozen=True)
class Recommendation:
    state: ChartSequence
    score: float


class RecommendationList(list):
    """Ranked complete sequences; carries search accounting for callers."""

    expansions: int = 0


class ModelScorer:
    """q_values adapter over a model with per-table memory/state caching.

    Within one search states grow token by token, so caching the decoder
    state per prefix makes each expansion cost a single decode step.
    """

    def __init__(self, model, constraints: HardConstraints = DEFAULT_CONSTRAINTS):
        self.model = model
        self.constraints = constraints
        self._memory: dict[str, np.ndarray] = {}
        self._z: dict[tuple, np.ndarray] = {}

    def reset(self) -> None:
        self._memory.clear()
        self._z.clear()

    def _mem(self, table: Table) -> np.ndarray:
        hit = self._memory.get(table.table_id)
        if hit is None:
            if len(self._memory) > 64:
                self._memory.clear()
                self._z.clear()
            hit = self.model.encode(table)
            self._memory[table.table_id] = hit
        return hit

    def _z_after(self, table: Table, state: ChartSequence, memory) -> np.ndarray:
        if not state:
            return self.model.initial_state(memory)
        key = (table.table_id, state)
        hit = self._z.get(key)
        if hit is not None:
            return hit
        segments = token_segments(state)
        z = self._z_after(table, state[:-1], memory)
        z, _, _ = self.model.decode_step(memory, z, state[-1], table, segments[-1])
        if len(self._z) > 200_000:
            self._z.clear()
        self._z[key] = z
        return z

    def q_values(self, table: Table, state: ChartSequence) -> dict[Token, float]:
        memory = self._mem(table)
        z_prev = self._z_after(table, state[:-1], memory)
        segments = token_segments(state)
        z, gen_scores, copy_scores = self.model.decode_step(
            memory, z_prev, state[-1], table, segments[-1]
        )
        self._z[(table.table_id, state)] = z
        legal = legal_actions(table, state, self.constraints)
        return {
            a: float(copy_scores[field_index(a)]) if is_field_token(a) else float(gen_scores[a])
            for a in legal
        }


def _heap_key(score: float, state: ChartSequence):
    return (-score, len(state), state)


def beam_search(
    scorer: Scorer, table: Table, config: SearchConfig = SearchConfig()
) -> RecommendationList:
    """Ranked complete chart sequences for one table."""
    constraints = config.constraints
    allowed = constraints.allowed_types
    seed_types = [t for t in config.chart_types if allowed is None or t in allowed]
    if not seed_types:
        raise NoLegalSeed("constraints exclude every chart type")
    frontier: list[tuple[tuple, float, ChartSequence]] = []
    for ct in sorted(seed_types, key=lambda t: t.token):
        state = (ct.token,)
        heapq.heappush(frontier, (_heap_key(1.0, state), 1.0, state))

    results: dict[ChartSequence, float] = {}
    drilled: set[ChartSequence] = set()
    expansions = 0

    while frontier and expansions <= config.expand_limit:
        beam: list[tuple[ChartSequence, float]] = []
        while frontier and len(beam) < config.beam_size:
            _, score, state = heapq.heappop(frontier)
            if state in drilled:
                continue
            beam.append((state, score))
        if not beam:
            break
        for state, score in beam:
            cur, cur_score = state, score
            while True:
                if is_complete(cur):
                    prev = results.get(cur)
                    if prev is None or cur_score > prev:
                        results[cur] = cur_score
                    break
                if cur in drilled:
                    break
                q = scorer.q_values(table, cur)
                expansions += 1
                drilled.add(cur)
                if not q:
                    break  # constraint dead end; abandon this path
                best_action, best_score = min(q.items(), key=lambda kv: (-kv[1], kv[0]))
                for action, a_score in q.items():
                    if action == best_action:
                        continue
                    child = cur + (action,)
                    heapq.heappush(frontier, (_heap_key(a_score, child), a_score, child))
                cur, cur_score = cur + (best_action,), best_score

    ranked = sorted(results.items(), key=lambda kv: (-kv[1], len(kv[0]), kv[0]))
    if config.max_results is not None:
        ranked = ranked[: config.max_results]
    out = RecommendationList(Recommendation(s, sc) for s, sc in ranked)
    out.expansions = expansions
    return out


def _satisfiable(table: Table, seed: ChartSequence, constraints: HardConstraints) -> bool:
    """Can any complete sequence be reached from ``seed`` under constraints?"""
    limit = constraints.max_sequence_length()
    stack = [seed]
    visited = 0
    while stack:
        state = stack.pop()
        visited += 1
        if visited > 20_000:
            return True  # assume satisfiable rather than scanning forever
        if is_complete(state):
            return True
        if len(state) >= limit:
            continue
        stack.extend(state + (a,) for a in legal_actions(table, state, constraints))
    return False


def recommend(
    model_or_scorer,
    table: Table,
    fields: frozenset[int] | None = None,
    chart_types: frozenset[ChartType] | None = None,
    top: int | None = None,
    base_config: SearchConfig = SearchConfig(),
) -> RecommendationList:
    """Beam search with user constraints folded into the legal-action rules.

    With a required field set, sequences can only complete once they use
    exactly those fields. Raises :class:`UnsatisfiableConstraints` when no
    chart can exist under the constraints.
    """
    constraints = base_config.constraints.with_user(fields=fields, types=chart_types)
    seed_types = chart_types if chart_types is not None else base_config.chart_types
    config = SearchConfig(
        beam_size=base_config.beam_size,
        expand_limit=base_config.expand_limit,
        chart_types=tuple(sorted(seed_types, key=lambda t: t.token)),
        constraints=constraints,
        max_results=top if top is not None else base_config.max_results,
    )
    viable = [
        ct for ct in config.chart_types if _satisfiable(table, (ct.token,), constraints)
    ]
    if not viable:
        raise UnsatisfiableConstraints(
            f"no complete chart exists for table {table.table_id!r} under the given constraints"
        )
    if isinstance(model_or_scorer, OracleScorer):
        scorer: Scorer = OracleScorer(model_or_scorer.targets, constraints)
    elif isinstance(model_or_scorer, ModelScorer):
        scorer = ModelScorer(model_or_scorer.model, constraints)
    elif hasattr(model_or_scorer, "decode_step"):
        scorer = ModelScorer(model_or_scorer, constraints)
    else:
        scorer = model_or_scorer
    return beam_search(scorer, table, config)
