"""Recall-at-k over ranked recommendations, at three stages.

* data queries — does any top-k recommendation select the same field set
  as some ground-truth chart of the table (roles ignored)?
* design choices — given each truth chart's field set as a required-field
  constraint, does any top-k recommendation match a truth chart exactly?
* overall — does any top-k recommendation match a truth chart exactly?

Chart equality compares chart type, the y-segment as a multiset, the
x-segment as an ordered list (x concatenation order matters) and the
grouping operation.
"""

from __future__ import annotations

import json
import time
from collections import Counter
from dataclasses import dataclass, field as dc_field

from .errors import ChartrecError, EmptyCorpus, UnsatisfiableConstraints
from .grammar import (
    TOKEN_CLUSTER,
    TOKEN_SEP,
    TOKEN_STACK,
    ChartSequence,
    ChartType,
    chart_type_of,
    field_index,
    is_field_token,
)
from .search import SearchConfig, beam_search, recommend


class EmptyTruth(ChartrecError):
    """A table arrived without any ground-truth chart."""


def chart_parts(chart: ChartSequence):
    """(type token, y multiset, x tuple, grouping token or None)."""
    y: list[int] = []
    x: list[int] = []
    grp = None
    seen_sep = False
    for tok in chart[1:]:
        if is_field_token(tok):
            (x if seen_sep else y).append(field_index(tok))
        elif tok == TOKEN_SEP:
            if not seen_sep:
                seen_sep = True
        if tok in (TOKEN_CLUSTER, TOKEN_STACK):
            grp = tok
    return (chart[0], frozenset(Counter(y).items()), tuple(x), grp)


def charts_match(a: ChartSequence, b: ChartSequence) -> bool:
    return chart_parts(a) == chart_parts(b)


def fields_of(chart: ChartSequence) -> frozenset[int]:
    return frozenset(field_index(t) for t in chart if is_field_token(t))


def _check_truths(truths_per_table) -> None:
    for truths in truths_per_table:
        if not truths:
            raise EmptyTruth("every table needs at least one ground-truth chart")


def recall_data_queries(recs_per_table, truths_per_table, k: int) -> float:
    """Fraction of tables where a top-k rec's field set equals a truth's."""
    _check_truths(truths_per_table)
    if not truths_per_table:
        raise EmptyCorpus("no tables to evaluate")
    hit = 0
    for recs, truths in zip(recs_per_table, truths_per_table):
        truth_sets = {fields_of(t) for t in truths}
        if any(fields_of(r.state) in truth_sets for r in recs[:k]):
            hit += 1
    return hit / len(truths_per_table)


def recall_overall(recs_per_table, truths_per_table, k: int) -> float:
    """Fraction of tables where a top-k rec matches a truth chart exactly."""
    _check_truths(truths_per_table)
    if not truths_per_table:
        raise EmptyCorpus("no tables to evaluate")
    hit = 0
    for recs, truths in zip(recs_per_table, truths_per_table):
        if any(any(charts_match(r.state, t) for t in truths) for r in recs[:k]):
            hit += 1
    return hit / len(truths_per_table)


def recall_design_choices(
    model_or_scorer, entries_truths, k: int, config: SearchConfig = SearchConfig()
) -> float:
    """Per user-created field set: constrain the search to exactly that set
    and check whether a top-k result matches a truth chart."""
    units = 0
    hit = 0
    for table, truths in entries_truths:
        if not truths:
            raise EmptyTruth(f"table {table.table_id!r} has no truth charts")
        for fset in sorted({fields_of(t) for t in truths}, key=sorted):
            units += 1
            try:
                recs = recommend(
                    model_or_scorer, table, fields=fset, top=k, base_config=config
                )
            except UnsatisfiableConstraints:
                continue
            if any(
                any(charts_match(r.state, t) for t in truths) for r in recs[:k]
            ):
                hit += 1
    if units == 0:
        raise EmptyCorpus("no field sets to evaluate")
    return hit / units


@dataclass
class EvalReport:
    stages: dict[str, dict[str, float]]
    n_tables: int
    n_field_sets: int
    per_type: dict[str, dict[str, float]] = dc_field(default_factory=dict)
    mean_latency_ms: float = 0.0

    def to_json(self) -> str:
        return json.dumps(
            {
                "stages": self.stages,
                "counts": {"tables": self.n_tables, "fieldSets": self.n_field_sets},
                "perType": self.per_type,
                "meanLatencyMs": self.mean_latency_ms,
            },
            indent=2,
        )

    def to_text(self) -> str:
        lines = [f"{'stage':<16}{'R@1':>8}{'R@3':>8}"]
        for stage, vals in self.stages.items():
            lines.append(f"{stage:<16}{vals.get(1, 0.0):>8.4f}{vals.get(3, 0.0):>8.4f}")
        for name, vals in self.per_type.items():
            lines.append(
                f"  {name:<14}{vals.get(1, 0.0):>8.4f}{vals.get(3, 0.0):>8.4f}  (n={int(vals['n'])})"
            )
        lines.append(f"tables={self.n_tables} fieldSets={self.n_field_sets}")
        lines.append(f"mean latency: {self.mean_latency_ms:.2f} ms")
        return "\n".join(lines)


def overall_recall_at_k(model_or_scorer, entries, k: int, config: SearchConfig) -> float:
    """Cheap overall R@k (used for per-epoch validation)."""
    from .search import ModelScorer

    scorer = (
        ModelScorer(model_or_scorer, config.constraints)
        if hasattr(model_or_scorer, "decode_step")
        else model_or_scorer
    )
    recs = []
    truths = []
    for entry in entries:
        recs.append(beam_search(scorer, entry.table, config))
        truths.append(entry.charts)
    return recall_overall(recs, truths, k)


def evaluate_model(
    model_or_scorer,
    entries,
    ks: tuple[int, ...] = (1, 3),
    config: SearchConfig = SearchConfig(),
    design_stage: bool = True,
) -> EvalReport:
    """Full three-stage report over corpus entries."""
    from .search import ModelScorer

    if not entries:
        raise EmptyCorpus("no entries to evaluate")
    is_model = hasattr(model_or_scorer, "decode_step")
    scorer = ModelScorer(model_or_scorer, config.constraints) if is_model else model_or_scorer
    recs_per_table = []
    truths_per_table = []
    t0 = time.perf_counter()
    for entry in entries:
        recs_per_table.append(beam_search(scorer, entry.table, config))
        truths_per_table.append(sorted(entry.charts))
    latency_ms = (time.perf_counter() - t0) * 1000.0 / len(entries)

    stages: dict[str, dict[int, float]] = {
        "data_queries": {},
        "design_choices": {},
        "overall": {},
    }
    for k in ks:
        stages["data_queries"][k] = recall_data_queries(recs_per_table, truths_per_table, k)
        stages["overall"][k] = recall_overall(recs_per_table, truths_per_table, k)
    if design_stage:
        pairs = [(e.table, sorted(e.charts)) for e in entries]
        for k in ks:
            stages["design_choices"][k] = recall_design_choices(
                model_or_scorer, pairs, k, config
            )
    else:
        stages.pop("design_choices")

    per_type: dict[str, dict] = {}
    for chart_type in ChartType:
        idx = [
            i
            for i, truths in enumerate(truths_per_table)
            if any(chart_type_of(t) is chart_type for t in truths)
        ]
        if not idx:
            continue
        sub_recs = [recs_per_table[i] for i in idx]
        sub_truths = [
            [t for t in truths_per_table[i] if chart_type_of(t) is chart_type] for i in idx
        ]
        per_type[chart_type.value] = {
            k: recall_overall(sub_recs, sub_truths, k) for k in ks
        } | {"n": len(idx)}

    n_field_sets = sum(len({fields_of(t) for t in truths}) for truths in truths_per_table)
    return EvalReport(
        stages=stages,
        n_tables=len(entries),
        n_field_sets=n_field_sets,
        per_type=per_type,
        mean_latency_ms=latency_ms,
    )
