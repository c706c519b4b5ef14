"""Teacher forcing, search sampling with a replay memory, and the three
training regimes (mixed / transfer / separate).

Teacher forcing draws every prefix of every ground-truth chart and labels
its legal actions with the optimal action values. Search sampling then
runs the beam search with the current network on each training table and
feeds every expanded state (negatives included) through a replay memory,
updating the network periodically — closing the gap between the states
seen in training and those visited at inference time.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field as dc_field, replace

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import EmptySplit, KeyMismatch
from .grammar import (
    DEFAULT_CONSTRAINTS,
    MAJOR_TYPES,
    N_COMMANDS,
    ChartSequence,
    ChartType,
    HardConstraints,
    Token,
    field_index,
    is_field_token,
    legal_actions,
)
from .model import DqnModel, EncodedBatch, build_model, is_encoder_param
from .optim import AdamConfig, AdamState
from .oracle import TargetSet, label_vector
from .search import ModelScorer, SearchConfig, beam_search
from .tables import Table

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class LabeledStep:
    table: Table
    state: ChartSequence
    labels: dict[Token, int]  # over legal_actions(state)


@dataclass
class ReplayMemory:
    """Bounded FIFO ring of labeled transitions with uniform sampling."""

    capacity: int = 100_000
    _items: list[LabeledStep] = dc_field(default_factory=list)
    _next: int = 0

    def add(self, step: LabeledStep) -> None:
        if len(self._items) < self.capacity:
            self._items.append(step)
        else:
            self._items[self._next] = step
            self._next = (self._next + 1) % self.capacity

    def __len__(self) -> int:
        return len(self._items)

    def sample(self, rng: np.random.Generator, k: int) -> list[LabeledStep]:
        k = min(k, len(self._items))
        idx = rng.choice(len(self._items), size=k, replace=False)
        return [self._items[i] for i in idx]


@dataclass(frozen=True)
class TrainPlan:
    """Training schedule. Desk-scale defaults; the full-scale schedule keeps
    the same shape (30 teacher-forcing epochs, 5 search-sampling epochs)."""

    regime: str = "mixed"  # "mixed" | "transfer:<Type>" | "separate:<Type>"
    tf_epochs: int = 30
    ss_epochs: int = 5
    batch_size: int = 32
    optimizer: AdamConfig = dc_field(default_factory=lambda: AdamConfig(lr=1e-3))
    seed: int = 0
    replay_capacity: int = 100_000
    replay_update_every: int = 8  # tables searched between optimizer steps
    ss_expand_limit: int = 25
    beam_size: int = 4
    val_tables: int = 100  # per-epoch validation subsample size
    val_expand_limit: int = 50
    constraints: HardConstraints = DEFAULT_CONSTRAINTS

    def regime_kind(self) -> str:
        return self.regime.split(":", 1)[0]

    def regime_types(self) -> tuple[ChartType, ...]:
        kind, _, rest = self.regime.partition(":")
        if kind == "mixed":
            return MAJOR_TYPES
        if kind in ("transfer", "separate") and rest:
            return (ChartType(rest.capitalize()),)
        raise ValueError(f"bad regime {self.regime!r}")


# ---------------------------------------------------------------------------
# labeled steps and loss
# ---------------------------------------------------------------------------


def _filter_charts(entry_charts, types: tuple[ChartType, ...]):
    wanted = {t.token for t in types}
    return frozenset(c for c in entry_charts if c[0] in wanted)


def _chart_reachable(table: Table, chart: ChartSequence, constraints: HardConstraints) -> bool:
    state: ChartSequence = ()
    for tok in chart:
        if state and tok not in legal_actions(table, state, constraints):
            return False
        state = state + (tok,)
    return True


def make_labeled_steps(
    entries,
    regime_types: tuple[ChartType, ...],
    constraints: HardConstraints = DEFAULT_CONSTRAINTS,
) -> list[LabeledStep]:
    """One step per non-terminal prefix state of the (filtered) targets."""
    if not entries:
        raise EmptySplit("no corpus entries to train on")
    steps: list[LabeledStep] = []
    for entry in entries:
        charts = _filter_charts(entry.charts, regime_types)
        charts = frozenset(
            c for c in charts if _chart_reachable(entry.table, c, constraints)
        )
        if not charts:
            continue
        targets = TargetSet.build(entry.table, charts)
        for state in targets.closure_states():
            if targets.is_target(state):
                continue
            legal = legal_actions(entry.table, state, constraints)
            if not legal:
                continue
            steps.append(LabeledStep(entry.table, state, label_vector(targets, state, legal)))
    if not steps:
        raise EmptySplit("no trainable states after filtering")
    return steps


def loss(scores: dict[Token, float], labels: dict[Token, int], eps: float = 1e-7) -> float:
    """Mean binary cross-entropy over one state's legal actions."""
    if set(scores) != set(labels):
        raise KeyMismatch("scores and labels cover different action sets")
    total = 0.0
    for a, s in scores.items():
        s = min(max(s, eps), 1.0 - eps)
        y = labels[a]
        total += -(y * math.log(s) + (1 - y) * math.log(1.0 - s))
    return total / len(scores)


def batch_bce(scores: Tensor, labels: np.ndarray, legal: np.ndarray, eps: float = 1e-7) -> Tensor:
    clamped = ad.clip(scores, eps, 1.0 - eps)
    pos = ad.mul(ad.log(clamped), labels * legal)
    neg = ad.mul(ad.log(ad.sub(1.0, clamped)), (1.0 - labels) * legal)
    total = ad.tsum(ad.add(pos, neg))
    return ad.mul(total, -1.0 / max(legal.sum(), 1.0))


def encode_batch(model: DqnModel, samples: list[LabeledStep]) -> EncodedBatch:
    featurizer = model.featurizer
    dtype = model.config.np_dtype()
    b = len(samples)
    n_max = max(s.table.n_fields for s in samples)
    l_max = max(len(s.state) for s in samples)
    width = featurizer.width
    enc_x = np.zeros((b, n_max, width), dtype=dtype)
    enc_mask = np.zeros((b, n_max), dtype=dtype)
    dec_x = np.zeros((b, l_max, width), dtype=dtype)
    dec_sel = np.zeros((b, l_max, n_max), dtype=dtype)
    dec_mask = np.zeros((b, l_max), dtype=dtype)
    labels = np.zeros((b, N_COMMANDS + n_max), dtype=dtype)
    legal = np.zeros((b, N_COMMANDS + n_max), dtype=dtype)
    for i, step in enumerate(samples):
        n = step.table.n_fields
        length = len(step.state)
        enc_x[i, :n] = featurizer.encoder_matrix(step.table)
        enc_mask[i, :n] = 1.0
        dec_x[i, :length] = featurizer.sequence_matrix(step.table, step.state)
        dec_mask[i, :length] = 1.0
        for t, tok in enumerate(step.state):
            if is_field_token(tok):
                dec_sel[i, t, field_index(tok)] = 1.0
        for action, value in step.labels.items():
            col = action if not is_field_token(action) else N_COMMANDS + field_index(action)
            labels[i, col] = value
            legal[i, col] = 1.0
    return EncodedBatch(enc_x, enc_mask, dec_x, dec_sel, dec_mask, labels, legal)


# ---------------------------------------------------------------------------
# teacher forcing
# ---------------------------------------------------------------------------


def _frozen_names(model: DqnModel, plan: TrainPlan) -> frozenset[str]:
    if plan.regime_kind() == "transfer":
        return frozenset(n for n in model.params if is_encoder_param(n))
    return frozenset()


def restrict_to_types(entries, types: tuple[ChartType, ...]):
    """Entries that have at least one chart of the given types, with their
    chart sets filtered down to those types."""
    out = []
    for entry in entries:
        charts = _filter_charts(entry.charts, types)
        if charts:
            out.append(type(entry)(entry.table, charts))
    return out


def _val_recall(model: DqnModel, entries, plan: TrainPlan, rng: np.random.Generator) -> float:
    from .evaluate import overall_recall_at_k

    entries = restrict_to_types(entries, plan.regime_types())
    if not entries:
        return 0.0
    if len(entries) > plan.val_tables:
        idx = rng.choice(len(entries), size=plan.val_tables, replace=False)
        entries = [entries[i] for i in idx]
    config = SearchConfig(
        beam_size=plan.beam_size,
        expand_limit=plan.val_expand_limit,
        chart_types=plan.regime_types(),
        constraints=plan.constraints,
    )
    return overall_recall_at_k(model, entries, k=1, config=config)


def teacher_force(
    model: DqnModel,
    plan: TrainPlan,
    train_entries,
    valid_entries=(),
) -> list[dict]:
    """Epochs of minibatch Adam over shuffled prefix states.

    Returns per-epoch metric rows; the model ends at the best-validation
    checkpoint (falling back to the final epoch without validation data).
    """
    steps = make_labeled_steps(train_entries, plan.regime_types(), plan.constraints)
    frozen = _frozen_names(model, plan)
    adam = AdamState(model.params, plan.optimizer, frozen=frozen)
    rng = np.random.default_rng(plan.seed)
    metrics: list[dict] = []
    best = (-1.0, None)
    for epoch in range(plan.tf_epochs):
        order = rng.permutation(len(steps))
        epoch_loss = 0.0
        n_batches = 0
        for start in range(0, len(order), plan.batch_size):
            chunk = [steps[i] for i in order[start : start + plan.batch_size]]
            batch = encode_batch(model, chunk)
            scores = model.forward_batch(batch)
            loss_t = batch_bce(scores, batch.labels, batch.legal)
            adam.zero_grad()
            loss_t.backward()
            adam.step()
            epoch_loss += loss_t.item()
            n_batches += 1
        val_r1 = _val_recall(model, valid_entries, plan, rng) if valid_entries else float("nan")
        row = {
            "stage": "tf",
            "epoch": epoch + 1,
            "loss": epoch_loss / max(n_batches, 1),
            "val_r1": val_r1,
        }
        metrics.append(row)
        log.info("tf epoch %d: loss=%.4f val_r1=%s", epoch + 1, row["loss"], val_r1)
        if valid_entries and (math.isnan(best[0]) or val_r1 >= best[0]):
            best = (val_r1, model.snapshot())
    if best[1] is not None:
        model.load_param_arrays(best[1])
    return metrics


# ---------------------------------------------------------------------------
# search sampling
# ---------------------------------------------------------------------------


class _RecordingScorer:
    """Wraps a scorer, remembering every expanded state with its legal set."""

    def __init__(self, inner: ModelScorer):
        self.inner = inner
        self.expanded: list[tuple[ChartSequence, tuple[Token, ...]]] = []

    def q_values(self, table, state):
        out = self.inner.q_values(table, state)
        self.expanded.append((state, tuple(out.keys())))
        return out


def search_sample(
    model: DqnModel,
    plan: TrainPlan,
    train_entries,
    replay: ReplayMemory | None = None,
) -> list[dict]:
    """Beam-search the training tables with the live model, label every
    expanded state with the optimal action values, and take one optimizer
    step per ``replay_update_every`` tables from replay samples."""
    if not train_entries:
        raise EmptySplit("no corpus entries to search-sample")
    replay = replay if replay is not None else ReplayMemory(plan.replay_capacity)
    regime_types = plan.regime_types()
    if len(replay) == 0:
        # rehearsal: keep the ground-truth prefixes in the pool so the
        # negative-heavy search states cannot wash the positives out
        for step in make_labeled_steps(train_entries, regime_types, plan.constraints):
            replay.add(step)
    frozen = _frozen_names(model, plan)
    adam = AdamState(model.params, plan.optimizer, frozen=frozen)
    rng = np.random.default_rng(plan.seed + 1)
    config = SearchConfig(
        beam_size=plan.beam_size,
        expand_limit=plan.ss_expand_limit,
        chart_types=regime_types,
        constraints=plan.constraints,
    )
    targets_cache: dict[str, TargetSet | None] = {}
    metrics: list[dict] = []
    for epoch in range(plan.ss_epochs):
        order = rng.permutation(len(train_entries))
        epoch_loss = 0.0
        n_updates = 0
        since_update = 0
        for i in order:
            entry = train_entries[i]
            targets = targets_cache.get(entry.table.table_id)
            if targets is None:
                charts = _filter_charts(entry.charts, regime_types)
                targets = TargetSet.build(entry.table, charts) if charts else None
                targets_cache[entry.table.table_id] = targets
            if targets is None:
                continue
            recorder = _RecordingScorer(ModelScorer(model, plan.constraints))
            beam_search(recorder, entry.table, config)
            for state, legal in recorder.expanded:
                labels = label_vector(targets, state, set(legal))
                replay.add(LabeledStep(entry.table, state, labels))
            since_update += 1
            if since_update >= plan.replay_update_every and len(replay) >= plan.batch_size:
                chunk = replay.sample(rng, plan.batch_size)
                batch = encode_batch(model, chunk)
                scores = model.forward_batch(batch)
                loss_t = batch_bce(scores, batch.labels, batch.legal)
                adam.zero_grad()
                loss_t.backward()
                adam.step()
                epoch_loss += loss_t.item()
                n_updates += 1
                since_update = 0
        row = {
            "stage": "ss",
            "epoch": epoch + 1,
            "loss": epoch_loss / max(n_updates, 1),
            "replay_size": len(replay),
        }
        metrics.append(row)
        log.info("ss epoch %d: loss=%.4f replay=%d", epoch + 1, row["loss"], len(replay))
    return metrics


def train(
    model: DqnModel,
    plan: TrainPlan,
    train_entries,
    valid_entries=(),
) -> list[dict]:
    """Full schedule: teacher forcing then search sampling."""
    metrics = teacher_force(model, plan, train_entries, valid_entries)
    if plan.ss_epochs > 0:
        metrics += search_sample(model, plan, train_entries)
    return metrics


# ---------------------------------------------------------------------------
# regimes
# ---------------------------------------------------------------------------


def run_regimes(
    train_entries,
    valid_entries=(),
    preset: str = "tiny",
    base_plan: TrainPlan | None = None,
    seed: int = 0,
):
    """Mixed model + per-type transfer decoders + per-type separate models.

    Transfer models alias the mixed model's (frozen) encoder tensors, so
    suite storage is one encoder plus the decoders. Types absent from the
    corpus are skipped with a warning.
    """
    from .corpus import count_charts_by_type
    from .features import fit_feature_norms

    base_plan = base_plan or TrainPlan()
    tables = [e.table for e in train_entries]
    mixed = build_model(preset=preset, tables=tables, seed=seed)
    mixed_plan = replace(base_plan, regime="mixed", seed=seed)
    train(mixed, mixed_plan, train_entries, valid_entries)

    counts = count_charts_by_type(train_entries)
    transfer: dict[ChartType, DqnModel] = {}
    separate: dict[ChartType, DqnModel] = {}
    for chart_type in ChartType:
        if counts.get(chart_type, 0) == 0:
            log.warning("skipping %s: no charts of this type in the corpus", chart_type.value)
            continue
        plan_t = replace(base_plan, regime=f"transfer:{chart_type.value}", seed=seed + 1)
        t_model = DqnModel(mixed.config, mixed.featurizer, seed=seed + 101)
        t_model.share_encoder_from(mixed)
        train(t_model, plan_t, train_entries, valid_entries)
        transfer[chart_type] = t_model

        plan_s = replace(base_plan, regime=f"separate:{chart_type.value}", seed=seed + 2)
        s_model = DqnModel(mixed.config, mixed.featurizer, seed=seed + 201)
        train(s_model, plan_s, train_entries, valid_entries)
        separate[chart_type] = s_model
    return {"mixed": mixed, "transfer": transfer, "separate": separate}


def suite_parameter_counts(regimes: dict) -> dict[str, int]:
    """Stored parameters: transfer shares one encoder, separate does not."""
    mixed: DqnModel = regimes["mixed"]
    transfer_total = mixed.parameter_count("encoder") + sum(
        m.parameter_count("decoder") for m in regimes["transfer"].values()
    )
    separate_total = sum(m.parameter_count() for m in regimes["separate"].values())
    return {"transfer": transfer_total, "separate": separate_total}


# ---------------------------------------------------------------------------
# artifacts
# ---------------------------------------------------------------------------


def write_metrics_csv(metrics: list[dict], path) -> None:
    keys = sorted({k for row in metrics for k in row})
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=keys)
        writer.writeheader()
        writer.writerows(metrics)


def write_manifest(plan: TrainPlan, corpus_paths: dict, path) -> None:
    doc = {
        "regime": plan.regime,
        "tf_epochs": plan.tf_epochs,
        "ss_epochs": plan.ss_epochs,
        "batch_size": plan.batch_size,
        "seed": plan.seed,
        "optimizer": {
            "lr": plan.optimizer.lr,
            "beta1": plan.optimizer.beta1,
            "beta2": plan.optimizer.beta2,
            "eps": plan.optimizer.eps,
            "weight_decay": plan.optimizer.weight_decay,
        },
        "corpus": corpus_paths,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
