"""The chart-generation decision process and its closed-form optimal values.

For a table with user-created charts ``targets``, the optimal action value
of appending token ``a`` to prefix ``s`` is 1 exactly when ``s + (a,)`` is
still a prefix of some target (the prefix closure is held in a token trie,
so a lookup costs O(len)). The reward is 1 only on the final action that
completes a target. Transitions are deterministic and the discount is 1,
which makes these two definitions consistent with the Bellman recursion.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field

from .errors import IllegalAction
from .grammar import (
    DEFAULT_CONSTRAINTS,
    ChartSequence,
    HardConstraints,
    Token,
    legal_actions,
)
from .tables import Table


class _TrieNode:
    __slots__ = ("children", "terminal")

    def __init__(self):
        self.children: dict[Token, _TrieNode] = {}
        self.terminal = False


@dataclass
class TargetSet:
    """User-created charts of one table plus their prefix closure."""

    table: Table
    targets: frozenset[ChartSequence]
    _root: _TrieNode = dataclass_field(repr=False, default_factory=_TrieNode)
    _n_states: int = 0

    @classmethod
    def build(cls, table: Table, charts) -> "TargetSet":
        targets = frozenset(tuple(c) for c in charts)
        ts = cls(table=table, targets=targets)
        count = 0
        for chart in targets:
            node = ts._root
            for tok in chart:
                nxt = node.children.get(tok)
                if nxt is None:
                    nxt = _TrieNode()
                    node.children[tok] = nxt
                    count += 1
                node = nxt
            node.terminal = True
        ts._n_states = count
        return ts

    def __len__(self) -> int:
        """Number of states in the prefix closure (|targets' prefixes|)."""
        return self._n_states

    def _walk(self, state: ChartSequence) -> _TrieNode | None:
        node = self._root
        for tok in state:
            node = node.children.get(tok)
            if node is None:
                return None
        return node

    def in_closure(self, state: ChartSequence) -> bool:
        return self._walk(state) is not None

    def is_target(self, state: ChartSequence) -> bool:
        node = self._walk(state)
        return node is not None and node.terminal

    def closure_states(self):
        """Every prefix of every target, shortest first."""
        stack: list[tuple[ChartSequence, _TrieNode]] = [((), self._root)]
        while stack:
            prefix, node = stack.pop()
            if prefix:
                yield prefix
            for tok, child in node.children.items():
                stack.append((prefix + (tok,), child))

    def next_tokens(self, state: ChartSequence) -> set[Token]:
        node = self._walk(state)
        return set(node.children) if node is not None else set()


def _check_legal(
    targets: TargetSet, state: ChartSequence, action: Token, constraints: HardConstraints
) -> None:
    if action not in legal_actions(targets.table, state, constraints):
        raise IllegalAction(
            f"action {action} is not legal after {state} for table {targets.table.table_id!r}"
        )


def reward(
    targets: TargetSet,
    state: ChartSequence,
    action: Token,
    constraints: HardConstraints = DEFAULT_CONSTRAINTS,
    validate: bool = True,
) -> int:
    """1 iff taking ``action`` completes a user-created chart."""
    if validate:
        _check_legal(targets, state, action, constraints)
    return 1 if targets.is_target(state + (action,)) else 0


def q_star(
    targets: TargetSet,
    state: ChartSequence,
    action: Token,
    constraints: HardConstraints = DEFAULT_CONSTRAINTS,
    validate: bool = True,
) -> int:
    """1 iff ``state + (action,)`` stays on some target's prefix path."""
    if validate:
        _check_legal(targets, state, action, constraints)
    return 1 if targets.in_closure(state + (action,)) else 0


def label_vector(
    targets: TargetSet,
    state: ChartSequence,
    legal: set[Token],
) -> dict[Token, int]:
    """q* over a precomputed legal-action set (the training label row)."""
    good = targets.next_tokens(state)
    return {a: 1 if a in good else 0 for a in legal}


class OracleScorer:
    """Scorer with the q_values contract backed by q* — search/test oracle."""

    def __init__(self, targets: TargetSet, constraints: HardConstraints = DEFAULT_CONSTRAINTS):
        self.targets = targets
        self.constraints = constraints

    def q_values(self, table: Table, state: ChartSequence) -> dict[Token, float]:
        legal = legal_actions(table, state, self.constraints)
        good = self.targets.next_tokens(state)
        return {a: 1.0 if a in good else 0.0 for a in legal}


class OracleCorpusScorer:
    """Per-table oracle over a whole corpus (upper-bound evaluation runs)."""

    def __init__(self, entries, constraints: HardConstraints = DEFAULT_CONSTRAINTS):
        self.constraints = constraints
        self._targets = {
            e.table.table_id: TargetSet.build(e.table, e.charts) for e in entries
        }

    def q_values(self, table: Table, state: ChartSequence) -> dict[Token, float]:
        targets = self._targets[table.table_id]
        legal = legal_actions(table, state, self.constraints)
        good = targets.next_tokens(state)
        return {a: 1.0 if a in good else 0.0 for a in legal}
