import pytest

from chartrec.errors import IllegalAction
from chartrec.grammar import (
    TOKEN_BAR,
    TOKEN_CLUSTER,
    TOKEN_LINE,
    TOKEN_SEP,
    TOKEN_STACK,
    enumerate_all_charts,
    field_token,
    is_complete,
    legal_actions,
)
from chartrec.oracle import TargetSet, label_vector, q_star, reward
from chartrec.tables import FieldType

from conftest import build_typed_table

D = FieldType.DECIMAL
S = FieldType.STRING


def f(i):
    return field_token(i)


BAR_CHART = (TOKEN_BAR, f(2), f(3), TOKEN_SEP, f(1), TOKEN_STACK)


@pytest.fixture
def bar_targets():
    table = build_typed_table([S, S, D, D])
    return table, TargetSet.build(table, {BAR_CHART})


class TestReward:
    def test_completing_action(self, bar_targets):
        table, targets = bar_targets
        assert reward(targets, BAR_CHART[:-1], TOKEN_STACK) == 1

    def test_wrong_grouping(self, bar_targets):
        table, targets = bar_targets
        assert reward(targets, BAR_CHART[:-1], TOKEN_CLUSTER) == 0

    def test_incomplete_never_rewarded(self, bar_targets):
        table, targets = bar_targets
        for i in range(1, len(BAR_CHART) - 1):
            assert reward(targets, BAR_CHART[:i], BAR_CHART[i]) == 0

    def test_illegal_action(self, bar_targets):
        _, targets = bar_targets
        with pytest.raises(IllegalAction):
            reward(targets, (TOKEN_BAR,), TOKEN_STACK)


class TestQStar:
    def test_prefix_actions_are_one(self, bar_targets):
        _, targets = bar_targets
        assert q_star(targets, (TOKEN_BAR,), f(2)) == 1
        assert q_star(targets, (TOKEN_BAR, f(2)), f(3)) == 1

    def test_off_path_zero(self, bar_targets):
        _, targets = bar_targets
        assert q_star(targets, (TOKEN_LINE,), f(2)) == 0
        assert q_star(targets, (TOKEN_BAR,), f(3)) == 0  # wrong y order

    def test_closure_membership(self, bar_targets):
        _, targets = bar_targets
        assert targets.in_closure(BAR_CHART)
        assert targets.is_target(BAR_CHART)
        assert not targets.is_target(BAR_CHART[:-1])
        assert len(targets) == len(BAR_CHART)

    def test_prefix_closure_idempotent(self, bar_targets):
        _, targets = bar_targets
        states = set(targets.closure_states())
        again = {s[:i] for s in states for i in range(1, len(s) + 1)}
        assert states == again


def value_iteration(table, targets, constraints=None):
    """Independent oracle: gamma=1 optimal values by recursion over the
    enumerated state graph (max of reward and best successor value)."""
    from chartrec.grammar import DEFAULT_CONSTRAINTS

    constraints = constraints or DEFAULT_CONSTRAINTS
    cache: dict = {}

    def best_value(state) -> int:
        if state in cache:
            return cache[state]
        cache[state] = 0  # break (nonexistent) cycles defensively
        best = 0
        for action in legal_actions(table, state, constraints):
            nxt = state + (action,)
            r = 1 if targets.is_target(nxt) else 0
            best = max(best, r, best_value(nxt))
            if best:
                break
        cache[state] = best
        return best

    def q(state, action) -> int:
        nxt = state + (action,)
        return max(1 if targets.is_target(nxt) else 0, best_value(nxt))

    return q


class TestBellman:
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_q_star_equals_value_iteration(self, seed):
        import numpy as np

        rng = np.random.default_rng(seed)
        types = [
            [D, D],
            [S, D, D],
            [D, S, D, D],
        ][seed % 3]
        table = build_typed_table(types)
        charts = sorted(enumerate_all_charts(table))
        picks = rng.choice(len(charts), size=min(3, len(charts)), replace=False)
        targets = TargetSet.build(table, {charts[int(i)] for i in picks})
        q_vi = value_iteration(table, targets)
        stack = [(t,) for t in range(6)]
        seen = set()
        while stack:
            state = stack.pop()
            if state in seen:
                continue
            seen.add(state)
            for action in legal_actions(table, state):
                got = q_star(targets, state, action, validate=False)
                assert got == q_vi(state, action), (state, action)
                # Bellman identity with gamma=1
                nxt = state + (action,)
                successor = max(
                    (q_star(targets, nxt, a, validate=False) for a in legal_actions(table, nxt)),
                    default=0,
                )
                assert got == max(reward(targets, state, action, validate=False), successor)
                stack.append(nxt)


class TestLabelVector:
    def test_labels_match_closure(self, bar_targets):
        table, targets = bar_targets
        state = (TOKEN_BAR, f(2))
        legal = legal_actions(table, state)
        labels = label_vector(targets, state, legal)
        assert set(labels) == legal
        assert labels[f(3)] == 1
        assert sum(labels.values()) == 1
