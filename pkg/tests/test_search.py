import numpy as np
import pytest

from chartrec.errors import NoLegalSeed, UnsatisfiableConstraints
from chartrec.grammar import (
    ALL_TYPES,
    MAJOR_TYPES,
    TOKEN_BAR,
    TOKEN_SEP,
    TOKEN_STACK,
    ChartType,
    HardConstraints,
    enumerate_all_charts,
    field_token,
    is_complete,
    legal_actions,
    serialize_sequence,
)
from chartrec.oracle import OracleScorer, TargetSet
from chartrec.search import ModelScorer, SearchConfig, beam_search, recommend
from chartrec.tables import FieldType

from conftest import build_typed_table

D = FieldType.DECIMAL
S = FieldType.STRING


def f(i):
    return field_token(i)


class UniformScorer:
    """Constant scores: every legal action gets the same value."""

    def __init__(self, value=0.5, constraints=HardConstraints()):
        self.value = value
        self.constraints = constraints

    def q_values(self, table, state):
        return {a: self.value for a in legal_actions(table, state, self.constraints)}


class CountingScorer:
    def __init__(self, inner):
        self.inner = inner
        self.calls = 0

    def q_values(self, table, state):
        self.calls += 1
        return self.inner.q_values(table, state)


@pytest.fixture
def bar_target_setup():
    table = build_typed_table([S, D, D])
    target = (TOKEN_BAR, f(1), f(2), TOKEN_SEP, f(0), TOKEN_STACK)
    return table, target, TargetSet.build(table, {target})


class TestOracleSearch:
    def test_target_is_top1_with_score_one(self, bar_target_setup):
        table, target, targets = bar_target_setup
        recs = beam_search(OracleScorer(targets), table, SearchConfig(expand_limit=60))
        assert recs[0].state == target
        assert recs[0].score == 1.0

    def test_full_recall_with_enough_budget(self):
        table = build_typed_table([D, S, D])
        charts = sorted(enumerate_all_charts(table))
        rng = np.random.default_rng(5)
        picks = {charts[int(i)] for i in rng.choice(len(charts), size=5, replace=False)}
        targets = TargetSet.build(table, picks)
        limit = len(targets) + len(ALL_TYPES) * HardConstraints().max_sequence_length()
        recs = beam_search(
            OracleScorer(targets),
            table,
            SearchConfig(expand_limit=limit, chart_types=ALL_TYPES),
        )
        found = {r.state for r in recs if r.score == 1.0}
        assert picks <= found

    def test_single_type_recall_at_exact_bound(self):
        table = build_typed_table([S, D, D, D])
        charts = sorted(
            enumerate_all_charts(
                table, HardConstraints(allowed_types=frozenset({ChartType.BAR}))
            )
        )
        rng = np.random.default_rng(2)
        picks = {charts[int(i)] for i in rng.choice(len(charts), size=4, replace=False)}
        targets = TargetSet.build(table, picks)
        recs = beam_search(
            OracleScorer(targets),
            table,
            SearchConfig(expand_limit=len(targets), chart_types=(ChartType.BAR,)),
        )
        assert picks <= {r.state for r in recs if r.score == 1.0}


class TestSearchMechanics:
    def test_expand_limit_one_gives_greedy_completions(self):
        table = build_typed_table([D, D])
        scorer = UniformScorer()
        recs = beam_search(scorer, table, SearchConfig(beam_size=4, expand_limit=1))
        assert 1 <= len(recs) <= 4  # at most the greedy completion of each seed
        assert all(is_complete(r.state) for r in recs)

    def test_uniform_scorer_matches_tie_break_simulation(self):
        """Independent drill-down simulation under the documented tie-break."""
        table = build_typed_table([D, S, D])
        config = SearchConfig(beam_size=2, expand_limit=9, chart_types=MAJOR_TYPES)

        def greedy_complete(state):
            while not is_complete(state):
                acts = legal_actions(table, state)
                if not acts:
                    return None
                state = state + (min(acts),)  # equal scores: smallest token wins
            return state

        expected = []
        for t in sorted(MAJOR_TYPES, key=lambda t: t.token):
            done = greedy_complete((t.token,))
            if done is not None:
                expected.append(done)
        recs = beam_search(UniformScorer(0.5), table, config)
        got = [r.state for r in recs]
        # ranking: equal scores -> shorter first, then token-lexicographic
        expected_sorted = sorted(expected, key=lambda s: (len(s), s))
        assert got[: len(expected_sorted)] == expected_sorted

    def test_budget_property(self, bar_target_setup):
        table, _, targets = bar_target_setup
        config = SearchConfig(beam_size=4, expand_limit=17)
        scorer = CountingScorer(OracleScorer(targets))
        recs = beam_search(scorer, table, config)
        max_len = config.constraints.max_sequence_length()
        assert scorer.calls <= config.expand_limit + config.beam_size * max_len
        assert recs.expansions == scorer.calls

    def test_determinism(self, tiny_model):
        table = build_typed_table([D, S, D, D])
        config = SearchConfig(expand_limit=40)
        a = beam_search(ModelScorer(tiny_model), table, config)
        b = beam_search(ModelScorer(tiny_model), table, config)
        assert [(r.state, r.score) for r in a] == [(r.state, r.score) for r in b]

    def test_monotone_in_expand_limit(self, tiny_model):
        table = build_typed_table([D, S, D, D])
        previous: set = set()
        for limit in (5, 20, 60, 150):
            recs = beam_search(
                ModelScorer(tiny_model), table, SearchConfig(expand_limit=limit)
            )
            states = {r.state for r in recs}
            assert previous <= states
            previous = states

    def test_results_sorted_and_unique(self, tiny_model):
        table = build_typed_table([D, D, S])
        recs = beam_search(ModelScorer(tiny_model), table, SearchConfig(expand_limit=80))
        scores = [r.score for r in recs]
        assert scores == sorted(scores, reverse=True)
        assert len({r.state for r in recs}) == len(recs)
        assert all(is_complete(r.state) for r in recs)

    def test_no_legal_seed(self):
        table = build_typed_table([D])
        with pytest.raises(NoLegalSeed):
            beam_search(
                UniformScorer(),
                table,
                SearchConfig(constraints=HardConstraints(allowed_types=frozenset())),
            )


class TestRecommend:
    def test_required_fields_exact_set(self, bar_target_setup):
        table, target, targets = bar_target_setup
        recs = recommend(
            OracleScorer(targets),
            table,
            fields=frozenset({0, 1, 2}),
            chart_types=frozenset({ChartType.BAR}),
        )
        assert recs[0].state == target
        for r in recs:
            used = {tok - 9 for tok in r.state if tok >= 9}
            assert used == {0, 1, 2}

    def test_unsatisfiable_all_string_pie(self):
        table = build_typed_table([S, S])
        with pytest.raises(UnsatisfiableConstraints):
            recommend(UniformScorer(), table, chart_types=frozenset({ChartType.PIE}))

    def test_unsatisfiable_required_set_for_scatter(self):
        table = build_typed_table([D, D, D])
        with pytest.raises(UnsatisfiableConstraints):
            recommend(
                UniformScorer(),
                table,
                fields=frozenset({0, 1, 2}),
                chart_types=frozenset({ChartType.SCATTER}),
            )

    def test_default_equals_major_type_beam_search(self, tiny_model):
        table = build_typed_table([D, S, D])
        direct = beam_search(ModelScorer(tiny_model), table, SearchConfig())
        via_recommend = recommend(tiny_model, table)
        assert [(r.state, r.score) for r in direct] == [
            (r.state, r.score) for r in via_recommend
        ]

    def test_top_truncates(self, tiny_model):
        table = build_typed_table([D, S, D])
        recs = recommend(tiny_model, table, top=2)
        assert len(recs) <= 2
