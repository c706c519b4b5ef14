"""chartrec: chart recommendation for tabular data.

Given a table, ranks complete chart specifications (field selections plus
design choices) by filling per-type grammar templates through beam search,
scored either by a learned encoder-decoder action-value network or by the
closed-form oracle over known targets.
"""

from .tables import Field, FieldRole, FieldType, Table, infer_field_type, schema_key
from .grammar import (
    ChartSequence,
    ChartType,
    HardConstraints,
    enumerate_all_charts,
    is_complete,
    legal_actions,
    parse_sequence,
    serialize_sequence,
)
from .oracle import OracleScorer, TargetSet, q_star, reward
from .model import DqnModel, ModelConfig, build_model
from .search import Recommendation, SearchConfig, beam_search, recommend
from .corpus import CorpusEntry, SplitSpec, dedup, down_sample, load_corpus, save_corpus, split, synth_corpus
from .evaluate import EvalReport, evaluate_model
from .training import ReplayMemory, TrainPlan, teacher_force, search_sample, train

__version__ = "0.1.0"

__all__ = [
    "Field",
    "FieldRole",
    "FieldType",
    "Table",
    "infer_field_type",
    "schema_key",
    "ChartSequence",
    "ChartType",
    "HardConstraints",
    "enumerate_all_charts",
    "is_complete",
    "legal_actions",
    "parse_sequence",
    "serialize_sequence",
    "OracleScorer",
    "TargetSet",
    "q_star",
    "reward",
    "DqnModel",
    "ModelConfig",
    "build_model",
    "Recommendation",
    "SearchConfig",
    "beam_search",
    "recommend",
    "CorpusEntry",
    "SplitSpec",
    "dedup",
    "down_sample",
    "load_corpus",
    "save_corpus",
    "split",
    "synth_corpus",
    "EvalReport",
    "evaluate_model",
    "ReplayMemory",
    "TrainPlan",
    "teacher_force",
    "search_sample",
    "train",
]
