"""Token features: semantic header embedding, categories, data statistics.

A token feeds the network as the concatenation of three blocks:

* semantic embedding of the header text (``d_sem``, zero for command tokens),
* 26 categorical one-hots (token type 10, segment 5, field type 5,
  field role 3, grouping op 3),
* 31 per-field data statistics (zero for command tokens).

Statistics split into bounded features (ratios/confidences, already in
[0, 1]) and unbounded ones, which are divided by their corpus-wide 99th
percentile and clipped to [0, 1.5].
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass

import numpy as np

from ._kernels import kernels
from .errors import EmptyCorpus
from .grammar import (
    TOKEN_CLUSTER,
    TOKEN_SEP,
    TOKEN_STACK,
    Token,
    field_index,
    is_field_token,
)
from .tables import Field, FieldRole, FieldType, Table, _as_number

# ---------------------------------------------------------------------------
# semantic embedding
# ---------------------------------------------------------------------------

_WORD_RE = re.compile(r"[A-Za-z]+|\d+")


class SemanticEmbedder:
    """Header-to-vector provider.

    The default is a deterministic hashed character-trigram embedder: each
    word maps to the mean of signed one-hot basis vectors derived from its
    boundary-padded trigrams, L2-normalized. A pretrained text file
    (``word v1 .. vd`` per line) can replace it when real vectors exist.
    Multi-word headers always embed as the mean of their word vectors.
    """

    def __init__(
        self,
        dim: int = 50,
        kind: str = "hashed-ngram",
        vectors: dict[str, np.ndarray] | None = None,
    ):
        self.dim = dim
        self.kind = kind
        self.vectors = vectors or {}
        self._word_cache: dict[str, np.ndarray] = {}

    @classmethod
    def from_file(cls, path: str) -> "SemanticEmbedder":
        vectors: dict[str, np.ndarray] = {}
        dim = None
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                parts = line.rstrip("\n").split(" ")
                if len(parts) < 2:
                    continue
                vec = np.array([float(x) for x in parts[1:]], dtype=np.float64)
                if dim is None:
                    dim = vec.shape[0]
                vectors[parts[0]] = vec
        if dim is None:
            raise EmptyCorpus(f"no vectors found in {path}")
        return cls(dim=dim, kind="pretrained-file", vectors=vectors)

    def _hashed_word(self, word: str) -> np.ndarray:
        cached = self._word_cache.get(word)
        if cached is not None:
            return cached
        padded = f"<{word}>"
        vec = np.zeros(self.dim, dtype=np.float64)
        n_grams = 0
        for i in range(len(padded) - 2):
            gram = padded[i : i + 3].encode("utf-8")
            digest = hashlib.blake2b(gram, digest_size=8).digest()
            h = int.from_bytes(digest, "little")
            idx = h % self.dim
            sign = 1.0 if (h >> 32) & 1 else -1.0
            vec[idx] += sign
            n_grams += 1
        if n_grams:
            vec /= n_grams
            norm = np.linalg.norm(vec)
            if norm > 0:
                vec /= norm
        self._word_cache[word] = vec
        return vec

    def _word_vector(self, word: str) -> np.ndarray:
        if self.kind == "pretrained-file":
            hit = self.vectors.get(word)
            if hit is None:
                hit = self.vectors.get(word.lower())
            return hit if hit is not None else np.zeros(self.dim, dtype=np.float64)
        return self._hashed_word(word.lower())

    def embed(self, header: str) -> np.ndarray:
        words = _WORD_RE.findall(header or "")
        if not words:
            return np.zeros(self.dim, dtype=np.float64)
        return np.mean([self._word_vector(w) for w in words], axis=0)

    def spec(self) -> dict:
        return {"kind": self.kind, "dim": self.dim}


def embed_header(embedder: SemanticEmbedder, header: str) -> np.ndarray:
    return embedder.embed(header)


# ---------------------------------------------------------------------------
# categorical one-hots
# ---------------------------------------------------------------------------

TOKEN_TYPES = ("PADDING", "SEP", "FIELD", "GRP", "Line", "Bar", "Scatter", "Pie", "Area", "Radar")
SEGMENT_TYPES = ("PADDING", "X", "Y", "GRP", "OP")
FIELD_TYPES = ("Unknown", "String", "Year", "DateTime", "Decimal")
FIELD_ROLES = ("Invalid", "Header", "Value")
GROUPING_OPS = ("Invalid", "Cluster", "Stack")

N_CATEGORICAL = (
    len(TOKEN_TYPES) + len(SEGMENT_TYPES) + len(FIELD_TYPES) + len(FIELD_ROLES) + len(GROUPING_OPS)
)

SEG_PADDING, SEG_X, SEG_Y, SEG_GRP, SEG_OP = range(5)

_CHART_TOKEN_TYPE = {0: "Line", 1: "Bar", 2: "Scatter", 3: "Pie", 4: "Area", 5: "Radar"}


def categorical_onehot(
    token_type: str,
    segment: int,
    field_type: FieldType = FieldType.UNKNOWN,
    field_role: FieldRole = FieldRole.INVALID,
    grouping: str = "Invalid",
) -> np.ndarray:
    vec = np.zeros(N_CATEGORICAL, dtype=np.float64)
    offset = 0
    vec[offset + TOKEN_TYPES.index(token_type)] = 1.0
    offset += len(TOKEN_TYPES)
    vec[offset + segment] = 1.0
    offset += len(SEGMENT_TYPES)
    vec[offset + FIELD_TYPES.index(field_type.value)] = 1.0
    offset += len(FIELD_TYPES)
    vec[offset + FIELD_ROLES.index(field_role.value)] = 1.0
    offset += len(FIELD_ROLES)
    vec[offset + GROUPING_OPS.index(grouping)] = 1.0
    return vec


# ---------------------------------------------------------------------------
# data statistics
# ---------------------------------------------------------------------------

BASELINE_FEATURES = (
    "nonMissingRatio",
    "distinctRatio",
    "mean",
    "stdDev",
    "min",
    "max",
    "median",
    "sumPositiveRatio",
    "negativeRatio",
    "integerRatio",
    "monotonicIncConf",
    "monotonicDecConf",
    "benfordDeviation",
    "firstTokenIsUpperRatio",
    "avgWordCount",
    "leadingZeroRatio",
)
NEW_FEATURES = (
    "SumIsIn01",
    "SumIsIn0100",
    "Range",
    "Variance",
    "Covariance",
    "AbsoluteCardinality",
    "MedianLength",
    "LengthStdDev",
    "AvgLogLength",
    "ArithmeticProgressionConfidence",
    "GeometricProgressionConfidence",
    "Skewness",
    "Kurtosis",
    "GiniCoefficient",
    "NRows",
)
FEATURE_NAMES = BASELINE_FEATURES + NEW_FEATURES
N_DATA_FEATURES = len(FEATURE_NAMES)

# Features whose raw range is not [0, 1]; these get percentile normalization.
UNBOUNDED_FEATURES = frozenset(
    {
        "mean",
        "stdDev",
        "min",
        "max",
        "median",
        "avgWordCount",
        "Range",
        "Variance",
        "Covariance",
        "AbsoluteCardinality",
        "MedianLength",
        "LengthStdDev",
        "AvgLogLength",
        "Skewness",
        "Kurtosis",
        "NRows",
    }
)
UNBOUNDED_MASK = np.array([name in UNBOUNDED_FEATURES for name in FEATURE_NAMES])
_FEATURE_INDEX = {name: i for i, name in enumerate(FEATURE_NAMES)}

_LEADING_ZERO_RE = re.compile(r"^0\d")


def cell_text(value) -> str:
    """Canonical text form of a cell; integral floats print without '.0'."""
    if isinstance(value, float) and value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return str(value)


def raw_data_features(field: Field) -> np.ndarray:
    """The 31 statistics, unnormalized. Total over any well-formed field."""
    out = np.zeros(N_DATA_FEATURES, dtype=np.float64)
    idx = _FEATURE_INDEX
    n_rows = len(field.values)
    present = [v for v in field.values if v is not None]
    out[idx["NRows"]] = n_rows
    if not present:
        return out

    out[idx["nonMissingRatio"]] = len(present) / n_rows
    texts = [cell_text(v) for v in present]
    out[idx["distinctRatio"]] = len(set(texts)) / len(present)
    out[idx["AbsoluteCardinality"]] = len(set(texts))

    lengths = np.array([len(t) for t in texts], dtype=np.float64)
    out[idx["MedianLength"]] = np.median(lengths)
    out[idx["LengthStdDev"]] = lengths.std()
    out[idx["firstTokenIsUpperRatio"]] = np.mean([1.0 if t[:1].isupper() else 0.0 for t in texts])
    out[idx["avgWordCount"]] = np.mean([len(t.split()) for t in texts])
    out[idx["leadingZeroRatio"]] = np.mean(
        [1.0 if _LEADING_ZERO_RE.match(t) else 0.0 for t in texts]
    )

    if field.field_type is FieldType.STRING:
        out[idx["AvgLogLength"]] = np.mean(np.log1p(lengths))

    if field.field_type.is_numeric:
        xs = np.array(
            [x for x in (_as_number(v) for v in present) if x is not None],
            dtype=np.float64,
        )
        if xs.size:
            out[idx["mean"]] = xs.mean()
            out[idx["stdDev"]] = xs.std()
            out[idx["min"]] = xs.min()
            out[idx["max"]] = xs.max()
            out[idx["median"]] = np.median(xs)
            out[idx["sumPositiveRatio"]] = np.mean(xs > 0)
            out[idx["negativeRatio"]] = np.mean(xs < 0)
            out[idx["integerRatio"]] = np.mean(xs == np.floor(xs))
            inc, dec = kernels.monotonic_conf(xs)
            out[idx["monotonicIncConf"]] = inc
            out[idx["monotonicDecConf"]] = dec
            out[idx["benfordDeviation"]] = kernels.benford_deviation(xs)
            total = xs.sum()
            out[idx["SumIsIn01"]] = 1.0 if 0.0 <= total <= 1.0 + 1e-9 else 0.0
            out[idx["SumIsIn0100"]] = 1.0 if 0.0 <= total <= 100.0 + 1e-6 else 0.0
            out[idx["Range"]] = xs.max() - xs.min()
            out[idx["Variance"]] = xs.var()
            if xs.size > 1:
                out[idx["Covariance"]] = np.cov(xs, np.arange(xs.size), bias=True)[0, 1]
            ap, gp = kernels.progression_conf(xs)
            out[idx["ArithmeticProgressionConfidence"]] = ap
            out[idx["GeometricProgressionConfidence"]] = gp
            std = xs.std()
            if std > 0:
                centered = (xs - xs.mean()) / std
                out[idx["Skewness"]] = np.mean(centered**3)
                out[idx["Kurtosis"]] = np.mean(centered**4) - 3.0
            out[idx["GiniCoefficient"]] = kernels.gini_sorted(np.sort(xs))
    np.nan_to_num(out, copy=False, posinf=0.0, neginf=0.0)
    return out


@dataclass(frozen=True)
class FeatureNorms:
    """Per-feature 99th percentiles for the unbounded statistics."""

    percentiles: np.ndarray  # shape (31,), entries for bounded features unused

    def apply(self, raw: np.ndarray) -> np.ndarray:
        out = raw.copy()
        div = np.maximum(self.percentiles[UNBOUNDED_MASK], 1e-9)
        out[..., UNBOUNDED_MASK] = np.clip(raw[..., UNBOUNDED_MASK] / div, 0.0, 1.5)
        return out

    @classmethod
    def identity(cls) -> "FeatureNorms":
        return cls(np.ones(N_DATA_FEATURES))


def fit_feature_norms(tables) -> FeatureNorms:
    """Nearest-rank 99th percentile of each statistic over all corpus fields."""
    rows = [raw_data_features(f) for t in tables for f in t.fields]
    if not rows:
        raise EmptyCorpus("cannot fit feature norms on an empty corpus")
    matrix = np.stack(rows)
    percentiles = np.quantile(matrix, 0.99, axis=0, method="higher")
    return FeatureNorms(percentiles=percentiles)


def compute_data_features(field: Field, norms: FeatureNorms) -> np.ndarray:
    return norms.apply(raw_data_features(field))


# ---------------------------------------------------------------------------
# full token vectors
# ---------------------------------------------------------------------------


class TableFeaturizer:
    """Assembles and caches the raw input vectors the network consumes.

    Width is ``d_sem + 26 + 31``. Field vectors are cached per table id and
    reused across every encoder/decoder call (table ids must therefore be
    unique per distinct table); command-token vectors are static.
    Decoder-side field tokens differ from encoder entries only in their
    segment one-hot.
    """

    def __init__(self, embedder: SemanticEmbedder, norms: FeatureNorms):
        self.embedder = embedder
        self.norms = norms
        self.width = embedder.dim + N_CATEGORICAL + N_DATA_FEATURES
        self._field_cache: dict[str, np.ndarray] = {}
        self._zero_sem = np.zeros(embedder.dim, dtype=np.float64)
        self._zero_data = np.zeros(N_DATA_FEATURES, dtype=np.float64)
        self._command_cache: dict[Token, np.ndarray] = {}

    def _field_vector(self, field: Field, segment: int) -> np.ndarray:
        sem = self.embedder.embed(field.header)
        cat = categorical_onehot(
            "FIELD", segment, field_type=field.field_type, field_role=field.role
        )
        data = compute_data_features(field, self.norms)
        return np.concatenate([sem, cat, data])

    def encoder_matrix(self, table: Table) -> np.ndarray:
        """[n_fields, width] matrix of field vectors (segment = PADDING)."""
        hit = self._field_cache.get(table.table_id)
        if hit is not None:
            return hit
        mat = np.stack([self._field_vector(f, SEG_PADDING) for f in table.fields])
        if len(self._field_cache) > 4096:
            self._field_cache.clear()
        self._field_cache[table.table_id] = mat
        return mat

    def command_vector(self, token: Token) -> np.ndarray:
        hit = self._command_cache.get(token)
        if hit is not None:
            return hit
        if token == TOKEN_SEP:
            cat = categorical_onehot("SEP", SEG_OP)
        elif token in (TOKEN_CLUSTER, TOKEN_STACK):
            grouping = "Cluster" if token == TOKEN_CLUSTER else "Stack"
            cat = categorical_onehot("GRP", SEG_GRP, grouping=grouping)
        else:
            cat = categorical_onehot(_CHART_TOKEN_TYPE[token], SEG_OP)
        vec = np.concatenate([self._zero_sem, cat, self._zero_data])
        self._command_cache[token] = vec
        return vec

    def token_vector(self, table: Table, token: Token, segment: int) -> np.ndarray:
        """Decoder input vector for one sequence token."""
        if not is_field_token(token):
            return self.command_vector(token)
        base = self.encoder_matrix(table)[field_index(token)].copy()
        seg_offset = len(TOKEN_TYPES)
        start = self.embedder.dim + seg_offset
        base[start : start + len(SEGMENT_TYPES)] = 0.0
        base[start + segment] = 1.0
        return base

    def sequence_matrix(self, table: Table, state) -> np.ndarray:
        """[len(state), width] decoder input matrix for a token sequence."""
        return np.stack(
            [self.token_vector(table, tok, seg) for tok, seg in zip(state, token_segments(state))]
        )


def token_segments(state) -> list[int]:
    """Segment id (Y/X/GRP/OP) for each token of a sequence prefix."""
    segments: list[int] = []
    seen_sep = False
    for tok in state:
        if is_field_token(tok):
            segments.append(SEG_X if seen_sep else SEG_Y)
        elif tok == TOKEN_SEP:
            segments.append(SEG_OP)
            seen_sep = True
        elif tok in (TOKEN_CLUSTER, TOKEN_STACK):
            segments.append(SEG_GRP)
        else:
            segments.append(SEG_OP)
    return segments
