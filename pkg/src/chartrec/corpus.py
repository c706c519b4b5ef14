"""Corpus handling: (table, charts) entries, dedup, sampling, splits,
plus a rule-based synthetic generator for desk-scale experiments.

The interchange format is newline-delimited JSON, one entry per line:
``{"tableId", "fields": [{"name", "type", "role", "values": [...]}],
"charts": ["[Bar] (1) (2) [SEP] (0) [Stack]", ...]}``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import IllegalState, ParseError, TooFewSchemas
from .grammar import (
    PERMISSIVE_CONSTRAINTS,
    TOKEN_CLUSTER,
    TOKEN_STACK,
    ChartSequence,
    ChartType,
    chart_type_of,
    field_index,
    is_complete,
    is_field_token,
    parse_sequence,
    serialize_sequence,
    TOKEN_SEP,
)
from .tables import Field, FieldRole, FieldType, Table, make_table, schema_key


@dataclass(frozen=True)
class CorpusEntry:
    table: Table
    charts: frozenset[ChartSequence]

    def __post_init__(self):
        for chart in self.charts:
            if not is_complete(chart):
                raise IllegalState(
                    f"chart {serialize_sequence(chart)} for table "
                    f"{self.table.table_id!r} is not complete"
                )


@dataclass(frozen=True)
class SplitSpec:
    ratios: tuple[float, float, float] = (7.0, 1.0, 2.0)
    seed: int = 0

    def __post_init__(self):
        if any(r <= 0 for r in self.ratios):
            raise ValueError("split ratios must be positive")


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def entry_to_json(entry: CorpusEntry) -> dict:
    return {
        "tableId": entry.table.table_id,
        "fields": [
            {
                "name": f.header,
                "type": f.field_type.value,
                "role": f.role.value,
                "values": list(f.values),
            }
            for f in entry.table.fields
        ],
        "charts": sorted(serialize_sequence(c) for c in entry.charts),
    }


def entry_from_json(obj: dict) -> CorpusEntry:
    fields = []
    for i, f in enumerate(obj["fields"]):
        fields.append(
            Field(
                index=i,
                header=f.get("name", ""),
                field_type=FieldType(f.get("type", "Unknown")),
                role=FieldRole(f.get("role", "Value")),
                values=tuple(f["values"]),
            )
        )
    table = Table(obj["tableId"], tuple(fields))
    charts = frozenset(
        parse_sequence(text, table, PERMISSIVE_CONSTRAINTS) for text in obj["charts"]
    )
    return CorpusEntry(table=table, charts=charts)


def save_corpus(entries, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for entry in entries:
            fh.write(json.dumps(entry_to_json(entry), ensure_ascii=False))
            fh.write("\n")


def load_corpus(path) -> list[CorpusEntry]:
    entries = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                entries.append(entry_from_json(json.loads(line)))
            except (KeyError, ValueError) as exc:
                raise ParseError(f"{path}:{line_no}: bad corpus entry: {exc}") from exc
    return entries


# ---------------------------------------------------------------------------
# preparation pipeline
# ---------------------------------------------------------------------------


def _values_key(table: Table):
    return tuple(f.values for f in table.fields)


def dedup(entries) -> list[CorpusEntry]:
    """Merge entries that share schema and identical cell values.

    Chart sets of merged entries get unioned; the first table id wins.
    Idempotent.
    """
    merged: dict[tuple, CorpusEntry] = {}
    for entry in entries:
        key = (schema_key(entry.table), _values_key(entry.table))
        prev = merged.get(key)
        if prev is None:
            merged[key] = entry
        else:
            merged[key] = CorpusEntry(prev.table, prev.charts | entry.charts)
    return list(merged.values())


def chart_shape(table: Table, chart: ChartSequence):
    """Chart type plus the per-segment field-type multisets."""
    y_types: list[str] = []
    x_types: list[str] = []
    seen_sep = False
    for tok in chart[1:]:
        if is_field_token(tok):
            t = table.fields[field_index(tok)].field_type.value
            (x_types if seen_sep else y_types).append(t)
        elif tok == TOKEN_SEP and not seen_sep:
            seen_sep = True
    return (chart[0], tuple(sorted(y_types)), tuple(sorted(x_types)))


def down_sample(entries, k: int = 10, seed: int = 0) -> list[CorpusEntry]:
    """Keep at most ``k`` unique tables per (schema, chart-shape) pair."""
    if k < 1:
        raise ValueError("k must be >= 1")
    groups: dict[tuple, list[int]] = {}
    for i, entry in enumerate(entries):
        skey = schema_key(entry.table)
        for chart in entry.charts:
            groups.setdefault((skey, chart_shape(entry.table, chart)), []).append(i)
    rng = np.random.default_rng(seed)
    keep: set[int] = set()
    for key in sorted(groups):
        members = groups[key]
        if len(members) <= k:
            keep.update(members)
        else:
            keep.update(rng.choice(members, size=k, replace=False).tolist())
    return [entries[i] for i in sorted(keep)]


def split(entries, spec: SplitSpec = SplitSpec()):
    """Schema-level random partition into (train, valid, test).

    Proportions land within one schema of the ratios; a split is never
    empty when at least three schemas exist.
    """
    by_schema: dict[str, list[CorpusEntry]] = {}
    for entry in entries:
        by_schema.setdefault(schema_key(entry.table), []).append(entry)
    schemas = sorted(by_schema)
    if len(schemas) < 3:
        raise TooFewSchemas(f"need >= 3 distinct schemas, have {len(schemas)}")
    rng = np.random.default_rng(spec.seed)
    rng.shuffle(schemas)
    total = sum(spec.ratios)
    n = len(schemas)
    counts = [int(n * r / total) for r in spec.ratios]
    counts = [max(1, c) for c in counts]
    while sum(counts) > n:
        counts[counts.index(max(counts))] -= 1
    remainders = [(n * r / total) - c for r, c in zip(spec.ratios, counts)]
    while sum(counts) < n:
        i = remainders.index(max(remainders))
        counts[i] += 1
        remainders[i] = -1
    out = []
    start = 0
    for c in counts:
        chunk = schemas[start : start + c]
        start += c
        out.append([e for s in chunk for e in by_schema[s]])
    return tuple(out)


def count_charts_by_type(entries) -> dict[ChartType, int]:
    counts = {t: 0 for t in ChartType}
    for entry in entries:
        for chart in entry.charts:
            counts[chart_type_of(chart)] += 1
    return counts


# ---------------------------------------------------------------------------
# synthetic corpus generator
# ---------------------------------------------------------------------------

DEFAULT_TYPE_MIX = (0.42, 0.25, 0.24, 0.07, 0.01, 0.01)  # line bar scatter pie area radar

_TIME_HEADERS = ("Year", "Month", "Date", "Quarter", "Week", "Period", "Fiscal Year")
_MONEY = ("Revenue", "Sales", "Cost", "Profit", "Income", "Budget", "Expenses", "Turnover")
_COUNTS = (
    "Students", "Employees", "Visitors", "Orders", "Users",
    "Customers", "Units", "Members", "Downloads", "Shipments",
)
_PART_PAIRS = (
    ("Male", "Female"),
    ("Domestic", "International"),
    ("Online", "Offline"),
    ("New", "Returning"),
    ("Indoor", "Outdoor"),
    ("Import", "Export"),
)
_CATEGORIES = (
    ("Program", ("Engineering", "Business", "Arts", "Science", "Law", "Medicine", "Design")),
    ("Country", ("US", "Japan", "England", "France", "Brazil", "India", "Canada", "Spain")),
    ("Region", ("North", "South", "East", "West", "Central", "Coastal")),
    ("Product", ("Widget", "Gadget", "Gizmo", "Module", "Kit", "Bundle", "Pack")),
    ("Department", ("HR", "Finance", "IT", "Marketing", "Operations", "Legal")),
    ("Team", ("Falcons", "Tigers", "Wolves", "Eagles", "Sharks", "Bears")),
)
_SHARES = ("Market Share", "Percentage", "Share", "Proportion", "Weight", "Allocation")
_SCATTER_X = (
    "Wind Speed", "Temperature", "Humidity", "Pressure",
    "Age", "Size", "Distance", "Duration", "Dosage",
)
_SCATTER_Y = (
    "Evapotranspiration", "Energy Output", "Yield", "Score",
    "Response Time", "Growth", "Efficiency", "Output",
)
_RADAR_ATTRS = ("Speed", "Power", "Accuracy", "Stamina", "Range", "Defense", "Agility", "Control")
_RADAR_SUBJECTS = ("Model A", "Model B", "Model C", "Prototype", "Baseline", "Variant X")
_NOTES = ("Notes", "Comment", "Status", "Label")
_NOTE_VALUES = ("ok", "check", "final", "draft", "n/a", "todo", "done")
_PREFIXES = ("", "Total ", "Annual ", "Monthly ", "Avg ", "Net ", "Gross ")
_SUFFIXES = ("", " (USD)", " (EUR)", " Index", " Level")


def _pick(rng, pool):
    return pool[int(rng.integers(len(pool)))]


def _measure_header(rng, base: str) -> str:
    return f"{_pick(rng, _PREFIXES)}{base}{_pick(rng, _SUFFIXES)}".strip()


def _walk_values(rng, n: int, lo: float, hi: float) -> list[float]:
    level = rng.uniform(lo, hi)
    drift = rng.uniform(-0.08, 0.12) * level
    out = []
    for _ in range(n):
        level = max(0.0, level + drift + rng.normal(0, 0.05 * max(level, 1.0)))
        out.append(round(float(level), 2))
    return out


def _time_column(rng, n: int, header: str):
    if header in ("Year", "Fiscal Year"):
        start = int(rng.integers(1980, 2020))
        return FieldType.YEAR, [start + i for i in range(n)]
    start_year = int(rng.integers(2000, 2023))
    start_month = int(rng.integers(1, 13))
    vals = []
    for i in range(n):
        month = (start_month - 1 + i) % 12 + 1
        year = start_year + (start_month - 1 + i) // 12
        vals.append(f"{year:04d}-{month:02d}-01")
    return FieldType.DATETIME, vals


class _TableBuilder:
    def __init__(self, table_id: str):
        self.table_id = table_id
        self.headers: list[str] = []
        self.types: list[FieldType] = []
        self.roles: list[FieldRole] = []
        self.columns: list[list] = []

    def add(self, header, ftype, values, role=FieldRole.VALUE) -> int:
        if header in self.headers:
            header = f"{header} {len(self.headers)}"
        self.headers.append(header)
        self.types.append(ftype)
        self.roles.append(role)
        self.columns.append(list(values))
        return len(self.headers) - 1

    def build(self) -> Table:
        return make_table(
            self.table_id, self.headers, self.columns, types=self.types, roles=self.roles
        )


def _chart(type_token: int, y: list[int], x: list[int], terminator: int) -> ChartSequence:
    from .grammar import field_token

    return (
        (type_token,)
        + tuple(field_token(i) for i in sorted(y))
        + (TOKEN_SEP,)
        + tuple(field_token(i) for i in x)
        + (terminator,)
    )


def _maybe_distractors(rng, b: _TableBuilder, n_rows: int, allow_share: bool = False):
    if rng.random() < 0.18:
        b.add(
            _pick(rng, _NOTES),
            FieldType.STRING,
            [_pick(rng, _NOTE_VALUES) for _ in range(n_rows)],
            role=FieldRole.VALUE,
        )
    if allow_share and rng.random() < 0.2:
        share = rng.dirichlet(np.ones(n_rows))
        b.add(
            f"{_pick(rng, _PREFIXES)}{_pick(rng, _SHARES)}".strip(),
            FieldType.DECIMAL,
            [round(float(v), 4) for v in share],
        )


def _gen_series(rng, table_id: str, chart: ChartType) -> CorpusEntry:
    """Time column + measures sharing a family -> line/area chart."""
    n_rows = int(rng.integers(6, 25))
    n_measures = int(rng.integers(1, 4))
    b = _TableBuilder(table_id)
    time_header = _pick(rng, _TIME_HEADERS)
    ttype, tvals = _time_column(rng, n_rows, time_header)
    family = _MONEY if rng.random() < 0.5 else _COUNTS
    bases = list(rng.choice(len(family), size=min(n_measures, len(family)), replace=False))
    time_first = rng.random() < 0.7
    if time_first:
        time_idx = b.add(time_header, ttype, tvals)
    measure_idx = [
        b.add(_measure_header(rng, family[i]), FieldType.DECIMAL, _walk_values(rng, n_rows, 10, 5000))
        for i in bases
    ]
    if not time_first:
        time_idx = b.add(time_header, ttype, tvals)
    _maybe_distractors(rng, b, n_rows)
    token = chart.token
    return CorpusEntry(
        b.build(), frozenset({_chart(token, measure_idx, [time_idx], TOKEN_SEP)})
    )


def _gen_bar(rng, table_id: str) -> CorpusEntry:
    cat_name, cat_pool = _pick(rng, _CATEGORIES)
    n_rows = int(rng.integers(3, min(9, len(cat_pool) + 1)))
    cats = [str(c) for c in rng.choice(cat_pool, size=n_rows, replace=False)]
    b = _TableBuilder(table_id)
    cat_first = rng.random() < 0.75
    if cat_first:
        cat_idx = b.add(cat_name, FieldType.STRING, cats, role=FieldRole.HEADER)
    stacked = rng.random() < 0.55
    measure_idx: list[int] = []
    if stacked:
        # parts of one whole: shared unit words and a common value scale
        parts = _pick(rng, _PART_PAIRS)
        base = _pick(rng, _COUNTS if rng.random() < 0.6 else _MONEY)
        prefix = _pick(rng, ("", "Total "))
        scale = rng.uniform(50, 900)
        for part in parts:
            measure_idx.append(
                b.add(
                    f"{prefix}{part} {base}",
                    FieldType.DECIMAL,
                    [round(float(v), 1) for v in rng.uniform(0.4 * scale, 1.6 * scale, size=n_rows)],
                )
            )
        terminator = TOKEN_STACK
    else:
        # unrelated measures living on visibly different scales
        n_measures = int(rng.integers(1, 4))
        pool = list(_MONEY + _COUNTS)
        chosen = rng.choice(len(pool), size=n_measures, replace=False)
        scale = rng.uniform(3, 30)
        for j, i in enumerate(chosen):
            lo = scale * (8.0**j)
            measure_idx.append(
                b.add(
                    _measure_header(rng, pool[int(i)]),
                    FieldType.DECIMAL,
                    [round(float(v), 1) for v in rng.uniform(lo, 2.5 * lo, size=n_rows)],
                )
            )
        terminator = TOKEN_CLUSTER
    if not cat_first:
        cat_idx = b.add(cat_name, FieldType.STRING, cats, role=FieldRole.HEADER)
    _maybe_distractors(rng, b, n_rows, allow_share=True)
    return CorpusEntry(
        b.build(), frozenset({_chart(ChartType.BAR.token, measure_idx, [cat_idx], terminator)})
    )


def _gen_scatter(rng, table_id: str) -> CorpusEntry:
    n_rows = int(rng.integers(10, 41))
    b = _TableBuilder(table_id)
    x_vals = np.sort(rng.uniform(0, 100, size=n_rows))
    slope = rng.uniform(0.3, 3.0)
    noise = rng.normal(0, 8, size=n_rows)
    y_vals = np.maximum(0.0, slope * x_vals + noise)
    x_first = rng.random() < 0.5
    x_header = _pick(rng, _SCATTER_X)
    y_header = _pick(rng, _SCATTER_Y)
    if x_first:
        x_idx = b.add(x_header, FieldType.DECIMAL, [round(float(v), 2) for v in x_vals])
    y_idx = b.add(y_header, FieldType.DECIMAL, [round(float(v), 2) for v in y_vals])
    if not x_first:
        x_idx = b.add(x_header, FieldType.DECIMAL, [round(float(v), 2) for v in x_vals])
    _maybe_distractors(rng, b, n_rows)
    return CorpusEntry(b.build(), frozenset({_chart(ChartType.SCATTER.token, [y_idx], [x_idx], TOKEN_SEP)}))


def _gen_pie(rng, table_id: str) -> CorpusEntry:
    cat_name, cat_pool = _pick(rng, _CATEGORIES)
    n_rows = int(rng.integers(3, min(8, len(cat_pool) + 1)))
    cats = [str(c) for c in rng.choice(cat_pool, size=n_rows, replace=False)]
    b = _TableBuilder(table_id)
    cat_idx = b.add(cat_name, FieldType.STRING, cats, role=FieldRole.HEADER)
    share = rng.dirichlet(np.ones(n_rows) * 2.0)
    scale = 100.0 if rng.random() < 0.4 else 1.0
    digits = 2 if scale > 1 else 4
    share_idx = b.add(
        f"{cat_name} {_pick(rng, _SHARES)}",
        FieldType.DECIMAL,
        [round(float(v * scale), digits) for v in share],
    )
    if rng.random() < 0.3:
        b.add(
            _measure_header(rng, _pick(rng, _COUNTS)),
            FieldType.DECIMAL,
            [round(float(v), 1) for v in rng.uniform(10, 900, size=n_rows)],
        )
    return CorpusEntry(b.build(), frozenset({_chart(ChartType.PIE.token, [share_idx], [cat_idx], TOKEN_SEP)}))


def _gen_radar(rng, table_id: str) -> CorpusEntry:
    n_rows = int(rng.integers(4, 9))
    attrs = [str(a) for a in rng.choice(_RADAR_ATTRS, size=n_rows, replace=False)]
    b = _TableBuilder(table_id)
    cat_idx = b.add("Attribute", FieldType.STRING, attrs, role=FieldRole.HEADER)
    subjects = rng.choice(_RADAR_SUBJECTS, size=2, replace=False)
    measure_idx = [
        b.add(
            f"{s} Score",
            FieldType.DECIMAL,
            [round(float(v), 1) for v in rng.uniform(10, 100, size=n_rows)],
        )
        for s in subjects
    ]
    # non-score measure on a foreign scale: selection, not counting, is the task
    if rng.random() < 0.35:
        b.add(
            _measure_header(rng, _pick(rng, _MONEY)),
            FieldType.DECIMAL,
            [round(float(v), 1) for v in rng.uniform(1000, 50000, size=n_rows)],
        )
    _maybe_distractors(rng, b, n_rows)
    return CorpusEntry(b.build(), frozenset({_chart(ChartType.RADAR.token, measure_idx, [cat_idx], TOKEN_SEP)}))


_GENERATORS = {
    ChartType.LINE: lambda rng, tid: _gen_series(rng, tid, ChartType.LINE),
    ChartType.BAR: lambda rng, tid: _gen_bar(rng, tid),
    ChartType.SCATTER: lambda rng, tid: _gen_scatter(rng, tid),
    ChartType.PIE: lambda rng, tid: _gen_pie(rng, tid),
    ChartType.AREA: lambda rng, tid: _gen_series(rng, tid, ChartType.AREA),
    ChartType.RADAR: lambda rng, tid: _gen_radar(rng, tid),
}


def synth_corpus(
    size: int,
    type_mix: tuple[float, ...] = DEFAULT_TYPE_MIX,
    seed: int = 0,
    id_prefix: str = "synth",
) -> list[CorpusEntry]:
    """Deterministic rule-based corpus with one ground-truth chart per table.

    ``type_mix`` orders as (line, bar, scatter, pie, area, radar); counts use
    largest-remainder allocation so realized proportions track the mix.
    """
    if size < 1:
        raise ValueError("size must be >= 1")
    mix = np.asarray(type_mix, dtype=np.float64)
    mix = mix / mix.sum()
    counts = np.floor(mix * size).astype(int)
    remainders = mix * size - counts
    while counts.sum() < size:
        i = int(np.argmax(remainders))
        counts[i] += 1
        remainders[i] = -1
    rng = np.random.default_rng(seed)
    assignment = [t for t, c in zip(ChartType, counts) for _ in range(c)]
    rng.shuffle(assignment)
    # ids carry the seed so entries from different corpora never collide
    entries = []
    for i, chart_type in enumerate(assignment):
        entries.append(_GENERATORS[chart_type](rng, f"{id_prefix}{seed}-{i:05d}"))
    return entries
