"""Render chart sequences as Vega-Lite-compatible JSON documents.

Marks: line, bar, point (scatter), arc (pie), area; radar falls back to a
line mark over its angular category axis. Multiple y-fields become a fold
transform with a color channel per series; a stacked bar uses zero-based
stacking while a clustered bar offsets series within each category.
"""

from __future__ import annotations

import importlib.resources
import json

from .errors import IllegalState
from .grammar import (
    TOKEN_CLUSTER,
    TOKEN_SEP,
    TOKEN_STACK,
    ChartSequence,
    ChartType,
    chart_type_of,
    field_index,
    is_complete,
    is_field_token,
)
from .tables import FieldType, Table

_MARKS = {
    ChartType.LINE: "line",
    ChartType.BAR: "bar",
    ChartType.SCATTER: "point",
    ChartType.PIE: "arc",
    ChartType.AREA: "area",
    ChartType.RADAR: "line",  # no native radar mark in the grammar subset
}

_VL_TYPES = {
    FieldType.STRING: "nominal",
    FieldType.YEAR: "ordinal",
    FieldType.DATETIME: "temporal",
    FieldType.DECIMAL: "quantitative",
    FieldType.UNKNOWN: "nominal",
}

ROW_COLUMN = "__row__"
X_CONCAT_COLUMN = "__x__"


def _split_chart(chart: ChartSequence):
    y: list[int] = []
    x: list[int] = []
    grp = None
    seen_sep = False
    for tok in chart[1:]:
        if is_field_token(tok):
            (x if seen_sep else y).append(field_index(tok))
        elif tok == TOKEN_SEP:
            seen_sep = True
        elif tok in (TOKEN_CLUSTER, TOKEN_STACK):
            grp = tok
    return y, x, grp


def _column_name(table: Table, idx: int, taken: set[str]) -> str:
    name = table.fields[idx].header.strip() or f"field_{idx}"
    base = name
    suffix = 2
    while name in taken:
        name = f"{base}_{suffix}"
        suffix += 1
    taken.add(name)
    return name


def to_vegalite(chart: ChartSequence, table: Table) -> dict:
    """One renderable document for a complete chart sequence."""
    if not is_complete(chart):
        raise IllegalState("only complete sequences can be exported")
    chart_type = chart_type_of(chart)
    y_idx, x_idx, grp = _split_chart(chart)
    taken: set[str] = set()
    names: dict[int, str] = {}
    for idx in y_idx + x_idx:
        if idx not in names:
            names[idx] = _column_name(table, idx, taken)

    rows = []
    for r in range(table.n_rows):
        row: dict = {ROW_COLUMN: r}
        for idx, name in names.items():
            row[name] = table.fields[idx].values[r]
        if len(x_idx) > 1:
            row[X_CONCAT_COLUMN] = " / ".join(
                str(table.fields[i].values[r]) for i in x_idx
            )
        rows.append(row)

    if len(x_idx) == 1:
        x_field = names[x_idx[0]]
        x_type = _VL_TYPES[table.fields[x_idx[0]].field_type]
    elif len(x_idx) > 1:
        x_field, x_type = X_CONCAT_COLUMN, "nominal"
    else:
        x_field, x_type = ROW_COLUMN, "ordinal"

    doc: dict = {
        "$schema": "https://vega.github.io/schema/vega-lite/v5.json",
        "description": f"{chart_type.value} chart for table {table.table_id}",
        "data": {"values": rows},
        "mark": _MARKS[chart_type],
        "encoding": {},
    }

    multi_y = len(y_idx) > 1
    if multi_y:
        doc["transform"] = [
            {"fold": [names[i] for i in y_idx], "as": ["series", "value"]}
        ]
        value_field, series_field = "value", "series"
    else:
        value_field, series_field = names[y_idx[0]], None

    enc = doc["encoding"]
    if chart_type is ChartType.PIE:
        enc["theta"] = {"field": value_field, "type": "quantitative"}
        if x_idx:
            enc["color"] = {"field": x_field, "type": x_type}
        elif series_field:
            enc["color"] = {"field": series_field, "type": "nominal"}
    else:
        enc["x"] = {"field": x_field, "type": x_type}
        enc["y"] = {"field": value_field, "type": "quantitative"}
        if series_field:
            enc["color"] = {"field": series_field, "type": "nominal"}
        if chart_type is ChartType.BAR:
            if grp == TOKEN_STACK:
                enc["y"]["stack"] = "zero"
            else:
                enc["y"]["stack"] = None
                if series_field:
                    enc["xOffset"] = {"field": series_field, "type": "nominal"}
    return doc


def load_subset_schema() -> dict:
    """The vendored JSON Schema every exported document must satisfy."""
    text = (
        importlib.resources.files("chartrec")
        .joinpath("schemas/vegalite_subset.schema.json")
        .read_text(encoding="utf-8")
    )
    return json.loads(text)


def validate_export(doc: dict) -> None:
    import jsonschema

    jsonschema.validate(doc, load_subset_schema())
