"""Tables, fields, type inference and schema identity.

A table is a rectangular list of typed fields; every corpus operation keys
tables by their schema (the ordered list of (type, header) pairs).
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

from .errors import ParseError, TooManyFields

MAX_FIELDS = 128

# Cell records are numbers, strings, or None for missing.
Cell = float | int | str | None


class FieldType(Enum):
    UNKNOWN = "Unknown"
    STRING = "String"
    YEAR = "Year"
    DATETIME = "DateTime"
    DECIMAL = "Decimal"

    @property
    def is_numeric(self) -> bool:
        return self in (FieldType.YEAR, FieldType.DECIMAL)


class FieldRole(Enum):
    INVALID = "Invalid"
    HEADER = "Header"
    VALUE = "Value"


@dataclass(frozen=True)
class Field:
    """One table column: header text plus an ordered list of cell records."""

    index: int
    header: str
    field_type: FieldType
    role: FieldRole
    values: tuple[Cell, ...]

    def numeric_values(self) -> list[float]:
        """Non-missing cells coerced to float; unparseable cells dropped."""
        out = []
        for v in self.values:
            x = _as_number(v)
            if x is not None:
                out.append(x)
        return out

    def text_values(self) -> list[str]:
        """Non-missing cells as their text form."""
        return [str(v) for v in self.values if v is not None]


@dataclass(frozen=True)
class Table:
    table_id: str
    fields: tuple[Field, ...]

    def __post_init__(self) -> None:
        if not 1 <= len(self.fields) <= MAX_FIELDS:
            raise TooManyFields(
                f"table {self.table_id!r} has {len(self.fields)} fields, "
                f"allowed range is 1..{MAX_FIELDS}"
            )
        lengths = {len(f.values) for f in self.fields}
        if len(lengths) > 1:
            raise ParseError(f"table {self.table_id!r} is not rectangular: {lengths}")
        indices = [f.index for f in self.fields]
        if indices != list(range(len(self.fields))):
            raise ParseError(f"table {self.table_id!r} has non-contiguous field indices")

    @property
    def n_fields(self) -> int:
        return len(self.fields)

    @property
    def n_rows(self) -> int:
        return len(self.fields[0].values)


SchemaKey = str


def schema_key(table: Table) -> SchemaKey:
    """Digest over the ordered (field_type, header) pairs.

    Equal keys iff same field count and per-position type/header equality.
    """
    h = hashlib.sha256()
    for f in table.fields:
        h.update(f.field_type.value.encode("utf-8"))
        h.update(b"\x1f")
        h.update(f.header.encode("utf-8"))
        h.update(b"\x1e")
    return h.hexdigest()


_NUMBER_RE = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")
# Dates: ISO-8601 calendar dates with optional time part.
_DATE_RE = re.compile(
    r"^\d{4}-\d{2}-\d{2}([T ]\d{2}:\d{2}(:\d{2}(\.\d+)?)?(Z|[+-]\d{2}:?\d{2})?)?$"
)


def _as_number(value: Cell) -> float | None:
    if value is None:
        return None
    if isinstance(value, bool):
        return None
    if isinstance(value, (int, float)):
        return float(value) if math.isfinite(float(value)) else None
    text = value.strip().replace(",", "")
    if _NUMBER_RE.match(text):
        try:
            x = float(text)
        except ValueError:
            return None
        return x if math.isfinite(x) else None
    return None


def _is_date(value: Cell) -> bool:
    return isinstance(value, str) and bool(_DATE_RE.match(value.strip()))


def infer_field_type(values: Sequence[Cell], header: str = "") -> FieldType:
    """Classify a column of cell records.

    Checks run in a fixed order (DateTime, Year, Decimal, String); a column
    qualifies when at least 90% of its non-missing cells satisfy the rule.
    Year is the integer sub-case of Decimal restricted to [1000, 2999] with
    at most 200 distinct values.
    """
    present = [v for v in values if v is not None and v != ""]
    if not present:
        return FieldType.UNKNOWN
    n = len(present)
    numbers = [_as_number(v) for v in present]
    n_numeric = sum(1 for x in numbers if x is not None)
    n_date = sum(1 for v in present if _is_date(v))

    if n_date >= 0.9 * n:
        return FieldType.DATETIME
    if n_numeric >= 0.9 * n:
        parsed = [x for x in numbers if x is not None]
        if (
            len(parsed) == n
            and all(x == int(x) and 1000 <= x <= 2999 for x in parsed)
            and len(set(parsed)) <= 200
        ):
            return FieldType.YEAR
        return FieldType.DECIMAL
    n_text = sum(
        1 for v, x in zip(present, numbers) if x is None and not _is_date(v)
    )
    if n_text >= 0.9 * n:
        return FieldType.STRING
    return FieldType.UNKNOWN


def default_role(field_type: FieldType, index: int, types: Sequence[FieldType]) -> FieldRole:
    """Role fallback for corpora that do not carry one.

    Leading String fields act as row headers; everything else is a value
    column.
    """
    if field_type is FieldType.STRING and all(
        t is FieldType.STRING for t in types[: index + 1]
    ):
        return FieldRole.HEADER
    return FieldRole.VALUE


def make_table(
    table_id: str,
    headers: Sequence[str],
    columns: Sequence[Sequence[Cell]],
    types: Sequence[FieldType] | None = None,
    roles: Sequence[FieldRole] | None = None,
) -> Table:
    """Build a table from per-column data, inferring types/roles when absent."""
    if len(headers) != len(columns):
        raise ParseError("headers and columns disagree in length")
    inferred = (
        list(types)
        if types is not None
        else [infer_field_type(col, hdr) for hdr, col in zip(headers, columns)]
    )
    fields = []
    for i, (hdr, col) in enumerate(zip(headers, columns)):
        role = (
            roles[i]
            if roles is not None
            else default_role(inferred[i], i, inferred)
        )
        norm = tuple(None if c == "" else c for c in col)
        fields.append(Field(i, hdr, inferred[i], role, norm))
    return Table(table_id, tuple(fields))


def table_from_csv(text: str, table_id: str = "csv") -> Table:
    """Parse CSV text: first row is headers, types are inferred.

    Numeric-looking cells are stored as floats so statistics see numbers;
    everything else stays text. Empty cells are missing.
    """
    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if any(c.strip() for c in r)]
    if not rows:
        raise ParseError("empty CSV input")
    headers = [h.strip() for h in rows[0]]
    width = len(headers)
    columns: list[list[Cell]] = [[] for _ in range(width)]
    for r in rows[1:]:
        for i in range(width):
            cell = r[i].strip() if i < len(r) else ""
            columns[i].append(cell if cell else None)
    types = [infer_field_type(col) for col in columns]
    coerced: list[list[Cell]] = []
    for col, t in zip(columns, types):
        if t.is_numeric or t is FieldType.DECIMAL:
            coerced.append([_as_number(c) if _as_number(c) is not None else c for c in col])
        else:
            coerced.append(list(col))
    return make_table(table_id, headers, coerced, types=types)


def iter_cells(fields: Iterable[Field]) -> Iterable[Cell]:
    for f in fields:
        yield from f.values
