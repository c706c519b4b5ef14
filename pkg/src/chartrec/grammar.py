"""Action tokens, chart grammar templates and legal-action computation.

Tokens are small ints so sequences stay cheap to hash and compare:
command tokens occupy 0..8 in display order ([Line] [Bar] [Scatter] [Pie]
[Area] [Radar] [SEP] [Cluster] [Stack]) and field references follow as
``FIELD_BASE + index``. A (partial) chart is a plain tuple of tokens.

Every chart sequence is ``<type> <y-fields> [SEP] <x-fields> <terminator>``
where the terminator is a grouping token for bar charts and [SEP] otherwise.
Scatter takes exactly one y-field and exactly one x-field; pie takes exactly
one y-field; everything else takes one or more y-fields and zero or more
x-fields.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterator

from .errors import IllegalState, LimitExceeded, ParseError, UnknownField
from .tables import FieldType, Table


class ChartType(Enum):
    LINE = "Line"
    BAR = "Bar"
    SCATTER = "Scatter"
    PIE = "Pie"
    AREA = "Area"
    RADAR = "Radar"

    @property
    def token(self) -> int:
        return _TYPE_TOKEN[self]


Token = int
ChartSequence = tuple[Token, ...]

TOKEN_LINE, TOKEN_BAR, TOKEN_SCATTER, TOKEN_PIE, TOKEN_AREA, TOKEN_RADAR = range(6)
TOKEN_SEP = 6
TOKEN_CLUSTER = 7
TOKEN_STACK = 8
N_COMMANDS = 9
FIELD_BASE = 9

_TYPE_TOKEN = {
    ChartType.LINE: TOKEN_LINE,
    ChartType.BAR: TOKEN_BAR,
    ChartType.SCATTER: TOKEN_SCATTER,
    ChartType.PIE: TOKEN_PIE,
    ChartType.AREA: TOKEN_AREA,
    ChartType.RADAR: TOKEN_RADAR,
}
_TOKEN_TYPE = {v: k for k, v in _TYPE_TOKEN.items()}

MAJOR_TYPES = (ChartType.LINE, ChartType.BAR, ChartType.SCATTER, ChartType.PIE)
ALL_TYPES = tuple(ChartType)

_COMMAND_TEXT = {
    TOKEN_LINE: "[Line]",
    TOKEN_BAR: "[Bar]",
    TOKEN_SCATTER: "[Scatter]",
    TOKEN_PIE: "[Pie]",
    TOKEN_AREA: "[Area]",
    TOKEN_RADAR: "[Radar]",
    TOKEN_SEP: "[SEP]",
    TOKEN_CLUSTER: "[Cluster]",
    TOKEN_STACK: "[Stack]",
}
_TEXT_COMMAND = {v: k for k, v in _COMMAND_TEXT.items()}
_FIELD_REF_RE = re.compile(r"^\((\d+)\)$")


def field_token(index: int) -> Token:
    return FIELD_BASE + index


def is_field_token(token: Token) -> bool:
    return token >= FIELD_BASE


def field_index(token: Token) -> int:
    if token < FIELD_BASE:
        raise ValueError(f"token {token} is not a field reference")
    return token - FIELD_BASE


def chart_type_of(state: ChartSequence) -> ChartType:
    if not state or state[0] not in _TOKEN_TYPE:
        raise IllegalState(f"sequence does not start with a chart type: {state}")
    return _TOKEN_TYPE[state[0]]


@dataclass(frozen=True)
class Template:
    """Arity rules of one chart type's production."""

    chart_type: ChartType
    y_exactly_one: bool
    x_exactly_one: bool
    grp_terminator: bool


TEMPLATES = {
    ChartType.LINE: Template(ChartType.LINE, False, False, False),
    ChartType.BAR: Template(ChartType.BAR, False, False, True),
    ChartType.SCATTER: Template(ChartType.SCATTER, True, True, False),
    ChartType.PIE: Template(ChartType.PIE, True, False, False),
    ChartType.AREA: Template(ChartType.AREA, False, False, False),
    ChartType.RADAR: Template(ChartType.RADAR, False, False, False),
}


@dataclass(frozen=True)
class HardConstraints:
    """Pruning rules applied on top of the grammar.

    ``required_fields`` switches searching into exact-field-set mode: only
    those fields may be referenced and a sequence can only terminate once
    all of them appear.  ``allowed_types`` restricts the chart-type tokens
    offered at the (virtual) empty state.
    """

    forbid_string_y: bool = True
    max_y_fields: int = 8
    max_x_fields: int = 2
    required_fields: frozenset[int] | None = None
    allowed_types: frozenset[ChartType] | None = None

    def with_user(
        self,
        fields: frozenset[int] | None = None,
        types: frozenset[ChartType] | None = None,
    ) -> "HardConstraints":
        return replace(self, required_fields=fields, allowed_types=types)

    def max_sequence_length(self) -> int:
        # type token + y + SEP + x + terminator
        return 3 + self.max_y_fields + self.max_x_fields


DEFAULT_CONSTRAINTS = HardConstraints()
# Grammar-only validation: no type/arity pruning beyond the productions.
PERMISSIVE_CONSTRAINTS = HardConstraints(
    forbid_string_y=False, max_y_fields=10**9, max_x_fields=10**9
)

_PHASE_Y = 0
_PHASE_X = 1
_PHASE_DONE = 2


@dataclass(frozen=True)
class _Summary:
    template: Template
    phase: int
    y_fields: tuple[int, ...] = ()
    x_fields: tuple[int, ...] = ()


def _legal_from_summary(
    table: Table, summary: _Summary | None, constraints: HardConstraints
) -> set[Token]:
    if summary is None:  # virtual root: choose a chart type
        types = constraints.allowed_types or ALL_TYPES
        return {t.token for t in types}
    if summary.phase == _PHASE_DONE:
        return set()
    tmpl = summary.template
    required = constraints.required_fields
    used = set(summary.y_fields) | set(summary.x_fields)
    legal: set[Token] = set()

    def eligible(index: int, field_type: FieldType, y_segment: bool) -> bool:
        # a field may appear at most once in a whole chart
        if index in used:
            return False
        if y_segment and constraints.forbid_string_y and field_type is FieldType.STRING:
            return False
        if required is not None and index not in required:
            return False
        return True

    if summary.phase == _PHASE_Y:
        cap = 1 if tmpl.y_exactly_one else constraints.max_y_fields
        if len(summary.y_fields) < cap:
            for f in table.fields:
                if not eligible(f.index, f.field_type, y_segment=True):
                    continue
                if tmpl.x_exactly_one:
                    # scatter needs one more unused field left over for x
                    pool = (
                        required - used - {f.index}
                        if required is not None
                        else set(range(table.n_fields)) - used - {f.index}
                    )
                    if not pool:
                        continue
                legal.add(field_token(f.index))
        if len(summary.y_fields) >= 1:
            legal.add(TOKEN_SEP)
        return legal

    # X phase
    cap = 1 if tmpl.x_exactly_one else constraints.max_x_fields
    if len(summary.x_fields) < cap:
        for f in table.fields:
            if eligible(f.index, f.field_type, y_segment=False):
                legal.add(field_token(f.index))
    x_min = 1 if tmpl.x_exactly_one else 0
    covered = required is None or required <= used
    if len(summary.x_fields) >= x_min and covered:
        if tmpl.grp_terminator:
            legal.add(TOKEN_CLUSTER)
            legal.add(TOKEN_STACK)
        else:
            legal.add(TOKEN_SEP)
    return legal


def _advance(
    table: Table, summary: _Summary | None, token: Token, constraints: HardConstraints
) -> _Summary:
    if token not in _legal_from_summary(table, summary, constraints):
        raise IllegalState(f"token {token_text(token)} not legal here")
    if summary is None:
        return _Summary(TEMPLATES[_TOKEN_TYPE[token]], _PHASE_Y)
    if summary.phase == _PHASE_Y:
        if is_field_token(token):
            return replace(summary, y_fields=summary.y_fields + (field_index(token),))
        return replace(summary, phase=_PHASE_X)
    if is_field_token(token):
        return replace(summary, x_fields=summary.x_fields + (field_index(token),))
    return replace(summary, phase=_PHASE_DONE)


def summarize(
    table: Table, state: ChartSequence, constraints: HardConstraints = DEFAULT_CONSTRAINTS
) -> _Summary | None:
    """Validate ``state`` as a legal prefix and fold it to segment counts."""
    summary: _Summary | None = None
    for tok in state:
        if is_field_token(tok) and field_index(tok) >= table.n_fields:
            raise UnknownField(f"field index {field_index(tok)} out of range")
        summary = _advance(table, summary, tok, constraints)
    return summary


def legal_actions(
    table: Table, state: ChartSequence, constraints: HardConstraints = DEFAULT_CONSTRAINTS
) -> set[Token]:
    """Tokens ``a`` such that ``state + (a,)`` is still a legal prefix."""
    return _legal_from_summary(table, summarize(table, state, constraints), constraints)


def is_complete(state: ChartSequence) -> bool:
    """True when the template's final terminator has been consumed.

    Structural check: type token, non-empty y segment, separator, x segment,
    and a trailing terminator matching the type.
    """
    if not state or state[0] not in _TOKEN_TYPE:
        return False
    tmpl = TEMPLATES[_TOKEN_TYPE[state[0]]]
    body = state[1:]
    if not body:
        return False
    sep_positions = [i for i, t in enumerate(body) if not is_field_token(t)]
    if len(sep_positions) != 2:
        return False
    first, last = sep_positions
    if body[first] != TOKEN_SEP or last != len(body) - 1:
        return False
    if tmpl.grp_terminator:
        if body[last] not in (TOKEN_CLUSTER, TOKEN_STACK):
            return False
    elif body[last] != TOKEN_SEP:
        return False
    n_y = first
    n_x = last - first - 1
    if n_y < 1 or (tmpl.y_exactly_one and n_y != 1):
        return False
    if tmpl.x_exactly_one and n_x != 1:
        return False
    return True


def token_text(token: Token) -> str:
    if is_field_token(token):
        return f"({field_index(token)})"
    return _COMMAND_TEXT[token]


def serialize_sequence(state: ChartSequence) -> str:
    return " ".join(token_text(t) for t in state)


def pretty_sequence(state: ChartSequence, table: Table) -> str:
    parts = []
    for t in state:
        if is_field_token(t):
            parts.append(f"({table.fields[field_index(t)].header})")
        else:
            parts.append(_COMMAND_TEXT[t])
    return " ".join(parts)


def parse_sequence(
    text: str,
    table: Table,
    constraints: HardConstraints = PERMISSIVE_CONSTRAINTS,
) -> ChartSequence:
    """Parse the space-separated token format, validating grammar legality.

    Defaults to permissive constraints so stored corpora round-trip even
    when they break searching-time pruning rules.
    """
    parts = text.split()
    if not parts:
        raise ParseError("empty sequence string")
    tokens: list[Token] = []
    for p in parts:
        if p in _TEXT_COMMAND:
            tokens.append(_TEXT_COMMAND[p])
            continue
        m = _FIELD_REF_RE.match(p)
        if not m:
            raise ParseError(f"unrecognized token {p!r}")
        idx = int(m.group(1))
        if idx >= table.n_fields:
            raise UnknownField(f"field index {idx} out of range for {table.table_id!r}")
        tokens.append(field_token(idx))
    state = tuple(tokens)
    summarize(table, state, constraints)
    return state


def enumerate_states(
    table: Table,
    constraints: HardConstraints = DEFAULT_CONSTRAINTS,
    max_len: int | None = None,
    max_states: int = 2_000_000,
) -> Iterator[ChartSequence]:
    """Depth-first walk over every reachable legal prefix (the state forest)."""
    limit = max_len if max_len is not None else constraints.max_sequence_length()
    count = 0
    stack: list[ChartSequence] = [
        (t,) for t in sorted(_legal_from_summary(table, None, constraints), reverse=True)
    ]
    while stack:
        state = stack.pop()
        count += 1
        if count > max_states:
            raise LimitExceeded(f"state enumeration exceeded {max_states}")
        yield state
        if len(state) >= limit:
            continue
        for a in sorted(legal_actions(table, state, constraints), reverse=True):
            stack.append(state + (a,))


def enumerate_all_charts(
    table: Table,
    constraints: HardConstraints = DEFAULT_CONSTRAINTS,
    max_len: int | None = None,
    max_states: int = 2_000_000,
) -> set[ChartSequence]:
    """All complete legal sequences of length <= max_len. Combinatorial:
    intended for small tables and test oracles."""
    return {
        s
        for s in enumerate_states(table, constraints, max_len, max_states)
        if is_complete(s)
    }
