"""Independent brute-force acceptor for chart token sequences.

Deliberately implemented from the written productions, not from the
package's automaton: a complete sequence is validated by shape-matching
``<type> <y-fields> [SEP] <x-fields> <terminator>`` and checking each
constraint one by one. The full (finite) language of a table comes from
exhaustively generating every structured candidate and filtering it
through the acceptor; prefix legality is membership in the language's
prefix set.
"""

from __future__ import annotations

from itertools import permutations

# Token ints mirror the package encoding (fixed by the sequence text format).
LINE, BAR, SCATTER, PIE, AREA, RADAR, SEP, CLUSTER, STACK = range(9)
FIELD_BASE = 9

# (y_min, y_max_grammar, x_min, x_max_grammar, grp_ending)
RULES = {
    LINE: (1, None, 0, None, False),
    BAR: (1, None, 0, None, True),
    SCATTER: (1, 1, 1, 1, False),
    PIE: (1, 1, 0, None, False),
    AREA: (1, None, 0, None, False),
    RADAR: (1, None, 0, None, False),
}


def accepts(
    tokens: tuple[int, ...],
    string_fields: frozenset[int],
    n_fields: int,
    forbid_string_y: bool = True,
    max_y: int = 8,
    max_x: int = 2,
) -> bool:
    """Is ``tokens`` a complete legal sequence for a table with ``n_fields``
    fields, of which ``string_fields`` are string-typed?"""
    if len(tokens) < 3 or tokens[0] not in RULES:
        return False
    y_min, y_max, x_min, x_max, grp_ending = RULES[tokens[0]]
    body, last = tokens[1:-1], tokens[-1]
    if grp_ending:
        if last not in (CLUSTER, STACK):
            return False
    elif last != SEP:
        return False
    if SEP not in body:
        return False
    sep_at = body.index(SEP)
    y_part, x_part = body[:sep_at], body[sep_at + 1 :]
    for part in (y_part, x_part):
        if any(t < FIELD_BASE for t in part):
            return False
        if any(t - FIELD_BASE >= n_fields for t in part):
            return False
    if len(set(y_part + x_part)) != len(y_part) + len(x_part):
        return False  # a field may appear at most once in a chart
    if not (y_min <= len(y_part) <= min(y_max or max_y, max_y)):
        return False
    if not ((x_min <= len(x_part) <= min(x_max or max_x, max_x))):
        return False
    if forbid_string_y and any(t - FIELD_BASE in string_fields for t in y_part):
        return False
    return True


def language(
    string_fields: frozenset[int],
    n_fields: int,
    forbid_string_y: bool = True,
    max_y: int = 8,
    max_x: int = 2,
) -> set[tuple[int, ...]]:
    """Every complete legal sequence, by generate-and-filter."""
    fields = [FIELD_BASE + i for i in range(n_fields)]
    out: set[tuple[int, ...]] = set()
    for chart_type in RULES:
        terminators = (CLUSTER, STACK) if RULES[chart_type][4] else (SEP,)
        for ny in range(0, min(n_fields, max_y) + 1):
            for y_perm in permutations(fields, ny):
                for nx in range(0, min(n_fields, max_x) + 1):
                    for x_perm in permutations(fields, nx):
                        for term in terminators:
                            cand = (chart_type, *y_perm, SEP, *x_perm, term)
                            if accepts(
                                cand, string_fields, n_fields,
                                forbid_string_y, max_y, max_x,
                            ):
                                out.add(cand)
    return out


class PrefixOracle:
    """Prefix trie over a language: next-token sets and completeness."""

    def __init__(self, lang: set[tuple[int, ...]]):
        self.lang = lang
        self.next: dict[tuple[int, ...], set[int]] = {}
        for seq in lang:
            for i in range(len(seq)):
                self.next.setdefault(seq[:i], set()).add(seq[i])
        for seq in lang:
            self.next.setdefault(seq, set())

    def states(self) -> set[tuple[int, ...]]:
        return {s for s in self.next if s}

    def legal_next(self, prefix: tuple[int, ...]) -> set[int]:
        return self.next.get(prefix, set())

    def complete(self, prefix: tuple[int, ...]) -> bool:
        return prefix in self.lang
