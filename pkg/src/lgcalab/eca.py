"""Elementary cellular automata: the 256 binary nearest-neighbor rules.

A rule number encodes the truth table of a 3-cell neighborhood: bit k of the
number is the output for the neighborhood whose binary value is k, with the
left cell most significant.  Besides evolving spacetime diagrams, this module
builds the pattern-response table used for rule-space mining: every l-bit
pattern is pushed once through every rule (interior cells only, so the
output is l-2 bits) and the outputs are read as cardinal numbers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

BOUNDARY_ZERO = "zero"
BOUNDARY_PERIODIC = "periodic"
_BOUNDARIES = (BOUNDARY_ZERO, BOUNDARY_PERIODIC)


@dataclass(frozen=True)
class EcaRule:
    """One of the 256 elementary rules; ``table[k]`` is the output for
    the neighborhood with value k (left cell = bit 2)."""

    number: int
    table: np.ndarray

    def __post_init__(self):
        if not 0 <= self.number <= 255:
            raise ValueError("rule number must lie in [0, 255]")
        table = np.ascontiguousarray(self.table, dtype=np.uint8)
        if table.shape != (8,) or table.max(initial=0) > 1:
            raise ValueError("rule table must be 8 bits")
        recomputed = int(np.dot(table, 1 << np.arange(8)))
        if recomputed != self.number:
            raise ValueError(f"table encodes rule {recomputed}, not {self.number}")
        table.flags.writeable = False
        object.__setattr__(self, "table", table)

    @classmethod
    def from_number(cls, number: int) -> "EcaRule":
        if not 0 <= number <= 255:
            raise ValueError("rule number must lie in [0, 255]")
        table = (number >> np.arange(8)) & 1
        return cls(number, table.astype(np.uint8))

    @classmethod
    def from_table(cls, table) -> "EcaRule":
        table = np.asarray(table, dtype=np.uint8)
        number = int(np.dot(table, 1 << np.arange(8)))
        return cls(number, table)

    def mirrored(self) -> "EcaRule":
        """Rule with every neighborhood read right-to-left."""
        mirrored = np.empty(8, dtype=np.uint8)
        for code in range(8):
            b2, b1, b0 = (code >> 2) & 1, (code >> 1) & 1, code & 1
            mirrored[code] = self.table[(b0 << 2) | (b1 << 1) | b2]
        return EcaRule.from_table(mirrored)


@dataclass(frozen=True)
class SpacetimeDiagram:
    """Rows of the evolution; row t is the configuration at time t."""

    rows: np.ndarray  # (T+1, width) of 0/1
    boundary: str

    def __post_init__(self):
        rows = np.ascontiguousarray(self.rows, dtype=np.uint8)
        if rows.ndim != 2 or rows.max(initial=0) > 1:
            raise ValueError("diagram must be a 2-d array of bits")
        rows.flags.writeable = False
        object.__setattr__(self, "rows", rows)

    @property
    def width(self) -> int:
        return self.rows.shape[1]

    @property
    def steps(self) -> int:
        return self.rows.shape[0] - 1


def _neighborhood_codes(row: np.ndarray, boundary: str) -> np.ndarray:
    if boundary == BOUNDARY_PERIODIC:
        left = np.roll(row, 1)
        right = np.roll(row, -1)
    else:
        left = np.concatenate(([0], row[:-1]))
        right = np.concatenate((row[1:], [0]))
    return (left.astype(np.intp) << 2) | (row.astype(np.intp) << 1) | right


def apply_rule(rule: EcaRule, row, boundary: str = BOUNDARY_ZERO) -> np.ndarray:
    """One synchronous update of a bit-row; off-lattice cells per boundary mode."""
    if boundary not in _BOUNDARIES:
        raise ValueError(f"unknown boundary mode: {boundary!r}")
    row = np.ascontiguousarray(row, dtype=np.uint8)
    if row.ndim != 1 or row.size < 3:
        raise ValueError("row width must be at least 3")
    if row.max(initial=0) > 1:
        raise ValueError("row must be binary")
    return rule.table[_neighborhood_codes(row, boundary)]


def evolve(rule: EcaRule, initial, steps: int, boundary: str = BOUNDARY_ZERO) -> SpacetimeDiagram:
    """Evolve ``steps`` updates; the diagram keeps the initial row as row 0."""
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    initial = np.ascontiguousarray(initial, dtype=np.uint8)
    rows = np.empty((steps + 1, initial.size), dtype=np.uint8)
    rows[0] = initial
    for t in range(steps):
        rows[t + 1] = apply_rule(rule, rows[t], boundary)
    return SpacetimeDiagram(rows, boundary)


def single_seed_row(width: int) -> np.ndarray:
    """All zeros except a 1 at the center cell."""
    row = np.zeros(width, dtype=np.uint8)
    row[width // 2] = 1
    return row


@dataclass(frozen=True)
class PatternTable:
    """Response table F: f[i, j] is the cardinal output of rule j on pattern i.

    Patterns are the 2^l unsigned l-bit integers read most-significant-bit
    leftmost; outputs are the l-2 interior bits, read the same way.
    """

    l: int
    entries: np.ndarray  # (2^l, 256) int64

    @property
    def n_patterns(self) -> int:
        return self.entries.shape[0]

    @property
    def n_rules(self) -> int:
        return self.entries.shape[1]


def build_pattern_table(l: int) -> PatternTable:
    """Apply all 256 rules once, interior-only, to all l-bit patterns."""
    if l < 3:
        raise ValueError("pattern length l must be at least 3")
    n = 1 << l
    # pattern bits, MSB (leftmost cell) first
    bits = (np.arange(n, dtype=np.int64)[:, None] >> np.arange(l - 1, -1, -1)) & 1
    # interior neighborhood codes: positions 1 .. l-2
    codes = (bits[:, :-2] << 2) | (bits[:, 1:-1] << 1) | bits[:, 2:]  # (n, l-2)
    tables = (np.arange(256, dtype=np.int64)[:, None] >> np.arange(8)) & 1  # (256, 8)
    outputs = tables[:, codes]  # (256, n, l-2)
    weights = 1 << np.arange(l - 3, -1, -1, dtype=np.int64)
    entries = np.tensordot(outputs, weights, axes=([2], [0])).T  # (n, 256)
    return PatternTable(l, np.ascontiguousarray(entries))
