"""Deterministic Wisconsin-benchmark dataset generator.

Produces the classic synthetic relation (unique1/unique2 key pair, modulo
selectivity attributes, templated strings) with optional missing-value
injection, as an in-memory table or streamed JSON lines.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterator

from .values import Record, Table

ATTRIBUTES = (
    "unique1", "unique2", "two", "four", "ten", "twenty",
    "onePercent", "tenPercent", "twentyPercent", "fiftyPercent",
    "unique3", "evenOnePercent", "oddOnePercent",
    "stringu1", "stringu2", "string4",
)

_STRING4_CYCLE = "AHOV"
_STRINGU_DIGITS = 7
_STRINGU_PAD = 45
_STRING4_PAD = 51


@dataclass(frozen=True)
class GeneratorSpec:
    max_rows: int
    seed: int = 0
    missing_rate: float = 0.0
    missing_attrs: tuple[str, ...] = ("tenPercent",)

    def __post_init__(self):
        if self.max_rows < 1:
            raise ValueError("max_rows must be at least 1")
        if not 0.0 <= self.missing_rate <= 1.0:
            raise ValueError("missing_rate must be within [0, 1]")
        object.__setattr__(self, "missing_attrs", tuple(self.missing_attrs))
        for attr in self.missing_attrs:
            if attr not in ATTRIBUTES:
                raise ValueError(f"unknown attribute {attr!r}")


def derive_string(u: int, role: str, cycle_index: int = 0) -> str:
    """Render a string attribute value.

    ``stringu``: a 7-character base-26 spelling of ``u`` in A..Z (most
    significant first, left-padded with 'A'), then 45 'x' characters.
    ``string4``: the A/H/O/V cycle letter at ``cycle_index``, then 51 'x'.
    """
    if role == "stringu":
        if u < 0:
            raise ValueError("u must be non-negative")
        if u >= 26 ** _STRINGU_DIGITS:
            raise ValueError(f"{u} does not fit in {_STRINGU_DIGITS} base-26 characters")
        chars = []
        v = u
        for _ in range(_STRINGU_DIGITS):
            chars.append(chr(ord("A") + v % 26))
            v //= 26
        return "".join(reversed(chars)) + "x" * _STRINGU_PAD
    if role == "string4":
        return _STRING4_CYCLE[cycle_index % 4] + "x" * _STRING4_PAD
    raise ValueError(f"unknown string role {role!r}")


def _missing_index_sets(spec: GeneratorSpec) -> dict[str, set[int]]:
    count = round(spec.missing_rate * spec.max_rows)
    sets: dict[str, set[int]] = {}
    for attr in spec.missing_attrs:
        rng = random.Random(f"{spec.seed}/{attr}")
        sets[attr] = set(rng.sample(range(spec.max_rows), count))
    return sets


def _build_row(u1: int, u2: int) -> Record:
    one = u1 % 100
    return {
        "unique1": u1,
        "unique2": u2,
        "two": u1 % 2,
        "four": u1 % 4,
        "ten": u1 % 10,
        "twenty": u1 % 20,
        "onePercent": one,
        "tenPercent": u1 % 10,
        "twentyPercent": u1 % 5,
        "fiftyPercent": u1 % 2,
        "unique3": u1,
        "evenOnePercent": one * 2,
        "oddOnePercent": one * 2 + 1,
        "stringu1": derive_string(u1, "stringu"),
        "stringu2": derive_string(u2, "stringu"),
        "string4": derive_string(0, "string4", cycle_index=u2),
    }


def iter_rows(spec: GeneratorSpec) -> Iterator[Record]:
    """Stream generated rows in unique2 (insertion) order."""
    unique1 = list(range(spec.max_rows))
    random.Random(spec.seed).shuffle(unique1)
    drop = _missing_index_sets(spec) if spec.missing_rate > 0 else {}
    for u2, u1 in enumerate(unique1):
        row = _build_row(u1, u2)
        for attr, indices in drop.items():
            if u2 in indices:
                del row[attr]
        yield row


def generate(spec: GeneratorSpec) -> Table:
    return Table(rows=list(iter_rows(spec)), columns=list(ATTRIBUTES))


def inject_missing(table: Table, attrs, rate: float, seed: int) -> Table:
    """Remove each listed attribute from a seeded subset of exactly
    round(rate * len(table)) rows; deterministic per (seed, attr)."""
    if not 0.0 <= rate <= 1.0:
        raise ValueError("rate must be within [0, 1]")
    n = len(table)
    columns = table.column_names()
    for attr in attrs:
        if attr not in columns:
            raise ValueError(f"unknown attribute {attr!r}")
    rows = [dict(r) for r in table.rows]
    count = round(rate * n)
    for attr in attrs:
        rng = random.Random(f"{seed}/{attr}")
        for i in rng.sample(range(n), count):
            rows[i].pop(attr, None)
    return Table(rows=rows, columns=columns)
