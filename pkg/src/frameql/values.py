"""Scalar value model shared by the executors, the generator, and the oracle.

Two distinct absence markers exist: MISSING (the attribute is not present in
the record at all) and NULL (the attribute is present with an explicit null).
Everything else is a plain Python int, float, bool, or str. These map onto
JSON lines as: absent key <-> MISSING, JSON null <-> NULL.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator, TextIO


class _Missing:
    """Singleton marker for an attribute that is absent from a record."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "MISSING"

    def __bool__(self) -> bool:
        return False


class _Null:
    """Singleton marker for an attribute that is present but null."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "NULL"

    def __bool__(self) -> bool:
        return False


MISSING = _Missing()
NULL = _Null()

# Largest magnitude a JSON integer may have and still round-trip as an int.
_INT64_MIN = -(2**63)
_INT64_MAX = 2**63 - 1


class ValueError_(Exception):
    """Raised for values outside the model (nested objects, NaN, etc.)."""


def is_absent(v: Any) -> bool:
    """True for both absence markers."""
    return v is MISSING or v is NULL


def type_bracket(v: Any) -> int:
    """Position of a value's type in the cross-type total order.

    MISSING < NULL < numbers (int and float together) < strings < booleans.
    Booleans sort last, mirroring how BSON orders them after strings.
    """
    if v is MISSING:
        return 0
    if v is NULL:
        return 1
    if isinstance(v, bool):  # bool before int: bool is an int subclass
        return 4
    if isinstance(v, (int, float)):
        return 2
    if isinstance(v, str):
        return 3
    raise ValueError_(f"value outside the model: {v!r}")


def total_order_key(v: Any):
    """Sort key implementing the bracketed cross-type total order.

    Within the number bracket ints and floats compare numerically; within
    strings, lexicographically; False < True.
    """
    b = type_bracket(v)
    if b in (0, 1):
        return (b, 0)
    if b == 2:
        return (b, v)
    if b == 3:
        return (b, v)
    return (b, 1 if v else 0)


def total_order_cmp(a: Any, b: Any) -> int:
    """Three-way comparison under the bracketed total order."""
    ka, kb = total_order_key(a), total_order_key(b)
    # Keys within one bracket are mutually comparable; across brackets the
    # first tuple element decides.
    if ka[0] != kb[0]:
        return -1 if ka[0] < kb[0] else 1
    if ka[1] == kb[1]:
        return 0
    return -1 if ka[1] < kb[1] else 1


# Three-valued logic results for SQL-style comparison.
TRUE = True
FALSE = False
UNKNOWN = None  # the third truth value


def tristate_compare(op: str, a: Any, b: Any):
    """SQL-style comparison: UNKNOWN if either side is NULL or MISSING.

    Numeric operands (int/float, but not bool) compare numerically across
    the int/float divide. Any other cross-type comparison is FALSE for eq
    and TRUE for ne, and FALSE for the orderings.
    """
    if is_absent(a) or is_absent(b):
        return UNKNOWN
    a_num = isinstance(a, (int, float)) and not isinstance(a, bool)
    b_num = isinstance(b, (int, float)) and not isinstance(b, bool)
    same_kind = (a_num and b_num) or (type(a) is type(b))
    if not same_kind:
        return op == "ne"
    if op == "eq":
        return a == b
    if op == "ne":
        return a != b
    if op == "gt":
        return a > b
    if op == "lt":
        return a < b
    if op == "ge":
        return a >= b
    if op == "le":
        return a <= b
    raise ValueError_(f"unknown comparison op: {op}")


def tristate_and(a, b):
    if a is FALSE or b is FALSE:
        return FALSE
    if a is UNKNOWN or b is UNKNOWN:
        return UNKNOWN
    return TRUE


def tristate_or(a, b):
    if a is TRUE or b is TRUE:
        return TRUE
    if a is UNKNOWN or b is UNKNOWN:
        return UNKNOWN
    return FALSE


def tristate_not(a):
    if a is UNKNOWN:
        return UNKNOWN
    return not a


# ---------------------------------------------------------------------------
# Records and tables
# ---------------------------------------------------------------------------

Record = dict  # ordered attribute -> value mapping; absent key reads as MISSING


def record_get(rec: Record, name: str) -> Any:
    return rec.get(name, MISSING)


@dataclass
class Table:
    """An ordered collection of flat records.

    `columns`, when set, fixes the presentation order of attributes; rows may
    still omit attributes (those read as MISSING). Tables are treated as
    immutable after construction; nothing in this package mutates one that
    has been handed out.
    """

    rows: list[Record] = field(default_factory=list)
    columns: list[str] | None = None

    def __len__(self) -> int:
        return len(self.rows)

    def column_names(self) -> list[str]:
        if self.columns is not None:
            return list(self.columns)
        seen: dict[str, None] = {}
        for r in self.rows:
            for k in r:
                seen.setdefault(k)
        return list(seen)

    def to_tuples(self) -> list[tuple]:
        """Rows as value tuples in column order (names dropped)."""
        cols = self.column_names()
        return [tuple(record_get(r, c) for c in cols) for r in self.rows]


# ---------------------------------------------------------------------------
# JSON-lines I/O
# ---------------------------------------------------------------------------


def _check_value(v: Any) -> Any:
    if v is MISSING or v is NULL:
        return v
    if isinstance(v, bool):
        return v
    if isinstance(v, int):
        return v
    if isinstance(v, float):
        if not math.isfinite(v):
            raise ValueError_("non-finite floats cannot be serialized")
        return v
    if isinstance(v, str):
        return v
    raise ValueError_(f"value outside the model: {v!r}")


def _decode_value(v: Any) -> Any:
    if v is None:
        return NULL
    if isinstance(v, bool):
        return v
    if isinstance(v, int):
        # Integral and exactly representable -> int; otherwise degrade.
        if _INT64_MIN <= v <= _INT64_MAX:
            return v
        return float(v)
    if isinstance(v, float):
        return v
    if isinstance(v, str):
        return v
    raise ValueError_(f"nested structures are outside the model: {v!r}")


def write_jsonl(table: Table | Iterable[Record], fp: TextIO) -> None:
    """Write one JSON object per row. MISSING attributes are omitted,
    NULL serializes as JSON null. Attribute order within each record is
    preserved. Accepts a Table or any iterable of records (streaming)."""
    rows = table.rows if isinstance(table, Table) else table
    for rec in rows:
        out = {}
        for k, v in rec.items():
            v = _check_value(v)
            if v is MISSING:
                continue
            out[k] = None if v is NULL else v
        fp.write(json.dumps(out, separators=(",", ":")))
        fp.write("\n")


def read_jsonl(fp: TextIO | Iterable[str]) -> Table:
    """Parse JSON lines back into a Table. Inverse of write_jsonl for any
    table without non-finite floats."""
    rows: list[Record] = []
    for line in fp:
        line = line.strip()
        if not line:
            continue
        obj = json.loads(line)
        if not isinstance(obj, dict):
            raise ValueError_("each line must hold a JSON object")
        rows.append({k: _decode_value(v) for k, v in obj.items()})
    return Table(rows=rows)


def iter_jsonl(fp: TextIO) -> Iterator[Record]:
    for line in fp:
        line = line.strip()
        if line:
            yield {k: _decode_value(v) for k, v in json.loads(line).items()}
