"""Benchmark harness: the 13 dataframe expressions, an eager oracle
evaluator, result diffing, timing, and golden-text comparison."""

from __future__ import annotations

import hashlib
import json
import math
import random
import statistics
import time
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from typing import Any, Callable, Iterable

from .connectors import DryRunConnector
from .frame import Frame, Sym, scan
from .templates import DialectKind, LanguagePack, normalize_pipeline_text, normalize_text_query
from .values import MISSING, NULL, Table, is_absent, record_get, total_order_key


@dataclass(frozen=True)
class BenchParams:
    """The x/y/z literals the selective expressions compare against.

    y is drawn twice: once in the twentyPercent domain (expression 3) and
    once in the onePercent domain at or above x (expression 11), so the
    range selection is never empty by construction.
    """

    x: Any
    y_twenty: Any
    y_one: Any
    z: Any

    @classmethod
    def draw(cls, seed: int) -> "BenchParams":
        rng = random.Random(seed)
        x = rng.randint(0, 9)
        y_twenty = rng.randint(0, 4)
        y_one = rng.randint(x, 99)
        z = rng.randint(0, 1)
        return cls(x=x, y_twenty=y_twenty, y_one=y_one, z=z)

    @classmethod
    def symbolic(cls) -> "BenchParams":
        return cls(x=Sym("x"), y_twenty=Sym("y"), y_one=Sym("y"), z=Sym("z"))


def _mask_eq(df: Frame, column: str, value: Any) -> Frame:
    return df.project([column]).compare("eq", value)


@dataclass(frozen=True)
class Expression:
    expr_id: int
    label: str
    build: Callable[[Frame, Frame, BenchParams], Frame]
    action: Callable[[Frame], Any]


EXPRESSIONS: dict[int, Expression] = {
    e.expr_id: e
    for e in (
        Expression(1, "total count", lambda df, df2, p: df, lambda f: f.count()),
        Expression(
            2, "project",
            lambda df, df2, p: df.project(["two", "four"]),
            lambda f: f.head(5),
        ),
        Expression(
            3, "filter and count",
            lambda df, df2, p: df.filter(
                _mask_eq(df, "ten", p.x)
                .logical_and(_mask_eq(df, "twentyPercent", p.y_twenty))
                .logical_and(_mask_eq(df, "two", p.z))
            ),
            lambda f: f.count(),
        ),
        Expression(
            4, "group by",
            lambda df, df2, p: df.groupby_agg("oddOnePercent", "count", "oddOnePercent"),
            lambda f: f.collect(),
        ),
        Expression(
            5, "map function",
            lambda df, df2, p: df.project(["stringu1"]).map_upper(),
            lambda f: f.head(5),
        ),
        Expression(
            6, "max",
            lambda df, df2, p: df.project(["unique1"]),
            lambda f: f.agg_value("max", "unique1"),
        ),
        Expression(
            7, "min",
            lambda df, df2, p: df.project(["unique1"]),
            lambda f: f.agg_value("min", "unique1"),
        ),
        Expression(
            8, "group by and max",
            lambda df, df2, p: df.groupby_agg("twenty", "max", "four"),
            lambda f: f.collect(),
        ),
        Expression(
            9, "sort",
            lambda df, df2, p: df.sort_values("unique1", ascending=False),
            lambda f: f.head(5),
        ),
        Expression(
            10, "selection",
            lambda df, df2, p: df.filter(_mask_eq(df, "ten", p.x)),
            lambda f: f.head(5),
        ),
        Expression(
            11, "range selection",
            lambda df, df2, p: df.filter(
                df.project(["onePercent"]).compare("ge", p.x)
                .logical_and(df.project(["onePercent"]).compare("le", p.y_one))
            ),
            lambda f: f.count(),
        ),
        Expression(
            12, "join and count",
            lambda df, df2, p: df.merge(df2, left_on="unique1", right_on="unique1", how="inner"),
            lambda f: f.count(),
        ),
        Expression(
            13, "count missing",
            lambda df, df2, p: df.filter(df.project(["tenPercent"]).isna()),
            lambda f: f.count(),
        ),
    )
}

HEAD_N = 5
_GROUP_KEYS = {4: "oddOnePercent", 8: "twenty"}


# ---------------------------------------------------------------------------
# Oracle evaluation (direct, eager, over the in-memory table)
# ---------------------------------------------------------------------------


def oracle_eval(expr_id: int, table: Table, params: BenchParams) -> Any:
    rows = table.rows
    if expr_id == 1:
        return len(rows)
    if expr_id == 2:
        return [(record_get(r, "two"), record_get(r, "four")) for r in rows]
    if expr_id == 3:
        return sum(
            1
            for r in rows
            if record_get(r, "ten") == params.x
            and record_get(r, "twentyPercent") == params.y_twenty
            and record_get(r, "two") == params.z
        )
    if expr_id == 4:
        return _group_pairs(rows, "oddOnePercent", "count", "oddOnePercent")
    if expr_id == 5:
        out = []
        for r in rows:
            v = record_get(r, "stringu1")
            out.append((NULL if is_absent(v) else v.upper(),))
        return out
    if expr_id in (6, 7):
        values = [v for r in rows if not is_absent(v := record_get(r, "unique1"))]
        if not values:
            return NULL
        return max(values) if expr_id == 6 else min(values)
    if expr_id == 8:
        return _group_pairs(rows, "twenty", "max", "four")
    if expr_id == 9:
        return sorted(rows, key=lambda r: total_order_key(record_get(r, "unique1")), reverse=True)
    if expr_id == 10:
        return [r for r in rows if record_get(r, "ten") == params.x]
    if expr_id == 11:
        count = 0
        for r in rows:
            v = record_get(r, "onePercent")
            if not is_absent(v) and params.x <= v <= params.y_one:
                count += 1
        return count
    if expr_id == 12:
        index: Counter = Counter()
        for r in rows:
            v = record_get(r, "unique1")
            if not is_absent(v):
                index[total_order_key(v)] += 1
        return sum(
            index[total_order_key(v)]
            for r in rows
            if not is_absent(v := record_get(r, "unique1"))
        )
    if expr_id == 13:
        return sum(1 for r in rows if is_absent(record_get(r, "tenPercent")))
    raise ValueError(f"unknown expression id {expr_id}")


def _group_pairs(rows: list, key: str, func: str, col: str) -> list[tuple]:
    groups: dict[Any, tuple[Any, list]] = {}
    for r in rows:
        k = record_get(r, key)
        groups.setdefault(total_order_key(k), (k, []))[1].append(record_get(r, col))
    pairs = []
    for k, values in groups.values():
        present = [v for v in values if not is_absent(v)]
        if func == "count":
            agg: Any = len(present)
        elif func == "max":
            agg = max(present, key=total_order_key) if present else NULL
        elif func == "min":
            agg = min(present, key=total_order_key) if present else NULL
        elif func == "avg":
            agg = sum(present) / len(present) if present else NULL
        else:
            raise ValueError(f"unknown aggregate {func!r}")
        pairs.append((k, agg))
    return pairs


# ---------------------------------------------------------------------------
# Result diffing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DiffReport:
    expr_id: int
    matched: bool
    detail: str = ""


def _numbers_match(a: Any, b: Any) -> bool:
    if is_absent(a) or is_absent(b):
        return a is b
    if isinstance(a, int) and isinstance(b, int):
        return a == b
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        return math.isclose(a, b, rel_tol=1e-9, abs_tol=0.0)
    return a == b


def _frozen_row(r: dict) -> tuple:
    return tuple(sorted(r.items(), key=lambda kv: kv[0]))


def diff_results(engine_result: Any, oracle_result: Any, expr_id: int) -> DiffReport:
    """Compare a connector result against the oracle.

    Counts exactly; scalar aggregates with 1e-9 relative tolerance on
    floats; group results as multisets keyed by the group attribute
    (aggregate column names vary across dialects); unsorted heads by
    cardinality plus membership in the full oracle multiset; the sorted
    head in order of its sort key.
    """
    if expr_id in (1, 3, 11, 12, 13):
        ok = isinstance(engine_result, int) and engine_result == oracle_result
        return DiffReport(expr_id, ok, "" if ok else f"{engine_result!r} != {oracle_result!r}")

    if expr_id in (6, 7):
        ok = _numbers_match(engine_result, oracle_result)
        return DiffReport(expr_id, ok, "" if ok else f"{engine_result!r} != {oracle_result!r}")

    if expr_id in (2, 5):
        rows = [tuple(r.values()) for r in engine_result.rows]
        universe = Counter(oracle_result)
        expected_n = min(HEAD_N, len(oracle_result))
        if len(rows) != expected_n:
            return DiffReport(expr_id, False, f"expected {expected_n} rows, got {len(rows)}")
        extra = Counter(rows) - universe
        if extra:
            return DiffReport(expr_id, False, f"rows outside oracle multiset: {extra}")
        return DiffReport(expr_id, True)

    if expr_id == 10:
        rows = [_frozen_row(r) for r in engine_result.rows]
        universe = Counter(_frozen_row(r) for r in oracle_result)
        expected_n = min(HEAD_N, len(oracle_result))
        if len(rows) != expected_n:
            return DiffReport(expr_id, False, f"expected {expected_n} rows, got {len(rows)}")
        extra = Counter(rows) - universe
        if extra:
            return DiffReport(expr_id, False, "rows outside oracle multiset")
        return DiffReport(expr_id, True)

    if expr_id == 9:
        expected = oracle_result[: min(HEAD_N, len(oracle_result))]
        got_keys = [record_get(r, "unique1") for r in engine_result.rows]
        want_keys = [record_get(r, "unique1") for r in expected]
        if got_keys != want_keys:
            return DiffReport(expr_id, False, f"sort keys {got_keys} != {want_keys}")
        if Counter(map(_frozen_row, engine_result.rows)) != Counter(map(_frozen_row, expected)):
            return DiffReport(expr_id, False, "row contents differ")
        return DiffReport(expr_id, True)

    if expr_id in (4, 8):
        key_col = _GROUP_KEYS[expr_id]
        engine_pairs = []
        for r in engine_result.rows:
            key = record_get(r, key_col)
            others = [v for k, v in r.items() if k != key_col]
            if key_col not in r or len(others) != 1:
                return DiffReport(expr_id, False, f"unexpected group row shape: {r!r}")
            engine_pairs.append((key, others[0]))
        if len(engine_pairs) != len(oracle_result):
            return DiffReport(
                expr_id, False,
                f"{len(engine_pairs)} groups != {len(oracle_result)}",
            )
        by_key = sorted(engine_pairs, key=lambda kv: total_order_key(kv[0]))
        want = sorted(oracle_result, key=lambda kv: total_order_key(kv[0]))
        for (gk, gv), (wk, wv) in zip(by_key, want):
            if total_order_key(gk) != total_order_key(wk) or not _numbers_match(gv, wv):
                return DiffReport(expr_id, False, f"group ({gk!r}, {gv!r}) != ({wk!r}, {wv!r})")
        return DiffReport(expr_id, True)

    raise ValueError(f"unknown expression id {expr_id}")


# ---------------------------------------------------------------------------
# Timing and reports
# ---------------------------------------------------------------------------


@dataclass
class ExprOutcome:
    expr_id: int
    label: str
    creation_ms: float = 0.0
    expression_ms: float = 0.0
    digest: str = ""
    query: str = ""
    error: str | None = None
    oracle_matched: bool | None = None
    oracle_detail: str = ""

    @property
    def total_ms(self) -> float:
        return self.creation_ms + self.expression_ms

    def to_dict(self) -> dict:
        return {
            "expr_id": self.expr_id,
            "label": self.label,
            "creation_ms": round(self.creation_ms, 3),
            "expression_ms": round(self.expression_ms, 3),
            "total_ms": round(self.total_ms, 3),
            "digest": self.digest,
            "query": self.query,
            "error": self.error,
            "oracle_matched": self.oracle_matched,
            "oracle_detail": self.oracle_detail,
        }


@dataclass
class BenchReport:
    pack: str
    connector: str
    params: BenchParams
    outcomes: list[ExprOutcome] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "pack": self.pack,
            "connector": self.connector,
            "params": {
                "x": str(self.params.x) if isinstance(self.params.x, Sym) else self.params.x,
                "y_twenty": str(self.params.y_twenty)
                if isinstance(self.params.y_twenty, Sym) else self.params.y_twenty,
                "y_one": str(self.params.y_one)
                if isinstance(self.params.y_one, Sym) else self.params.y_one,
                "z": str(self.params.z) if isinstance(self.params.z, Sym) else self.params.z,
            },
            "expressions": [o.to_dict() for o in self.outcomes],
        }


def _digest(result: Any) -> str:
    if isinstance(result, Table):
        frozen = sorted((_frozen_row(r) for r in result.rows), key=repr)
        payload = repr(frozen)
    else:
        payload = repr(result)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def render_expression(
    expr_id: int,
    pack: LanguagePack,
    params: BenchParams,
    namespace: str = "",
    collection: str = "data",
    right_collection: str = "data2",
) -> str:
    """Build one expression against a spy connector and return the final
    query text (pipelines as the bare stage array, without the call
    envelope the connectors add)."""
    spy = DryRunConnector()
    df = scan(namespace, collection, pack, spy)
    df2 = scan(namespace, right_collection, pack, spy)
    expr = EXPRESSIONS[expr_id]
    expr.action(expr.build(df, df2, params))
    return spy.calls[-1].query.rendered()


def run_benchmark(
    pack: LanguagePack,
    connector: Any,
    params: BenchParams,
    exprs: Iterable[int] = tuple(range(1, 14)),
    namespace: str = "",
    collection: str = "data",
    right_collection: str = "data2",
    repeat: int = 1,
    oracle_table: Table | None = None,
    connector_name: str = "",
) -> BenchReport:
    """Run the selected expressions, timing frame construction and the
    action separately. Per-expression failures are recorded and the run
    continues."""
    report = BenchReport(pack=pack.name, connector=connector_name, params=params)
    for expr_id in exprs:
        expr = EXPRESSIONS[expr_id]
        outcome = ExprOutcome(expr_id=expr_id, label=expr.label)
        try:
            outcome.query = render_expression(
                expr_id, pack, params, namespace, collection, right_collection
            )
        except Exception as e:  # rendering failures still get a row
            outcome.error = f"render: {e}"
            report.outcomes.append(outcome)
            continue
        creations, expressions = [], []
        result: Any = None
        try:
            for _ in range(max(1, repeat)):
                t0 = time.perf_counter()
                df = scan(namespace, collection, pack, connector)
                df2 = scan(namespace, right_collection, pack, connector)
                frame = expr.build(df, df2, params)
                t1 = time.perf_counter()
                result = expr.action(frame)
                t2 = time.perf_counter()
                creations.append((t1 - t0) * 1000.0)
                expressions.append((t2 - t1) * 1000.0)
        except Exception as e:
            outcome.error = str(e)
            report.outcomes.append(outcome)
            continue
        outcome.creation_ms = statistics.median(creations)
        outcome.expression_ms = statistics.median(expressions)
        outcome.digest = _digest(result)
        if oracle_table is not None:
            diff = diff_results(result, oracle_eval(expr_id, oracle_table, params), expr_id)
            outcome.oracle_matched = diff.matched
            outcome.oracle_detail = diff.detail
        report.outcomes.append(outcome)
    return report


# ---------------------------------------------------------------------------
# Golden texts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GoldenDiff:
    key: str
    matched: bool
    rendered: str
    expected: str


def load_golden(name: str) -> dict:
    path = resources.files("frameql") / "golden" / f"{name}.json"
    return json.loads(path.read_text(encoding="utf-8"))


def normalize_for(pack: LanguagePack, text: str) -> str:
    if pack.dialect_kind is DialectKind.PIPELINE:
        return normalize_pipeline_text(text)
    return normalize_text_query(text)


def check_benchmark_golden(
    pack: LanguagePack,
    golden: dict | None = None,
    params: BenchParams | None = None,
) -> list[GoldenDiff]:
    """Render all 13 expressions with symbolic parameters and compare each
    against the stored golden text, whitespace-normalized."""
    if golden is None:
        golden = load_golden(f"benchmark_{pack.name}")
    if params is None:
        params = BenchParams.symbolic()
    diffs = []
    for expr_id in sorted(int(k) for k in golden):
        rendered = render_expression(expr_id, pack, params)
        expected = golden[str(expr_id)]
        matched = normalize_for(pack, rendered) == normalize_for(pack, expected)
        diffs.append(GoldenDiff(str(expr_id), matched, rendered, expected))
    return diffs
