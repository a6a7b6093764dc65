"""Command-line entry points: dataset generation, benchmark runs, and
one-shot op-chain rendering (the surface other-language facades call)."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any

from . import bench as bench_mod
from .connectors import (
    DryRunConnector,
    HttpConnector,
    HttpEndpointConfig,
    LocalConnector,
    pipeline_envelope,
)
from .datagen import GeneratorSpec, iter_rows
from .frame import Frame, Sym, scan
from .packs import builtin_names, load_builtin
from .templates import DialectKind, LanguagePack
from .values import MISSING, NULL, Table, read_jsonl, write_jsonl


def _parse_expr_ranges(text: str) -> list[int]:
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, _, hi = part.partition("-")
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    bad = [i for i in out if i not in bench_mod.EXPRESSIONS]
    if bad:
        raise SystemExit(f"unknown expression ids: {bad}")
    return out


def _cmd_datagen(args: argparse.Namespace) -> int:
    spec = GeneratorSpec(
        max_rows=args.max,
        seed=args.seed,
        missing_rate=args.missing_rate,
        missing_attrs=tuple(a.strip() for a in args.missing_attrs.split(",") if a.strip()),
    )
    with open(args.out, "w", encoding="utf-8") as fp:
        write_jsonl(iter_rows(spec), fp)
    print(f"wrote {spec.max_rows} rows to {args.out}")
    return 0


def _load_table(args: argparse.Namespace) -> Table:
    if args.data:
        with open(args.data, "r", encoding="utf-8") as fp:
            return read_jsonl(fp)
    spec = GeneratorSpec(
        max_rows=args.max, seed=args.seed, missing_rate=args.missing_rate
    )
    return Table(rows=list(iter_rows(spec)))


def _cmd_bench(args: argparse.Namespace) -> int:
    pack = load_builtin(args.pack)
    exprs = _parse_expr_ranges(args.exprs)
    params = bench_mod.BenchParams.draw(args.seed)

    if args.golden_dir:
        golden_path = Path(args.golden_dir) / f"benchmark_{pack.name}.json"
        golden = json.loads(golden_path.read_text(encoding="utf-8"))
        golden = {k: v for k, v in golden.items() if int(k) in exprs}
        diffs = bench_mod.check_benchmark_golden(pack, golden)
        failed = 0
        for d in diffs:
            status = "ok" if d.matched else "DIFF"
            print(f"expr {d.key}: {status}")
            if not d.matched:
                failed += 1
                print(f"  rendered: {d.rendered}")
                print(f"  expected: {d.expected}")
        return 1 if failed else 0

    oracle_table: Table | None = None
    if args.connector == "dryrun":
        connector: Any = DryRunConnector()
    elif args.connector == "local":
        table = _load_table(args)
        catalog = {("", "data"): table, ("", "data2"): table}
        connector = LocalConnector(catalog, dialect=pack.name)
        oracle_table = table
    elif args.connector == "http":
        if not args.url:
            raise SystemExit("--url is required with --connector http")
        connector = HttpConnector(HttpEndpointConfig(base_url=args.url))
    else:
        raise SystemExit(f"unknown connector {args.connector!r}")

    report = bench_mod.run_benchmark(
        pack,
        connector,
        params=params,
        exprs=exprs,
        repeat=args.repeat,
        oracle_table=oracle_table,
        connector_name=args.connector,
    )
    for o in report.outcomes:
        line = (
            f"expr {o.expr_id:>2} ({o.label}): "
            f"creation {o.creation_ms:.2f} ms, expression {o.expression_ms:.2f} ms"
        )
        if o.error:
            line += f" ERROR: {o.error}"
        elif o.oracle_matched is not None:
            line += " oracle=ok" if o.oracle_matched else f" oracle=MISMATCH {o.oracle_detail}"
        print(line)
    if args.out:
        Path(args.out).write_text(
            json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8"
        )
        print(f"report written to {args.out}")
    bad = [o for o in report.outcomes if o.error or o.oracle_matched is False]
    return 1 if bad else 0


# ---------------------------------------------------------------------------
# Op-chain rendering
# ---------------------------------------------------------------------------


def _decode_literal(v: Any) -> Any:
    if isinstance(v, dict) and set(v) == {"sym"}:
        return Sym(v["sym"])
    if v is None:
        return NULL
    return v


def _apply_ops(root: Frame, ops: list[dict], pack: LanguagePack, connector: Any,
               namespace: str) -> Frame:
    frame = root
    for op in ops:
        kind = op.get("op")
        if kind == "project":
            frame = frame.project(list(op["columns"]))
        elif kind == "compare":
            frame = frame.compare(op["cmp"], _decode_literal(op["value"]))
        elif kind == "arith":
            frame = frame.arith(op["fn"], _decode_literal(op["value"]))
        elif kind in ("logical_and", "logical_or"):
            other = _apply_ops(root, op["mask"], pack, connector, namespace)
            frame = frame.logical_and(other) if kind == "logical_and" else frame.logical_or(other)
        elif kind == "logical_not":
            frame = frame.logical_not()
        elif kind == "isna":
            frame = frame.isna()
        elif kind == "notna":
            frame = frame.notna()
        elif kind == "astype":
            frame = frame.astype({"int": "to_int", "str": "to_str"}.get(op["to"], op["to"]))
        elif kind == "map_upper":
            frame = frame.map_upper()
        elif kind == "filter":
            mask = _apply_ops(root, op["mask"], pack, connector, namespace)
            frame = frame.filter(mask)
        elif kind == "groupby_agg":
            frame = frame.groupby_agg(op["key"], op["func"], op["col"])
        elif kind == "sort_values":
            frame = frame.sort_values(op["col"], ascending=op.get("ascending", True))
        elif kind == "merge":
            right_doc = op["right"]
            right = scan(
                right_doc.get("namespace", namespace),
                right_doc["collection"],
                pack,
                connector,
            )
            right = _apply_ops(right, right_doc.get("ops", []), pack, connector, namespace)
            frame = frame.merge(
                right,
                left_on=op["left_on"],
                right_on=op["right_on"],
                how=op.get("how", "inner"),
            )
        elif kind == "describe":
            frame = frame.describe(op["columns"])
        elif kind == "get_dummies":
            frame = frame.get_dummies(op["col"])
        else:
            raise SystemExit(f"unknown op {kind!r}")
    return frame


def _mentions_get_dummies(ops: list[dict]) -> bool:
    for op in ops:
        if op.get("op") == "get_dummies":
            return True
        if "mask" in op and _mentions_get_dummies(op["mask"]):
            return True
        right = op.get("right")
        if isinstance(right, dict) and _mentions_get_dummies(right.get("ops", [])):
            return True
    return False


class _RecordingLocal(LocalConnector):
    """Local execution that also remembers each (query, prepared) pair so the
    rendered texts can be reported alongside results."""

    def __init__(self, catalog: dict, dialect: str):
        super().__init__(catalog, dialect)
        self.calls: list[tuple[Any, Any]] = []

    def pre_process(self, query: Any, base: tuple[str, str]) -> Any:
        shown = query
        if query.kind is DialectKind.PIPELINE:
            shown = pipeline_envelope(query, base)
        self.calls.append((query, shown))
        return super().pre_process(query, base)


def _run_action(frame: Frame, action: dict) -> Any:
    kind = action.get("kind")
    if kind == "head":
        return frame.head(int(action.get("n", 5)))
    if kind == "count":
        return frame.count()
    if kind == "collect":
        return frame.collect()
    if kind == "agg":
        return frame.agg_value(action["func"], action.get("col"))
    if kind == "persist":
        return frame.persist(action["target"], overwrite=bool(action.get("overwrite", False)))
    raise SystemExit(f"unknown action {kind!r}")


def _serialize_result(result: Any) -> Any:
    if isinstance(result, Table):
        rows = []
        for r in result.rows:
            out = {}
            for k, v in r.items():
                if v is MISSING:
                    continue
                out[k] = None if v is NULL else v
            rows.append(out)
        return {"columns": result.column_names(), "rows": rows}
    if result is NULL or result is MISSING:
        return {"scalar": None}
    return {"scalar": result}


def _cmd_render(args: argparse.Namespace) -> int:
    if args.chain and args.chain != "-":
        text = Path(args.chain).read_text(encoding="utf-8")
    else:
        text = sys.stdin.read()
    doc = json.loads(text)

    pack = load_builtin(doc["pack"])
    namespace = doc.get("namespace", "")
    execute = doc.get("execute")

    def build(connector: Any) -> Frame:
        root = scan(namespace, doc["collection"], pack, connector)
        return _apply_ops(root, doc.get("ops", []), pack, connector, namespace)

    action = doc.get("action")
    output: dict[str, Any] = {"pack": pack.name}
    if execute:
        catalog = {}
        for coll, path in execute.get("collections", {}).items():
            with open(path, "r", encoding="utf-8") as fp:
                catalog[(namespace, coll)] = read_jsonl(fp)
        connector = _RecordingLocal(catalog, dialect=pack.name)
        frame = build(connector)
        if action:
            result = _run_action(frame, action)
            query, shown = connector.calls[-1]
            output["query"] = query.rendered()
            output["prepared"] = shown.rendered()
        else:
            output["query"] = frame.rendered()
            output["prepared"] = None
            result = frame.collect()
        output["result"] = _serialize_result(result)
    else:
        # get_dummies issues a live distinct-values query while the chain is
        # still being built, so it cannot be dry-rendered
        if _mentions_get_dummies(doc.get("ops", [])):
            raise SystemExit("get_dummies needs execute.collections to list distinct values")
        spy = DryRunConnector()
        spy_frame = build(spy)
        if action:
            _run_action(spy_frame, action)
            call = spy.calls[-1]
            output["query"] = call.query.rendered()
            output["prepared"] = call.prepared.rendered()
        else:
            output["query"] = spy_frame.rendered()
            output["prepared"] = None

    indent = 2 if args.pretty else None
    print(json.dumps(output, indent=indent))
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="frameql",
        description="Lazy dataframe-to-query compiler: data generation, "
        "benchmarks, and op-chain rendering.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("datagen", help="generate a Wisconsin benchmark dataset as JSON lines")
    g.add_argument("--max", type=int, required=True, help="number of rows")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--missing-rate", type=float, default=0.0)
    g.add_argument("--missing-attrs", default="tenPercent",
                   help="comma-separated attribute names")
    g.add_argument("--out", required=True)
    g.set_defaults(fn=_cmd_datagen)

    b = sub.add_parser("bench", help="run the 13 benchmark expressions")
    b.add_argument("--pack", choices=sorted(builtin_names()), required=True)
    b.add_argument("--connector", choices=["dryrun", "local", "http"], default="local")
    b.add_argument("--data", help="JSONL dataset; generated when omitted")
    b.add_argument("--max", type=int, default=10_000)
    b.add_argument("--seed", type=int, default=1)
    b.add_argument("--missing-rate", type=float, default=0.1)
    b.add_argument("--exprs", default="1-13", help="e.g. 1-13 or 1,3,5-7")
    b.add_argument("--repeat", type=int, default=1, help="runs per expression (median taken)")
    b.add_argument("--out", help="write the JSON report here")
    b.add_argument("--url", help="endpoint base URL for --connector http")
    b.add_argument("--golden-dir",
                   help="compare rendered queries against benchmark_<pack>.json in this directory")
    b.set_defaults(fn=_cmd_bench)

    r = sub.add_parser("render", help="render (and optionally execute) an op-chain JSON document")
    r.add_argument("--chain", help="path to the chain document, or - for stdin")
    r.add_argument("--pretty", action="store_true")
    r.set_defaults(fn=_cmd_render)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
