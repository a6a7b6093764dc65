"""Reference interpreter for the emitted aggregation-pipeline subset.

Stages: $match (empty or $expr), $project, $group, $addFields, $sort,
$limit, $count, $lookup, $unwind, $out. Expressions: the six comparisons,
$and/$or/$not, five arithmetic operators, $toUpper/$toInt/$toString, field
paths `$f`, pipeline variables `$$v`, and literals. Comparisons use the
bracketed cross-type total order, which is what makes
`{"$lt": [field, null]}` a missing-or-null test.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from statistics import pstdev
from typing import Any

from .values import MISSING, NULL, Record, Table, is_absent, total_order_cmp, total_order_key

Catalog = dict[tuple[str, str], Table]


class PipelineSyntaxError(Exception):
    pass


class PipelineEvalError(Exception):
    def __init__(self, message: str, stage_index: int | None = None):
        if stage_index is not None:
            message = f"stage {stage_index}: {message}"
        super().__init__(message)
        self.stage_index = stage_index


_STAGE_NAMES = {
    "$match", "$project", "$group", "$addFields", "$sort", "$limit",
    "$count", "$lookup", "$unwind", "$out",
}

_EXPR_OPS = {
    "$eq", "$ne", "$gt", "$lt", "$gte", "$lte",
    "$and", "$or", "$not",
    "$add", "$subtract", "$multiply", "$divide", "$mod",
    "$toUpper", "$toInt", "$toString",
}

_ACCUMULATORS = {"$sum", "$min", "$max", "$avg", "$stdDevPop"}


@dataclass(frozen=True)
class Pipeline:
    stages: tuple[tuple[str, Any], ...]


def parse_pipeline(text: str) -> Pipeline:
    """Parse the textual stage array (`[{...}, ...]`) into typed stages."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise PipelineSyntaxError(f"stage array is not valid JSON: {e}") from None
    if not isinstance(data, list) or not data:
        raise PipelineSyntaxError("a pipeline is a non-empty array of stages")
    stages: list[tuple[str, Any]] = []
    for i, raw in enumerate(data):
        if not isinstance(raw, dict) or len(raw) != 1:
            raise PipelineSyntaxError(f"stage {i} must be a single-key object")
        (name, payload), = raw.items()
        if name not in _STAGE_NAMES:
            raise PipelineSyntaxError(f"unknown stage {name!r}")
        if name == "$out" and i != len(data) - 1:
            raise PipelineSyntaxError("$out may only be the final stage")
        _validate_stage(name, payload, i)
        stages.append((name, payload))
    return Pipeline(stages=tuple(stages))


def _validate_stage(name: str, payload: Any, index: int) -> None:
    if name == "$match":
        if payload == {}:
            return
        if isinstance(payload, dict) and set(payload) == {"$expr"}:
            _validate_expr(payload["$expr"], index)
            return
        raise PipelineSyntaxError(f"stage {index}: $match must be empty or use $expr")
    if name == "$project" or name == "$addFields":
        if not isinstance(payload, dict) or not payload:
            raise PipelineSyntaxError(f"stage {index}: {name} needs a field mapping")
        for v in payload.values():
            if isinstance(v, dict):
                _validate_expr(v, index)
        return
    if name == "$group":
        if not isinstance(payload, dict) or "_id" not in payload:
            raise PipelineSyntaxError(f"stage {index}: $group needs an _id")
        for k, v in payload.items():
            if k == "_id":
                continue
            if not (isinstance(v, dict) and len(v) == 1 and next(iter(v)) in _ACCUMULATORS):
                raise PipelineSyntaxError(f"stage {index}: unknown accumulator in {k!r}")
        return
    if name == "$sort":
        if not isinstance(payload, dict) or not all(v in (1, -1) for v in payload.values()):
            raise PipelineSyntaxError(f"stage {index}: $sort directions must be 1 or -1")
        return
    if name == "$limit":
        if not isinstance(payload, int) or payload < 0:
            raise PipelineSyntaxError(f"stage {index}: $limit needs a non-negative integer")
        return
    if name == "$count":
        if not isinstance(payload, str) or not payload:
            raise PipelineSyntaxError(f"stage {index}: $count needs an output name")
        return
    if name == "$lookup":
        required = {"from", "as"}
        if not isinstance(payload, dict) or not required <= set(payload):
            raise PipelineSyntaxError(f"stage {index}: $lookup needs from/as")
        inner = payload.get("pipeline", [])
        if not isinstance(inner, list):
            raise PipelineSyntaxError(f"stage {index}: $lookup pipeline must be an array")
        for j, st in enumerate(inner):
            if not isinstance(st, dict) or len(st) != 1:
                raise PipelineSyntaxError(f"stage {index}: bad inner stage {j}")
            (iname, ipayload), = st.items()
            if iname not in _STAGE_NAMES - {"$out", "$lookup"}:
                raise PipelineSyntaxError(f"stage {index}: unsupported inner stage {iname!r}")
            _validate_stage(iname, ipayload, j)
        return
    if name == "$unwind":
        if not (isinstance(payload, dict) and isinstance(payload.get("path"), str)
                and payload["path"].startswith("$")):
            raise PipelineSyntaxError(f"stage {index}: $unwind needs a $-prefixed path")
        return
    if name == "$out":
        if not isinstance(payload, str) or not payload:
            raise PipelineSyntaxError(f"stage {index}: $out needs a collection name")
        return
    raise PipelineSyntaxError(f"unknown stage {name!r}")


def _validate_expr(node: Any, stage_index: int) -> None:
    if isinstance(node, dict):
        if len(node) != 1:
            raise PipelineSyntaxError(
                f"stage {stage_index}: expression objects take exactly one operator"
            )
        (op, operands), = node.items()
        if op not in _EXPR_OPS:
            raise PipelineSyntaxError(f"stage {stage_index}: unknown operator {op!r}")
        if isinstance(operands, list):
            for o in operands:
                _validate_expr(o, stage_index)
        else:
            _validate_expr(operands, stage_index)
        return
    if isinstance(node, list):
        for o in node:
            _validate_expr(o, stage_index)


# ---------------------------------------------------------------------------
# Expression evaluation
# ---------------------------------------------------------------------------


def _resolve_path(doc: Record, path: str) -> Any:
    node: Any = doc
    for part in path.split("."):
        if isinstance(node, dict):
            node = node.get(part, MISSING)
        else:
            return MISSING
    return node


def _eval_expr(node: Any, doc: Record, variables: dict[str, Any]) -> Any:
    if node is None:
        return NULL
    if isinstance(node, str):
        if node.startswith("$$"):
            name, _, rest = node[2:].partition(".")
            if name not in variables:
                raise PipelineEvalError(f"unbound pipeline variable $${name}")
            v = variables[name]
            return _resolve_path(v, rest) if rest and isinstance(v, dict) else v
        if node.startswith("$"):
            return _resolve_path(doc, node[1:])
        return node
    if isinstance(node, (int, float, bool)):
        return node
    if isinstance(node, dict):
        (op, raw), = node.items()
        args = raw if isinstance(raw, list) else [raw]
        vals = [_eval_expr(a, doc, variables) for a in args]
        return _apply_op(op, vals)
    raise PipelineEvalError(f"cannot evaluate expression {node!r}")


def _apply_op(op: str, vals: list[Any]) -> Any:
    if op in ("$eq", "$ne", "$gt", "$lt", "$gte", "$lte"):
        c = total_order_cmp(vals[0], vals[1])
        return {
            "$eq": c == 0, "$ne": c != 0, "$gt": c > 0,
            "$lt": c < 0, "$gte": c >= 0, "$lte": c <= 0,
        }[op]
    if op == "$and":
        return all(bool(v) and not is_absent(v) for v in vals)
    if op == "$or":
        return any(bool(v) and not is_absent(v) for v in vals)
    if op == "$not":
        return not (bool(vals[0]) and not is_absent(vals[0]))
    if op in ("$add", "$subtract", "$multiply", "$divide", "$mod"):
        a, b = vals[0], vals[1]
        if is_absent(a) or is_absent(b):
            return NULL
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in (a, b)):
            raise PipelineEvalError(f"{op} expects numbers, got {a!r}, {b!r}")
        if op == "$add":
            return a + b
        if op == "$subtract":
            return a - b
        if op == "$multiply":
            return a * b
        if op == "$divide":
            return a / b
        return a % b
    if op == "$toUpper":
        v = vals[0]
        if is_absent(v):
            return NULL
        if not isinstance(v, str):
            raise PipelineEvalError(f"$toUpper expects a string, got {v!r}")
        return v.upper()
    if op == "$toInt":
        v = vals[0]
        if is_absent(v):
            return NULL
        if isinstance(v, bool):
            return 1 if v else 0
        if isinstance(v, (int, float)):
            return int(v)
        if isinstance(v, str):
            return int(v)
        raise PipelineEvalError(f"cannot convert {v!r} to int")
    if op == "$toString":
        v = vals[0]
        if is_absent(v):
            return NULL
        if isinstance(v, bool):
            return "true" if v else "false"
        return str(v)
    raise PipelineEvalError(f"unknown operator {op!r}")


# ---------------------------------------------------------------------------
# Stage evaluation
# ---------------------------------------------------------------------------


def eval_pipeline(
    p: Pipeline,
    catalog: Catalog,
    source: tuple[str, str],
    variables: dict[str, Any] | None = None,
) -> Table:
    tbl = catalog.get(tuple(source))
    if tbl is None:
        label = f"{source[0]}.{source[1]}" if source[0] else source[1]
        raise PipelineEvalError(f"unknown collection {label!r}")
    docs = list(tbl.rows)
    return Table(rows=_run_stages(p.stages, docs, catalog, source[0], variables or {}))


def _run_stages(
    stages: tuple[tuple[str, Any], ...] | list[tuple[str, Any]],
    docs: list[Record],
    catalog: Catalog,
    namespace: str,
    variables: dict[str, Any],
) -> list[Record]:
    for i, (name, payload) in enumerate(stages):
        try:
            docs = _apply_stage(name, payload, docs, catalog, namespace, variables)
        except PipelineEvalError as e:
            if e.stage_index is None:
                raise PipelineEvalError(str(e), stage_index=i) from None
            raise
    return docs


def _apply_stage(
    name: str,
    payload: Any,
    docs: list[Record],
    catalog: Catalog,
    namespace: str,
    variables: dict[str, Any],
) -> list[Record]:
    if name == "$match":
        if payload == {}:
            return docs
        expr = payload["$expr"]
        return [d for d in docs if _eval_expr(expr, d, variables) is True]

    if name == "$project":
        exclusion_only = all(v == 0 for v in payload.values())
        out = []
        for d in docs:
            if exclusion_only:
                nd = {k: v for k, v in d.items() if k not in payload}
            else:
                nd = {}
                if "_id" in d and payload.get("_id", 1) != 0:
                    nd["_id"] = d["_id"]
                for k, spec in payload.items():
                    if spec == 0:
                        continue
                    if spec == 1:
                        if k in d:
                            nd[k] = d[k]
                    else:
                        v = _eval_expr(spec, d, variables)
                        if v is not MISSING:
                            nd[k] = v
            out.append(nd)
        return out

    if name == "$group":
        id_spec = payload["_id"]
        groups: dict[Any, tuple[Any, list[Record]]] = {}
        for d in docs:
            if id_spec == {}:
                id_value: Any = {}
                key: Any = ()
            else:
                id_value = {k: _eval_expr(v, d, variables) for k, v in id_spec.items()}
                key = tuple((k, total_order_key(v)) for k, v in id_value.items())
            groups.setdefault(key, (id_value, []))[1].append(d)
        out = []
        for id_value, members in groups.values():
            row: Record = {"_id": id_value}
            for alias, acc in payload.items():
                if alias == "_id":
                    continue
                (acc_op, operand), = acc.items()
                row[alias] = _accumulate(acc_op, operand, members, variables)
            out.append(row)
        return out

    if name == "$addFields":
        out = []
        for d in docs:
            nd = dict(d)
            for k, spec in payload.items():
                nd[k] = _eval_expr(spec, d, variables)
            out.append(nd)
        return out

    if name == "$sort":
        for col, direction in reversed(list(payload.items())):
            docs = sorted(
                docs,
                key=lambda d: total_order_key(_resolve_path(d, col)),
                reverse=direction == -1,
            )
        return list(docs)

    if name == "$limit":
        return docs[:payload]

    if name == "$count":
        if not docs:
            return []
        return [{payload: len(docs)}]

    if name == "$lookup":
        return _apply_lookup(payload, docs, catalog, namespace, variables)

    if name == "$unwind":
        path = payload["path"][1:]
        preserve = payload.get("preserveNullAndEmptyArrays", False)
        out = []
        for d in docs:
            v = d.get(path, MISSING)
            if isinstance(v, list) and v:
                for elem in v:
                    nd = dict(d)
                    nd[path] = elem
                    out.append(nd)
            elif preserve:
                nd = {k: x for k, x in d.items() if k != path}
                out.append(nd)
        return out

    if name == "$out":
        catalog[(namespace, payload)] = Table(rows=docs)
        return []

    raise PipelineEvalError(f"unknown stage {name!r}")


def _accumulate(op: str, operand: Any, members: list[Record], variables: dict[str, Any]) -> Any:
    if op == "$sum":
        total: Any = 0
        for d in members:
            v = _eval_expr(operand, d, variables)
            if isinstance(v, (int, float)) and not isinstance(v, bool):
                total += v
        return total
    values = []
    for d in members:
        v = _eval_expr(operand, d, variables)
        if not is_absent(v):
            values.append(v)
    if not values:
        return NULL
    if op == "$min":
        return min(values, key=total_order_key)
    if op == "$max":
        return max(values, key=total_order_key)
    numeric = [v for v in values if isinstance(v, (int, float)) and not isinstance(v, bool)]
    if op == "$avg":
        return sum(numeric) / len(numeric) if numeric else NULL
    if op == "$stdDevPop":
        return pstdev(numeric) if numeric else NULL
    raise PipelineEvalError(f"unknown accumulator {op!r}")


def _apply_lookup(
    payload: dict,
    docs: list[Record],
    catalog: Catalog,
    namespace: str,
    variables: dict[str, Any],
) -> list[Record]:
    from_name = payload["from"]
    as_name = payload["as"]
    let_spec = payload.get("let", {})
    inner = [tuple(st.items())[0] for st in payload.get("pipeline", [])]

    foreign = catalog.get((namespace, from_name))
    if foreign is None:
        raise PipelineEvalError(f"unknown collection {from_name!r} in $lookup")

    fast = _equality_probe_plan(inner, set(let_spec))
    if fast is not None:
        prefix, field_path, var_name = fast
        base = _run_stages(prefix, list(foreign.rows), catalog, namespace, variables)
        index: dict[Any, list[Record]] = {}
        for d in base:
            v = _resolve_path(d, field_path)
            index.setdefault(total_order_key(v), []).append(d)
        out = []
        for d in docs:
            let_vals = {k: _eval_expr(v, d, variables) for k, v in let_spec.items()}
            matches = index.get(total_order_key(let_vals[var_name]), [])
            nd = dict(d)
            nd[as_name] = list(matches)
            out.append(nd)
        return out

    out = []
    for d in docs:
        let_vals = {k: _eval_expr(v, d, variables) for k, v in let_spec.items()}
        matches = _run_stages(
            inner, list(foreign.rows), catalog, namespace, {**variables, **let_vals}
        )
        nd = dict(d)
        nd[as_name] = matches
        out.append(nd)
    return out


def _equality_probe_plan(
    inner: list[tuple[str, Any]], let_names: set[str]
) -> tuple[list[tuple[str, Any]], str, str] | None:
    """Detect the emitted join shape: a final `$match` comparing one field
    path against one `$$let` variable, with a variable-free prefix. Returns
    (prefix stages, field path, variable name) so the caller can build a
    hash index instead of re-running the inner pipeline per outer row."""
    if not inner:
        return None
    name, payload = inner[-1]
    if name != "$match" or not (isinstance(payload, dict) and set(payload) == {"$expr"}):
        return None
    expr = payload["$expr"]
    if not (isinstance(expr, dict) and set(expr) == {"$eq"}):
        return None
    operands = expr["$eq"]
    if not (isinstance(operands, list) and len(operands) == 2):
        return None
    field_path = None
    var_name = None
    for o in operands:
        if isinstance(o, str) and o.startswith("$$"):
            candidate = o[2:]
            if candidate in let_names and "." not in candidate:
                var_name = candidate
        elif isinstance(o, str) and o.startswith("$"):
            field_path = o[1:]
    if field_path is None or var_name is None:
        return None
    prefix = inner[:-1]
    if "$$" in json.dumps([dict([s]) for s in prefix]):
        return None
    return list(prefix), field_path, var_name
