"""Lazy dataframe facade.

Every transformation composes a new query from its parent's query through the
active language pack; nothing touches the connector until an action runs. The
query state is either flat text (SQL-family dialects) or an ordered stage
list (pipeline dialects), and derived frames always extend their parent's
state rather than rewriting it.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from enum import Enum
from typing import Any, Sequence

from .templates import DialectKind, LanguagePack, build_rule, chain_attributes
from .values import MISSING, NULL, Table, total_order_key


class FrameError(Exception):
    """Request the active pack/frame combination cannot express."""


class LineageError(FrameError):
    """Mask and target frame do not descend from the same scan."""


class CardinalityError(FrameError):
    """get_dummies hit more distinct values than allowed."""


class ShapeError(FrameError):
    """Backend returned a result shape the action cannot interpret."""


@dataclass(frozen=True)
class Sym:
    """Symbolic literal rendered as a bare name (the benchmark's x, y, z)."""

    name: str


def render_literal(pack: LanguagePack, value: Any) -> str:
    """Render a Python value as query text using the pack's [LITERALS]."""
    if isinstance(value, Sym):
        return value.name
    if value is MISSING:
        raise TypeError("MISSING has no literal form; absence is not a value")
    if value is None or value is NULL:
        return pack.render("LITERALS", "null_literal", {})
    if isinstance(value, bool):
        key = "true_literal" if value else "false_literal"
        return pack.render("LITERALS", key, {})
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, str):
        quote = pack.render("LITERALS", "string_quote", {})
        if quote == "'":
            body = value.replace("'", "''")
        else:
            body = value.replace("\\", "\\\\").replace(quote, "\\" + quote)
        return quote + body + quote
    raise TypeError(f"cannot render a literal of type {type(value).__name__}")


# ---------------------------------------------------------------------------
# Query state
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QueryText:
    """Rendered query state: `text` for TEXT dialects, `stages` for PIPELINE."""

    kind: DialectKind
    text: str = ""
    stages: tuple[str, ...] = ()

    def rendered(self) -> str:
        if self.kind is DialectKind.TEXT:
            return self.text
        return "[" + ", ".join(self.stages) + "]"


_STAGE_SENTINEL = "\x00STAGES\x00"


def split_stages(text: str) -> list[str]:
    """Split a rendered stage-list fragment at depth-0 commas.

    String-aware: commas inside double-quoted strings or nested braces and
    brackets do not split.
    """
    parts: list[str] = []
    depth = 0
    in_str = False
    start = 0
    i = 0
    while i < len(text):
        c = text[i]
        if in_str:
            if c == "\\":
                i += 2
                continue
            if c == '"':
                in_str = False
        elif c == '"':
            in_str = True
        elif c in "{[":
            depth += 1
        elif c in "}]":
            depth -= 1
        elif c == "," and depth == 0:
            parts.append(text[start:i].strip())
            start = i + 1
        i += 1
    tail = text[start:].strip()
    if tail:
        parts.append(tail)
    return parts


def derive_query(
    pack: LanguagePack,
    parent: QueryText | None,
    section: str,
    key: str,
    bindings: dict[str, str],
) -> QueryText:
    """Render one rule into a new query state on top of `parent`.

    TEXT dialects wrap the parent as `$subquery`. PIPELINE dialects append
    the rule's stages to the parent's stage list; their templates must place
    `$subquery` first so the parent stays a strict prefix.
    """
    if pack.dialect_kind is DialectKind.TEXT:
        b = dict(bindings)
        if parent is not None:
            b.setdefault("subquery", parent.text)
        return QueryText(kind=DialectKind.TEXT, text=build_rule(pack, section, key, b))

    uses_parent = "subquery" in pack.template(section, key).variables()
    b = dict(bindings)
    if uses_parent:
        b["subquery"] = _STAGE_SENTINEL
    rendered = build_rule(pack, section, key, b).strip()
    if not uses_parent:
        return QueryText(kind=DialectKind.PIPELINE, stages=tuple(split_stages(rendered)))
    if parent is None:
        raise FrameError(f"[{section}] {key} needs a parent query")
    if not rendered.startswith(_STAGE_SENTINEL):
        raise FrameError(f"pipeline rule [{section}] {key} must start with $subquery")
    rest = rendered[len(_STAGE_SENTINEL):].lstrip()
    if rest.startswith(","):
        rest = rest[1:]
    return QueryText(
        kind=DialectKind.PIPELINE,
        stages=parent.stages + tuple(split_stages(rest)),
    )


# ---------------------------------------------------------------------------
# Frames
# ---------------------------------------------------------------------------


class FrameKind(Enum):
    SCAN = "scan"
    PROJECTED = "projected"
    EXPR = "expr"
    FILTERED = "filtered"
    GROUPED = "grouped"
    SORTED = "sorted"
    LIMITED = "limited"
    JOINED = "joined"


_root_counter = itertools.count(1)

_COMPARISONS = ("eq", "ne", "gt", "lt", "ge", "le")
_ARITHMETIC = ("add", "sub", "mul", "div", "mod")
_AGG_FUNCS = ("min", "max", "avg", "count", "std")


@dataclass(frozen=True)
class Frame:
    """One step of a lazy query chain. Immutable; methods return new frames."""

    pack: LanguagePack
    connector: Any
    query: QueryText
    base: tuple[str, str]
    root_id: int
    kind: FrameKind
    columns: tuple[str, ...] | None = None
    snippet: str | None = None
    arity: str | None = None  # EXPR frames: boolean | numeric | string

    # -- derivation helpers -------------------------------------------------

    def _derive(self, section: str, key: str, bindings: dict[str, str], **changes) -> "Frame":
        query = derive_query(self.pack, self.query, section, key, bindings)
        merged = dict(
            query=query, columns=None, snippet=None, arity=None
        )
        merged.update(changes)
        return replace(self, **merged)

    def _attr(self, key: str, column: str, **extra: str) -> str:
        return self.pack.render("ATTRIBUTE ALIAS", key, {"attribute": column, **extra})

    def _operand_text(self) -> str:
        """The text standing for this frame inside a statement template."""
        if self.kind is FrameKind.PROJECTED and self.columns and len(self.columns) == 1:
            return self._attr("expr_attribute", self.columns[0])
        if self.kind is FrameKind.EXPR:
            if self.pack.dialect_kind is DialectKind.PIPELINE:
                raise FrameError(
                    "pipeline packs cannot nest a computed expression as an operand"
                )
            assert self.snippet is not None
            return self.snippet
        raise FrameError(
            "operand must be a single-column projection or a computed expression"
        )

    def _expr_from(self, snippet: str, alias: str, arity: str) -> "Frame":
        """Build the EXPR frame for `snippet` standing on top of this frame.

        The standalone query projects the expression over this frame's own
        query through the expression-projection rule; packs whose rule takes
        an aliased item get `alias`.
        """
        tmpl_vars = set(self.pack.template("QUERIES", "q10").variables())
        bindings: dict[str, str] = {}
        if "statement" in tmpl_vars:
            bindings["statement"] = snippet
        if "attribute_alias" in tmpl_vars:
            bindings["attribute_alias"] = self.pack.render(
                "ATTRIBUTE ALIAS", "attribute_alias", {"alias": alias, "attribute": snippet}
            )
        return self._derive(
            "QUERIES", "q10", bindings, kind=FrameKind.EXPR, snippet=snippet, arity=arity
        )

    def _right_operand(self, other: Any) -> str:
        if isinstance(other, Frame):
            if other.root_id != self.root_id:
                raise LineageError("operands descend from different scans")
            return other._operand_text()
        return render_literal(self.pack, other)

    # -- transformations ----------------------------------------------------

    def project(self, columns: Sequence[str] | str) -> "Frame":
        if isinstance(columns, str):
            columns = [columns]
        if not columns:
            raise ValueError("project requires at least one column")
        items = [self._attr("project_attribute", c, alias=c) for c in columns]
        chained = chain_attributes(items, self.pack)
        return self._derive(
            "QUERIES", "q2", {"attribute_alias": chained},
            kind=FrameKind.PROJECTED, columns=tuple(columns),
        )

    def compare(self, op: str, other: Any) -> "Frame":
        if op not in _COMPARISONS:
            raise ValueError(f"unknown comparison {op!r}")
        snippet = self.pack.render(
            "COMPARISON STATEMENTS", op,
            {"left": self._operand_text(), "right": self._right_operand(other)},
        )
        return self._expr_from(snippet, f"is_{op}", "boolean")

    def arith(self, op: str, other: Any) -> "Frame":
        if op not in _ARITHMETIC:
            raise ValueError(f"unknown arithmetic op {op!r}")
        snippet = self.pack.render(
            "ARITHMETIC STATEMENTS", op,
            {"left": self._operand_text(), "right": self._right_operand(other)},
        )
        return self._expr_from(snippet, op, "numeric")

    def _logical(self, op: str, other: "Frame | None") -> "Frame":
        if self.kind is not FrameKind.EXPR or self.arity != "boolean":
            raise FrameError(f"logical {op} needs boolean expression operands")
        assert self.snippet is not None
        if op == "not":
            snippet = self.pack.render("LOGICAL STATEMENTS", "not", {"left": self.snippet})
        else:
            assert other is not None
            if not (other.kind is FrameKind.EXPR and other.arity == "boolean"):
                raise FrameError(f"logical {op} needs boolean expression operands")
            if other.root_id != self.root_id:
                raise LineageError("operands descend from different scans")
            snippet = self.pack.render(
                "LOGICAL STATEMENTS", op, {"left": self.snippet, "right": other.snippet}
            )
        return self._expr_from(snippet, f"is_{op}", "boolean")

    def logical_and(self, other: "Frame") -> "Frame":
        return self._logical("and", other)

    def logical_or(self, other: "Frame") -> "Frame":
        return self._logical("or", other)

    def logical_not(self) -> "Frame":
        return self._logical("not", None)

    def isna(self) -> "Frame":
        snippet = self.pack.render("NULL CHECK", "isna", {"operand": self._operand_text()})
        return self._expr_from(snippet, "is_na", "boolean")

    def notna(self) -> "Frame":
        snippet = self.pack.render("NULL CHECK", "notna", {"operand": self._operand_text()})
        return self._expr_from(snippet, "not_na", "boolean")

    def astype(self, conversion: str) -> "Frame":
        if conversion not in ("to_int", "to_str"):
            raise ValueError("astype supports to_int and to_str only")
        snippet = self.pack.render(
            "TYPE CONVERSION", conversion, {"statement": self._operand_text()}
        )
        arity = "numeric" if conversion == "to_int" else "string"
        return self._expr_from(snippet, conversion, arity)

    def map_upper(self) -> "Frame":
        """`.map(str.upper)` over a single-column projection."""
        if not (self.kind is FrameKind.PROJECTED and self.columns and len(self.columns) == 1):
            raise FrameError("map_upper needs a single-column projection")
        column = self.columns[0]
        snippet = self.pack.render(
            "SCALAR FUNCTIONS", "upper", {"operand": self._attr("expr_attribute", column)}
        )
        alias = self.pack.render("SCALAR FUNCTIONS", "upper_alias", {"attribute": column})
        return self._expr_from(snippet, alias, "string")

    def filter(self, mask: "Frame") -> "Frame":
        if not (mask.kind is FrameKind.EXPR and mask.arity == "boolean"):
            raise FrameError("filter mask must be a boolean expression")
        if mask.root_id != self.root_id:
            raise LineageError("mask descends from a different scan")
        assert mask.snippet is not None
        return self._derive(
            "QUERIES", "q6", {"statement": mask.snippet}, kind=FrameKind.FILTERED
        )

    def groupby_agg(self, key: str, func: str, col: str) -> "Frame":
        if func not in _AGG_FUNCS:
            raise ValueError(f"unknown aggregate {func!r}")
        bindings = {
            "group_key": key,
            "group_attr": self._attr("single_attribute", key),
            "agg_expr": self.pack.render("FUNCTIONS", func, {"attribute": col}),
            "alias": self.pack.render("FUNCTIONS", f"{func}_alias", {"attribute": col}),
        }
        return self._derive("QUERIES", "q8", bindings, kind=FrameKind.GROUPED)

    def sort_values(self, col: str, ascending: bool = True) -> "Frame":
        key = "q5" if ascending else "q4"
        attr_key = "sort_asc_attr" if ascending else "sort_desc_attr"
        bindings = {attr_key: self._attr(attr_key, col)}
        return self._derive("QUERIES", key, bindings, kind=FrameKind.SORTED)

    def merge(self, right: "Frame", left_on: str, right_on: str, how: str = "inner") -> "Frame":
        if how != "inner":
            raise FrameError("only inner joins are supported")
        if right.pack is not self.pack:
            raise FrameError("joined frames must share one language pack")
        tmpl_vars = set(self.pack.template("QUERIES", "q9").variables())
        bindings: dict[str, str] = {"left_on": left_on, "right_on": right_on}
        if "left_collection" in tmpl_vars:
            if self.kind is not FrameKind.SCAN:
                raise FrameError(
                    "this pack joins base collections; the left side must be an unmodified scan"
                )
            bindings["left_collection"] = self.base[1]
        if "right_collection" in tmpl_vars and "right_stages" not in tmpl_vars:
            if right.kind is not FrameKind.SCAN:
                raise FrameError(
                    "this pack joins base collections; the right side must be an unmodified scan"
                )
        if "right_collection" in tmpl_vars:
            bindings["right_collection"] = right.base[1]
        if "left_subquery" in tmpl_vars:
            bindings["left_subquery"] = self.query.text
        if "right_subquery" in tmpl_vars:
            bindings["right_subquery"] = right.query.text
        if "right_stages" in tmpl_vars:
            bindings["right_stages"] = ", ".join(right.query.stages)
        if "left" in tmpl_vars:
            bindings["left"] = "left"
        frame = self._derive("QUERIES", "q9", bindings, kind=FrameKind.JOINED)
        return replace(frame, root_id=next(_root_counter))

    def describe(self, columns: Sequence[str]) -> "Frame":
        if not columns:
            raise ValueError("describe requires at least one column")
        items = []
        for col in columns:
            for func in ("min", "max", "avg", "count", "std"):
                items.append(self._agg_item(func, col, alias=f"{func}_{col}"))
        chained = chain_attributes(items, self.pack)
        return self._derive("QUERIES", "q7", {"agg_func": chained}, kind=FrameKind.GROUPED)

    def get_dummies(self, col: str, max_distinct: int = 64) -> "Frame":
        """One-hot encode `col`: one connector call to list distinct values,
        then a lazily built 0/1 projection per value."""
        distinct_tbl = self.groupby_agg(col, "count", col).collect()
        values = sorted(
            (row[col] for row in distinct_tbl.rows if col in row),
            key=total_order_key,
        )
        if len(values) > max_distinct:
            raise CardinalityError(
                f"{col} has {len(values)} distinct values; limit is {max_distinct}"
            )
        attr = self._attr("expr_attribute", col)
        items = []
        names = []
        for v in values:
            eq = self.pack.render(
                "COMPARISON STATEMENTS", "eq",
                {"left": attr, "right": render_literal(self.pack, v)},
            )
            as_int = self.pack.render("TYPE CONVERSION", "to_int", {"statement": eq})
            name = f"{col}_{v}"
            names.append(name)
            items.append(
                self.pack.render(
                    "ATTRIBUTE ALIAS", "attribute_alias",
                    {"alias": name, "attribute": as_int},
                )
            )
        chained = chain_attributes(items, self.pack)
        return self._derive(
            "QUERIES", "q2", {"attribute_alias": chained},
            kind=FrameKind.PROJECTED, columns=tuple(names),
        )

    def _agg_item(self, func: str, col: str, alias: str | None = None) -> str:
        if func not in _AGG_FUNCS:
            raise ValueError(f"unknown aggregate {func!r}")
        agg = self.pack.render("FUNCTIONS", func, {"attribute": col})
        if alias is None:
            alias = self.pack.render("FUNCTIONS", f"{func}_alias", {"attribute": col})
        return self.pack.render(
            "FUNCTIONS", "agg_item", {"agg_func": agg, "alias": alias, "attribute": col}
        )

    # -- actions ------------------------------------------------------------

    def _finalize(self, key: str, bindings: dict[str, str] | None = None) -> QueryText:
        return derive_query(self.pack, self.query, "LIMIT", key, bindings or {})

    def _run(self, final: QueryText) -> Table:
        prepared = self.connector.pre_process(final, self.base)
        raw = self.connector.execute(prepared, self.base)
        return self.connector.post_process(raw)

    def head(self, n: int) -> Table:
        if n < 1:
            raise ValueError("head needs n >= 1")
        return self._run(self._finalize("limit", {"num": str(n)}))

    def count(self) -> int:
        if self.kind is FrameKind.SCAN and self.pack.has("QUERIES", "q3_scan"):
            ns, coll = self.base
            qualified = f"{ns}.{coll}" if ns else coll
            counted = derive_query(
                self.pack, None, "QUERIES", "q3_scan",
                {"namespace": ns, "collection": coll, "qualified_collection": qualified},
            )
        else:
            counted = derive_query(self.pack, self.query, "QUERIES", "q3", {})
        final = derive_query(self.pack, counted, "LIMIT", "scalar", {})
        result = self._run(final)
        return int(_extract_scalar(result, default=0))

    def agg_value(self, func: str, col: str | None = None) -> Any:
        if col is not None and not (
            self.kind is FrameKind.PROJECTED and self.columns == (col,)
        ):
            target = self.project([col])
        else:
            target = self
            if col is None:
                if not (target.kind is FrameKind.PROJECTED and target.columns
                        and len(target.columns) == 1):
                    raise FrameError("agg_value without a column needs a single-column projection")
                col = target.columns[0]
        item = target._agg_item(func, col)
        aggregated = derive_query(
            target.pack, target.query, "QUERIES", "q7", {"agg_func": item}
        )
        final = derive_query(target.pack, aggregated, "LIMIT", "return_all", {})
        result = target._run(final)
        return _extract_scalar(result, default=None)

    def collect(self) -> Table:
        return self._run(self._finalize("return_all"))

    def persist(self, target: str, overwrite: bool = False) -> None:
        if not target:
            raise ValueError("persist needs a target collection name")
        ns = self.base[0]
        qualified = f"{ns}.{target}" if ns else target
        if not overwrite:
            probe = getattr(self.connector, "has_collection", None)
            if probe is not None and probe((ns, target)):
                raise FrameError(f"collection {qualified!r} already exists")
        final = derive_query(
            self.pack, self.query, "SAVE RESULTS", "to_collection",
            {"namespace": ns, "collection": target, "qualified_collection": qualified},
        )
        self._run(final)

    def rendered(self) -> str:
        return self.query.rendered()


def _extract_scalar(result: Table, default: Any) -> Any:
    if len(result.rows) == 0:
        return default
    if len(result.rows) != 1:
        raise ShapeError(f"expected one row, got {len(result.rows)}")
    row = result.rows[0]
    if len(row) != 1:
        raise ShapeError(f"expected one value, got keys {sorted(row)}")
    return next(iter(row.values()))


def scan(namespace: str, collection: str, pack: LanguagePack, connector: Any) -> Frame:
    """Root of every chain: select everything from one collection."""
    ns = namespace or ""
    qualified = f"{ns}.{collection}" if ns else collection
    query = derive_query(
        pack, None, "QUERIES", "q1",
        {"namespace": ns, "collection": collection, "qualified_collection": qualified},
    )
    return Frame(
        pack=pack,
        connector=connector,
        query=query,
        base=(ns, collection),
        root_id=next(_root_counter),
        kind=FrameKind.SCAN,
    )


# Module-level aliases matching the operation vocabulary used in the docs.
def project(f: Frame, columns: Sequence[str]) -> Frame:
    return f.project(columns)


def column_expr(f: Frame, op_kind: str, *operands: Any) -> Frame:
    """Dispatch helper: op_kind is one of the comparison/arithmetic keys,
    `and`/`or`/`not`, `isna`/`notna`, `to_int`/`to_str`, or `upper`."""
    if op_kind in _COMPARISONS:
        return f.compare(op_kind, operands[0])
    if op_kind in _ARITHMETIC:
        return f.arith(op_kind, operands[0])
    if op_kind == "and":
        return f.logical_and(operands[0])
    if op_kind == "or":
        return f.logical_or(operands[0])
    if op_kind == "not":
        return f.logical_not()
    if op_kind == "isna":
        return f.isna()
    if op_kind == "notna":
        return f.notna()
    if op_kind in ("to_int", "to_str"):
        return f.astype(op_kind)
    if op_kind == "upper":
        return f.map_upper()
    raise ValueError(f"unknown op_kind {op_kind!r}")
