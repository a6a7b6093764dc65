"""Reference interpreter for the emitted SQL/SQL++ subset.

The grammar covers exactly what the bundled SQL-family packs can render:
single-table selects over named tables or subqueries, one inner join shape,
WHERE with three-valued logic, single-column GROUP BY, aggregates
(COUNT/MIN/MAX/AVG/STDDEV_POP), ORDER BY one column, LIMIT, `SELECT VALUE`
(sqlpp only), IS [NOT] NULL / IS UNKNOWN / IS KNOWN, UPPER, the two type
conversions, and CREATE TABLE ... AS for persistence.
"""

from __future__ import annotations

import re
import statistics
from dataclasses import dataclass, field
from typing import Any

from .values import (
    MISSING,
    NULL,
    Record,
    Table,
    is_absent,
    total_order_key,
    tristate_and,
    tristate_compare,
    tristate_not,
    tristate_or,
)

Catalog = dict[tuple[str, str], Table]


class SqlSyntaxError(Exception):
    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} (at offset {pos})")
        self.pos = pos


class SqlEvalError(Exception):
    pass


# ---------------------------------------------------------------------------
# Tokenizer
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<qident>"(?:[^"]+)")
  | (?P<string>'(?:[^']|'')*')
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><>|!=|>=|<=|=|>|<|\+|-|\*|/|%|\(|\)|,|;|\.)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # number | qident | string | ident | op | eof
    text: str
    pos: int

    def upper(self) -> str:
        return self.text.upper()


def _tokenize(text: str) -> list[Token]:
    out: list[Token] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise SqlSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        assert kind is not None
        if kind != "ws":
            out.append(Token(kind, m.group(), pos))
        pos = m.end()
    out.append(Token("eof", "", pos))
    return out


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Lit:
    value: Any


@dataclass(frozen=True)
class ColRef:
    name: str
    qualifier: str | None = None


@dataclass(frozen=True)
class Star:
    qualifier: str | None = None


@dataclass(frozen=True)
class Cmp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Logic:
    op: str  # and | or | not
    left: "Expr"
    right: "Expr | None" = None


@dataclass(frozen=True)
class Arith:
    op: str  # + - * / %
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Func:
    name: str  # COUNT MIN MAX AVG STDDEV_POP UPPER TO_BIGINT TO_STRING
    arg: "Expr"


@dataclass(frozen=True)
class IsAbsent:
    operand: "Expr"
    negated: bool


Expr = Lit | ColRef | Star | Cmp | Logic | Arith | Func | IsAbsent

_AGG_NAMES = {"COUNT", "MIN", "MAX", "AVG", "STDDEV_POP"}


@dataclass(frozen=True)
class SelectItem:
    expr: Expr
    alias: str | None


@dataclass(frozen=True)
class NamedTable:
    namespace: str
    name: str
    alias: str | None


@dataclass(frozen=True)
class Subquery:
    query: "Select"
    alias: str


@dataclass(frozen=True)
class Join:
    left: "Source"
    right: "Source"
    on_left: ColRef
    on_right: ColRef


Source = NamedTable | Subquery | Join


@dataclass(frozen=True)
class Select:
    items: tuple[SelectItem, ...]
    value_mode: bool
    source: Source
    where: Expr | None = None
    group_by: tuple[str, ...] = ()
    order_by: tuple[str, bool] | None = None  # (column, descending)
    limit: int | None = None


@dataclass(frozen=True)
class CreateTable:
    namespace: str
    name: str
    query: Select


_RESERVED = {
    "SELECT", "VALUE", "FROM", "WHERE", "GROUP", "ORDER", "BY", "LIMIT",
    "AS", "AND", "OR", "NOT", "IS", "NULL", "UNKNOWN", "KNOWN", "TRUE",
    "FALSE", "JOIN", "INNER", "ON", "DESC", "ASC", "CREATE", "TABLE", "CAST",
    "INTEGER", "TEXT",
}


class _Parser:
    def __init__(self, tokens: list[Token], dialect: str):
        self.toks = tokens
        self.i = 0
        self.dialect = dialect

    # -- token plumbing

    def peek(self, offset: int = 0) -> Token:
        return self.toks[min(self.i + offset, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.toks[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def at_kw(self, *words: str) -> bool:
        t = self.peek()
        return t.kind == "ident" and t.upper() in words

    def eat_kw(self, word: str) -> None:
        t = self.next()
        if t.kind != "ident" or t.upper() != word:
            raise SqlSyntaxError(f"expected {word}, found {t.text!r}", t.pos)

    def try_kw(self, word: str) -> bool:
        if self.at_kw(word):
            self.next()
            return True
        return False

    def eat_op(self, op: str) -> None:
        t = self.next()
        if t.kind != "op" or t.text != op:
            raise SqlSyntaxError(f"expected {op!r}, found {t.text!r}", t.pos)

    def at_op(self, *ops: str) -> bool:
        t = self.peek()
        return t.kind == "op" and t.text in ops

    # -- grammar

    def parse(self) -> Select | CreateTable:
        if self.at_kw("CREATE"):
            node: Select | CreateTable = self.create_table()
        else:
            node = self.select()
        while self.at_op(";"):
            self.next()
        t = self.peek()
        if t.kind != "eof":
            raise SqlSyntaxError(f"trailing input {t.text!r}", t.pos)
        return node

    def create_table(self) -> CreateTable:
        self.eat_kw("CREATE")
        self.eat_kw("TABLE")
        ns, name = self.qualified_name()
        self.eat_kw("AS")
        self.eat_op("(")
        q = self.select()
        self.eat_op(")")
        return CreateTable(ns, name, q)

    def qualified_name(self) -> tuple[str, str]:
        t = self.next()
        if t.kind != "ident":
            raise SqlSyntaxError("expected a table name", t.pos)
        first = t.text
        if self.at_op("."):
            self.next()
            t2 = self.next()
            if t2.kind != "ident":
                raise SqlSyntaxError("expected a name after '.'", t2.pos)
            return first, t2.text
        return "", first

    def select(self) -> Select:
        self.eat_kw("SELECT")
        value_mode = False
        if self.at_kw("VALUE"):
            if self.dialect != "sqlpp":
                raise SqlSyntaxError("SELECT VALUE is a sqlpp form", self.peek().pos)
            self.next()
            value_mode = True
        items = self.select_items(value_mode)
        self.eat_kw("FROM")
        source = self.source()
        where = None
        if self.try_kw("WHERE"):
            where = self.expr()
        group_by: tuple[str, ...] = ()
        if self.at_kw("GROUP"):
            self.next()
            self.eat_kw("BY")
            group_by = tuple(self.name_list())
        order_by = None
        if self.at_kw("ORDER"):
            self.next()
            self.eat_kw("BY")
            col = self.plain_name()
            desc = False
            if self.try_kw("DESC"):
                desc = True
            else:
                self.try_kw("ASC")
            order_by = (col, desc)
        limit = None
        if self.try_kw("LIMIT"):
            t = self.next()
            if t.kind != "number" or "." in t.text:
                raise SqlSyntaxError("LIMIT expects an integer", t.pos)
            limit = int(t.text)
        return Select(tuple(items), value_mode, source, where, group_by, order_by, limit)

    def select_items(self, value_mode: bool) -> list[SelectItem]:
        if value_mode:
            return [SelectItem(self.expr(), None)]
        items = [self.select_item()]
        while self.at_op(","):
            self.next()
            items.append(self.select_item())
        return items

    def select_item(self) -> SelectItem:
        if self.at_op("*"):
            self.next()
            return SelectItem(Star(), None)
        # qualified star: ident . *
        if (
            self.peek().kind == "ident"
            and self.peek().upper() not in _RESERVED
            and self.peek(1).kind == "op" and self.peek(1).text == "."
            and self.peek(2).kind == "op" and self.peek(2).text == "*"
        ):
            q = self.next().text
            self.next()
            self.next()
            return SelectItem(Star(qualifier=q), None)
        e = self.expr()
        alias = None
        if self.try_kw("AS"):
            t = self.next()
            if t.kind == "qident":
                alias = t.text[1:-1]
            elif t.kind == "ident":
                alias = t.text
            else:
                raise SqlSyntaxError("expected an alias", t.pos)
        return SelectItem(e, alias)

    def name_list(self) -> list[str]:
        names = [self.plain_name()]
        while self.at_op(","):
            self.next()
            names.append(self.plain_name())
        return names

    def plain_name(self) -> str:
        t = self.next()
        if t.kind == "qident":
            return t.text[1:-1]
        if t.kind == "ident" and t.upper() not in _RESERVED:
            return t.text
        raise SqlSyntaxError(f"expected a column name, found {t.text!r}", t.pos)

    def source(self) -> Source:
        left = self.source_primary()
        if self.at_kw("JOIN", "INNER"):
            if self.try_kw("INNER"):
                self.eat_kw("JOIN")
            else:
                self.eat_kw("JOIN")
            right = self.source_primary()
            on_left, on_right = self.join_condition()
            return Join(left, right, on_left, on_right)
        return left

    def source_primary(self) -> Source:
        if self.at_op("("):
            self.next()
            q = self.select()
            self.eat_op(")")
            alias = self.opt_alias()
            if alias is None:
                raise SqlSyntaxError("subquery needs an alias", self.peek().pos)
            return Subquery(q, alias)
        ns, name = self.qualified_name()
        return NamedTable(ns, name, self.opt_alias())

    def opt_alias(self) -> str | None:
        t = self.peek()
        if t.kind == "ident" and t.upper() not in _RESERVED:
            self.next()
            return t.text
        return None

    def join_condition(self) -> tuple[ColRef, ColRef]:
        self.eat_kw("ON")
        left = self.qualified_ref()
        self.eat_op("=")
        right = self.qualified_ref()
        return left, right

    def qualified_ref(self) -> ColRef:
        t = self.next()
        if t.kind != "ident":
            raise SqlSyntaxError("expected a qualified column", t.pos)
        self.eat_op(".")
        t2 = self.next()
        if t2.kind not in ("ident", "qident"):
            raise SqlSyntaxError("expected a column name", t2.pos)
        name = t2.text[1:-1] if t2.kind == "qident" else t2.text
        return ColRef(name, qualifier=t.text)

    # -- expressions (precedence: OR < AND < NOT < comparison/IS < +- < */% )

    def expr(self) -> Expr:
        return self.or_expr()

    def or_expr(self) -> Expr:
        e = self.and_expr()
        while self.at_kw("OR"):
            self.next()
            e = Logic("or", e, self.and_expr())
        return e

    def and_expr(self) -> Expr:
        e = self.not_expr()
        while self.at_kw("AND"):
            self.next()
            e = Logic("and", e, self.not_expr())
        return e

    def not_expr(self) -> Expr:
        if self.at_kw("NOT"):
            self.next()
            return Logic("not", self.not_expr())
        return self.cmp_expr()

    _CMP_OPS = {"=": "eq", "!=": "ne", "<>": "ne", ">": "gt", "<": "lt", ">=": "ge", "<=": "le"}

    def cmp_expr(self) -> Expr:
        e = self.add_expr()
        if self.at_kw("IS"):
            self.next()
            negated = False
            if self.try_kw("NOT"):
                negated = True
                self.eat_kw("NULL")
                return IsAbsent(e, negated=True)
            t = self.next()
            word = t.upper() if t.kind == "ident" else ""
            if word == "NULL":
                if self.dialect == "sqlpp":
                    raise SqlSyntaxError("sqlpp spells this IS UNKNOWN", t.pos)
                return IsAbsent(e, negated=False)
            if word == "UNKNOWN":
                if self.dialect != "sqlpp":
                    raise SqlSyntaxError("IS UNKNOWN is a sqlpp form", t.pos)
                return IsAbsent(e, negated=False)
            if word == "KNOWN":
                if self.dialect != "sqlpp":
                    raise SqlSyntaxError("IS KNOWN is a sqlpp form", t.pos)
                return IsAbsent(e, negated=True)
            raise SqlSyntaxError(f"unsupported IS {t.text!r}", t.pos)
        t = self.peek()
        if t.kind == "op" and t.text in self._CMP_OPS:
            self.next()
            return Cmp(self._CMP_OPS[t.text], e, self.add_expr())
        return e

    def add_expr(self) -> Expr:
        e = self.mul_expr()
        while self.at_op("+", "-"):
            op = self.next().text
            e = Arith(op, e, self.mul_expr())
        return e

    def mul_expr(self) -> Expr:
        e = self.primary()
        while self.at_op("*", "/", "%"):
            op = self.next().text
            e = Arith(op, e, self.primary())
        return e

    _FUNC_NAMES = {"COUNT", "MIN", "MAX", "AVG", "STDDEV_POP", "UPPER", "TO_BIGINT", "TO_STRING"}

    def primary(self) -> Expr:
        t = self.peek()
        if t.kind == "number":
            self.next()
            if re.search(r"[.eE]", t.text):
                return Lit(float(t.text))
            return Lit(int(t.text))
        if t.kind == "string":
            self.next()
            return Lit(t.text[1:-1].replace("''", "'"))
        if t.kind == "qident":
            self.next()
            return ColRef(t.text[1:-1])
        if t.kind == "op" and t.text == "(":
            self.next()
            e = self.expr()
            self.eat_op(")")
            return e
        if t.kind == "op" and t.text == "*":
            self.next()
            return Star()
        if t.kind != "ident":
            raise SqlSyntaxError(f"unexpected token {t.text!r}", t.pos)
        word = t.upper()
        if word == "NULL":
            self.next()
            return Lit(NULL)
        if word == "TRUE":
            self.next()
            return Lit(True)
        if word == "FALSE":
            self.next()
            return Lit(False)
        if word == "CAST":
            self.next()
            self.eat_op("(")
            inner = self.expr()
            self.eat_kw("AS")
            ty = self.next()
            self.eat_op(")")
            if ty.upper() == "INTEGER":
                return Func("TO_BIGINT", inner)
            if ty.upper() == "TEXT":
                return Func("TO_STRING", inner)
            raise SqlSyntaxError(f"unsupported cast target {ty.text!r}", ty.pos)
        if word in self._FUNC_NAMES and self.peek(1).kind == "op" and self.peek(1).text == "(":
            self.next()
            self.next()
            arg = self.expr()
            self.eat_op(")")
            return Func(word, arg)
        if word in _RESERVED:
            raise SqlSyntaxError(f"unexpected keyword {t.text!r}", t.pos)
        self.next()
        if self.at_op(".") and self.peek(1).kind in ("ident", "qident"):
            self.next()
            t2 = self.next()
            name = t2.text[1:-1] if t2.kind == "qident" else t2.text
            return ColRef(name, qualifier=t.text)
        return ColRef(t.text)


def parse_sql(text: str, dialect: str = "sqlpp") -> Select | CreateTable:
    if dialect not in ("sql", "sqlpp"):
        raise ValueError(f"unknown dialect {dialect!r}")
    return _Parser(_tokenize(text), dialect).parse()


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


@dataclass
class RowEnv:
    current: Record
    aliases: dict[str, Record] = field(default_factory=dict)


def _contains_agg(e: Expr) -> bool:
    if isinstance(e, Func):
        return e.name in _AGG_NAMES or _contains_agg(e.arg)
    if isinstance(e, (Cmp, Arith)):
        return _contains_agg(e.left) or _contains_agg(e.right)
    if isinstance(e, Logic):
        return _contains_agg(e.left) or (e.right is not None and _contains_agg(e.right))
    if isinstance(e, IsAbsent):
        return _contains_agg(e.operand)
    return False


def _numeric(v: Any) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _eval_scalar(e: Expr, env: RowEnv) -> Any:
    if isinstance(e, Lit):
        return e.value
    if isinstance(e, ColRef):
        if e.qualifier is not None:
            rec = env.aliases.get(e.qualifier)
            if rec is None:
                raise SqlEvalError(f"unknown source alias {e.qualifier!r}")
            return rec.get(e.name, MISSING)
        if e.name in env.aliases:
            return env.aliases[e.name]
        return env.current.get(e.name, MISSING)
    if isinstance(e, Cmp):
        return tristate_compare(e.op, _eval_scalar(e.left, env), _eval_scalar(e.right, env))
    if isinstance(e, Logic):
        a = _as_tristate(_eval_scalar(e.left, env))
        if e.op == "not":
            return tristate_not(a)
        assert e.right is not None
        b = _as_tristate(_eval_scalar(e.right, env))
        return tristate_and(a, b) if e.op == "and" else tristate_or(a, b)
    if isinstance(e, Arith):
        a = _eval_scalar(e.left, env)
        b = _eval_scalar(e.right, env)
        if is_absent(a) or is_absent(b):
            return NULL
        if not (_numeric(a) and _numeric(b)):
            raise SqlEvalError(f"arithmetic on non-numeric values: {a!r} {e.op} {b!r}")
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if e.op == "/":
            return a / b
        if e.op == "%":
            return a % b
        raise SqlEvalError(f"unknown arithmetic op {e.op!r}")
    if isinstance(e, Func):
        return _eval_plain_func(e, env)
    if isinstance(e, IsAbsent):
        v = _eval_scalar(e.operand, env)
        absent = is_absent(v) or v is None
        return (not absent) if e.negated else absent
    if isinstance(e, Star):
        raise SqlEvalError("* is only valid inside COUNT(*) or as a select item")
    raise SqlEvalError(f"cannot evaluate {e!r}")


def _as_tristate(v: Any):
    if v is None or is_absent(v):
        return None
    if isinstance(v, bool):
        return v
    raise SqlEvalError(f"non-boolean value in a logical context: {v!r}")


def _eval_plain_func(e: Func, env: RowEnv) -> Any:
    if e.name in _AGG_NAMES:
        raise SqlEvalError(f"{e.name} outside an aggregating select")
    v = _eval_scalar(e.arg, env)
    if e.name == "UPPER":
        if is_absent(v):
            return NULL
        if not isinstance(v, str):
            raise SqlEvalError(f"UPPER expects a string, got {v!r}")
        return v.upper()
    if e.name == "TO_BIGINT":
        if v is None or is_absent(v):
            return NULL
        if isinstance(v, bool):
            return 1 if v else 0
        if isinstance(v, int):
            return v
        if isinstance(v, float):
            return int(v)
        if isinstance(v, str):
            return int(v)
        raise SqlEvalError(f"cannot convert {v!r} to integer")
    if e.name == "TO_STRING":
        if is_absent(v):
            return NULL
        if isinstance(v, bool):
            return "true" if v else "false"
        return str(v)
    raise SqlEvalError(f"unknown function {e.name}")


def _eval_aggregate(e: Expr, group: list[RowEnv]) -> Any:
    """Evaluate an expression that contains aggregate calls over a group."""
    if isinstance(e, Func) and e.name in _AGG_NAMES:
        if e.name == "COUNT":
            if isinstance(e.arg, Star):
                return len(group)
            n = 0
            for env in group:
                v = _eval_scalar(e.arg, env)
                if not (is_absent(v) or v is None):
                    n += 1
            return n
        values = []
        for env in group:
            v = _eval_scalar(e.arg, env)
            if not (is_absent(v) or v is None):
                values.append(v)
        if not values:
            return NULL
        if e.name == "MIN":
            return min(values, key=total_order_key)
        if e.name == "MAX":
            return max(values, key=total_order_key)
        numeric = [v for v in values if _numeric(v)]
        if len(numeric) != len(values):
            raise SqlEvalError(f"{e.name} over non-numeric values")
        if e.name == "AVG":
            return sum(numeric) / len(numeric)
        return statistics.pstdev(numeric)
    if isinstance(e, Func):
        # Scalar function over an aggregate, e.g. UPPER(MIN(s)).
        inner = _eval_aggregate(e.arg, group)
        return _eval_plain_func(Func(e.name, Lit(inner)), group[0] if group else RowEnv({}))
    if isinstance(e, Arith):
        return _eval_scalar(
            Arith(e.op, Lit(_eval_aggregate(e.left, group)), Lit(_eval_aggregate(e.right, group))),
            group[0] if group else RowEnv({}),
        )
    if group:
        return _eval_scalar(e, group[0])
    return NULL


def _source_envs(source: Source, catalog: Catalog) -> list[RowEnv]:
    if isinstance(source, NamedTable):
        key = (source.namespace, source.name)
        tbl = catalog.get(key)
        if tbl is None:
            label = f"{source.namespace}.{source.name}" if source.namespace else source.name
            raise SqlEvalError(f"unknown table {label!r}")
        if source.alias:
            return [RowEnv(row, {source.alias: row}) for row in tbl.rows]
        return [RowEnv(row) for row in tbl.rows]
    if isinstance(source, Subquery):
        sub = eval_sql(source.query, catalog)
        return [RowEnv(row, {source.alias: row}) for row in sub.rows]
    if isinstance(source, Join):
        left_envs = _source_envs(source.left, catalog)
        right_envs = _source_envs(source.right, catalog)
        index: dict[Any, list[RowEnv]] = {}
        for renv in right_envs:
            v = _eval_scalar(source.on_right, renv)
            if is_absent(v):
                continue
            index.setdefault(total_order_key(v), []).append(renv)
        out: list[RowEnv] = []
        for lenv in left_envs:
            v = _eval_scalar(source.on_left, lenv)
            if is_absent(v):
                continue
            for renv in index.get(total_order_key(v), ()):
                merged = _merge_records(lenv.current, renv.current)
                out.append(RowEnv(merged, {**lenv.aliases, **renv.aliases}))
        return out
    raise SqlEvalError(f"unknown source {source!r}")


def _merge_records(a: Record, b: Record) -> Record:
    out = dict(a)
    for k, v in b.items():
        name = k
        n = 2
        while name in out:
            name = f"{k}_{n}"
            n += 1
        out[name] = v
    return out


def _normalize(v: Any) -> Any:
    return NULL if v is None else v


def _item_name(item: SelectItem, index: int) -> str:
    if item.alias:
        return item.alias
    e = item.expr
    if isinstance(e, ColRef):
        return e.name
    if isinstance(e, Func):
        return e.name.lower()
    return f"expr_{index + 1}"


def _unique_names(names: list[str]) -> list[str]:
    seen: dict[str, int] = {}
    out = []
    for n in names:
        if n not in seen:
            seen[n] = 1
            out.append(n)
        else:
            seen[n] += 1
            out.append(f"{n}_{seen[n]}")
    return out


def eval_sql(node: Select | CreateTable, catalog: Catalog) -> Table:
    if isinstance(node, CreateTable):
        result = eval_sql(node.query, catalog)
        catalog[(node.namespace, node.name)] = result
        return Table(rows=[])
    envs = _source_envs(node.source, catalog)
    if node.where is not None:
        envs = [env for env in envs if _eval_scalar(node.where, env) is True]

    has_agg = any(_contains_agg(item.expr) for item in node.items)

    rows: list[Record]
    if node.group_by:
        groups: dict[Any, list[RowEnv]] = {}
        for env in envs:
            key = tuple(total_order_key(env.current.get(c, MISSING)) for c in node.group_by)
            groups.setdefault(key, []).append(env)
        rows = [_build_agg_row(node, group) for group in groups.values()]
    elif has_agg:
        rows = [_build_agg_row(node, envs)]
    else:
        rows = [_build_row(node, env) for env in envs]

    if node.order_by is not None:
        col, desc = node.order_by
        rows.sort(key=lambda r: total_order_key(r.get(col, MISSING)), reverse=desc)
    if node.limit is not None:
        rows = rows[: node.limit]
    return Table(rows=rows)


def _build_agg_row(node: Select, group: list[RowEnv]) -> Record:
    values = []
    for item in node.items:
        if _contains_agg(item.expr):
            values.append(_normalize(_eval_aggregate(item.expr, group)))
        else:
            values.append(
                _normalize(_eval_scalar(item.expr, group[0])) if group else NULL
            )
    if node.value_mode:
        v = values[0]
        return dict(v) if isinstance(v, dict) else {"": v}
    names = _unique_names([_item_name(it, i) for i, it in enumerate(node.items)])
    return dict(zip(names, values))


def _build_row(node: Select, env: RowEnv) -> Record:
    if node.value_mode:
        v = _eval_scalar(node.items[0].expr, env)
        if isinstance(v, dict):
            return dict(v)
        return {"": _normalize(v)}
    stars = [it for it in node.items if isinstance(it.expr, Star)]
    if stars:
        if len(stars) != len(node.items):
            raise SqlEvalError("mixing * with other select items is unsupported")
        merged: Record = {}
        for it in node.items:
            star = it.expr
            assert isinstance(star, Star)
            if star.qualifier is None:
                merged = _merge_records(merged, env.current) if merged else dict(env.current)
            else:
                rec = env.aliases.get(star.qualifier)
                if rec is None:
                    raise SqlEvalError(f"unknown source alias {star.qualifier!r}")
                merged = _merge_records(merged, rec) if merged else dict(rec)
        return merged
    names = _unique_names([_item_name(it, i) for i, it in enumerate(node.items)])
    out: Record = {}
    for name, item in zip(names, node.items):
        out[name] = _normalize(_eval_scalar(item.expr, env))
    return out
