"""Execution boundary: dry-run spy, in-memory local engine, HTTP endpoint.

Every connector follows the same four-step contract: initialize(config) once,
then per action pre_process(query, base) -> execute(prepared, base) ->
post_process(raw) -> Table. pre_process is pure with respect to the query;
execute is the only step allowed side effects.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Any

import requests

from .templates import DialectKind
from .values import NULL, Table, _decode_value
from .frame import QueryText


class ConnectorError(Exception):
    """Transport or backend failure, carrying the query that caused it."""

    def __init__(self, message: str, query: str | None = None, status: int | None = None):
        super().__init__(message)
        self.query = query
        self.status = status


class UnsupportedDialectError(ConnectorError):
    pass


def pipeline_envelope(query: QueryText, base: tuple[str, str]) -> QueryText:
    """Collapse a stage list into the single textual request form
    `<namespace>.<collection>.aggregate([...])`."""
    ns, coll = base
    prefix = f"{ns}.{coll}" if ns else coll
    return QueryText(kind=DialectKind.TEXT, text=f"{prefix}.aggregate({query.rendered()})")


# ---------------------------------------------------------------------------
# Dry-run spy
# ---------------------------------------------------------------------------


@dataclass
class ConnectorCall:
    query: QueryText
    prepared: QueryText
    base: tuple[str, str]


@dataclass
class DryRunConnector:
    """Records everything, executes nothing, returns empty results."""

    calls: list[ConnectorCall] = field(default_factory=list)
    events: list[str] = field(default_factory=list)
    _pending: QueryText | None = None

    def initialize(self, config: Any = None) -> None:
        self.events.append("initialize")

    def pre_process(self, query: QueryText, base: tuple[str, str]) -> QueryText:
        self.events.append("pre_process")
        self._pending = query
        if query.kind is DialectKind.PIPELINE:
            return pipeline_envelope(query, base)
        return query

    def execute(self, prepared: QueryText, base: tuple[str, str]) -> Any:
        self.events.append("execute")
        assert self._pending is not None
        self.calls.append(ConnectorCall(self._pending, prepared, base))
        self._pending = None
        return []

    def post_process(self, raw: Any) -> Table:
        self.events.append("post_process")
        return Table(rows=[])

    @property
    def execute_count(self) -> int:
        return sum(1 for e in self.events if e == "execute")

    def prepared_texts(self) -> list[str]:
        return [c.prepared.rendered() for c in self.calls]


# ---------------------------------------------------------------------------
# Local in-memory engine
# ---------------------------------------------------------------------------


class LocalConnector:
    """Routes rendered queries to the bundled reference interpreters.

    `catalog` maps (namespace, collection) to Tables; persist-style queries
    write back into it. Execution is serialized with a lock so concurrent
    callers are safe.
    """

    def __init__(self, catalog: dict[tuple[str, str], Table], dialect: str):
        self.catalog = catalog
        self.dialect = dialect
        self._lock = threading.Lock()

    def initialize(self, config: Any = None) -> None:
        pass

    def has_collection(self, base: tuple[str, str]) -> bool:
        return tuple(base) in self.catalog

    def pre_process(self, query: QueryText, base: tuple[str, str]) -> QueryText:
        return query

    def execute(self, prepared: QueryText, base: tuple[str, str]) -> Table:
        from . import pipeline, sqlexec

        with self._lock:
            if self.dialect in ("sql", "sqlpp"):
                ast = sqlexec.parse_sql(prepared.text, dialect=self.dialect)
                return sqlexec.eval_sql(ast, self.catalog)
            if self.dialect == "mongo":
                p = pipeline.parse_pipeline(prepared.rendered())
                return pipeline.eval_pipeline(p, self.catalog, tuple(base))
            raise UnsupportedDialectError(
                f"no local interpreter for dialect {self.dialect!r}",
                query=prepared.rendered(),
            )

    def post_process(self, raw: Table) -> Table:
        return raw


# ---------------------------------------------------------------------------
# HTTP endpoint
# ---------------------------------------------------------------------------


@dataclass
class HttpEndpointConfig:
    base_url: str
    query_path: str = "/query"
    auth_header: str | None = None
    timeout_ms: int = 30_000
    response_rows_pointer: str = "/results"

    def __post_init__(self) -> None:
        if self.timeout_ms <= 0:
            raise ValueError("timeout_ms must be positive")


def _resolve_pointer(envelope: Any, pointer: str) -> Any:
    node = envelope
    for part in pointer.strip("/").split("/"):
        if not part:
            continue
        if isinstance(node, list):
            node = node[int(part)]
        elif isinstance(node, dict) and part in node:
            node = node[part]
        else:
            raise KeyError(part)
    return node


class HttpConnector:
    """POSTs the query text to a configured endpoint and reads rows out of
    the JSON response envelope."""

    def __init__(self, config: HttpEndpointConfig):
        self.config = config
        self._initialized = False

    def initialize(self, config: HttpEndpointConfig | None = None) -> None:
        if config is not None:
            self.config = config
        self._initialized = True

    def pre_process(self, query: QueryText, base: tuple[str, str]) -> QueryText:
        if query.kind is DialectKind.PIPELINE:
            return pipeline_envelope(query, base)
        return query

    def execute(self, prepared: QueryText, base: tuple[str, str]) -> Any:
        if not self._initialized:
            self.initialize()
        cfg = self.config
        url = cfg.base_url.rstrip("/") + cfg.query_path
        headers = {"Content-Type": "text/plain; charset=utf-8"}
        if cfg.auth_header:
            headers["Authorization"] = cfg.auth_header
        text = prepared.rendered()
        try:
            resp = requests.post(
                url, data=text.encode("utf-8"), headers=headers,
                timeout=cfg.timeout_ms / 1000.0,
            )
        except requests.Timeout:
            raise ConnectorError(
                f"request timed out after {cfg.timeout_ms} ms", query=text
            ) from None
        except requests.RequestException as e:
            raise ConnectorError(f"transport failure: {e}", query=text) from None
        if not 200 <= resp.status_code < 300:
            raise ConnectorError(
                f"HTTP {resp.status_code}: {resp.text[:200]}",
                query=text, status=resp.status_code,
            )
        try:
            envelope = resp.json()
        except ValueError:
            raise ConnectorError(
                "response body is not JSON", query=text, status=resp.status_code
            ) from None
        try:
            rows = _resolve_pointer(envelope, self.config.response_rows_pointer)
        except (KeyError, IndexError, ValueError):
            raise ConnectorError(
                f"response envelope has no rows at {self.config.response_rows_pointer!r}",
                query=text, status=resp.status_code,
            ) from None
        if not isinstance(rows, list):
            raise ConnectorError(
                "row pointer did not resolve to an array", query=text
            )
        return rows

    def post_process(self, raw: Any) -> Table:
        rows = []
        for obj in raw:
            if not isinstance(obj, dict):
                raise ConnectorError("rows must be JSON objects")
            rows.append({k: _decode_value(v) for k, v in obj.items()})
        return Table(rows=rows)
