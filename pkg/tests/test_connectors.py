from __future__ import annotations

import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from frameql.connectors import (
    ConnectorError,
    DryRunConnector,
    HttpConnector,
    HttpEndpointConfig,
    LocalConnector,
    UnsupportedDialectError,
    pipeline_envelope,
)
from frameql.frame import QueryText, scan
from frameql.templates import DialectKind
from frameql.values import NULL, Table


def _text_query(sql: str) -> QueryText:
    return QueryText(kind=DialectKind.TEXT, text=sql)


# -- envelope ----------------------------------------------------------------


def test_pipeline_envelope_qualifies_namespace():
    q = QueryText(kind=DialectKind.PIPELINE, stages=('{ "$match": {} }',))
    assert pipeline_envelope(q, ("Test", "Users")).rendered() == (
        'Test.Users.aggregate([{ "$match": {} }])'
    )
    assert pipeline_envelope(q, ("", "Users")).rendered() == (
        'Users.aggregate([{ "$match": {} }])'
    )


# -- dry-run spy ----------------------------------------------------------------


def test_dry_run_records_call_sequence(sqlpp_pack):
    spy = DryRunConnector()
    f = scan("Test", "Users", sqlpp_pack, spy)
    out = f.head(3)
    assert isinstance(out, Table) and len(out) == 0
    assert spy.events == ["pre_process", "execute", "post_process"]
    assert len(spy.calls) == 1
    assert spy.calls[0].base == ("Test", "Users")
    assert spy.calls[0].query.rendered().endswith("LIMIT 3;")
    assert spy.prepared_texts() == [spy.calls[0].prepared.rendered()]


def test_dry_run_envelopes_pipelines(mongo_pack):
    spy = DryRunConnector()
    scan("Test", "Users", mongo_pack, spy).head(2)
    call = spy.calls[0]
    assert call.query.rendered().startswith("[")
    assert call.prepared.rendered().startswith("Test.Users.aggregate([")


# -- local routing ----------------------------------------------------------------


def test_local_connector_routes_each_dialect():
    rows = [{"a": 1}, {"a": 2}]
    catalog = {("", "d"): Table(rows=[dict(r) for r in rows])}
    sql = LocalConnector(catalog, dialect="sql")
    got = sql.execute(_text_query("SELECT * FROM d WHERE a > 1"), ("", "d"))
    assert got.rows == [{"a": 2}]

    sqlpp = LocalConnector(catalog, dialect="sqlpp")
    got = sqlpp.execute(_text_query("SELECT VALUE a FROM d"), ("", "d"))
    assert got.rows == [{"": 1}, {"": 2}]

    mongo = LocalConnector(catalog, dialect="mongo")
    q = QueryText(kind=DialectKind.PIPELINE, stages=('{"$limit": 1}',))
    got = mongo.execute(mongo.pre_process(q, ("", "d")), ("", "d"))
    assert got.rows == [{"a": 1}]


def test_local_connector_rejects_unroutable_dialects():
    conn = LocalConnector({}, dialect="cypher")
    with pytest.raises(UnsupportedDialectError) as exc:
        conn.execute(_text_query("MATCH(t: d)"), ("", "d"))
    assert exc.value.query == "MATCH(t: d)"


# -- HTTP stub ----------------------------------------------------------------------


class _StubHandler(BaseHTTPRequestHandler):
    received: list[tuple[str, str, str | None]] = []

    def _send(self, code: int, payload: bytes, ctype: str = "application/json"):
        self.send_response(code)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def do_POST(self):
        n = int(self.headers.get("Content-Length", "0"))
        body = self.rfile.read(n).decode("utf-8")
        _StubHandler.received.append((self.path, body, self.headers.get("Authorization")))
        if self.path == "/ok":
            self._send(200, json.dumps({"results": [{"a": 1, "b": None}, {"a": 2}]}).encode())
        elif self.path == "/echo":
            self._send(200, json.dumps({"results": [{"q": body}]}).encode())
        elif self.path == "/nested":
            self._send(200, json.dumps({"data": {"rows": [{"x": 7}]}}).encode())
        elif self.path == "/boom":
            self._send(500, b"kaboom")
        elif self.path == "/teapot":
            self._send(418, b"short and stout")
        elif self.path == "/slow":
            time.sleep(5)
            self._send(200, json.dumps({"results": []}).encode())
        elif self.path == "/notjson":
            self._send(200, b"<html>hi</html>", ctype="text/html")
        elif self.path == "/scalar":
            self._send(200, json.dumps({"results": 42}).encode())
        elif self.path == "/rowsofints":
            self._send(200, json.dumps({"results": [1, 2]}).encode())
        else:
            self._send(404, b"no such path")

    def log_message(self, *args):  # keep pytest output clean
        pass


@pytest.fixture(scope="module")
def stub_url():
    server = ThreadingHTTPServer(("127.0.0.1", 0), _StubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield f"http://127.0.0.1:{server.server_address[1]}"
    finally:
        server.shutdown()
        thread.join(timeout=5)


def _http(url: str, path: str, **kw) -> HttpConnector:
    return HttpConnector(HttpEndpointConfig(base_url=url, query_path=path, **kw))


def test_http_success_round_trip(stub_url):
    conn = _http(stub_url, "/ok")
    raw = conn.execute(_text_query("SELECT 1"), ("", "d"))
    table = conn.post_process(raw)
    assert table.rows[0]["a"] == 1
    assert table.rows[0]["b"] is NULL
    assert table.rows[1] == {"a": 2}


def test_http_posts_the_rendered_query_text(stub_url):
    conn = _http(stub_url, "/echo")
    raw = conn.execute(_text_query("SELECT * FROM d WHERE a = 'x'"), ("", "d"))
    assert raw == [{"q": "SELECT * FROM d WHERE a = 'x'"}]


def test_http_forwards_auth_header(stub_url):
    _StubHandler.received.clear()
    conn = _http(stub_url, "/ok", auth_header="Bearer sesame")
    conn.execute(_text_query("SELECT 1"), ("", "d"))
    assert _StubHandler.received[-1][2] == "Bearer sesame"


def test_http_custom_rows_pointer(stub_url):
    conn = _http(stub_url, "/nested", response_rows_pointer="/data/rows")
    assert conn.execute(_text_query("q"), ("", "d")) == [{"x": 7}]


def test_http_non_2xx_surfaces_status_and_query(stub_url):
    conn = _http(stub_url, "/boom")
    with pytest.raises(ConnectorError) as exc:
        conn.execute(_text_query("SELECT broken"), ("", "d"))
    assert exc.value.status == 500
    assert exc.value.query == "SELECT broken"
    assert "kaboom" in str(exc.value)

    with pytest.raises(ConnectorError) as exc:
        _http(stub_url, "/teapot").execute(_text_query("q2"), ("", "d"))
    assert exc.value.status == 418
    assert exc.value.query == "q2"


def test_http_timeout_is_honored_within_double(stub_url):
    conn = _http(stub_url, "/slow", timeout_ms=400)
    started = time.perf_counter()
    with pytest.raises(ConnectorError) as exc:
        conn.execute(_text_query("SELECT slow"), ("", "d"))
    elapsed = time.perf_counter() - started
    assert "timed out" in str(exc.value)
    assert exc.value.query == "SELECT slow"
    assert elapsed < 2 * 0.4


def test_http_rejects_non_json_and_bad_pointers(stub_url):
    with pytest.raises(ConnectorError):
        _http(stub_url, "/notjson").execute(_text_query("q"), ("", "d"))
    with pytest.raises(ConnectorError):
        _http(stub_url, "/ok", response_rows_pointer="/missing").execute(
            _text_query("q"), ("", "d")
        )
    with pytest.raises(ConnectorError):
        _http(stub_url, "/scalar").execute(_text_query("q"), ("", "d"))
    conn = _http(stub_url, "/rowsofints")
    raw = conn.execute(_text_query("q"), ("", "d"))
    with pytest.raises(ConnectorError):
        conn.post_process(raw)


def test_http_config_validation():
    with pytest.raises(ValueError):
        HttpEndpointConfig(base_url="http://x", timeout_ms=0)


def test_http_transport_failure_is_a_connector_error():
    conn = _http("http://127.0.0.1:9", "/ok", timeout_ms=500)
    with pytest.raises(ConnectorError) as exc:
        conn.execute(_text_query("q"), ("", "d"))
    assert exc.value.query == "q"
