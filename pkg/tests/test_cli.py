from __future__ import annotations

import io
import json
from pathlib import Path

import pytest

from frameql.cli import _parse_expr_ranges, main
from frameql.datagen import GeneratorSpec, iter_rows
from frameql.values import write_jsonl


def _write_dataset(path, n=500, seed=1, missing_rate=0.1):
    spec = GeneratorSpec(max_rows=n, seed=seed, missing_rate=missing_rate)
    with open(path, "w", encoding="utf-8") as fp:
        write_jsonl(iter_rows(spec), fp)
    return path


def test_parse_expr_ranges():
    assert _parse_expr_ranges("1-13") == list(range(1, 14))
    assert _parse_expr_ranges("1,3,5-7") == [1, 3, 5, 6, 7]
    with pytest.raises(SystemExit):
        _parse_expr_ranges("14")


def test_datagen_writes_deterministic_jsonl(tmp_path, capsys):
    out = tmp_path / "d.jsonl"
    argv = ["datagen", "--max", "200", "--seed", "4", "--missing-rate", "0.1",
            "--out", str(out)]
    assert main(argv) == 0
    first = out.read_text()
    assert first.count("\n") == 200
    assert main(argv) == 0
    assert out.read_text() == first
    buf = io.StringIO()
    write_jsonl(iter_rows(GeneratorSpec(max_rows=200, seed=4, missing_rate=0.1)), buf)
    assert first == buf.getvalue()
    assert "wrote 200 rows" in capsys.readouterr().out


def test_bench_local_small_run(tmp_path, capsys):
    data = _write_dataset(tmp_path / "d.jsonl", n=300)
    report = tmp_path / "report.json"
    rc = main([
        "bench", "--pack", "sqlpp", "--connector", "local",
        "--data", str(data), "--exprs", "1,6,13", "--out", str(report),
    ])
    captured = capsys.readouterr().out
    assert rc == 0
    assert captured.count("oracle=ok") == 3
    doc = json.loads(report.read_text())
    assert doc["pack"] == "sqlpp"
    assert [e["expr_id"] for e in doc["expressions"]] == [1, 6, 13]
    assert all(e["error"] is None for e in doc["expressions"])


def test_bench_golden_mode(tmp_path, capsys):
    import frameql

    golden_dir = Path(frameql.__file__).parent / "golden"
    rc = main(["bench", "--pack", "mongo", "--golden-dir", str(golden_dir)])
    out = capsys.readouterr().out
    assert rc == 0
    assert out.count(": ok") == 13

    # a corrupted golden file must fail loudly
    bad = dict(json.loads((golden_dir / "benchmark_mongo.json").read_text()))
    bad["5"] = '[{"$limit": 999}]'
    bad_dir = tmp_path / "golden"
    bad_dir.mkdir()
    (bad_dir / "benchmark_mongo.json").write_text(json.dumps(bad))
    rc = main(["bench", "--pack", "mongo", "--golden-dir", str(bad_dir)])
    out = capsys.readouterr().out
    assert rc == 1
    assert "expr 5: DIFF" in out


def test_bench_dryrun_connector(capsys):
    rc = main(["bench", "--pack", "cypher", "--connector", "dryrun", "--exprs", "1-4"])
    assert rc == 0
    assert capsys.readouterr().out.count("expr ") == 4


def test_bench_http_requires_url():
    with pytest.raises(SystemExit):
        main(["bench", "--pack", "sql", "--connector", "http"])


_CHAIN = {
    "pack": "sqlpp",
    "namespace": "Test",
    "collection": "Users",
    "ops": [
        {"op": "filter", "mask": [
            {"op": "project", "columns": ["lang"]},
            {"op": "compare", "cmp": "eq", "value": "en"},
        ]},
        {"op": "project", "columns": ["name", "address"]},
    ],
    "action": {"kind": "head", "n": 10},
}


def test_render_matches_direct_api(tmp_path, capsys):
    chain = tmp_path / "chain.json"
    chain.write_text(json.dumps(_CHAIN))
    assert main(["render", "--chain", str(chain)]) == 0
    doc = json.loads(capsys.readouterr().out)

    from frameql.connectors import DryRunConnector
    from frameql.frame import scan
    from frameql.packs import load_builtin

    pack = load_builtin("sqlpp")
    spy = DryRunConnector()
    f = scan("Test", "Users", pack, spy)
    f.filter(f.project("lang").compare("eq", "en")).project(["name", "address"]).head(10)
    assert doc["query"] == spy.calls[-1].query.rendered()
    assert doc["prepared"] == spy.calls[-1].prepared.rendered()
    assert doc["pack"] == "sqlpp"


def test_render_without_action_returns_lazy_query(capsys, monkeypatch):
    doc_in = {"pack": "mongo", "collection": "Users",
              "ops": [{"op": "sort_values", "col": "a", "ascending": False}]}
    monkeypatch.setattr("sys.stdin", io.StringIO(json.dumps(doc_in)))
    assert main(["render", "--chain", "-"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["prepared"] is None
    assert doc["query"].startswith("[")
    assert '"$sort"' in doc["query"]


def test_render_executes_against_local_files(tmp_path, capsys):
    data = tmp_path / "users.jsonl"
    rows = [
        {"lang": "en", "name": "a", "address": "x"},
        {"lang": "fr", "name": "b", "address": "y"},
        {"lang": "en", "name": "c", "address": None},
    ]
    data.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
    doc_in = dict(_CHAIN)
    doc_in["execute"] = {"collections": {"Users": str(data)}}
    chain = tmp_path / "chain.json"
    chain.write_text(json.dumps(doc_in))
    assert main(["render", "--chain", str(chain), "--pretty"]) == 0
    doc = json.loads(capsys.readouterr().out)
    got = doc["result"]["rows"]
    assert got == [{"name": "a", "address": "x"}, {"name": "c", "address": None}]


def test_render_symbolic_literals(capsys, monkeypatch):
    doc_in = {
        "pack": "sql", "collection": "data",
        "ops": [{"op": "filter", "mask": [
            {"op": "project", "columns": ["ten"]},
            {"op": "compare", "cmp": "eq", "value": {"sym": "x"}},
        ]}],
    }
    monkeypatch.setattr("sys.stdin", io.StringIO(json.dumps(doc_in)))
    assert main(["render", "--chain", "-"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert '"ten" = x' in doc["query"]


def test_render_rejects_unknown_ops(monkeypatch):
    doc_in = {"pack": "sql", "collection": "d", "ops": [{"op": "pivot"}]}
    monkeypatch.setattr("sys.stdin", io.StringIO(json.dumps(doc_in)))
    with pytest.raises(SystemExit):
        main(["render", "--chain", "-"])


def test_render_get_dummies_needs_execution(monkeypatch):
    doc_in = {"pack": "sql", "collection": "d",
              "ops": [{"op": "get_dummies", "col": "tag"}]}
    monkeypatch.setattr("sys.stdin", io.StringIO(json.dumps(doc_in)))
    with pytest.raises(SystemExit, match="execute.collections"):
        main(["render", "--chain", "-"])


def test_render_get_dummies_executes(tmp_path, capsys):
    data = tmp_path / "d.jsonl"
    rows = [{"tag": "a"}, {"tag": "b"}, {"tag": "a"}]
    data.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
    doc_in = {
        "pack": "sql", "collection": "d",
        "ops": [{"op": "get_dummies", "col": "tag"}],
        "action": {"kind": "collect"},
        "execute": {"collections": {"d": str(data)}},
    }
    chain = tmp_path / "chain.json"
    chain.write_text(json.dumps(doc_in))
    assert main(["render", "--chain", str(chain)]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["result"]["columns"] == ["tag_a", "tag_b"]
    assert doc["result"]["rows"] == [
        {"tag_a": 1, "tag_b": 0},
        {"tag_a": 0, "tag_b": 1},
        {"tag_a": 1, "tag_b": 0},
    ]
    assert "tag_a" in doc["query"]
