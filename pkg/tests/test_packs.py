from __future__ import annotations

import pytest

from frameql.templates import (
    CANONICAL_REGISTRY,
    DialectKind,
    LanguagePack,
    parse_template,
    validate_pack,
)
from frameql.packs import builtin_names, load_builtin


def _all_registry_keys():
    for section, keys in CANONICAL_REGISTRY.items():
        for key in keys:
            yield section, key


def _without(pack: LanguagePack, section: str, key: str) -> LanguagePack:
    sections = {sec: dict(entries) for sec, entries in pack.sections.items()}
    del sections[section][key]
    return LanguagePack(name=pack.name, dialect_kind=pack.dialect_kind, sections=sections)


def test_builtin_names():
    assert builtin_names() == ["cypher", "mongo", "sql", "sqlpp"]


def test_unknown_builtin_raises():
    with pytest.raises(ValueError):
        load_builtin("postgres")


@pytest.mark.parametrize("name", ["sqlpp", "sql", "cypher", "mongo"])
def test_builtin_packs_validate_clean(name):
    diags = validate_pack(load_builtin(name))
    assert diags == []


def test_dialect_kinds(packs):
    assert packs["mongo"].dialect_kind is DialectKind.PIPELINE
    for name in ("sqlpp", "sql", "cypher"):
        assert packs[name].dialect_kind is DialectKind.TEXT


def test_scan_count_shortcut_is_optional(packs):
    # only the SQL++ pack carries the direct collection-count rule
    assert packs["sqlpp"].has("QUERIES", "q3_scan")
    for name in ("sql", "cypher", "mongo"):
        assert not packs[name].has("QUERIES", "q3_scan")


@pytest.mark.parametrize("section,key", sorted(_all_registry_keys()))
def test_deleting_any_registry_key_is_diagnosed(packs, section, key):
    for name in builtin_names():
        mutated = _without(packs[name], section, key)
        diags = validate_pack(mutated)
        assert any(d.section == section and d.key == key for d in diags), (
            f"{name}: dropping [{section}] {key} went unnoticed"
        )


def test_missing_section_is_diagnosed(sqlpp_pack):
    sections = {s: dict(e) for s, e in sqlpp_pack.sections.items()}
    del sections["NULL CHECK"]
    mutated = LanguagePack("sqlpp", DialectKind.TEXT, sections)
    diags = validate_pack(mutated)
    assert any(d.section == "NULL CHECK" for d in diags)


def test_unknown_variable_is_diagnosed(sqlpp_pack):
    sections = {s: dict(e) for s, e in sqlpp_pack.sections.items()}
    sections["QUERIES"] = dict(sections["QUERIES"])
    sections["QUERIES"]["q6"] = parse_template("SELECT * WHERE $tpyo")
    mutated = LanguagePack("sqlpp", DialectKind.TEXT, sections)
    diags = validate_pack(mutated)
    bad = [d for d in diags if d.variable == "tpyo"]
    assert bad and bad[0].key == "q6"


def test_pipeline_stage_words_are_not_flagged(mongo_pack):
    # $match, $group etc. appear as literal dollar-words in the pipeline
    # templates; the validator must not confuse them with typos
    diags = validate_pack(mongo_pack)
    assert diags == []
    q6 = mongo_pack.sections["QUERIES"]["q6"].source
    assert "$match" in q6
