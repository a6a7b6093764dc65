from __future__ import annotations

import re

import pytest
from hypothesis import given, settings, strategies as st

from frameql.templates import (
    ConfigError,
    Lit,
    RenderError,
    VOCABULARY,
    Var,
    chain_attributes,
    normalize_pipeline_text,
    normalize_text_query,
    parse_config_sections,
    parse_template,
    substitute,
)


def _render(text: str, **bindings: str) -> str:
    return substitute(parse_template(text), bindings)


def test_parse_splits_literals_and_variables():
    t = parse_template("SELECT $attribute FROM ($subquery) t")
    assert t.tokens == [
        Lit("SELECT "),
        Var("attribute"),
        Lit(" FROM ("),
        Var("subquery"),
        Lit(") t"),
    ]
    assert t.variables() == ["attribute", "subquery"]


def test_longest_vocabulary_name_wins():
    assert parse_template("$left_on").tokens == [Var("left_on")]
    assert parse_template("$left").tokens == [Var("left")]
    # a trailing run that extends past every vocabulary name keeps the
    # longest matching prefix as the variable
    assert parse_template("$leftover").tokens == [Var("left"), Lit("over")]


def test_escaped_dollar_keeps_literal_and_resumes_matching():
    # the load-bearing case: $$left is a literal dollar immediately
    # followed by the binding of `left`
    assert _render("$$left", left="l") == "$l"
    assert _render("a$$b", left="l") == "a$b"
    assert _render("$$$left", left="l") == "$l"
    assert _render("$$$$") == "$$"


def test_unknown_dollar_word_stays_literal_and_is_reported():
    t = parse_template("WHERE $wat > 1")
    assert t.tokens == [Lit("WHERE $wat > 1")]
    assert t.unknown_tokens == ["wat"]


def test_trailing_dollar_is_literal():
    assert _render("100%$") == "100%$"


def test_substitute_requires_every_binding():
    t = parse_template("$left = $right")
    with pytest.raises(RenderError) as exc:
        substitute(t, {"left": "a"})
    assert exc.value.variable == "right"


def test_bound_values_are_not_rescanned():
    # single pass: a dollar-word inside a bound value stays verbatim
    assert _render("$left", left="$right") == "$right"


# -- brute-force substitution oracle ------------------------------------------
#
# An independent regex-driven substituter. Vocabulary names are tried
# longest-first at each dollar; `$$` contributes one literal dollar and the
# scan resumes on the character right after it.

_NAME_ALT = "|".join(sorted(VOCABULARY, key=len, reverse=True))
_ORACLE_RE = re.compile(rf"\$\$(?:({_NAME_ALT}))?|\$({_NAME_ALT})")


def _oracle_render(text: str, bindings: dict[str, str]) -> str:
    def repl(m: re.Match) -> str:
        if m.group(0).startswith("$$"):
            name = m.group(1)
            return "$" + (bindings[name] if name else "")
        return bindings[m.group(2)]

    return _ORACLE_RE.sub(repl, text)


_BINDINGS = {name: f"<{name.upper()}>" for name in VOCABULARY}
# a few values that themselves look like template text, to pin single-pass
_BINDINGS["left"] = "$right"
_BINDINGS["num"] = "10"

_fragment = st.one_of(
    st.sampled_from(
        [
            "$", "$$", " ", "(", ")", "{", "}", "AND ", "x", "_on",
            "$wat", "$$wat", "left", "$num", "$$num",
        ]
    ),
    st.sampled_from(sorted(VOCABULARY)).map(lambda n: f"${n}"),
    st.sampled_from(sorted(VOCABULARY)).map(lambda n: f"$${n}"),
    st.text(
        st.characters(min_codepoint=32, max_codepoint=126),
        max_size=6,
    ),
)


@settings(max_examples=300, deadline=None)
@given(st.lists(_fragment, max_size=12).map("".join))
def test_substitution_matches_brute_force_oracle(text):
    got = substitute(parse_template(text), _BINDINGS)
    assert got == _oracle_render(text, _BINDINGS)


# -- config parsing ------------------------------------------------------------


def test_parse_config_sections_basic():
    text = """
; comment
[QUERIES]
q1 = SELECT * FROM $collection
q2 = SELECT $attribute_alias
  FROM ($subquery) t

[LIMIT]
limit = $subquery LIMIT $num
"""
    sections = parse_config_sections(text)
    assert set(sections) == {"QUERIES", "LIMIT"}
    assert sections["QUERIES"]["q1"] == "SELECT * FROM $collection"
    # indented line continues the previous value
    assert sections["QUERIES"]["q2"] == "SELECT $attribute_alias\nFROM ($subquery) t"


def test_parse_config_rejects_duplicate_keys():
    with pytest.raises(ConfigError) as exc:
        parse_config_sections("[A]\nk = 1\nk = 2\n")
    assert exc.value.line == 3


def test_parse_config_rejects_entry_before_section():
    with pytest.raises(ConfigError):
        parse_config_sections("k = 1\n")


def test_parse_config_rejects_orphan_continuation():
    with pytest.raises(ConfigError):
        parse_config_sections("[A]\n  dangling\n")


def test_parse_config_rejects_garbage_line():
    with pytest.raises(ConfigError):
        parse_config_sections("[A]\nnot an entry\n")


# -- pack-level rendering helpers ----------------------------------------------


def test_pack_render_and_has(sqlpp_pack):
    assert sqlpp_pack.has("QUERIES", "q1")
    assert not sqlpp_pack.has("QUERIES", "no_such_key")
    out = sqlpp_pack.render("COMPARISON STATEMENTS", "eq", {"left": "a", "right": "b"})
    assert out == "a = b"


def test_pack_render_names_section_and_key_on_missing_binding(sqlpp_pack):
    with pytest.raises(RenderError) as exc:
        sqlpp_pack.render("QUERIES", "q6", {})
    assert exc.value.section == "QUERIES"
    assert exc.value.key == "q6"


def test_chain_attributes_uses_pack_separator(sqlpp_pack, mongo_pack):
    assert chain_attributes(["a", "b", "c"], sqlpp_pack) == "a, b, c"
    joined = chain_attributes(['"a":1', '"b":1'], mongo_pack)
    assert joined == '"a":1,"b":1' or joined == '"a":1, "b":1'


# -- whitespace normalization ----------------------------------------------------


def test_normalize_text_query_collapses_runs():
    assert normalize_text_query("SELECT  *\n  FROM t ") == "SELECT * FROM t"


def test_normalize_pipeline_text_is_string_aware():
    a = normalize_pipeline_text('[{"$match": { "a" : 1 }}]')
    b = normalize_pipeline_text('[{"$match":{"a":1}}]')
    assert a == b
    # runs collapse everywhere, but the surviving single space inside a
    # string literal is never treated as structural
    keep = normalize_pipeline_text('[{"$match":{"a":"x  y :z"}}]')
    assert '"x y :z"' in keep
