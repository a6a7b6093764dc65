from __future__ import annotations

import io
import json

import pytest
from hypothesis import given, settings, strategies as st

from frameql.values import (
    MISSING,
    NULL,
    Table,
    UNKNOWN,
    ValueError_,
    is_absent,
    iter_jsonl,
    read_jsonl,
    record_get,
    total_order_cmp,
    total_order_key,
    tristate_and,
    tristate_compare,
    tristate_not,
    tristate_or,
    type_bracket,
    write_jsonl,
)


def test_markers_are_singletons():
    assert type(MISSING)() is MISSING
    assert type(NULL)() is NULL
    assert MISSING is not NULL


def test_markers_are_falsy_and_absent():
    assert not MISSING
    assert not NULL
    assert is_absent(MISSING) and is_absent(NULL)
    assert not is_absent(0)
    assert not is_absent("")


def test_type_brackets():
    assert type_bracket(MISSING) == 0
    assert type_bracket(NULL) == 1
    assert type_bracket(3) == 2
    assert type_bracket(3.5) == 2
    assert type_bracket("x") == 3
    assert type_bracket(True) == 4  # bool is not an int here
    with pytest.raises(ValueError_):
        type_bracket([1, 2])


def test_total_order_across_brackets():
    ordered = [MISSING, NULL, -7, 0, 2.5, 3, "", "a", "b", False, True]
    keys = [total_order_key(v) for v in ordered]
    assert keys == sorted(keys)


def test_total_order_cmp_matches_key_order():
    vals = [MISSING, NULL, 1, 1.0, 2, "a", True]
    for a in vals:
        for b in vals:
            c = total_order_cmp(a, b)
            ka, kb = total_order_key(a), total_order_key(b)
            if ka == kb:
                assert c == 0
            else:
                assert c == (-1 if ka < kb else 1)


def test_int_float_compare_numerically_within_bracket():
    assert total_order_cmp(1, 1.0) == 0
    assert total_order_cmp(1, 1.5) == -1
    assert total_order_cmp(2.5, 2) == 1


# -- three-valued logic -------------------------------------------------------


def test_compare_absent_operand_is_unknown():
    for absent in (MISSING, NULL):
        assert tristate_compare("eq", absent, 1) is UNKNOWN
        assert tristate_compare("ne", 1, absent) is UNKNOWN
        assert tristate_compare("lt", absent, absent) is UNKNOWN


def test_compare_concrete_values():
    assert tristate_compare("eq", 3, 3) is True
    assert tristate_compare("eq", 3, 4) is False
    assert tristate_compare("ne", 3, 4) is True
    assert tristate_compare("gt", 4, 3) is True
    assert tristate_compare("le", 3, 3) is True
    assert tristate_compare("eq", 3, 3.0) is True  # cross int/float


def test_compare_mixed_types_never_raises():
    assert tristate_compare("eq", 3, "3") is False
    assert tristate_compare("ne", 3, "3") is True
    assert tristate_compare("lt", 3, "3") is False
    assert tristate_compare("eq", True, 1) is False  # bool is its own kind


_T, _F, _U = True, False, UNKNOWN


@pytest.mark.parametrize(
    "a,b,want",
    [
        (_T, _T, _T), (_T, _F, _F), (_T, _U, _U),
        (_F, _T, _F), (_F, _F, _F), (_F, _U, _F),
        (_U, _T, _U), (_U, _F, _F), (_U, _U, _U),
    ],
)
def test_and_truth_table(a, b, want):
    assert tristate_and(a, b) is want


@pytest.mark.parametrize(
    "a,b,want",
    [
        (_T, _T, _T), (_T, _F, _T), (_T, _U, _T),
        (_F, _T, _T), (_F, _F, _F), (_F, _U, _U),
        (_U, _T, _T), (_U, _F, _U), (_U, _U, _U),
    ],
)
def test_or_truth_table(a, b, want):
    assert tristate_or(a, b) is want


def test_not_truth_table():
    assert tristate_not(_T) is False
    assert tristate_not(_F) is True
    assert tristate_not(_U) is UNKNOWN


# -- records and tables -------------------------------------------------------


def test_record_get_defaults_to_missing():
    rec = {"a": 1, "b": NULL}
    assert record_get(rec, "a") == 1
    assert record_get(rec, "b") is NULL
    assert record_get(rec, "zzz") is MISSING


def test_table_column_names_follow_first_appearance():
    t = Table(rows=[{"b": 1}, {"a": 2, "b": 3}])
    assert t.column_names() == ["b", "a"]
    assert len(t) == 2


def test_table_to_tuples_fills_missing():
    t = Table(rows=[{"a": 1}, {"b": 2}], columns=["a", "b"])
    assert t.to_tuples() == [(1, MISSING), (MISSING, 2)]


# -- JSON lines ----------------------------------------------------------------


def _round_trip(table: Table) -> Table:
    buf = io.StringIO()
    write_jsonl(table, buf)
    buf.seek(0)
    return read_jsonl(buf)


def test_jsonl_missing_vs_null():
    t = Table(rows=[{"a": 1, "b": NULL}, {"a": 2}])
    buf = io.StringIO()
    write_jsonl(t, buf)
    lines = buf.getvalue().splitlines()
    assert json.loads(lines[0]) == {"a": 1, "b": None}
    assert json.loads(lines[1]) == {"a": 2}  # MISSING key simply absent
    back = _round_trip(t)
    assert back.rows[0]["b"] is NULL
    assert "b" not in back.rows[1]


def test_jsonl_preserves_record_key_order():
    t = Table(rows=[{"z": 1, "a": 2}])
    buf = io.StringIO()
    write_jsonl(t, buf)
    assert buf.getvalue() == '{"z":1,"a":2}\n'


def test_write_jsonl_accepts_plain_iterables():
    buf = io.StringIO()
    write_jsonl(({"n": i} for i in range(3)), buf)
    assert buf.getvalue().count("\n") == 3


def test_jsonl_rejects_out_of_model_values():
    with pytest.raises(ValueError_):
        _round_trip(Table(rows=[{"a": float("nan")}]))
    with pytest.raises(ValueError_):
        _round_trip(Table(rows=[{"a": {"nested": 1}}]))
    with pytest.raises(ValueError_):
        read_jsonl(io.StringIO('{"a": [1, 2]}\n'))
    with pytest.raises(ValueError_):
        read_jsonl(io.StringIO("[1, 2]\n"))


def test_read_jsonl_skips_blank_lines():
    t = read_jsonl(io.StringIO('{"a":1}\n\n{"a":2}\n'))
    assert [r["a"] for r in t.rows] == [1, 2]


def test_iter_jsonl_streams_records():
    recs = list(iter_jsonl(io.StringIO('{"a":null}\n{"b":true}\n')))
    assert recs[0]["a"] is NULL
    assert recs[1]["b"] is True


_scalars = st.one_of(
    st.just(NULL),
    st.integers(min_value=-(2**53), max_value=2**53),
    st.floats(allow_nan=False, allow_infinity=False),
    st.text(max_size=12),
    st.booleans(),
)


@settings(deadline=None)
@given(
    st.lists(
        st.dictionaries(
            st.text(st.characters(min_codepoint=97, max_codepoint=122), min_size=1, max_size=4),
            _scalars,
            max_size=5,
        ),
        max_size=8,
    )
)
def test_jsonl_round_trip_property(rows):
    back = _round_trip(Table(rows=rows))
    assert back.rows == rows


@settings(deadline=None)
@given(st.lists(_scalars | st.just(MISSING), min_size=2, max_size=12))
def test_total_order_key_sorting_is_stable_and_consistent(vals):
    ordered = sorted(vals, key=total_order_key)
    for a, b in zip(ordered, ordered[1:]):
        assert total_order_cmp(a, b) <= 0
