import re

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fairhub.dictionary import (
    DATATYPES,
    HEADER,
    DataDictionary,
    EnumerationEntry,
    VariableSpec,
    parse_dictionary,
    parse_enumeration,
    serialize_dictionary,
    serialize_enumeration,
    validate_dictionary,
)

HEADER_LINE = ",".join(HEADER)


def parse(text: str):
    return parse_dictionary(text.encode("utf-8"))


def codes(issues):
    return [i.code for i in issues]


def test_single_row_with_bounds():
    d, issues = parse(HEADER_LINE + "\nnih_age,Age in years,integer,years,,TRUE,,0,120\n")
    assert issues == []
    assert len(d.variables) == 1
    v = d.variables[0]
    assert v.id == "nih_age" and v.datatype == "integer" and v.required
    assert (v.min, v.max) == (0, 120)
    assert v.units == "years"


def test_duplicate_id_reported_at_second_row():
    d, issues = parse(
        HEADER_LINE + "\nsex,Sex,string,,,,,,\nsex,Sex again,string,,,,,,\n"
    )
    assert d is None
    assert codes(issues) == ["DICT_DUP_ID"]
    assert issues[0].row == 3


def test_enumeration_cell_grammar():
    d, issues = parse(HEADER_LINE + '\nyn,Yes or no,enum,,"1=""Yes""; 2=""No""",,,,\n')
    assert issues == []
    assert d.variables[0].enumeration == (
        EnumerationEntry("1", "Yes"),
        EnumerationEntry("2", "No"),
    )


def test_enumeration_label_with_escaped_quote_and_semicolon():
    entries = parse_enumeration('1="say ""hi""; ok"; 2="x"')
    assert entries == [EnumerationEntry("1", 'say "hi"; ok'), EnumerationEntry("2", "x")]
    assert parse_enumeration(serialize_enumeration(tuple(entries))) == entries


@pytest.mark.parametrize(
    "cell",
    ["1=Yes", '1="unterminated', '="x"', '1="a" 2="b"', '1="a";', '1="";'],
)
def test_bad_enumeration_syntax(cell):
    quoted = '"' + cell.replace('"', '""') + '"'
    d, issues = parse(HEADER_LINE + f"\ne,E,enum,,{quoted},,,,\n")
    assert d is None
    assert "DICT_BAD_ENUM_SYNTAX" in codes(issues)


def test_header_mismatch():
    d, issues = parse("Id,Label\nx,y\n")
    assert d is None
    assert codes(issues) == ["DICT_BAD_HEADER"]


@pytest.mark.parametrize(
    "row,expected",
    [
        ("x,X,floaty,,,,,,", "DICT_BAD_DATATYPE"),
        ("x,X,enum,,,,,,", "DICT_ENUM_REQUIRED"),
        ('x,X,integer,,"1=""a""",,,,', "DICT_UNEXPECTED_ENUM"),
        ("x,X,integer,,,,,5,2", "DICT_BAD_BOUNDS"),
        ("x,X,string,,,,,1,2", "DICT_BAD_BOUNDS"),
        ("x,X,integer,,,,,abc,", "DICT_BAD_BOUNDS"),
        ("x,X,integer,,,maybe,,,", "DICT_BAD_REQUIRED"),
        ("x,X,string,,,,[,,", "DICT_BAD_PATTERN"),
        ("9bad,X,string,,,,,,", "DICT_BAD_ID"),
        (",X,string,,,,,,", "DICT_BAD_ID"),
    ],
)
def test_single_defect_codes(row, expected):
    d, issues = parse(HEADER_LINE + "\n" + row + "\n")
    assert d is None
    assert expected in codes(issues)


def test_multiple_defects_all_reported():
    text = HEADER_LINE + "\n" + "a,A,floaty,,,,,,\n" + "b,B,integer,,,,,9,1\n" + "a,A2,string,,,,,,\n"
    d, issues = parse(text)
    assert d is None
    assert codes(issues) == ["DICT_BAD_DATATYPE", "DICT_BAD_BOUNDS", "DICT_DUP_ID"]
    assert [i.row for i in issues] == [2, 3, 4]


def test_crlf_and_bom_accepted():
    raw = ("﻿" + HEADER_LINE + "\r\nx,X,string,,,,,,\r\n").encode("utf-8")
    d, issues = parse_dictionary(raw)
    assert issues == [] and d.ids() == ["x"]


def test_empty_and_headerless():
    assert parse("")[1][0].code == "DICT_BAD_HEADER"
    assert parse(HEADER_LINE + "\n")[1][0].code == "DICT_EMPTY"


def test_validate_dictionary_identity_and_defects():
    good = DataDictionary(
        variables=(VariableSpec("a", "A", "string"),),
    )
    assert validate_dictionary(good) == []

    bad = DataDictionary(
        variables=(
            VariableSpec("e", "E", "enum", enumeration=()),
            VariableSpec("b", "B", "integer", min=5, max=2),
        ),
    )
    issues = validate_dictionary(bad)
    assert codes(issues) == ["DICT_ENUM_REQUIRED", "DICT_BAD_BOUNDS"]
    assert [i.row for i in issues] == [2, 3]


def test_determinism_same_bytes_same_issues():
    text = HEADER_LINE + "\n" + "a,A,floaty,,,,,,\n" + "a,A,integer,,,,,9,1\n"
    r1 = parse(text)[1]
    r2 = parse(text)[1]
    assert r1 == r2


def test_injected_defect_completeness():
    """k independently injected defects yield exactly k issues, right codes."""
    import random

    defect_rows = {
        "DICT_BAD_DATATYPE": "bad{i},Bad,floaty,,,,,,",
        "DICT_BAD_BOUNDS": "bad{i},Bad,integer,,,,,9,1",
        "DICT_ENUM_REQUIRED": "bad{i},Bad,enum,,,,,,",
        "DICT_BAD_REQUIRED": "bad{i},Bad,string,,,maybe,,,",
        "DICT_BAD_PATTERN": 'bad{i},Bad,string,,,,"[",,',
        "DICT_BAD_ID": "9bad{i},Bad,string,,,,,,",
    }
    rng = random.Random(4711)
    for trial in range(40):
        k = rng.randint(0, 6)
        chosen = rng.sample(sorted(defect_rows), k)
        rows = [f"good{i},Good,string,,,,,," for i in range(3)]
        expected = []
        for i, code in enumerate(chosen):
            rows.append(defect_rows[code].format(i=i))
            expected.append(code)
        rng.shuffle(rows)
        d, issues = parse(HEADER_LINE + "\n" + "\n".join(rows) + "\n")
        assert sorted(codes(issues)) == sorted(expected), f"trial {trial}"
        assert (d is None) == bool(expected)


# --- round-trip property --------------------------------------------------

_ids = st.from_regex(r"[A-Za-z_][A-Za-z0-9_]{0,10}", fullmatch=True)
_labels = st.text(
    alphabet=st.characters(blacklist_categories=("Cs", "Cc")), min_size=1, max_size=20
).map(lambda s: s.strip()).filter(lambda s: s)
_codes = st.from_regex(r"[A-Za-z0-9_.+-]{1,6}", fullmatch=True)


@st.composite
def variable_specs(draw, var_id):
    datatype = draw(st.sampled_from(sorted(DATATYPES)))
    enumeration = ()
    if datatype == "enum":
        codes_ = draw(st.lists(_codes, min_size=1, max_size=5, unique=True))
        enumeration = tuple(EnumerationEntry(c, draw(_labels)) for c in codes_)
    min_v = max_v = None
    if datatype in ("integer", "decimal") and draw(st.booleans()):
        lo = draw(st.integers(-1000, 1000))
        hi = draw(st.integers(lo, 1001))
        min_v, max_v = float(lo), float(hi)
    pattern = r"[A-Z]\d+" if draw(st.booleans()) else None
    return VariableSpec(
        id=var_id,
        label=draw(_labels),
        datatype=datatype,
        units=draw(st.one_of(st.none(), _labels)),
        enumeration=enumeration,
        required=draw(st.booleans()),
        pattern=pattern,
        min=min_v,
        max=max_v,
    )


@st.composite
def dictionaries(draw):
    ids = draw(st.lists(_ids, min_size=1, max_size=6, unique=True))
    return DataDictionary(variables=tuple(draw(variable_specs(i)) for i in ids))


@settings(max_examples=150, deadline=None)
@given(dictionaries())
def test_round_trip(d):
    assert validate_dictionary(d) == []
    parsed, issues = parse_dictionary(serialize_dictionary(d), source_name=d.source_name)
    assert issues == []
    assert parsed == d
