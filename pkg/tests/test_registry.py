import pytest
from hypothesis import given, strategies as st

from occlink import codec
from occlink.errors import InvalidPayload, LoadError, NotFound
from occlink.registry import Registry, load_registry, parse_registry, resolve


@pytest.fixture
def reg_file(tmp_path):
    path = tmp_path / "reg.tsv"
    path.write_text("B6\thttps://example.org/demo\n")
    return path


def test_load_fixture(reg_file):
    reg = load_registry(reg_file)
    assert reg.entries == {0xB6: "https://example.org/demo"}
    assert reg.source == str(reg_file)


def test_resolve(reg_file):
    reg = load_registry(reg_file)
    assert resolve(reg, 0xB6) == "https://example.org/demo"
    with pytest.raises(NotFound):
        resolve(reg, 0xF3)
    with pytest.raises(InvalidPayload):
        resolve(reg, 0x41)


def test_comments_and_blanks_skipped():
    reg = parse_registry("# header\n\n   \nB6\thttps://a\n# FF\tnope\nff\thttps://b\n")
    assert reg.entries == {0xB6: "https://a", 0xFF: "https://b"}


@pytest.mark.parametrize(
    "text, line",
    [
        ("B6\thttps://a\n\n41\thttps://b\n", 3),  # 01000001 holds a run of five zeros
        ("B6\thttps://a\nB6\thttps://b\n", 2),
        ("# c\nB6 https://a\n", 2),
        ("ZZ\thttps://a\n", 1),
        ("B6\t\n", 1),
        ("B6\thttps://a\textra\n", 1),
        ("1B6\thttps://a\n", 1),
    ],
)
def test_load_errors_report_line(text, line):
    with pytest.raises(LoadError) as info:
        parse_registry(text)
    assert info.value.line == line
    assert str(info.value).startswith(f"line {line}:")


@given(st.dictionaries(st.sampled_from(codec.build_symbol_table()), st.from_regex(r"https://[a-z]{1,10}\.org/[a-z0-9]{0,8}", fullmatch=True), max_size=20))
def test_round_trip(entries):
    reg = Registry(entries)
    again = parse_registry(reg.to_tsv())
    assert dict(again.entries) == entries


def test_save_and_reload(tmp_path):
    reg = Registry({0xFF: "https://x.org", 0x24: "https://y.org"})
    reg.save(tmp_path / "r.tsv")
    assert load_registry(tmp_path / "r.tsv").entries == reg.entries
