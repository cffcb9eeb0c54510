import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from macpp.errors import OutOfWindow, ParseError, UnknownTaxon
from macpp.geometry import ConvexPolygon, unit_square
from macpp.patterns import MultitypePattern, count, read_pattern_csv, write_pattern_csv


def write(tmp_path, text, name="p.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_count_basics():
    empty = MultitypePattern.from_groups(unit_square(), {"A": []})
    assert count(empty, "A") == 0
    p = MultitypePattern.from_groups(unit_square(), {"A": [(0.1, 0.1), (0.2, 0.2), (0.3, 0.3)], "B": [(0.5, 0.5)]})
    assert count(p, "A") == 3
    assert sum(p.counts().values()) == len(p)
    assert [t.index for t in p.taxon_ids] == [1, 2]
    with pytest.raises(UnknownTaxon):
        count(p, "Z")


def test_quadrant_fixture_count(tmp_path):
    # an abundance-table shaped fixture: 163 points of one taxon
    rng = np.random.default_rng(1)
    lines = ["taxon,x,y"] + [f"Streptococcus,{x},{y}" for x, y in rng.uniform(size=(163, 2))]
    lines += [f"Porphyromonas,{x},{y}" for x, y in rng.uniform(size=(20, 2))]
    pat, _ = read_pattern_csv(write(tmp_path, "\n".join(lines) + "\n"), unit_square())
    assert count(pat, "Streptococcus") == 163


def test_read_valid_and_out_of_window(tmp_path):
    pat, dropped = read_pattern_csv(write(tmp_path, "taxon,x,y\nA,0.1,0.2\nB,0.5,0.5\nA,1,1\n"), unit_square())
    assert len(pat) == 3 and dropped == 0 and pat.taxa == ("A", "B")
    path = write(tmp_path, "taxon,x,y\nA,0.1,0.2\nA,1.5,0.5\nB,0.5,0.5\n")
    with pytest.raises(OutOfWindow) as exc:
        read_pattern_csv(path, unit_square())
    assert exc.value.rows == [3]
    pat, dropped = read_pattern_csv(path, unit_square(), clip=True)
    assert len(pat) == 2 and dropped == 1


@pytest.mark.parametrize("text,line", [
    ("x,y,taxon\nA,0.1,0.1\n", 1),
    ("taxon,x,y\nA,0.1\n", 2),
    ("taxon,x,y\nA,0.1,0.1\nB,abc,0.2\n", 3),
    ("taxon,x,y\n,0.1,0.1\n", 2),
    ("taxon,x,y\nA,nan,0.1\n", 2),
])
def test_parse_errors_carry_line(tmp_path, text, line):
    with pytest.raises(ParseError) as exc:
        read_pattern_csv(write(tmp_path, text), unit_square())
    assert exc.value.line == line
    assert f"line {line}" in str(exc.value)


def test_unknown_label_with_registry(tmp_path):
    with pytest.raises(UnknownTaxon):
        read_pattern_csv(write(tmp_path, "taxon,x,y\nX,0.1,0.1\n"), unit_square(), taxa=["A"])
    pat, _ = read_pattern_csv(write(tmp_path, "taxon,x,y\nB,0.1,0.1\n"), unit_square(), taxa=["A", "B"])
    assert pat.counts() == {"A": 0, "B": 1}


def test_empty_pattern_writes_header_only(tmp_path):
    p = MultitypePattern.from_groups(unit_square(), {"A": []})
    out = write_pattern_csv(p, tmp_path / "e.csv")
    assert out.read_text() == "taxon,x,y\n"


def test_polygon_window_not_in_csv(tmp_path):
    tri = ConvexPolygon([(0, 0), (1, 0), (0, 1)])
    p = MultitypePattern.from_groups(tri, {"A": [(0.2, 0.2)]})
    text = write_pattern_csv(p, tmp_path / "t.csv").read_text()
    assert text == "taxon,x,y\nA,0.2,0.2\n"
    back, _ = read_pattern_csv(tmp_path / "t.csv", tri)
    assert back == p


unit = st.floats(0, 1, allow_nan=False)


@settings(max_examples=100, deadline=None)
@given(st.dictionaries(st.sampled_from(["A", "B", "C"]), st.lists(st.tuples(unit, unit), max_size=20), min_size=1))
def test_round_trip_exact(tmp_path_factory, groups):
    p = MultitypePattern.from_groups(unit_square(), groups)
    path = write_pattern_csv(p, tmp_path_factory.mktemp("rt") / "p.csv")
    back, dropped = read_pattern_csv(path, unit_square(), taxa=p.taxa)
    assert dropped == 0
    assert back == p
    assert back.counts() == p.counts()


def test_pattern_rejects_outside_points():
    with pytest.raises(OutOfWindow):
        MultitypePattern.from_groups(unit_square(), {"A": [(2.0, 0.5)]})


def test_relabel_preserves_points():
    p = MultitypePattern.from_groups(unit_square(), {"A": [(0.1, 0.1)], "B": [(0.2, 0.2)]})
    q = p.relabel({"A": "Z"})
    assert q.taxa == ("Z", "B") and np.array_equal(q.points("Z"), p.points("A"))
