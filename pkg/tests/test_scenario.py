import pytest
from hypothesis import given, settings, strategies as st

from conftest import grid
from wayfinding.benchmark import benchmark_text
from wayfinding.scenario import (
    GridGeometry,
    Marker,
    MarkerKind,
    Scenario,
    ScenarioSyntaxError,
    parse_scenario,
    serialize_scenario,
    validate_scenario,
)


def test_minimal_three_cell_grid():
    s = parse_scenario("[grid]\nS.1\n")
    assert s.geometry.width == 3 and s.geometry.height == 1
    assert s.start_areas["S"].cells == {(0, 0)}
    assert list(s.destinations) == ["1"]
    assert s.destinations["1"].cells == {(2, 0)}
    assert s.walkable.all()
    assert validate_scenario(s) == []


def test_wall_without_opening_parses_but_fails_validation():
    s = grid(
        """
        #####
        #S..#
        #####
        #..1#
        #####
        """
    )
    assert len(s.destinations) == 1
    problems = validate_scenario(s)
    assert any("unreachable destination" in p for p in problems)


def test_benchmark_marker_counts(benchmark_scenario):
    s = benchmark_scenario
    assert len(s.start_areas) == 1
    assert len(s.destinations) == 1
    assert len(s.openings) == 7
    sizes = sorted(len(m.cells) for m in s.openings.values())
    assert sizes == [2, 2, 2, 2, 2, 2, 6]
    assert s.start_areas["S"].attributes["inflow"] == 4.0
    assert validate_scenario(s) == []


def test_opening_obstacle_overlap_reported():
    base = grid(
        """
        #####
        #S..#
        ##a##
        #..1#
        #####
        """
    )
    opening = base.openings["a"]
    clash = Marker(MarkerKind.OPENING, "a", opening.cells | {(0, 2)})
    markers = tuple(m for m in base.markers if m.id != "a") + (clash,)
    s = Scenario(base.geometry, markers)
    assert any("opening/obstacle overlap" in p for p in validate_scenario(s))


def test_start_opening_overlap_rejected():
    base = grid(
        """
        #####
        #S..#
        ##a##
        #..1#
        #####
        """
    )
    start = Marker(MarkerKind.START, "S", frozenset({(1, 1), (2, 2)}))
    markers = tuple(m for m in base.markers if m.kind is not MarkerKind.START) + (start,)
    assert any("start/opening overlap" in p for p in validate_scenario(Scenario(base.geometry, markers)))


def test_disconnected_opening_reported():
    s = grid(
        """
        #######
        #S....#
        ##a#a##
        #....1#
        #######
        """
    )
    assert any("not edge-connected" in p for p in validate_scenario(s))


def test_missing_markers_reported():
    s = parse_scenario("[grid]\n...\n")
    problems = validate_scenario(s)
    assert "missing start area" in problems
    assert "missing final destination" in problems


@pytest.mark.parametrize(
    "text, line, column",
    [
        ("[grid]\nS.1\nS.\n", 3, 3),
        ("[grid]\nS?1\n", 2, 2),
        ("[grid]\nS.1\n[legend]\nS.colour = red\n", 4, 1),
        ("[grid]\nS.1\n[legend]\nnonsense\n", 4, 1),
        ("[grid]\nS.1\n[legend]\nS.inflow = lots\n", 4, 1),
    ],
)
def test_syntax_errors_carry_position(text, line, column):
    with pytest.raises(ScenarioSyntaxError) as exc:
        parse_scenario(text)
    assert exc.value.line == line
    assert exc.value.column == column


def test_empty_grid_is_an_error():
    with pytest.raises(ScenarioSyntaxError, match="empty grid"):
        parse_scenario("[grid]\n\n[legend]\n")


def test_duplicate_destination_id():
    with pytest.raises(ScenarioSyntaxError, match="duplicate destination id"):
        parse_scenario("[grid]\nS.1X\n[legend]\nX = destination:1\n")


def test_unknown_legend_kind():
    with pytest.raises(ScenarioSyntaxError, match="unknown marker kind"):
        parse_scenario("[grid]\nS.1*\n[legend]\n* = lava\n")


def test_legend_bindings_and_attributes():
    s = parse_scenario(
        "[grid]\nS*T.1\n[legend]\n# comment\n* = obstacle\nT = start:north   # second entrance\n"
        "T.inflow = 1.5\nT.speed = 1.0\nS.destination = 1\n"
    )
    assert not s.walkable[0, 1]
    assert s.start_areas["north"].cells == {(2, 0)}
    assert s.start_areas["north"].attributes == {"inflow": 1.5, "speed": 1.0}
    assert s.start_areas["S"].attributes == {"destination": "1"}


def test_region_type_markers_are_walkable_labels():
    s = grid(
        """
        #######
        #SRR.1#
        #######
        """,
        "R.label = stairs\n",
    )
    region = s.of_kind(MarkerKind.REGION)["R"]
    assert region.attributes["label"] == "stairs"
    assert s.walkable[1, 2] and s.walkable[1, 3]


def test_geometry_invariants():
    with pytest.raises(ValueError):
        GridGeometry(0, 3)
    with pytest.raises(ValueError):
        GridGeometry(3, 3, cell_size=0.5)


def test_benchmark_round_trip(benchmark_scenario):
    again = parse_scenario(serialize_scenario(benchmark_scenario))
    assert again == benchmark_scenario
    assert parse_scenario(serialize_scenario(again)) == again


def test_round_trip_with_custom_ids():
    s = parse_scenario(
        "[grid]\nS#T.1X\n[legend]\nT = start:north\nX = destination:exit\nT.inflow = 0.25\n"
    )
    assert parse_scenario(serialize_scenario(s)) == s


_cells = st.sampled_from(list("..........##Sa12R"))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 8), st.integers(1, 8), st.data())
def test_round_trip_property(w, h, data):
    rows = ["".join(data.draw(st.lists(_cells, min_size=w, max_size=w))) for _ in range(h)]
    s = parse_scenario("[grid]\n" + "\n".join(rows) + "\n")
    assert parse_scenario(serialize_scenario(s)) == s


def test_generated_benchmark_text_validates():
    assert validate_scenario(parse_scenario(benchmark_text())) == []
