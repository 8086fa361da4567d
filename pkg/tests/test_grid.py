import numpy as np
import pytest
from hypothesis import given, settings

from oracles import naive_outmap, successors
from strategies import candidates, shapes
from uso_lab.errors import InputError
from uso_lab.grid import (
    Face,
    GridOrientation,
    GridShape,
    Vertex,
    facet_id,
    is_adjacent,
    is_sink_of_face,
    out_neighbors,
    outmap,
    refined_out_degree,
)

# the 2x2 orientation used throughout: sink (0,0), source (1,1)
ROWS_2x2 = [[0, 1], [0, 1]]
COLS_2x2 = [[0, 1], [0, 1]]


def two_by_two():
    return GridOrientation(GridShape(2, 2), ROWS_2x2, COLS_2x2)


class TestShape:
    def test_counts(self):
        s = GridShape(3, 5)
        assert (s.n, s.d, s.num_vertices, s.num_faces) == (8, 6, 15, 7 * 31)

    @pytest.mark.parametrize("a,b", [(1, 4), (4, 1), (0, 0), (-2, 3)])
    def test_too_small(self, a, b):
        with pytest.raises(InputError):
            GridShape(a, b)

    def test_parse(self):
        assert GridShape.parse("8x3") == GridShape(8, 3)
        assert str(GridShape(8, 3)) == "8x3"
        for bad in ("8", "8x", "axb", "1x4"):
            with pytest.raises(InputError):
                GridShape.parse(bad)

    @given(shapes())
    def test_index_roundtrip(self, s):
        vs = s.vertices()
        assert len(vs) == s.num_vertices
        assert [s.index(v) for v in vs] == list(range(s.num_vertices))
        assert all(s.vertex(s.index(v)) == v for v in vs)


class TestOrientation:
    def test_immutable(self):
        o = two_by_two()
        with pytest.raises(AttributeError):
            o.row_rank = None
        with pytest.raises(ValueError):
            o.row_rank[0, 0] = 1

    def test_equality_and_hash(self):
        assert two_by_two() == two_by_two()
        assert hash(two_by_two()) == hash(two_by_two())
        other = GridOrientation(GridShape(2, 2), [[1, 0], [0, 1]], COLS_2x2)
        assert other != two_by_two()

    def test_shape_mismatch(self):
        with pytest.raises(InputError):
            GridOrientation(GridShape(2, 3), ROWS_2x2, COLS_2x2)

    def test_small_example(self):
        o = two_by_two()
        assert o.sinks == [Vertex(0, 0)]
        assert outmap(o, Vertex(1, 1)).phi_x == {0}
        assert outmap(o, Vertex(1, 1)).phi_y == {0}
        assert refined_out_degree(o, Vertex(1, 1)) == (1, 1)
        assert refined_out_degree(o, Vertex(0, 0)) == (0, 0)

    @given(candidates())
    @settings(max_examples=60)
    def test_outmap_matches_edge_directions(self, o):
        for v in o.shape.vertices():
            phi = outmap(o, v)
            px, py = naive_outmap(o, v)
            assert (set(phi.phi_x), set(phi.phi_y)) == (px, py)
            assert len(phi) == len(successors(o, v))
            assert refined_out_degree(o, v) == (len(px), len(py))

    @given(candidates())
    @settings(max_examples=60)
    def test_out_neighbors(self, o):
        for v in o.shape.vertices():
            got = out_neighbors(o, v)
            assert sorted(t for _, t in got) == sorted(successors(o, v))
            sides = [p[0] for p, _ in got]
            assert sides == sorted(sides)  # X before Y
            for (side, k), t in got:
                assert t == (Vertex(k, v.y) if side == "X" else Vertex(v.x, k))

    @given(candidates())
    @settings(max_examples=40)
    def test_degree_pairs_array(self, o):
        dp = o.degree_pairs()
        for v in o.shape.vertices():
            assert tuple(dp[v.y, v.x]) == refined_out_degree(o, v)


class TestFaces:
    def test_sink_of_face(self):
        o = two_by_two()
        f = Face([1], [0, 1])
        assert is_sink_of_face(o, Vertex(1, 0), f)
        assert not is_sink_of_face(o, Vertex(1, 1), f)
        with pytest.raises(InputError):
            is_sink_of_face(o, Vertex(0, 0), f)

    def test_empty_face(self):
        with pytest.raises(InputError):
            Face([], [0])

    def test_full_face(self):
        f = Face.full(GridShape(3, 2))
        assert len(f.vertices()) == 6
        assert Vertex(2, 1) in f


def test_adjacency():
    assert is_adjacent(Vertex(0, 0), Vertex(0, 3))
    assert is_adjacent(Vertex(0, 0), Vertex(2, 0))
    assert not is_adjacent(Vertex(0, 0), Vertex(1, 1))
    assert not is_adjacent(Vertex(1, 1), Vertex(1, 1))


def test_facet_ids():
    s = GridShape(3, 4)
    assert [facet_id(s, "X", x) for x in range(3)] == [0, 1, 2]
    assert [facet_id(s, "Y", y) for y in range(4)] == [3, 4, 5, 6]


def test_rank_arrays_are_int64():
    o = two_by_two()
    assert o.row_rank.dtype == np.int64
