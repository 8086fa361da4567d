import numpy as np
import pytest
from hypothesis import given, settings

from oracles import all_candidates, naive_has_cycle, naive_is_uso, successors
from strategies import candidates, usos
from uso_lab.errors import CyclicityError, InputError, SizeError
from uso_lab.generate import gen_linear, random_candidate
from uso_lab.grid import GridOrientation, GridShape, Vertex, is_sink_of_face
from uso_lab.validate import (
    check_acyclic,
    count_identity,
    is_directed_cycle,
    require_acyclic,
    sink_counts_per_face,
    validate_rank_matrices,
    validate_uso,
    validate_uso_bruteforce,
)


@pytest.mark.parametrize("a,b,expected", [(2, 2, 12), (2, 3, 132), (3, 2, 132)])
def test_exhaustive_small_counts(a, b, expected):
    found = 0
    for o in all_candidates(GridShape(a, b)):
        truth = naive_is_uso(o)
        assert validate_uso(o).is_uso == truth
        assert validate_uso_bruteforce(o).is_uso == truth
        found += truth
    assert found == expected


def test_exhaustive_3x3_validators_agree():
    found = 0
    for o in all_candidates(GridShape(3, 3)):
        fast = validate_uso(o).is_uso
        assert fast == validate_uso_bruteforce(o).is_uso
        found += fast
    assert found == 5796


@given(candidates(max_a=6, max_b=6))
@settings(max_examples=300)
def test_random_candidates_agree(o):
    assert validate_uso(o).is_uso == validate_uso_bruteforce(o).is_uso


@given(usos(max_a=7, max_b=7))
@settings(max_examples=80)
def test_generated_usos_pass_both(o):
    assert validate_uso(o).is_uso
    assert validate_uso_bruteforce(o).is_uso


def test_counting_identity_holds_on_usos():
    for a, b in [(2, 2), (3, 5), (9, 4), (30, 31)]:
        o, _ = gen_linear(GridShape(a, b), 5)
        lhs, rhs = count_identity(o)
        assert lhs == rhs == ((1 << a) - 1) * ((1 << b) - 1)


def test_sink_counts_match_face_definition():
    o = random_candidate(GridShape(3, 3), np.random.default_rng(4))
    counts = sink_counts_per_face(o)
    from uso_lab.grid import Face

    for xm in range(1, 8):
        for ym in range(1, 8):
            f = Face([x for x in range(3) if xm >> x & 1], [y for y in range(3) if ym >> y & 1])
            assert counts[xm, ym] == sum(is_sink_of_face(o, v, f) for v in f.vertices())


class TestWitnesses:
    def test_double_sink_witness_is_real(self):
        rng = np.random.default_rng(11)
        seen = 0
        for _ in range(200):
            o = random_candidate(GridShape(4, 4), rng)
            rep = validate_uso(o)
            if rep.is_uso:
                continue
            w = rep.witness
            if w.kind == "double-sink":
                seen += 1
                assert len(w.sinks) == 2
                assert all(is_sink_of_face(o, v, w.face) for v in w.sinks)
        assert seen > 0

    def test_bruteforce_witness(self):
        o = GridOrientation(GridShape(2, 2), [[0, 1], [1, 0]], [[1, 0], [0, 1]])
        rep = validate_uso_bruteforce(o)
        assert not rep.is_uso
        assert rep.witness.kind in ("double-sink", "no-sink")
        n_sinks = sum(is_sink_of_face(o, v, rep.witness.face) for v in rep.witness.face.vertices())
        assert n_sinks != 1
        assert len(rep.witness.sinks) == n_sinks

    def test_report_records(self):
        o, _ = gen_linear(GridShape(3, 3), 1)
        rec = validate_uso(o).records()
        assert rec["is_uso"] is True and rec["witness"] == "none" and rec["method"] == "polynomial"


def test_bruteforce_size_guard():
    o, _ = gen_linear(GridShape(13, 2), 0)
    with pytest.raises(SizeError):
        validate_uso_bruteforce(o)


class TestRankMatrices:
    def test_valid(self):
        o = validate_rank_matrices(2, 2, [[0, 1], [1, 0]], [[0, 1], [1, 0]])
        assert o.shape == GridShape(2, 2)

    @pytest.mark.parametrize(
        "rows,cols,msg",
        [
            ([[0, 0], [0, 1]], [[0, 1], [0, 1]], "row 0 of row_rank"),
            ([[0, 1], [0, 1]], [[0, 1], [2, 1]], "column 1 of col_rank"),
            ([[0, 1]], [[0, 1], [0, 1]], "row_rank"),
        ],
    )
    def test_invalid(self, rows, cols, msg):
        with pytest.raises(InputError, match=msg):
            validate_rank_matrices(2, 2, rows, cols)


def find_cyclic_3x3():
    """A 3x3 candidate with a directed cycle, searched with a fixed seed."""
    rng = np.random.default_rng(0)
    while True:
        o = random_candidate(GridShape(3, 3), rng)
        if naive_has_cycle(o):
            return o


class TestAcyclicity:
    def test_linear_2x2(self):
        o, _ = gen_linear(GridShape(2, 2), 0)
        assert check_acyclic(o).acyclic

    def test_cyclic_rotor(self):
        o = find_cyclic_3x3()
        rep = check_acyclic(o)
        assert not rep.acyclic
        assert is_directed_cycle(o, rep.cycle)
        assert len(set(rep.cycle)) == len(rep.cycle)
        with pytest.raises(CyclicityError) as exc:
            require_acyclic(o)
        assert exc.value.cycle == rep.cycle

    def test_six_cycle_exists(self):
        # (0,0)->(1,0)->(1,1)->(2,1)->(2,2)->(0,2)->(0,0): each row and column is
        # a permutation (transitive), the cycle alternates between them
        rows = [[1, 0, 2], [0, 2, 1], [0, 1, 2]]
        cols = [[0, 1, 2], [1, 0, 2], [0, 2, 1]]
        o = GridOrientation(GridShape(3, 3), rows, cols)
        cyc = [Vertex(0, 0), Vertex(1, 0), Vertex(1, 1), Vertex(2, 1), Vertex(2, 2), Vertex(0, 2)]
        assert is_directed_cycle(o, cyc)
        assert not validate_uso(o).is_uso
        rep = check_acyclic(o)
        assert not rep.acyclic and is_directed_cycle(o, rep.cycle)

    def test_every_2x3_uso_acyclic(self):
        for o in all_candidates(GridShape(2, 3)):
            if validate_uso(o).is_uso:
                assert check_acyclic(o).acyclic

    @given(candidates(max_a=5, max_b=5))
    @settings(max_examples=200)
    def test_matches_dfs(self, o):
        assert check_acyclic(o).acyclic == (not naive_has_cycle(o))

    @given(usos())
    @settings(max_examples=50)
    def test_order_is_topological(self, o):
        order = require_acyclic(o)
        pos = {o.shape.vertex(v): k for k, v in enumerate(order)}
        assert len(pos) == o.shape.num_vertices
        for v in o.shape.vertices():
            for u in successors(o, v):
                assert pos[u] < pos[v]

    def test_not_a_cycle(self):
        o, _ = gen_linear(GridShape(3, 3), 0)
        assert not is_directed_cycle(o, [Vertex(0, 0)])
        assert not is_directed_cycle(o, [Vertex(0, 0), Vertex(1, 1)])
