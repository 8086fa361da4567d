from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import all_candidates
from strategies import shapes, usos
from uso_lab.errors import InputError, ParseError, SamplingError, SizeError
from uso_lab.generate import (
    GenConfig,
    LinearPotential,
    dumps,
    flip_chain_states,
    gen_flip_chain,
    gen_linear,
    gen_rejection,
    generate,
    load,
    loads,
    orientation_from_potential,
    random_candidate,
    save,
)
from uso_lab.grid import GridOrientation, GridShape, Vertex
from uso_lab.validate import validate_uso


class TestLinear:
    def test_2x2_example(self):
        o = orientation_from_potential(GridShape(2, 2), LinearPotential((0.0, 1.0), (0.0, 2.0)))
        assert o.sink == Vertex(0, 0)
        assert o.row_rank.tolist() == [[0, 1], [0, 1]]
        assert validate_uso(o).is_uso

    def test_potential_direction(self):
        pot = LinearPotential((0.3, 0.1, 0.7), (0.5, 0.0))
        o = orientation_from_potential(GridShape(3, 2), pot)
        for y in range(2):
            for x in range(3):
                for x2 in range(3):
                    if x != x2:
                        assert (o.rows[y][x] < o.rows[y][x2]) == (pot.value(x, y) < pot.value(x2, y))

    def test_non_generic_rejected(self):
        with pytest.raises(InputError):
            orientation_from_potential(GridShape(2, 2), LinearPotential((0.0, 1.0), (0.0, 1.0)))

    def test_length_mismatch(self):
        with pytest.raises(InputError):
            orientation_from_potential(GridShape(3, 2), LinearPotential((0.0, 1.0), (0.0, 0.5)))

    @given(shapes(20, 20), st.integers(0, 2**63))
    @settings(max_examples=60)
    def test_always_uso(self, shape, seed):
        o, pot = gen_linear(shape, seed)
        assert pot.is_generic()
        assert validate_uso(o).is_uso

    def test_deterministic(self):
        assert gen_linear(GridShape(7, 5), 3) == gen_linear(GridShape(7, 5), 3)

    def test_bad_seed(self):
        with pytest.raises(InputError):
            gen_linear(GridShape(2, 2), -1)


class TestRejection:
    def test_candidates_are_permutations(self):
        o = random_candidate(GridShape(4, 3), np.random.default_rng(0))
        assert all(sorted(r) == [0, 1, 2, 3] for r in o.rows)
        assert all(sorted(c) == [0, 1, 2] for c in o.cols)

    def test_2x2_acceptance_matches_enumeration(self):
        usos_2x2 = sum(validate_uso(o).is_uso for o in all_candidates(GridShape(2, 2)))
        rng = np.random.default_rng(1)
        trials = 20000
        hits = sum(validate_uso(random_candidate(GridShape(2, 2), rng)).is_uso for _ in range(trials))
        p = usos_2x2 / 16
        assert abs(hits / trials - p) < 4 * (p * (1 - p) / trials) ** 0.5

    def test_uniform_on_2x2(self):
        draws = Counter(gen_rejection(GridShape(2, 2), s).key() for s in range(2400))
        assert len(draws) == 12
        # each USO has probability 1/12: 200 expected, sd about 13.8
        assert all(140 < c < 260 for c in draws.values())

    def test_valid_and_deterministic(self):
        o = gen_rejection(GridShape(4, 4), 9)
        assert validate_uso(o).is_uso
        assert o == gen_rejection(GridShape(4, 4), 9)

    def test_size_guard(self):
        with pytest.raises(SizeError):
            gen_rejection(GridShape(6, 2), 0)
        assert validate_uso(gen_rejection(GridShape(6, 2), 0, limit=6)).is_uso

    def test_budget_exhausted(self):
        with pytest.raises(SamplingError) as exc:
            gen_rejection(GridShape(5, 5), 0, max_tries=10)
        assert exc.value.attempts == 10


class TestFlip:
    @given(usos(max_a=6, max_b=6, max_steps=50))
    @settings(max_examples=30)
    def test_states_stay_usos(self, start):
        for s in flip_chain_states(start, 30, 1):
            assert validate_uso(s).is_uso

    def test_zero_steps(self):
        start, _ = gen_linear(GridShape(4, 4), 0)
        assert gen_flip_chain(start, 0, 5) == start

    def test_rejects_non_uso_start(self):
        bad = GridOrientation(GridShape(2, 2), [[0, 1], [1, 0]], [[1, 0], [0, 1]])
        assert not validate_uso(bad).is_uso
        with pytest.raises(InputError):
            gen_flip_chain(bad, 10, 0)

    def test_stationary_uniform_2x2(self):
        start, _ = gen_linear(GridShape(2, 2), 0)
        visits = Counter(s.key() for s in flip_chain_states(start, 60000, 3))
        assert len(visits) == 12
        freqs = np.array(list(visits.values())) / 60000
        assert np.all(np.abs(freqs - 1 / 12) < 0.02)

    def test_leaves_linear_class(self):
        # a long chain on 4x4 visits orientations that are not row-separable
        start, _ = gen_linear(GridShape(4, 4), 0)
        o = gen_flip_chain(start, 2000, 11)
        assert o != start and validate_uso(o).is_uso


def test_generate_dispatch():
    s = GridShape(3, 4)
    for kind in ("linear", "rejection", "flip"):
        o = generate(s, GenConfig(kind=kind, seed=2, steps=50))
        assert o.shape == s and validate_uso(o).is_uso
    with pytest.raises(InputError):
        GenConfig(kind="magic")


class TestFormat:
    @given(usos(max_a=6, max_b=6, max_steps=20))
    @settings(max_examples=30)
    def test_roundtrip(self, o):
        assert loads(dumps(o, comment="hello\nworld")) == o

    def test_layout(self):
        o = orientation_from_potential(GridShape(2, 3), LinearPotential((0.0, 1.0), (0.0, 2.0, 4.0)))
        lines = dumps(o).splitlines()
        assert lines[0] == "2 3"
        assert len(lines) == 1 + 3 + 2
        assert lines[1:4] == ["0 1"] * 3

    def test_file_roundtrip(self, tmp_path):
        o, _ = gen_linear(GridShape(5, 3), 1)
        save(o, tmp_path / "o.uso")
        assert load(tmp_path / "o.uso") == o

    @pytest.mark.parametrize(
        "text,match",
        [
            ("", "empty"),
            ("2\n", "header"),
            ("1 2\n0\n0\n0 1\n", "at least 2"),
            ("2 2\n0 1\n1 0\n0 1\n", "missing col_rank row 1"),
            ("2 2\n0 1\n", "missing row_rank row 1"),
            ("2 2\n0 1\n1 0\n0 1\n1 0\n5 5\n", "trailing"),
            ("2 2\n0 1 2\n1 0\n0 1\n1 0\n", "3 entries"),
            ("2 2\n0 x\n1 0\n0 1\n1 0\n", "non-integer"),
            ("2 2\n0 0\n1 0\n0 1\n1 0\n", "not a permutation"),
        ],
    )
    def test_parse_errors(self, text, match):
        with pytest.raises(ParseError, match=match):
            loads(text)

    def test_parse_error_line(self):
        with pytest.raises(ParseError) as exc:
            loads("# c\n2 2\n0 1 2\n1 0\n0 1\n1 0\n")
        assert exc.value.line == 3
