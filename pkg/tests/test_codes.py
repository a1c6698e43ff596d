import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from chainapprox.codes import (
    CodeTooLarge,
    grid_encode,
    grid_entries_for_table,
    grid_entry,
    grid_side,
    iter_cube,
    list_decode,
    list_encode,
    list_entry,
    list_set,
    nu,
    pair,
    rat_pos,
    rat_pos_encode,
    srat_decode,
    srat_encode,
    tau1,
    unpair,
)


def test_pair_golden():
    assert pair(0, 0) == 0
    assert pair(1, 1) == 4
    assert unpair(5) == (0, 2)
    # enumeration order of the first six codes
    assert [unpair(i) for i in range(6)] == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]


@given(st.integers(0, 10**9), st.integers(0, 10**9))
def test_pair_roundtrip(a, b):
    assert unpair(pair(a, b)) == (a, b)


@given(st.integers(0, 10**12))
def test_unpair_roundtrip(i):
    a, b = unpair(i)
    assert pair(a, b) == i


def test_pair_roundtrip_bulk():
    rng = random.Random(1)
    for _ in range(10**4):
        a, b = rng.randrange(2**40), rng.randrange(2**40)
        assert unpair(pair(a, b)) == (a, b)
    for _ in range(10**4):
        i = rng.randrange(2**40)
        assert pair(*unpair(i)) == i


def test_rat_pos_golden_positions():
    assert rat_pos(0) == 1
    assert rat_pos(1) == 2
    assert rat_pos(2) == Fraction(1, 2)
    first20 = [rat_pos(i) for i in range(20)]
    assert first20.index(Fraction(1)) == 0
    assert first20.index(Fraction(2)) == 1
    assert first20.index(Fraction(1, 2)) == 2
    assert first20.index(Fraction(3)) == 3
    assert first20.index(Fraction(1, 3)) == 5


@given(st.fractions(min_value=Fraction(1, 10**6), max_value=Fraction(10**6)))
def test_rat_pos_surjective(q):
    assert rat_pos(rat_pos_encode(q)) == q


@given(st.fractions(min_value=Fraction(-(10**6)), max_value=Fraction(10**6)))
def test_srat_roundtrip(q):
    assert srat_decode(srat_encode(q)) == q


def test_list_golden():
    assert list_encode([5]) == pair(0, 5)
    assert list_decode(list_encode([1, 2, 3])) == [1, 2, 3]
    assert list_set(list_encode([2, 2, 7])) == {2, 7}


def test_list_rejects_empty():
    with pytest.raises(ValueError):
        list_encode([])


def test_list_entry_out_of_range_defaults_to_first():
    j = list_encode([9, 4])
    assert list_entry(j, 0) == 9
    assert list_entry(j, 1) == 4
    assert list_entry(j, 5) == 9


@given(st.lists(st.integers(0, 10**6), min_size=1, max_size=12))
def test_list_roundtrip(seq):
    assert list_decode(list_encode(seq)) == seq


def test_list_cap():
    with pytest.raises(CodeTooLarge):
        list_encode(list(range(40)))
    # explicit override works for moderately longer lists
    seq = list(range(18))
    assert list_decode(list_encode(seq, cap=None)) == seq


def test_grid_golden():
    x = list_encode([7])
    assert grid_side(pair(x, 3)) == 3
    table = {v: 5 for v in iter_cube(1, 2)}
    code = grid_encode(table, 1)
    assert grid_entry(code, 2, (0, 0)) == 5
    assert grid_entry(code, 2, (1, 1)) == 5
    # full 2x2 table read-back
    table = {(0, 0): 1, (1, 0): 2, (0, 1): 3, (1, 1): 4}
    code = grid_encode(table, 1)
    for v, e in table.items():
        assert grid_entry(code, 2, v) == e


def test_grid_rejects_out_of_cube():
    code = grid_encode({(0,): 1, (1,): 2}, 1)
    with pytest.raises(ValueError):
        grid_entry(code, 1, (2,))


def test_grid_roundtrips_random_tables():
    rng = random.Random(7)
    for _ in range(40):
        n = rng.choice([1, 2, 3])
        side = rng.randrange(0, 7) if n == 1 else rng.randrange(0, 4 if n == 2 else 3)
        table = {v: rng.randrange(100) for v in iter_cube(side, n)}
        entries = grid_entries_for_table(table, side)
        # entries-level round trip holds at every size
        for v, e in table.items():
            assert entries[nu(v)] == e
        if len(entries) <= 16:
            code = grid_encode(table, side)
            assert grid_side(code) == side
            for v, e in table.items():
                assert grid_entry(code, n, v) == e
            assert tau1(code) == list_encode(entries)
