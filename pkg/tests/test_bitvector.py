import numpy as np
import pytest
from hypothesis import given, strategies as st

from bloofi import WORD_BITS, BitVector, union_into
from bloofi.bitvector import or_all


def bitlists(min_size=1, max_size=200):
    return st.integers(min_size, max_size).flatmap(
        lambda n: st.tuples(
            st.lists(st.booleans(), min_size=n, max_size=n),
            st.lists(st.booleans(), min_size=n, max_size=n),
        )
    )


def from_bools(bs):
    return BitVector.from_positions(len(bs), [i for i, b in enumerate(bs) if b])


def test_word_constant():
    assert WORD_BITS == 64
    assert BitVector(65).words.shape == (2,)


def test_string_round_trip_and_order():
    bv = BitVector.from_string("00001000")
    assert bv.get(4) and bv.popcount() == 1
    assert bv.to_string() == "00001000"
    assert int(bv.words[0]) == 1 << 4


def test_padding_rejected_on_construction():
    with pytest.raises(ValueError):
        BitVector(8, np.array([1 << 9], dtype=np.uint64))


def test_ones_keeps_padding_zero():
    bv = BitVector.ones(70)
    assert bv.popcount() == 70
    assert int(bv.words[1]) == (1 << 6) - 1
    assert bv.is_all_ones()


@given(bitlists())
def test_ops_match_per_bit_reference(pair):
    a_bits, b_bits = pair
    a, b = from_bools(a_bits), from_bools(b_bits)
    n = len(a_bits)
    assert (a | b).to_string() == "".join("1" if x or y else "0" for x, y in zip(a_bits, b_bits))
    assert (a & b).to_string() == "".join("1" if x and y else "0" for x, y in zip(a_bits, b_bits))
    assert (a ^ b).to_string() == "".join("1" if x != y else "0" for x, y in zip(a_bits, b_bits))
    assert a.popcount() == sum(a_bits)
    for v in (a | b, a & b, a ^ b):
        tail = n % 64
        if tail:
            assert int(v.words[-1]) >> tail == 0


@pytest.mark.parametrize(
    "x,y,expected",
    [("1100", "0110", "1110"), ("1010", "1010", "1010")],
)
def test_union_into(x, y, expected):
    t = BitVector.from_string(x)
    union_into(t, BitVector.from_string(y))
    assert t.to_string() == expected


def test_union_of_figure_leaves_is_node7():
    leaves = [BitVector.from_string(s) for s in ("10000000", "01000000", "00100000", "00010000")]
    assert or_all(leaves).to_string() == "11110000"


def test_length_mismatch_is_an_error():
    with pytest.raises(ValueError):
        union_into(BitVector(8), BitVector(9))


def test_set_positions_and_subset():
    a = BitVector.from_positions(130, [0, 64, 129])
    assert list(a.set_positions()) == [0, 64, 129]
    b = a.copy()
    b.set(5)
    assert a.is_subset_of(b) and not b.is_subset_of(a)
    b.clear(5)
    assert a == b
