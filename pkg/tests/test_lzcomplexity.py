import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from shapeprior.errors import EmptyShape
from shapeprior.lzcomplexity import clz, lz76_phrase_count, shape_to_binary

from oracles import all_binary, lz76_bruteforce

binary = st.text(alphabet="01", min_size=1, max_size=64)


@pytest.mark.parametrize("s, expected", [("0", 1), ("1", 1), ("0000", 2), ("0101", 3), ("01", 2)])
def test_phrase_count_examples(s, expected):
    assert lz76_phrase_count(s) == expected


def test_oracle_hand_values():
    # the oracle must itself reproduce the hand parses before it judges anything
    assert [lz76_bruteforce(s) for s in ("0", "0000", "0101", "0001101001000101")] == [1, 2, 3, 6]


def test_matches_bruteforce_up_to_length_10():
    for s in all_binary(10):
        assert lz76_phrase_count(s) == lz76_bruteforce(s), s


def test_accepts_int_sequences():
    assert lz76_phrase_count([0, 1, 0, 1]) == 3


@pytest.mark.parametrize("bad", ["", "012", "ab"])
def test_rejects_non_binary(bad):
    with pytest.raises(ValueError):
        lz76_phrase_count(bad)


@given(binary)
def test_symbol_swap_invariance(s):
    swapped = s.translate(str.maketrans("01", "10"))
    assert lz76_phrase_count(s) == lz76_phrase_count(swapped)


@pytest.mark.parametrize("s, raw", [("0000", 2.0), ("01", 2.0), ("0101", 6.0), ("0", 0.0), ("1111111", math.log2(7))])
def test_clz_examples(s, raw):
    est = clz(s)
    assert est.raw_clz == pytest.approx(raw, abs=1e-12)
    assert est.n == len(s)
    assert est.nw_forward >= 1 and est.nw_reverse >= 1


def test_clz_constant_string_is_exact_log():
    for n in range(1, 300):
        assert clz("0" * n).raw_clz == math.log2(n)
        assert clz("1" * n).raw_clz == math.log2(n)


@given(binary)
def test_clz_reversal_invariant(s):
    assert clz(s).raw_clz == clz(s[::-1]).raw_clz


@pytest.mark.parametrize("n", [16, 32, 64])
def test_random_strings_more_complex_than_periodic(n):
    rng = np.random.default_rng(n)
    rand = [clz("".join(map(str, rng.integers(0, 2, n)))).raw_clz for _ in range(200)]
    assert np.mean(rand) > clz("01" * (n // 2)).raw_clz


@pytest.mark.parametrize("shape, bits", [("[][][]", "010101"), ("[]", "01"), ("[[][]]", "001011")])
def test_shape_to_binary(shape, bits):
    assert shape_to_binary(shape) == bits


def test_shape_to_binary_empty():
    with pytest.raises(EmptyShape):
        shape_to_binary("")
