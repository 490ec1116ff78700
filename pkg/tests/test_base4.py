from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cantor_spectra.base4 import (
    Code,
    TailKind,
    decode,
    digit_at,
    encode,
    first_digits,
    lng,
    parse,
    prepend_value,
    render,
)

from oracles import division_digits

ints = st.integers(min_value=-(2**300), max_value=2**300)
words = st.lists(st.integers(0, 3), max_size=12).map(tuple)


@pytest.mark.parametrize(
    "k, prefix, tail",
    [
        (0, (), TailKind.ZERO),
        (-1, (), TailKind.THREE),
        (5, (1, 1), TailKind.ZERO),
        (-10, (2, 1), TailKind.THREE),
        (-4, (0,), TailKind.THREE),
    ],
)
def test_encode_examples(k, prefix, tail):
    assert encode(k) == Code(prefix, tail)


@pytest.mark.parametrize(
    "code, value",
    [(Code((1, 1), TailKind.ZERO), 5), (Code((2, 1), TailKind.THREE), -10), (Code((), TailKind.THREE), -1)],
)
def test_decode_examples(code, value):
    assert decode(code) == value


def test_decode_canonicalizes():
    assert decode(Code((2, 1, 3, 3), TailKind.THREE)) == -10
    assert decode(Code((1, 1, 0, 0, 0), TailKind.ZERO)) == 5
    assert Code((2, 1, 3), TailKind.THREE).canonical() == Code((2, 1), TailKind.THREE)


@pytest.mark.parametrize("k, n, d", [(6, 1, 1), (0, 17, 0), (-1, 5, 3)])
def test_digit_at_examples(k, n, d):
    assert digit_at(k, n) == d


@pytest.mark.parametrize("k, n", [(0, 0), (5, 2), (-4, 1), (-1, 0), (3, 1), (4, 2), (-5, 2)])
def test_lng_examples(k, n):
    assert lng(k) == n


@pytest.mark.parametrize("w, b, v", [((), 7, 7), ((2, 1), -1, -10), ((1,), 1, 5)])
def test_prepend_examples(w, b, v):
    assert prepend_value(w, b) == v


def test_digit_at_rejects_negative_position():
    with pytest.raises(ValueError):
        digit_at(5, -1)


def test_code_rejects_bad_digit():
    with pytest.raises(ValueError):
        Code((1, 4), TailKind.ZERO)


@given(ints)
def test_round_trip_and_sign_law(k):
    c = encode(k)
    assert decode(c) == k
    assert c.is_canonical()
    assert (c.tail is TailKind.ZERO) == (k >= 0)
    assert len(c.prefix) == lng(k)


@given(ints, st.integers(0, 40))
def test_digits_match_division_oracle(k, n):
    assert list(first_digits(k, n + 1)) == division_digits(k, n + 1)
    assert digit_at(k, n) == division_digits(k, n + 1)[n]


@given(ints, st.integers(0, 40))
def test_congruence(k, N):
    partial = sum(4**n * digit_at(k, n) for n in range(N + 1))
    assert (partial - k) % 4 ** (N + 1) == 0


@given(words, ints)
def test_prepend_digits(w, b):
    v = prepend_value(w, b)
    for i in range(len(w) + 10):
        expect = w[i] if i < len(w) else digit_at(b, i - len(w))
        assert digit_at(v, i) == expect


def test_lng_bound_exhaustive():
    for Q in range(9):
        for k in range(-(4**Q) - 3, 4**Q + 4):
            if lng(k) <= Q:
                assert abs(k) <= 4**Q


@given(ints)
def test_render_parse_round_trip(k):
    c = encode(k)
    assert parse(render(c)) == c
    assert decode(parse(str(c))) == k


def test_render_format():
    assert render(encode(-10)) == "2 1 | 3~"
    assert render(encode(0)) == "| 0~"
    assert parse("  1 1 |0~ ") == Code((1, 1), TailKind.ZERO)


@pytest.mark.parametrize("text", ["1 1", "1 4 | 0~", "1 | 2~", "x | 0~"])
def test_parse_errors(text):
    with pytest.raises(ValueError):
        parse(text)


def test_digit_at_far_position_of_huge_integer():
    k = 4**10000 + 2
    assert digit_at(k, 0) == 2
    assert digit_at(k, 9999) == 0
    assert digit_at(k, 10000) == 1
    assert lng(k) == 10001
