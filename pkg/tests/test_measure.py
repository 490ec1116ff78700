from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cantor_spectra.base4 import first_digits, lng
from cantor_spectra.errors import ToleranceNotReached
from cantor_spectra.measure import (
    EvalConfig,
    Enclosure,
    chaos_sample,
    empirical_cf,
    factor_bounds_array,
    in_zero_set,
    in_zero_set_array,
    log2_sq_shift_upper,
    m,
    orthogonal,
    partial_product,
    phi_hat,
    phi_hat_sq_shift,
    sq_modulus_array,
)

from oracles import mp_shift_sq_modulus, mp_sq_modulus, zero_set_window

# 200-factor high precision product at t = 1/2
PHI_HALF_SQ = float(mp_sq_modulus(0.5))


def test_m_examples():
    assert m(0) == 1
    assert m(0.25) == pytest.approx(0, abs=1e-30)
    assert m(0.125) == pytest.approx(0.5, abs=1e-15)


def test_phi_hat_at_zero_is_exactly_one():
    a = phi_hat(0)
    assert a.value == 1 + 0j
    assert (a.sq_modulus.lo, a.sq_modulus.hi) == (1.0, 1.0)


def test_phi_hat_at_one_vanishes():
    enc = phi_hat(1).sq_modulus
    assert enc.lo == 0 and enc.hi <= 1e-12


def test_phi_hat_half_matches_high_precision_oracle():
    enc = phi_hat(0.5).sq_modulus
    assert enc.width <= 1e-12
    assert PHI_HALF_SQ in enc


def test_phi_hat_phase():
    a = phi_hat(0.5)
    mod = math.sqrt(a.sq_modulus.mid)
    assert a.value == pytest.approx(mod * complex(math.cos(math.pi / 3), math.sin(math.pi / 3)), abs=1e-12)


def test_enclosure_soundness_random():
    rng = np.random.default_rng(20240601)
    for t in rng.uniform(-10, 10, 1000):
        enc = phi_hat(float(t)).sq_modulus
        ref = float(mp_sq_modulus(float(t), dps=40))
        assert enc.lo - 1e-15 <= ref <= enc.hi + 1e-15, t
        assert enc.width <= 1e-12


def test_amplitude_consistent_with_enclosure():
    for t in (0.3, 1.7, -2.2, 5.25):
        a = phi_hat(t)
        assert abs(a.value) ** 2 == pytest.approx(a.sq_modulus.mid, abs=1e-12)


@pytest.mark.parametrize("k, expected", [(1, True), (2, False), (12, True), (0, False), (-3, True), (8, False)])
def test_zero_set_examples(k, expected):
    assert in_zero_set(k) is expected


def test_zero_set_matches_enumeration():
    window = zero_set_window(10_000)
    assert {k for k in range(-10_000, 10_001) if in_zero_set(k)} == window
    arr = np.arange(-10_000, 10_001, dtype=np.int64)
    assert set(arr[in_zero_set_array(arr)].tolist()) == window


def test_zero_characterization_by_transform():
    for k in range(-10_000, 10_001):
        hi = phi_hat(k).sq_modulus.hi
        assert in_zero_set(k) == (hi <= 1e-12), k


def test_orthogonal_examples():
    assert orthogonal(1, 4)
    assert not orthogonal(0, 2)
    assert not orthogonal(7, 7)


@given(st.integers(-(2**200), 2**200), st.integers(-(2**200), 2**200))
def test_orthogonal_symmetric(a, b):
    assert orthogonal(a, b) == orthogonal(b, a)


@pytest.mark.parametrize("lam", [0, 5, -1, 17, 4**100 + 1])
def test_shift_zero_examples(lam):
    enc = phi_hat_sq_shift(0, lam)
    if lam == 0:
        assert (enc.lo, enc.hi) == (1.0, 1.0)
    else:
        assert enc.lo == 0 and enc.hi <= 1e-12


def test_shift_with_huge_lambda_matches_direct_product():
    lam = 4**100 + 1
    enc = phi_hat_sq_shift(1, lam)
    ref = float(mp_shift_sq_modulus(1, lam, factors=160, dps=140))
    assert enc.lo <= ref <= enc.hi
    assert enc.width <= 1e-12
    assert enc.hi <= 4 * math.pi**2 / 4.0**180


def test_shift_far_below_double_range():
    lam = 4**10000 + 4**1000 + 4**100 + 21
    enc = phi_hat_sq_shift(1, lam)
    assert enc.lo == 0.0 and 0 < enc.hi <= 1e-300
    assert log2_sq_shift_upper(1, lam) < -30000


@pytest.mark.parametrize("t", [0.0, 0.25, -0.5, 0.984375, 1.5, -1.75])
def test_shift_reduction_exactness(t):
    for lam in (-1_000_000, -12345, -7, 0, 3, 999, 65536, 1_000_000):
        direct = phi_hat(t + lam).sq_modulus
        shifted = phi_hat_sq_shift(t, lam)
        assert abs(direct.lo - shifted.lo) <= 1e-12
        assert abs(direct.hi - shifted.hi) <= 1e-12


def test_shift_requires_small_t():
    with pytest.raises(ValueError):
        phi_hat_sq_shift(2.5, 0)


def test_tolerance_not_reached():
    with pytest.raises(ToleranceNotReached):
        phi_hat(0.3, EvalConfig(max_factors=1))


def test_eval_config_validation():
    with pytest.raises(ValueError):
        EvalConfig(abs_tol=0)
    with pytest.raises(ValueError):
        EvalConfig(max_factors=0)


def test_enclosure_validation():
    with pytest.raises(ValueError):
        Enclosure(0.5, 0.4)
    with pytest.raises(ValueError):
        Enclosure(-0.1, 0.4)


@pytest.mark.parametrize("pair", [(0, 1), (0, 3), (1, 2), (2, 3)])
def test_pair_identity(pair):
    e, f = pair
    rng = np.random.default_rng(sum(pair))
    for x in rng.uniform(-50, 50, 1000):
        assert m((x + e) / 4) + m((x + f) / 4) == pytest.approx(1.0, abs=1e-12)


def test_product_inequality():
    rng = np.random.default_rng(11)
    for _ in range(1000):
        x = float(rng.uniform(-1, 1))
        n = int(rng.integers(0, 7))
        k = int(rng.integers(-64, 65))
        left = phi_hat_sq_shift(x, 4**n * k).lo
        right = phi_hat(x).sq_modulus.hi * phi_hat(x / 4**n + k).sq_modulus.hi
        assert left >= right - 1e-9


def test_partial_product_examples():
    assert partial_product(0, [0]) == 1
    assert partial_product(0, [1]) == pytest.approx(0, abs=1e-30)
    assert partial_product(0.3, [0]) + partial_product(0.3, [1]) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(ValueError):
        partial_product(0.3, [])


@settings(max_examples=200)
@given(st.integers(-(4**6), 4**6), st.floats(-1, 1))
def test_telescoping(lam, x):
    N = lng(lam) + 30
    # the first N digits, then the tail keeps contributing factors of about 1
    p = partial_product(x, first_digits(lam, N))
    enc = phi_hat_sq_shift(x, lam)
    assert enc.lo - 1e-6 <= p <= enc.hi + 1e-6


def test_factor_bounds_exact_cases():
    lo, hi = factor_bounds_array(np.array([0.0, 0.25, -0.25, 0.5]), 0.0)
    assert lo.tolist() == [1.0, 0.0, 0.0, lo[3]]
    assert hi[:3].tolist() == [1.0, 0.0, 0.0]
    assert lo[3] <= 1.0 <= hi[3]


def test_vectorized_enclosure_matches_scalar():
    ys = np.array([0.0, 0.5, -1.0, 1.7, 2.0, -0.984375, 1.25])
    lo, hi = sq_modulus_array(ys)
    for y, a, b in zip(ys, lo, hi):
        enc = phi_hat(float(y)).sq_modulus
        assert a <= enc.hi + 1e-15 and enc.lo <= b + 1e-15
        assert b - a <= 1e-12
    assert (lo[2], hi[2]) == (0.0, 0.0)


def test_chaos_sample_support_and_mean():
    xs = chaos_sample(1_000_000, seed=7)
    assert xs.min() >= 0 and xs.max() <= 1
    assert abs(xs.mean() - 1 / 3) <= 0.01
    assert abs(empirical_cf(xs, 1.0)) <= 0.01


def test_chaos_sample_deterministic():
    a = chaos_sample(1000, seed=3)
    b = chaos_sample(1000, seed=3, chunk=97)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, chaos_sample(1000, seed=4))


def test_chaos_points_lie_on_attractor():
    # points are sums of a_k 4**-k with a_k in {0, 2}, so the leading base 4 digits are 0 or 2
    xs = chaos_sample(100, seed=1)
    for x in xs:
        v = math.floor(x * 4**20)
        assert all((v >> (2 * i)) & 3 in (0, 2) for i in range(20))


@pytest.mark.parametrize("t", [1.7, 5.25])
def test_empirical_cf_matches_transform(t):
    xs = chaos_sample(1_000_000, seed=2024)
    assert abs(empirical_cf(xs, t) - phi_hat(t).value) <= 0.01


def test_empirical_cf_at_zero_and_errors():
    assert empirical_cf([0.1, 0.7], 0) == 1 + 0j
    with pytest.raises(ValueError):
        empirical_cf([], 1.0)
    with pytest.raises(ValueError):
        chaos_sample(0, seed=1)
