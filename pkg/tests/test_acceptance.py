"""The ten acceptance criteria, each checked at its stated tolerance and time limit."""

from __future__ import annotations

import itertools
import random
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from conftest import ACCEPTANCE
from oracles import division_digits, zero_set_window
from cantor_spectra.base4 import decode, digit_at, encode
from cantor_spectra.certify import (
    DeficientAt,
    ExceptionalPath,
    GoodPathParams,
    LooksComplete,
    check_pairwise_orthogonal,
    check_propr2,
    check_thsp2,
    completeness,
    counterexample_sum,
    default_grid,
    identity_eqsp4,
    maximality_window,
)
from cantor_spectra.labeling import (
    CounterexampleRule,
    DigitSystem,
    ExR4Rule,
    Member,
    a_expansion,
    builtin_rule,
    compose,
    counterexample_set,
    enumerate_rule,
    jp_rule,
    lambda_A_window,
    default_gap,
)
from cantor_spectra.measure import (
    chaos_sample,
    empirical_cf,
    in_zero_set,
    m,
    phi_hat,
    phi_hat_sq_shift,
)

GOLDEN = Path(__file__).parent / "golden"


@contextmanager
def criterion(number: int, title: str, limit: float):
    start = time.perf_counter()
    status = "FAIL"
    try:
        yield
        status = "PASS"
    finally:
        elapsed = time.perf_counter() - start
        if status == "PASS" and elapsed >= limit:
            status = "FAIL"
        ACCEPTANCE[number] = f"[{status}] {number:2d}. {title} ({elapsed:.1f}s, limit {limit:g}s)"
    assert elapsed < limit, f"took {elapsed:.1f}s, limit {limit}s"


def test_criterion_01_codec():
    with criterion(1, "codec round trip and congruence", 10):
        for k in range(-(10**6), 10**6 + 1):
            if decode(encode(k)) != k:
                raise AssertionError(k)
        rng = random.Random(1)
        for _ in range(1000):
            k = rng.getrandbits(256) - (1 << 255)
            assert decode(encode(k)) == k
            digits = [digit_at(k, n) for n in range(41)]
            assert digits == division_digits(k, 41)
            partial = 0
            for N, d in enumerate(digits):
                partial += d << (2 * N)
                assert (partial - k) % (1 << (2 * N + 2)) == 0


def test_criterion_02_zero_set():
    with criterion(2, "zero set oracle on [-10^4, 10^4]", 1):
        M = 10**4
        expect = zero_set_window(M)
        got = {k for k in range(-M, M + 1) if in_zero_set(k)}
        assert got == expect


def test_criterion_03_jp_spectrum():
    with criterion(3, "JP orthogonality and completeness at L=20", 60):
        vals = enumerate_rule(jp_rule(), 8).values
        assert len(vals) == 256
        for a, b in itertools.combinations(vals, 2):
            assert in_zero_set(a - b)
        check_pairwise_orthogonal(vals)
        grid = default_grid(64)
        reports = {L: completeness(jp_rule(), L, grid) for L in (12, 16, 20)}
        for rep in reports.values():
            assert rep.max_h <= 1 + 1e-9
        for a, b in ((12, 16), (16, 20)):
            assert all(y >= x - 1e-12 for x, y in zip(reports[a].h, reports[b].h))
        golden = float((GOLDEN / "jp_min_h_L20.txt").read_text())
        assert reports[20].min_h >= 0.999
        assert abs(reports[20].min_h - golden) <= 1e-12


def test_criterion_04_partial_product_identity():
    with criterion(4, "partial product identity on four rules", 30):
        rng = np.random.default_rng(4)
        rules = [jp_rule(), builtin_rule("const03"), ExR4Rule(), CounterexampleRule(default_gap())]
        for rule in rules:
            for _ in range(100):
                x = float(rng.uniform(-100, 100))
                N = int(rng.integers(1, 13))
                assert identity_eqsp4(rule, x, N) <= 1e-9


def test_criterion_05_pair_identity_and_product_inequality():
    with criterion(5, "cosine pair identity and product inequality", 5):
        rng = np.random.default_rng(5)
        pairs = [(0, 1), (0, 3), (1, 2), (2, 3)]
        for x in rng.uniform(-50, 50, 1000):
            e, f = pairs[int(rng.integers(0, 4))]
            assert abs(m((x + e) / 4) + m((x + f) / 4) - 1.0) <= 1e-12
        for _ in range(1000):
            x = float(rng.uniform(-1, 1))
            n = int(rng.integers(0, 7))
            k = int(rng.integers(-64, 65))
            left = phi_hat_sq_shift(x, 4**n * k).lo
            right = phi_hat(x).sq_modulus.hi * phi_hat(x / 4**n + k).sq_modulus.hi
            assert left >= right - 1e-9


def test_criterion_06_counterexample():
    with criterion(6, "relabeled tree family is not a spectrum", 120):
        res = counterexample_sum(default_gap(), 2)
        assert res.tail_rigorous
        assert res.numeric_sum + res.tail_bound < 1e-50
        assert max(len(bin(v)) for v in counterexample_set(default_gap(), 2)) > 2 * 10**4


def test_criterion_07_maximality():
    with criterion(7, "maximality windows for JP and the relabeled family", 30):
        jp = maximality_window(enumerate_rule(jp_rule(), 10), 500)
        assert jp.all_witnessed
        cx = maximality_window(counterexample_set(default_gap(), 2), 50, rule=CounterexampleRule())
        assert cx.all_witnessed and not cx.beyond_truncation


def test_criterion_08_digit_systems():
    with criterion(8, "digit systems, {0,3} closed form and deficiency", 60):
        system = DigitSystem.per_prefix({(): 15}, 9)
        assert a_expansion(system, 3) == Member((15,), (9,))
        const03 = DigitSystem.constant(3)
        finite = {
            sum(a * 4**k for k, a in enumerate(ds))
            for n in range(1, 5)
            for ds in itertools.product((0, 3), repeat=n)
        }
        shifted = {v - 4**n for n in range(1, 5) for v in finite if v < 4**n} | {-1}
        closed = {k for k in finite | shifted if -64 <= k <= 64}
        assert lambda_A_window(const03, 64) == closed
        rule = builtin_rule("const03")
        grid = default_grid(64, -1.0, 0.0)
        sums = [v for v in enumerate_rule(rule, 12).values if v >= 0]
        deficient = completeness(sums, 12, grid, superset=rule)
        assert isinstance(deficient.verdict, DeficientAt)
        completed = completeness(rule, 12, grid, superset=rule)
        assert isinstance(completed.verdict, LooksComplete)


def test_criterion_09_composition_and_exceptional_paths():
    with criterion(9, "composition, good-path failure and exceptional paths for ExR4", 30):
        jp = jp_rule()
        assert enumerate_rule(compose(0, jp, 1, jp), 10).values == enumerate_rule(jp, 10).values
        exr4 = ExR4Rule()
        for P in range(7):
            rep = check_thsp2(exr4, GoodPathParams(P, 0), P + 2)
            assert not rep.all_good and rep.failing_vertex == (1,) * (P + 1)
        assert check_propr2(exr4, [ExceptionalPath.parse("(1)~")], GoodPathParams(0, 0), 10).ok


def test_criterion_10_monte_carlo():
    with criterion(10, "chaos game characteristic function", 20):
        xs = chaos_sample(10**6, seed=2024)
        for t in (0.3, 1.0, 1.7, 5.25):
            assert abs(empirical_cf(xs, t) - phi_hat(t).value) <= 0.01
