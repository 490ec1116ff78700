"""Certification of spectra and maximal families for the quarter Cantor measure.

* good paths and the sufficient condition for a labeling to give a spectrum,
* the Parseval sum h(t) = sum_lambda |mu4^(t + lambda)|^2 with certified bounds,
* maximality of orthogonal families on integer windows,
* the upper bound showing the relabeled tree family is not a spectrum,
* the exceptional-path criterion,
* the identity sum_w P_x^N(w) = 1 over the depth N words of a labeling.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence, Union

import numpy as np

from .base4 import Code, TailKind, digit_at, lng
from .errors import BudgetExceeded, InvalidParams, OrthogonalityViolation, VertexNotInTree
from .labeling import (
    DEFAULT_BUDGET,
    DEFAULT_HORIZON,
    Gap,
    LabelingRule,
    SpectrumSet,
    constant_tail,
    counterexample_set,
    tree_levels,
)
from .measure import (
    DEFAULT_CONFIG,
    EvalConfig,
    TINY,
    factor_bounds_array,
    in_zero_set,
    in_zero_set_array,
    log2_sq_shift_upper,
    mul_down,
    mul_up,
    phi_hat_sq_shift,
    sq_modulus_array,
)

Word = tuple[int, ...]


# -- good paths ------------------------------------------------------------------------


@dataclass(frozen=True)
class GoodPathParams:
    P: int
    Q: int
    D: int = 64

    def __post_init__(self) -> None:
        if self.P < 0 or self.Q < 0:
            raise InvalidParams("P and Q must be non-negative")
        if self.D < self.Q + 1:
            raise InvalidParams("the horizon D must be at least Q + 1")


@dataclass(frozen=True)
class Witness:
    """An even-label segment (at most P twos) followed by a suffix of length at most Q."""

    segment: Word
    suffix: Code

    found = True

    @property
    def path(self) -> Code:
        return Code(self.segment + self.suffix.prefix, self.suffix.tail).canonical()

    def __str__(self) -> str:
        seg = " ".join(map(str, self.segment))
        return f"[{seg}] {self.suffix}"


@dataclass(frozen=True)
class NotFound:
    D: int

    found = False


GoodPathResult = Union[Witness, NotFound]


def _short_suffix(rule: LabelingRule, state: Any, q: int, horizon: int) -> Code | None:
    """A path from ``state`` that is constant 0 or 3 after at most q digits."""

    def dfs(s: Any, word: Word) -> Code | None:
        for c in (0, 3):
            if constant_tail(rule, s, c, horizon):
                return Code(word, TailKind(c)).canonical()
        if len(word) == q:
            return None
        for d in rule.pair(s):
            found = dfs(rule.child(s, d), word + (d,))
            if found is not None:
                return found
        return None

    return dfs(state, ())


def good_path_from_state(rule: LabelingRule, state: Any, p: GoodPathParams) -> GoodPathResult:
    seg: list[int] = []
    twos = 0
    s = state
    for k in range(p.D - p.Q + 1):
        suffix = _short_suffix(rule, s, p.Q, max(p.D - k - p.Q, 1))
        if suffix is not None:
            return Witness(tuple(seg), suffix)
        e = rule.even_label(s)
        if e == 2:
            twos += 1
            if twos > p.P:
                break
        seg.append(e)
        s = rule.child(s, e)
    return NotFound(p.D)


def good_path_exists(rule: LabelingRule, vertex: Sequence[int], p: GoodPathParams) -> GoodPathResult:
    """Search for a (P,Q)-good path starting at ``vertex``.

    The segment may be empty and may contain at most P twos.  Constant tails
    are accepted on a structural certificate or when they survive to the
    horizon D.
    """
    return good_path_from_state(rule, rule.state_of(tuple(vertex)), p)


@dataclass(frozen=True)
class Thsp2Report:
    all_good: bool
    depth: int
    checked: int
    failing_vertex: Word | None = None


def check_thsp2(rule: LabelingRule, p: GoodPathParams, depth: int, budget: int = 1 << 21) -> Thsp2Report:
    """Good-path search at every vertex of depth <= ``depth``, level by level in lexicographic order."""
    level: list[tuple[Word, Any]] = [((), rule.root())]
    checked = 0
    for n in range(depth + 1):
        for w, s in sorted(level, key=lambda item: item[0]):
            checked += 1
            if not good_path_from_state(rule, s, p).found:
                return Thsp2Report(False, depth, checked, w)
        if n == depth:
            break
        if checked + 2 * len(level) > budget:
            raise BudgetExceeded(f"more than {budget} vertices to check")
        level = [(w + (d,), rule.child(s, d)) for w, s in level for d in rule.pair(s)]
    return Thsp2Report(True, depth, checked)


# -- completeness ----------------------------------------------------------------------


@dataclass(frozen=True)
class LooksComplete:
    margin: float
    name = "LooksComplete"

    def __str__(self) -> str:
        return f"LooksComplete(margin={self.margin:g})"


@dataclass(frozen=True)
class DeficientAt:
    t: float
    gap: float
    name = "DeficientAt"

    def __str__(self) -> str:
        return f"DeficientAt(t={self.t!r}, gap={self.gap:.6e})"


@dataclass(frozen=True)
class Inconclusive:
    name = "Inconclusive"

    def __str__(self) -> str:
        return "Inconclusive"


Verdict = Union[LooksComplete, DeficientAt, Inconclusive]


@dataclass
class CertReport:
    grid: list[float]
    h: list[float]
    L: int
    min_h: float
    max_h: float
    verdict: Verdict
    h_upper: list[float] | None = None

    def to_csv(self) -> str:
        return certificate_csv(self)


def default_grid(n: int = 64, tmin: float = 0.0, tmax: float = 1.0) -> list[float]:
    """n points tmin + i (tmax - tmin)/n, rounded to multiples of 2**-20 for reproducible CSV."""
    if n < 1:
        raise ValueError("grid needs at least one point")
    step = (tmax - tmin) / n
    return [round((tmin + i * step) * 2**20) / 2**20 for i in range(n)]


def _sum_down(terms: np.ndarray) -> float:
    """A lower bound on the sum of non-negative terms, exact when at most one is nonzero."""
    s = math.fsum(terms.tolist())
    if np.count_nonzero(terms) <= 1:
        return s
    return math.nextafter(s, 0.0)


def _sum_up(terms: np.ndarray) -> float:
    s = math.fsum(terms.tolist())
    if np.count_nonzero(terms) <= 1:
        return s
    return math.nextafter(s, math.inf)


PRUNE = 1e-18


def _tree_sums(
    rule: LabelingRule, L: int, grid: Sequence[float], cfg: EvalConfig, horizon: int, budget: int, prune: float = PRUNE, workers: int = 1
):
    """Lower and upper bounds on sum over the length <= L frequencies of |mu4^(t + lambda)|^2.

    The sum is organised along the tree: the weight of a depth-L vertex with
    prefix value V is P_t^L = prod_{j<=L} cos^2(2 pi (t + V_j)/4^j), and a leaf
    contributes P_t^L |mu4^((t + V)/4^L + b)|^2 with b = 0 for a 0-tail and
    b = -1 for a 3-tail.  Vertices whose weight falls below ``prune`` are
    dropped: they add nothing to the lower bound and their whole weight, which
    bounds everything below them, to the upper bound.
    """
    tree = tree_levels(rule, L, horizon, budget)
    scaled: list[np.ndarray] = []
    v = np.zeros(1)
    for n in range(L):
        w = 4.0**n
        v = np.concatenate([v + w * tree.first[n], v + w * tree.second[n]])
        scaled.append(np.ldexp(v, -2 * (n + 1)))
    leaf_a = scaled[-1] if L else np.zeros(1)

    def one(t: float) -> tuple[float, float]:
        idx = np.zeros(1, dtype=np.int64)
        plo = np.ones(1)
        phi = np.ones(1)
        dropped: list[float] = []
        for n in range(L):
            idx = np.concatenate([idx, idx + (1 << n)])
            plo = np.concatenate([plo, plo])
            phi = np.concatenate([phi, phi])
            flo, fhi = factor_bounds_array(scaled[n][idx], math.ldexp(t, -2 * (n + 1)))
            plo = mul_down(plo, flo)
            phi = mul_up(phi, fhi)
            small = phi < prune
            if small.any():
                dropped.append(_sum_up(phi[small]))
                keep = ~small
                idx, plo, phi = idx[keep], plo[keep], phi[keep]
        b = math.ldexp(t, -2 * L)
        lo_terms, hi_terms = [], list(dropped)
        for mask, shift in ((tree.tail0, 0.0), (tree.tail3, -1.0)):
            live = mask[idx]
            if not live.any():
                continue
            mlo, mhi = sq_modulus_array(leaf_a[idx[live]] + shift, b, cfg)
            lo_terms.append(_sum_down(mul_down(plo[live], mlo)))
            hi_terms.append(_sum_up(mul_up(phi[live], mhi)))
        lo = _sum_down(np.array(lo_terms)) if lo_terms else 0.0
        hi = _sum_up(np.array(hi_terms)) if hi_terms else 0.0
        return lo, hi

    return _map_grid(one, grid, workers)


def _map_grid(fn, grid: Sequence[float], workers: int) -> tuple[np.ndarray, np.ndarray]:
    """Apply fn to every grid point, in order; numpy releases the GIL so threads overlap."""
    if workers > 1 and len(grid) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(fn, grid))
    else:
        results = [fn(t) for t in grid]
    return np.array([r[0] for r in results]), np.array([r[1] for r in results])


def check_pairwise_orthogonal(values: Sequence[int], max_exhaustive: int = 4096, samples: int = 100_000, seed: int = 0) -> None:
    """Raise OrthogonalityViolation on a non-orthogonal pair.

    Exhaustive up to ``max_exhaustive`` elements; above that a seeded random
    sample of pairs plus all neighbouring pairs is tested.
    """
    vals = [int(v) for v in values]
    n = len(vals)
    small = all(abs(v) < 2**61 for v in vals)
    if small:
        arr = np.array(vals, dtype=np.int64)
        if n <= max_exhaustive:
            for i in range(n - 1):
                ok = in_zero_set_array(arr[i + 1 :] - arr[i])
                if not ok.all():
                    j = i + 1 + int(np.argmin(ok))
                    raise OrthogonalityViolation(vals[i], vals[j])
            return
        rng = np.random.default_rng(seed)
        i = rng.integers(0, n, samples)
        j = rng.integers(0, n, samples)
        keep = i != j
        i, j = np.concatenate([i[keep], np.arange(n - 1)]), np.concatenate([j[keep], np.arange(1, n)])
        ok = in_zero_set_array(arr[i] - arr[j])
        if not ok.all():
            k = int(np.argmin(ok))
            raise OrthogonalityViolation(vals[i[k]], vals[j[k]])
        return
    for i in range(n):
        for j in range(i + 1, n):
            if not in_zero_set(vals[i] - vals[j]):
                raise OrthogonalityViolation(vals[i], vals[j])


def _set_sums(values: Sequence[int], grid: Sequence[float], cfg: EvalConfig, workers: int = 1):
    vals = [int(v) for v in values]
    small = np.array([v for v in vals if abs(v) < 2**52], dtype=np.int64)
    big = [v for v in vals if abs(v) >= 2**52]
    J = max((lng(int(v)) for v in small), default=0) + 1

    def one(t: float) -> tuple[float, float]:
        lo = np.ones(small.size)
        hi = np.ones(small.size)
        for j in range(1, J + 1):
            mask = np.int64((1 << (2 * j)) - 1)
            # lambda mod 4**j is exact, so every reduced argument is exact before adding t
            a = np.ldexp((small & mask).astype(np.float64), -2 * j)
            flo, fhi = factor_bounds_array(a, math.ldexp(t, -2 * j))
            lo = mul_down(lo, flo)
            hi = mul_up(hi, fhi)
        live = hi > 0
        mlo, mhi = sq_modulus_array(np.ldexp(small[live].astype(np.float64), -2 * J), math.ldexp(t, -2 * J), cfg)
        big_enc = [phi_hat_sq_shift(t, v, cfg) for v in big]
        lo_terms = np.concatenate([mul_down(lo[live], mlo), [e.lo for e in big_enc]])
        hi_terms = np.concatenate([mul_up(hi[live], mhi), [e.hi for e in big_enc]])
        return _sum_down(lo_terms), _sum_up(hi_terms)

    return _map_grid(one, grid, workers)


Source = Union[LabelingRule, SpectrumSet, Iterable[int]]


def parseval_bounds(
    source: Source,
    L: int,
    grid: Sequence[float],
    cfg: EvalConfig = DEFAULT_CONFIG,
    horizon: int = DEFAULT_HORIZON,
    budget: int = DEFAULT_BUDGET,
    check_orthogonality: bool = True,
    workers: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """Certified lower and upper bounds on the truncated Parseval sum at each grid point."""
    if isinstance(source, LabelingRule):
        return _tree_sums(source, L, grid, cfg, horizon, budget, workers=workers)
    vals = [v for v in source if lng(int(v)) <= L]
    if check_orthogonality:
        check_pairwise_orthogonal(vals)
    return _set_sums(vals, grid, cfg, workers)


def completeness(
    source: Source,
    L: int,
    t_grid: Sequence[float] | None = None,
    cfg: EvalConfig = DEFAULT_CONFIG,
    margin: float = 1e-3,
    superset: Source | None = None,
    min_gap: float = 1e-9,
    horizon: int = DEFAULT_HORIZON,
    budget: int = DEFAULT_BUDGET,
    workers: int = 1,
) -> CertReport:
    """Parseval test h(t) = sum_{lng(lambda) <= L} |mu4^(t + lambda)|^2 on a grid.

    ``h`` holds certified lower bounds.  With an orthogonal ``superset`` of the
    source the part of the source beyond length L is bounded by
    1 - sum_{lng <= L} over the superset (Bessel), which yields certified upper
    bounds on the full infinite sum and hence certified deficiency.
    """
    grid = default_grid() if t_grid is None else [float(t) for t in t_grid]
    lo, hi = parseval_bounds(source, L, grid, cfg, horizon, budget, workers=workers)
    verdict: Verdict = Inconclusive()
    upper = None
    if superset is not None:
        sup_lo, _ = parseval_bounds(superset, L, grid, cfg, horizon, budget, workers=workers)
        upper = hi + np.maximum(1.0 - sup_lo, 0.0)
        i = int(np.argmin(upper))
        if upper[i] < 1.0 - min_gap:
            verdict = DeficientAt(grid[i], float(1.0 - upper[i]))
    if isinstance(verdict, Inconclusive) and float(lo.min()) >= 1.0 - margin:
        verdict = LooksComplete(margin)
    return CertReport(
        grid=grid,
        h=[float(x) for x in lo],
        L=L,
        min_h=float(lo.min()),
        max_h=float(lo.max()),
        verdict=verdict,
        h_upper=None if upper is None else [float(x) for x in upper],
    )


def certificate_csv(report: CertReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "h_lower", "L", "verdict"])
    for t, h in zip(report.grid, report.h):
        w.writerow([repr(float(t)), f"{h:.15f}", report.L, report.verdict.name])
    return buf.getvalue()


# -- maximality ------------------------------------------------------------------------


@dataclass(frozen=True)
class TreeWitness:
    """A frequency of the labeling agreeing with k below ``position`` and differing by 2 mod 4 there.

    Such a frequency exists because every vertex starts a path ending in 0 or 3
    repeated; k minus it is 4**position times twice an odd number, outside the
    zero set.
    """

    position: int
    prefix: Word

    def __str__(self) -> str:
        return f"agrees with k below position {self.position}, digit {self.prefix[-1]} there"


@dataclass
class MaximalityReport:
    M: int
    witnesses: dict[int, Union[int, TreeWitness]] = field(default_factory=dict)
    undominated: list[int] = field(default_factory=list)
    beyond_truncation: list[int] = field(default_factory=list)

    @property
    def all_witnessed(self) -> bool:
        return not self.undominated


def _finite_witness(k: int, vals: list[int], arr: np.ndarray | None) -> int | None:
    if arr is not None:
        ok = in_zero_set_array(k - arr)
        if not ok.all():
            return vals[int(np.argmin(ok))]
        return None
    for v in vals:
        if not in_zero_set(k - v):
            return v
    return None


def tree_witness(rule: LabelingRule, k: int, walk_limit: int = 10**6) -> TreeWitness | None:
    """Follow the digits of k down the tree to where it leaves and take the same-parity sibling.

    Returns None when k itself is a frequency of the labeling (its path never
    leaves, by certificate or within the walk limit).
    """
    k = int(k)
    s = rule.root()
    word: list[int] = []
    n = 0
    end = lng(k)
    tail_digit = 0 if k >= 0 else 3
    while True:
        if n >= end:
            cert = rule.tail(s, tail_digit)
            if cert is True:
                return None
            if n >= end + walk_limit:
                return None
        d = digit_at(k, n)
        pair = rule.pair(s)
        if d not in pair:
            e = pair[0] if pair[0] % 2 == d % 2 else pair[1]
            if rule.reach_tail(rule.child(s, e)) is not True:
                raise InvalidParams(f"no frequency is known to pass through {tuple(word) + (e,)}")
            return TreeWitness(n, tuple(word) + (e,))
        s = rule.child(s, d)
        word.append(d)
        n += 1


def maximality_window(source: SpectrumSet | Iterable[int], M: int, rule: LabelingRule | None = None) -> MaximalityReport:
    """For each k in [-M, M] outside the set, a set element not orthogonal to k.

    Witnesses are taken from the finite set first.  With ``rule`` given, the
    remaining outsiders get tree witnesses, or are listed in
    ``beyond_truncation`` when they are frequencies of the rule missing from
    the finite set.
    """
    vals = sorted(int(v) for v in source)
    if not vals:
        raise InvalidParams("maximality check needs a non-empty set")
    members = set(vals)
    arr = np.array(vals, dtype=np.int64) if all(abs(v) < 2**61 for v in vals) and M < 2**60 else None
    report = MaximalityReport(M)
    for k in range(-M, M + 1):
        if k in members:
            continue
        w = _finite_witness(k, vals, arr)
        if w is not None:
            report.witnesses[k] = w
            continue
        if rule is not None:
            tw = tree_witness(rule, k)
            if tw is not None:
                report.witnesses[k] = tw
                continue
            report.beyond_truncation.append(k)
            continue
        report.undominated.append(k)
    return report


# -- the relabeled tree family ---------------------------------------------------------


@dataclass(frozen=True)
class CounterexampleResult:
    numeric_sum: float
    tail_bound: float
    log2_numeric_sum: float
    log2_tail_bound: float
    terms: int
    tail_rigorous: bool

    @property
    def total(self) -> float:
        return self.numeric_sum + self.tail_bound

    @property
    def log10_total(self) -> float:
        return _log2_add(self.log2_numeric_sum, self.log2_tail_bound) / math.log2(10)


def _log2_add(a: float, b: float) -> float:
    if a == -math.inf:
        return b
    if b == -math.inf:
        return a
    hi, lo = max(a, b), min(a, b)
    return hi + math.log2(1.0 + 2.0 ** (lo - hi))


def _from_log2_up(x: float) -> float:
    """2**x as a float, rounded up to the smallest subnormal if it underflows."""
    if x == -math.inf:
        return 0.0
    if x < -1074:
        return TINY
    return max(math.nextafter(2.0**x * (1.0 + 1e-12), math.inf), TINY)


_LOG2_4PI2 = math.log2(4 * math.pi**2)


def counterexample_tail_log2(gap: Gap, n_max: int, extra: int = 64) -> tuple[float, bool]:
    """log2 of a bound on the terms with a relabeling index above n_max, and whether it is rigorous."""
    if gap.name == "paper":
        # sum_{N > n_max} 2**N 4 pi^2 / 4**(18 * 10**(N+1)); each term is below half the previous one
        first = (n_max + 1) + _LOG2_4PI2 - 36 * 10 ** (n_max + 2)
        return first + 1.0 + 1e-12 * abs(first), True
    logs = []
    for N in range(n_max + 1, n_max + 1 + extra):
        z = 0 if N == 0 else max(gap(N - 1), N)
        logs.append(N + _LOG2_4PI2 - 4 * (gap(N) - z))
    total = -math.inf
    for x in logs:
        total = _log2_add(total, x)
    decreasing = all(b - a <= -1 for a, b in zip(logs[-8:], logs[-7:]))
    if not decreasing:
        return math.inf, False
    return _log2_add(total, logs[-1]), False


def counterexample_sum(gap: Gap, n_max: int, cfg: EvalConfig = DEFAULT_CONFIG) -> CounterexampleResult:
    """Upper bound on sum_lambda |mu4^(1 + lambda)|^2 over the relabeled-tree frequencies.

    The frequencies using relabeling indices 0..n_max are summed term by term
    with exact integer argument reduction; the rest is bounded by the tail
    estimate.  A total below 1 shows the family is not a spectrum.
    """
    if n_max < 0:
        raise InvalidParams("n_max must be non-negative")
    values = counterexample_set(gap, n_max)
    log_sum = -math.inf
    for lam in values:
        log_sum = _log2_add(log_sum, log2_sq_shift_upper(1.0, lam, cfg))
    if log_sum != -math.inf:
        # slack for rounding in the logarithms and the additions
        log_sum += 1e-12 * max(1.0, abs(log_sum))
    log_tail, rigorous = counterexample_tail_log2(gap, n_max)
    return CounterexampleResult(
        numeric_sum=_from_log2_up(log_sum),
        tail_bound=_from_log2_up(log_tail) if log_tail != math.inf else math.inf,
        log2_numeric_sum=log_sum,
        log2_tail_bound=log_tail,
        terms=len(values),
        tail_rigorous=rigorous,
    )


# -- exceptional paths -----------------------------------------------------------------


@dataclass(frozen=True)
class ExceptionalPath:
    """The eventually periodic label stream prefix, cycle, cycle, ..."""

    prefix: Word
    cycle: Word

    def __post_init__(self) -> None:
        object.__setattr__(self, "prefix", tuple(int(d) for d in self.prefix))
        object.__setattr__(self, "cycle", tuple(int(d) for d in self.cycle))
        if not self.cycle:
            raise InvalidParams("an exceptional path needs a non-empty cycle")
        if any(d not in range(4) for d in self.prefix + self.cycle):
            raise InvalidParams("path labels must be digits 0..3")

    def digit(self, n: int) -> int:
        if n < len(self.prefix):
            return self.prefix[n]
        return self.cycle[(n - len(self.prefix)) % len(self.cycle)]

    def word(self, n: int) -> Word:
        return tuple(self.digit(i) for i in range(n))

    @classmethod
    def parse(cls, text: str) -> ExceptionalPath:
        """``d0 d1 ... (c0 c1 ...)~``, a prefix followed by a repeated cycle."""
        head, sep, rest = text.strip().partition("(")
        body, sep2, tail = rest.partition(")")
        if not sep or not sep2 or tail.strip() != "~":
            raise InvalidParams(f"expected 'prefix (cycle)~', got {text!r}")
        try:
            return cls(tuple(int(x) for x in head.split()), tuple(int(x) for x in body.split()))
        except ValueError:
            raise InvalidParams(f"bad digit in {text!r}") from None

    def ends(self) -> bool:
        """Whether the labels are eventually constant 0 or constant 3."""
        return set(self.cycle) in ({0}, {3})

    def __str__(self) -> str:
        pre = " ".join(map(str, self.prefix))
        cyc = " ".join(map(str, self.cycle))
        return f"{pre} ({cyc})~".strip()


@dataclass(frozen=True)
class ExceptionalPathSet:
    paths: tuple[ExceptionalPath, ...] = ()

    def __iter__(self):
        return iter(self.paths)

    def __len__(self) -> int:
        return len(self.paths)


@dataclass(frozen=True)
class Propr2Report:
    verdict: str  # "certified", "rejected" or "failed"
    depth: int
    vertex: Word | None = None
    path: ExceptionalPath | None = None
    reason: str = ""
    tail_levels: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.verdict == "certified"


def _tail_level(rule: LabelingRule, u: Word, p: GoodPathParams, max_level: int, window: int, budget: int) -> int | None:
    """Smallest k <= max_level such that every vertex k..k+window levels below u has a good path."""
    level = [rule.state_of(u)]
    run = 0
    for r in range(max_level + window + 1):
        if all(good_path_from_state(rule, s, p).found for s in level):
            run += 1
            if run == window + 1:
                return r - window
        else:
            run = 0
            if r >= max_level:
                return None
        if 2 * len(level) > budget:
            return None
        level = [rule.child(s, d) for s in level for d in rule.pair(s)]
    return None


def check_propr2(
    rule: LabelingRule,
    paths: ExceptionalPathSet | Iterable[ExceptionalPath],
    p: GoodPathParams,
    depth: int,
    window: int = 4,
    budget: int = 1 << 16,
) -> Propr2Report:
    """The exceptional-path criterion, checked to ``depth``.

    (1) each exceptional path lies in the tree and is not eventually constant 0
    or 3.  (2) below each vertex v of depth <= ``depth`` off the paths, the
    frequencies form a spectrum.  For (2) it suffices to treat the minimal such
    vertices, and as the spectral property only depends on a tail of the
    subtree, a subtree is accepted when all of its vertices at ``window + 1``
    consecutive levels, starting at most ``depth`` levels down, have good paths.
    """
    paths = tuple(paths)
    for path in paths:
        if path.ends():
            return Propr2Report("rejected", depth, path=path, reason=f"path {path} ends in a constant 0 or 3 run")
        try:
            rule.state_of(path.word(depth + window + 1))
        except VertexNotInTree as exc:
            return Propr2Report("rejected", depth, path=path, reason=f"path {path} is not in the tree: {exc}")
    on_path = {path.word(n) for path in paths for n in range(depth + 1)}
    if not paths:
        minimal = [()]
    else:
        minimal = []
        for w in sorted(on_path, key=lambda x: (len(x), x)):
            if len(w) >= depth:
                continue
            for d in rule.pair_at(w):
                c = w + (d,)
                if c not in on_path:
                    minimal.append(c)
    levels = {}
    for u in minimal:
        k = _tail_level(rule, u, p, depth, window, budget)
        if k is None:
            return Propr2Report("failed", depth, vertex=u, reason=f"no level below {u} where all vertices have good paths")
        levels[u] = k
    return Propr2Report("certified", depth, tail_levels=levels)


# -- the partial product identity ------------------------------------------------------


def identity_eqsp4(rule: LabelingRule, x: float, N: int, budget: int = 1 << 16) -> float:
    """|sum over depth-N tree words w of P_x^N(w) - 1|."""
    if N < 1:
        raise InvalidParams("N must be at least 1")
    if N > 14 or (1 << N) > budget:
        raise BudgetExceeded(f"2^{N} words exceed the budget")
    tree = tree_levels(rule, N, horizon=0, budget=budget, tails=False)
    v = np.zeros(1)
    p = np.ones(1)
    for n in range(N):
        w = 4.0**n
        v = np.concatenate([v + w * tree.first[n], v + w * tree.second[n]])
        p = np.concatenate([p, p])
        y = np.ldexp(v, -2 * (n + 1)) + math.ldexp(x, -2 * (n + 1))
        c = np.cos(2.0 * math.pi * y)
        p = p * c * c
    return abs(math.fsum(p.tolist()) - 1.0)
