"""Fourier transform of the quarter Cantor measure, with certified enclosures.

The measure mu4 is the invariant measure of the maps x/4 and (x+2)/4 with equal
weights.  Its transform is

    mu4^(t) = exp(2 pi i t / 3) * prod_{j>=1} cos(2 pi t / 4**j)

and vanishes exactly on the integers 4**j * (2m + 1).

All squared moduli are returned as intervals ``[lo, hi]``.  Each cosine factor
is bracketed using a first-order bound on the floating point error of its
argument, and once the argument has become small the rest of the product is
bracketed in closed form using

    -x**2 - x**4/3 <= log cos(x)**2 <= -x**2       (|x| <= 1/8),

summed over the geometric sequence x, x/4, x/16, ...
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .base4 import lng, word_value
from .errors import ToleranceNotReached

TWO_PI = 2.0 * math.pi
EPS = 2.0**-52
TINY = math.ulp(0.0)
# argument bound below which the closed form tail bracket is used
TAIL_ARG = 0.125
_RENORM = 600


@dataclass(frozen=True)
class EvalConfig:
    abs_tol: float = 1e-12
    max_factors: int = 10**6

    def __post_init__(self) -> None:
        if not self.abs_tol > 0:
            raise ValueError("abs_tol must be positive")
        if self.max_factors < 1:
            raise ValueError("max_factors must be at least 1")


DEFAULT_CONFIG = EvalConfig()


@dataclass(frozen=True)
class Enclosure:
    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.lo <= self.hi <= 1.0):
            raise ValueError(f"invalid enclosure [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def __contains__(self, value: float) -> bool:
        return self.lo <= value <= self.hi


@dataclass(frozen=True)
class Amplitude:
    re: float
    im: float
    sq_modulus: Enclosure

    @property
    def value(self) -> complex:
        return complex(self.re, self.im)


def m(x: float) -> float:
    """cos(2 pi x)**2."""
    c = math.cos(TWO_PI * x)
    return c * c


def in_zero_set(k: int) -> bool:
    """True iff k = 4**j (2m+1) for some j >= 0, i.e. the lowest set bit of k sits at an even position."""
    k = int(k)
    if k == 0:
        return False
    return ((k & -k).bit_length() - 1) % 2 == 0


def orthogonal(a: int, b: int) -> bool:
    """Whether e_a and e_b are orthogonal in L2(mu4)."""
    return in_zero_set(int(a) - int(b))


_EVEN_BITS = np.uint64(0x5555555555555555)


def in_zero_set_array(k: np.ndarray) -> np.ndarray:
    """Vectorized :func:`in_zero_set` for int64 arrays."""
    k = np.asarray(k, dtype=np.int64)
    low = (k & -k).view(np.uint64)
    return (low & _EVEN_BITS) != 0


def _tail_bracket(x: float) -> tuple[float, float]:
    """Bounds on prod_{i>=0} cos(x / 4**i)**2 for |x| <= 1/8."""
    x2 = x * x
    s2 = x2 * (16.0 / 15.0)
    s4 = x2 * x2 * (256.0 / 255.0)
    lo = math.exp(-s2 - s4 / 3.0) * (1.0 - 8 * EPS)
    hi = min(1.0, math.exp(-s2) * (1.0 + 8 * EPS))
    return lo, hi


def _frac_of_ratio(r: int, j: int) -> float:
    """r / 4**j for 0 <= r < 4**j, rounded to double."""
    shift = 2 * j - 64
    if shift > 0:
        return math.ldexp(r >> shift, -64)
    return math.ldexp(r, -2 * j)


# relative error allowed for one exactly reduced factor (conversion, sin/cos, squaring)
_FACTOR_REL = 16 * EPS


def _exact_factor(num: int, d: int) -> tuple[int, float, int]:
    """cos(2 pi num / 2**d)**2 as ``(sign of the cosine, mantissa, exponent)``.

    The argument is reduced modulo 1/2 in integer arithmetic and measured from the
    nearest zero or maximum of the cosine, so the result is accurate to a few ulps
    in relative terms however close the argument is to a zero.
    """
    if d < 3:
        num <<= 3 - d
        d = 3
    q = (num >> (d - 2)) & 3
    sign = 1 if q in (0, 3) else -1
    z = num & ((1 << (d - 1)) - 1)
    eighth = 1 << (d - 3)
    if z <= eighth or z >= 3 * eighth:
        w0 = z if z <= eighth else z - (1 << (d - 1))
        c = math.cos(TWO_PI * (w0 / (1 << d)))
        f, e = math.frexp(c * c)
        return sign, f, e
    w = z - (1 << (d - 2))
    if w == 0:
        return 0, 0.0, 0
    bl = abs(w).bit_length()
    if d - bl < 900:
        sn = math.sin(TWO_PI * (w / (1 << d)))
        f, e = math.frexp(sn * sn)
        return sign, f, e
    # |w| < 2**-899: sin(x)**2 = x**2 (1 - O(x**2)) is exact to double precision
    aw = abs(w)
    mant = aw >> (bl - 60) if bl > 60 else aw << (60 - bl)
    x = TWO_PI * mant * 2.0**-60
    f, e = math.frexp(x * x)
    return sign, f, e + 2 * (bl - d)


def _shifted_product_raw(t: float, lam: int, cfg: EvalConfig):
    """Enclose |mu4^(t + lam)|**2 using exact integer reduction of t + lam.

    ``t`` is a double, hence a dyadic rational T / 2**k, and every argument
    (t + lam) / 4**j is reduced exactly.  Returns ``(lo, hi, expo, sign)`` with
    the enclosure ``[lo * 2**expo, hi * 2**expo]`` and the sign of the cosine
    product, so that values far below the double range stay representable.
    """
    t = float(t)
    if t.is_integer():
        if int(t) + lam == 0:
            return 1.0, 1.0, 0, 1
        if in_zero_set(int(t) + lam):
            return 0.0, 0.0, 0, 1
    tn, td = t.as_integer_ratio()
    k = td.bit_length() - 1
    total = (lam << k) + tn  # (t + lam) * 2**k
    lam_len = lng(lam)
    lo, hi, expo, sign = 1.0, 1.0, 0, 1
    j = 1
    while True:
        d = k + 2 * j
        if j > lam_len:
            v = TWO_PI * (total / (1 << d))
            if abs(v) <= TAIL_ARG:
                tlo, thi = _tail_bracket(v)
                if math.ldexp(hi * thi - lo * tlo, expo) <= cfg.abs_tol:
                    return lo * tlo, min(hi * thi, 2.0), expo, sign
        if j > cfg.max_factors:
            raise ToleranceNotReached(
                f"no certified enclosure of |mu4^({t} + lam)|^2 within {cfg.max_factors} factors"
            )
        sg, f, e = _exact_factor(total & ((1 << d) - 1), d)
        if sg == 0:
            return 0.0, 0.0, 0, 1
        sign *= sg
        lo *= f * (1.0 - _FACTOR_REL)
        hi *= min(f * (1.0 + _FACTOR_REL), 1.0 if e == 0 else 2.0)
        expo += e
        if hi < 2.0**-_RENORM:
            lo *= 2.0**_RENORM
            hi *= 2.0**_RENORM
            expo -= _RENORM
        j += 1


def _shifted_product(t: float, lam: int, cfg: EvalConfig):
    lo, hi, expo, sign = _shifted_product_raw(t, lam, cfg)
    flo = math.ldexp(lo, expo)
    fhi = math.ldexp(hi, expo)
    if fhi == 0.0 and hi > 0.0:
        fhi = TINY
    return min(flo, 1.0), min(fhi, 1.0), float(sign)


def log2_sq_shift_upper(t: float, lam: int, cfg: EvalConfig = DEFAULT_CONFIG) -> float:
    """log2 of the upper end of the |mu4^(t + lam)|**2 enclosure; -inf for an exact zero.

    Useful when the value lies far below the smallest double.
    """
    _, hi, expo, _ = _shifted_product_raw(t, int(lam), cfg)
    if hi == 0.0:
        return -math.inf
    return min(math.log2(hi) + expo, 0.0)


def phi_hat(t: float, cfg: EvalConfig = DEFAULT_CONFIG) -> Amplitude:
    """mu4^(t) with a certified enclosure of its squared modulus."""
    lo, hi, sign = _shifted_product(t, 0, cfg)
    enc = Enclosure(lo, hi)
    if hi == 0.0:
        return Amplitude(0.0, 0.0, enc)
    p = sign * math.sqrt(enc.mid)
    phase = TWO_PI * float(t) / 3.0
    return Amplitude(p * math.cos(phase), p * math.sin(phase), enc)


def phi_hat_sq_shift(t: float, lam: int, cfg: EvalConfig = DEFAULT_CONFIG) -> Enclosure:
    """Enclosure of |mu4^(t + lam)|**2 for small t and an arbitrarily large integer lam."""
    if abs(t) > 2:
        raise ValueError("phi_hat_sq_shift expects |t| <= 2")
    lo, hi, _ = _shifted_product(t, int(lam), cfg)
    return Enclosure(lo, hi)


def partial_product(x: float, w) -> float:
    """prod_{j=1}^{N} cos^2(2 pi (x + w0 + 4 w1 + ... + 4**(N-1) w_{N-1}) / 4**j), N = len(w)."""
    n = len(w)
    if n < 1:
        raise ValueError("partial_product needs a non-empty word")
    v = word_value(w)
    p = 1.0
    for j in range(1, n + 1):
        a = _frac_of_ratio(v & ((1 << (2 * j)) - 1), j)
        p *= m(a + math.ldexp(x, -2 * j))
    return p


# -- vectorized helpers used by the certification code ---------------------------------


def _two_sum(a, b):
    """s = fl(a + b) and the exact rounding error e with a + b = s + e."""
    s = a + b
    bb = s - a
    e = (a - (s - bb)) + (b - bb)
    return s, e


def factor_bounds_array(a: np.ndarray, b) -> tuple[np.ndarray, np.ndarray]:
    """Bounds on cos^2(2 pi (a + b)) for exactly represented a and b.

    The rounding error of a + b is recovered exactly, so arguments that are
    exact quarter or whole integers give exact factors 0 and 1.
    """
    s, e = _two_sum(np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64))
    u = s - np.rint(s)
    du = np.abs(e)
    c = np.cos(TWO_PI * u)
    f = c * c
    err = 4.0 * math.pi * du * np.abs(c) + 4.0 * math.pi**2 * du * du + 3.0 * EPS * f
    lo = np.maximum(f - err, 0.0)
    hi = np.minimum(f + err, 1.0)
    exact = du == 0
    one = exact & (u == 0)
    zero = exact & (np.abs(u) == 0.25)
    lo = np.where(one, 1.0, np.where(zero, 0.0, lo))
    hi = np.where(one, 1.0, np.where(zero, 0.0, hi))
    return lo, hi


def mul_down(p: np.ndarray, f: np.ndarray) -> np.ndarray:
    """A lower bound on p * f for non-negative arrays (exact when f is 0 or 1)."""
    q = p * f
    return np.where((f == 1.0) | (f == 0.0), q, q * (1.0 - EPS))


def mul_up(p: np.ndarray, f: np.ndarray) -> np.ndarray:
    q = p * f
    return np.where((f == 1.0) | (f == 0.0), q, np.minimum(q * (1.0 + EPS), 1.0))


def sq_modulus_array(a, b=0.0, cfg: EvalConfig = DEFAULT_CONFIG) -> tuple[np.ndarray, np.ndarray]:
    """Elementwise enclosure of |mu4^(a + b)|^2 for exactly represented moderate a and b."""
    a, b = np.broadcast_arrays(np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64))
    lo = np.ones(a.shape)
    hi = np.ones(a.shape)
    ymax = float(np.max(np.abs(a) + np.abs(b))) if a.size else 0.0
    j = 1
    while True:
        x = TWO_PI * math.ldexp(ymax, -2 * j) * (1.0 + 4 * EPS)
        if x <= TAIL_ARG:
            x2 = x * x
            width = x2 * (16.0 / 15.0) + 16 * EPS
            if width <= cfg.abs_tol or x2 * x2 <= cfg.abs_tol:
                break
        if j > cfg.max_factors:
            raise ToleranceNotReached("vectorized enclosure did not converge")
        flo, fhi = factor_bounds_array(np.ldexp(a, -2 * j), np.ldexp(b, -2 * j))
        lo = mul_down(lo, flo)
        hi = mul_up(hi, fhi)
        j += 1
    v = TWO_PI * (np.ldexp(a, -2 * j) + np.ldexp(b, -2 * j))
    x2 = v * v
    s2 = x2 * (16.0 / 15.0)
    s4 = x2 * x2 * (256.0 / 255.0)
    tlo = np.where(v == 0, 1.0, np.exp(-s2 * (1.0 + 8 * EPS) - s4 / 3.0) * (1.0 - 8 * EPS))
    thi = np.where(v == 0, 1.0, np.exp(-s2 * (1.0 - 8 * EPS)) * (1.0 + 8 * EPS))
    return mul_down(lo, tlo), np.minimum(mul_up(hi, thi), 1.0)


# -- Monte Carlo -----------------------------------------------------------------------

BURN_IN = 64


def chaos_sample(count: int, seed: int, chunk: int = 1 << 18) -> np.ndarray:
    """``count`` points of mu4 from independent 64-step chaos-game runs started at 0.

    Each run applies x -> (x + 2b)/4 with fair coin flips b.  Bits come from a
    Philox counter-based generator, so the output only depends on ``seed``.
    """
    if count < 1:
        raise ValueError("count must be positive")
    rng = np.random.Generator(np.random.Philox(seed & ((1 << 64) - 1)))
    out = np.empty(count, dtype=np.float64)
    for start in range(0, count, chunk):
        n = min(chunk, count - start)
        words = rng.bit_generator.random_raw(n)
        x = np.zeros(n)
        for i in range(BURN_IN):
            bit = ((words >> np.uint64(i)) & np.uint64(1)).astype(np.float64)
            x = (x + 2.0 * bit) * 0.25
        out[start : start + n] = x
    return out


def empirical_cf(samples, t: float) -> complex:
    """(1/M) sum exp(2 pi i t x_m)."""
    x = np.asarray(samples, dtype=np.float64)
    if x.size == 0:
        raise ValueError("empirical_cf needs at least one sample")
    if t == 0:
        return complex(1.0, 0.0)
    ang = TWO_PI * t * x
    return complex(np.cos(ang).mean(), np.sin(ang).mean())
