"""Base 4 expansions of arbitrary integers.

Every integer k has a unique expansion d0 d1 d2 ... with digits in {0,1,2,3}
obtained by repeated division with remainder, k = d0 + 4*k1, k1 = d1 + 4*k2, ...
Non-negative integers end in an infinite run of 0s, negative ones in an
infinite run of 3s.  Since Python integers behave as infinite two's complement
words, the n-th digit is simply ``(k >> 2n) & 3``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

DigitWord = tuple[int, ...]
_DIGITS = frozenset((0, 1, 2, 3))
# the 8 base 4 digits of every 16-bit chunk, least significant first
_CHUNK = [tuple((b >> (2 * i)) & 3 for i in range(8)) for b in range(1 << 16)]
_new = object.__new__
_setattr = object.__setattr__


class TailKind(enum.Enum):
    ZERO = 0
    THREE = 3

    @property
    def digit(self) -> int:
        return self.value


@dataclass(frozen=True)
class Code:
    """A finite prefix of digits followed by an infinite constant tail."""

    prefix: DigitWord
    tail: TailKind

    def __post_init__(self) -> None:
        prefix = tuple(int(d) for d in self.prefix)
        if not _DIGITS.issuperset(prefix):
            bad = next(d for d in prefix if d not in _DIGITS)
            raise ValueError(f"digit {bad} is not in {{0,1,2,3}}")
        object.__setattr__(self, "prefix", prefix)

    @classmethod
    def _trusted(cls, prefix: DigitWord, tail: TailKind) -> Code:
        # skips validation; callers guarantee a tuple of digits 0..3
        obj = _new(cls)
        _setattr(obj, "__dict__", {"prefix": prefix, "tail": tail})
        return obj

    def canonical(self) -> Code:
        p = list(self.prefix)
        while p and p[-1] == self.tail.digit:
            p.pop()
        return Code(tuple(p), self.tail)

    def is_canonical(self) -> bool:
        return not self.prefix or self.prefix[-1] != self.tail.digit

    def __str__(self) -> str:
        return render(self)


def encode(k: int) -> Code:
    """Canonical base 4 code of ``k``."""
    if k.__class__ is not int:
        k = int(k)
    if k >= 0:
        n = (k.bit_length() + 1) >> 1
        tail = TailKind.ZERO
    else:
        n = ((~k).bit_length() + 1) >> 1
        tail = TailKind.THREE
    if n <= 8:
        return Code._trusted(_CHUNK[k & 0xFFFF][:n], tail)
    if n <= 16:
        return Code._trusted((_CHUNK[k & 0xFFFF] + _CHUNK[(k >> 16) & 0xFFFF])[:n], tail)
    digits: DigitWord = ()
    x = k
    for _ in range((n + 7) // 8):
        digits += _CHUNK[x & 0xFFFF]
        x >>= 16
    return Code._trusted(digits[:n], tail)


def decode(c: Code) -> int:
    prefix = c.prefix
    if len(prefix) <= 32:
        value = 0
        for d in reversed(prefix):
            value = (value << 2) | d
    else:
        # linear-time conversion for long words
        value = int("".join(map(str, reversed(prefix))), 4)
    if c.tail is TailKind.THREE:
        # trailing 3s do not change the value: d + 3*4^n - 4^(n+1) = d - 4^n
        value -= 1 << (2 * len(prefix))
    return value


def digit_at(k: int, n: int) -> int:
    if n < 0:
        raise ValueError("digit position must be non-negative")
    return (int(k) >> (2 * n)) & 3


def lng(k: int) -> int:
    """Length of the expansion: first position after which digits are constant 0 or 3."""
    k = int(k)
    m = k if k >= 0 else ~k
    return (m.bit_length() + 1) // 2


def prepend_value(w: Sequence[int], b: int) -> int:
    """The integer whose expansion is the word ``w`` followed by the expansion of ``b``."""
    return word_value(w) + (int(b) << (2 * len(w)))


def word_value(w: Iterable[int]) -> int:
    """Sum of 4**k * w[k]; digits may be any integers."""
    value = 0
    for k, d in enumerate(w):
        value += int(d) << (2 * k)
    return value


def first_digits(k: int, n: int) -> DigitWord:
    return tuple(_digits(int(k), n))


def _digits(k: int, n: int) -> list[int]:
    return [(k >> (2 * i)) & 3 for i in range(n)]


def render(c: Code) -> str:
    """Text form ``d0 d1 ... dN | 0~`` (or ``| 3~``)."""
    body = " ".join(str(d) for d in c.prefix)
    marker = f"| {c.tail.digit}~"
    return f"{body} {marker}" if body else marker


def parse(text: str) -> Code:
    """Inverse of :func:`render`; surrounding whitespace is ignored."""
    head, sep, tail = text.strip().partition("|")
    if not sep:
        raise ValueError(f"missing '|' tail marker in {text!r}")
    tail = tail.strip()
    if tail == "0~":
        kind = TailKind.ZERO
    elif tail == "3~":
        kind = TailKind.THREE
    else:
        raise ValueError(f"tail marker must be '0~' or '3~', got {tail!r}")
    digits = []
    for tok in head.split():
        if tok not in ("0", "1", "2", "3"):
            raise ValueError(f"bad digit {tok!r}")
        digits.append(int(tok))
    return Code(tuple(digits), kind)
