"""Spectral labelings of the binary tree and digit systems.

A labeling assigns to every vertex of the infinite binary tree a pair of edge
digits of different parity.  Vertices are identified with the digit words read
from the root.  Rules are generative: each rule is a small state machine with

* ``root()``            the state of the root vertex,
* ``pair(state)``       the two edge digits leaving that vertex (sorted),
* ``child(state, d)``   the state reached along edge ``d``,
* ``tail(state, d)``    a structural certificate: True/False if the constant
                        continuation d d d ... certainly does/does not stay in
                        the tree, None when the rule cannot tell.

The frequency set of a labeling consists of the integers whose base 4
expansion is a root path ending in 0 0 0 ... or 3 3 3 ...
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Iterator, Mapping, Sequence, Union

import numpy as np

from .base4 import Code, encode, lng
from .errors import BudgetExceeded, ConfigError, InvalidParams, ParityError, StepBudgetExceeded, VertexNotInTree

Pair = tuple[int, int]
Word = tuple[int, ...]

DEFAULT_HORIZON = 32
DEFAULT_BUDGET = 1 << 22


def check_pair(pair: Iterable[int]) -> Pair:
    p = tuple(sorted(int(d) for d in pair))
    if len(p) != 2:
        raise InvalidParams(f"a vertex needs exactly two labels, got {p}")
    if any(d not in (0, 1, 2, 3) for d in p):
        raise InvalidParams(f"labels must be digits 0..3, got {p}")
    if (p[0] - p[1]) % 2 == 0:
        raise InvalidParams(f"labels {p} have the same parity")
    return p  # type: ignore[return-value]


class LabelingRule:
    """Base class for generative labelings."""

    name = "rule"

    def root(self) -> Any:
        raise NotImplementedError

    def pair(self, state: Any) -> Pair:
        raise NotImplementedError

    def child(self, state: Any, digit: int) -> Any:
        raise NotImplementedError

    def tail(self, state: Any, digit: int) -> bool | None:
        return None

    def level_pair(self, n: int) -> Pair | None:
        """The pair used at every vertex of depth n, for rules that only depend on depth."""
        return None

    def reach_tail(self, state: Any) -> bool | None:
        """Whether some path from this vertex ends in constant 0 or 3; None if unknown."""
        if self.tail(state, 0) or self.tail(state, 3):
            return True
        return None

    # derived helpers

    def state_of(self, word: Sequence[int]) -> Any:
        s = self.root()
        for i, d in enumerate(word):
            if d not in self.pair(s):
                raise VertexNotInTree(f"{tuple(word)} leaves the tree at position {i}")
            s = self.child(s, d)
        return s

    def pair_at(self, word: Sequence[int]) -> Pair:
        return self.pair(self.state_of(word))

    def contains(self, word: Sequence[int]) -> bool:
        try:
            self.state_of(word)
        except VertexNotInTree:
            return False
        return True

    def even_label(self, state: Any) -> int:
        a, b = self.pair(state)
        return a if a % 2 == 0 else b

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.name}>"


def constant_tail(rule: LabelingRule, state: Any, digit: int, horizon: int = DEFAULT_HORIZON) -> bool:
    """Whether d d d ... continues inside the tree, by certificate or up to ``horizon`` steps."""
    cert = rule.tail(state, digit)
    if cert is not None:
        return cert
    s = state
    for _ in range(horizon):
        if digit not in rule.pair(s):
            return False
        s = rule.child(s, digit)
    return True


# -- depth-only rules ------------------------------------------------------------------


class LevelRule(LabelingRule):
    """Same pair at every vertex of a given depth; ``pairs`` overrides ``default`` per level."""

    def __init__(self, default: Iterable[int], pairs: Mapping[int, Iterable[int]] | None = None, name: str = "uniform"):
        self.default = check_pair(default)
        self.pairs = {int(n): check_pair(p) for n, p in (pairs or {}).items()}
        if any(n < 0 for n in self.pairs):
            raise InvalidParams("levels must be non-negative")
        self.name = name
        self._last = max(self.pairs, default=-1)

    def root(self) -> int:
        return 0

    def level_pair(self, n: int) -> Pair:
        return self.pairs.get(n, self.default)

    def pair(self, state: int) -> Pair:
        return self.level_pair(state)

    def child(self, state: int, digit: int) -> int:
        if digit not in self.level_pair(state):
            raise VertexNotInTree(f"digit {digit} is not a label at depth {state}")
        return state + 1

    def tail(self, state: int, digit: int) -> bool:
        if digit not in self.default:
            return False
        return all(digit in self.pairs[n] for n in self.pairs if n >= state)


def jp_rule() -> LevelRule:
    return LevelRule((0, 1), name="jp")


# -- explicit per-vertex overrides -----------------------------------------------------

_DETACHED = object()


class OverrideRule(LabelingRule):
    """Explicit pairs at listed vertices, ``fallback`` everywhere else."""

    def __init__(self, table: Mapping[Sequence[int], Iterable[int]], fallback: LabelingRule, name: str = "override"):
        self.table = {tuple(int(d) for d in w): check_pair(p) for w, p in table.items()}
        self.fallback = fallback
        self.name = name
        self._depth = max((len(w) for w in self.table), default=-1)

    def root(self):
        return ((), self.fallback.root())

    def pair(self, state) -> Pair:
        word, fb = state
        if word in self.table:
            return self.table[word]
        if fb is not _DETACHED:
            return self.fallback.pair(fb)
        p = self.fallback.level_pair(len(word))
        if p is None:
            raise InvalidParams(f"vertex {word} left the fallback tree of a depth-dependent override")
        return p

    def child(self, state, digit: int):
        if digit not in self.pair(state):
            raise VertexNotInTree(f"digit {digit} is not a label at {state[0]}")
        word, fb = state
        if fb is not _DETACHED and digit in self.fallback.pair(fb):
            fb = self.fallback.child(fb, digit)
        else:
            fb = _DETACHED
        return (word + (digit,), fb)

    def tail(self, state, digit: int) -> bool | None:
        word, fb = state
        if len(word) > self._depth and fb is not _DETACHED:
            return self.fallback.tail(fb, digit)
        return None


# -- grafting --------------------------------------------------------------------------


class ComposedRule(LabelingRule):
    """Root edges e1, e2 with the subtrees below them labeled by r1 and r2."""

    def __init__(self, e1: int, r1: LabelingRule, e2: int, r2: LabelingRule):
        if (e1 - e2) % 2 == 0:
            raise ParityError(f"root labels {e1} and {e2} have the same parity")
        check_pair((e1, e2))
        self.e1, self.r1, self.e2, self.r2 = int(e1), r1, int(e2), r2
        self.name = f"compose({e1},{r1.name},{e2},{r2.name})"

    def root(self):
        return (0, None)

    def _sub(self, branch: int) -> LabelingRule:
        return self.r1 if branch == 1 else self.r2

    def pair(self, state) -> Pair:
        branch, s = state
        if branch == 0:
            return check_pair((self.e1, self.e2))
        return self._sub(branch).pair(s)

    def child(self, state, digit: int):
        branch, s = state
        if branch == 0:
            if digit == self.e1:
                return (1, self.r1.root())
            if digit == self.e2:
                return (2, self.r2.root())
            raise VertexNotInTree(f"digit {digit} is not a root label")
        return (branch, self._sub(branch).child(s, digit))

    def tail(self, state, digit: int) -> bool | None:
        branch, s = state
        if branch == 0:
            if digit == self.e1:
                return self.r1.tail(self.r1.root(), digit)
            if digit == self.e2:
                return self.r2.tail(self.r2.root(), digit)
            return False
        return self._sub(branch).tail(s, digit)

    def reach_tail(self, state) -> bool | None:
        branch, s = state
        if branch == 0:
            subs = (self.r1.reach_tail(self.r1.root()), self.r2.reach_tail(self.r2.root()))
            return True if True in subs else None
        return self._sub(branch).reach_tail(s)


def compose(e1: int, r1: LabelingRule, e2: int, r2: LabelingRule) -> ComposedRule:
    return ComposedRule(e1, r1, e2, r2)


# -- the maximal-but-incomplete family -------------------------------------------------


class Gap:
    """Strictly increasing g with g(k) > k, controlling where the relabeled levels sit."""

    def __init__(self, fn: Callable[[int], int], name: str):
        self.fn = fn
        self.name = name

    def __call__(self, k: int) -> int:
        return self.fn(k)

    def __repr__(self) -> str:
        return f"Gap({self.name})"


def default_gap() -> Gap:
    return Gap(lambda k: 10 ** (k + 2), "paper")


def poly_gap(c: int) -> Gap:
    if c < 1:
        raise InvalidParams("poly gap offset must be at least 1")
    return Gap(lambda k: k + c, f"poly:{c}")


def parse_gap(text: str) -> Gap:
    text = text.strip()
    if text == "paper":
        return default_gap()
    if text.startswith("poly:"):
        try:
            c = int(text[5:])
        except ValueError:
            raise InvalidParams(f"bad poly gap {text!r}") from None
        return poly_gap(c)
    raise InvalidParams(f"gap must be 'paper' or 'poly:<c>', got {text!r}")


class CounterexampleRule(LabelingRule):
    """The {0,1} tree with {1,2} at depth g(N) below every vertex whose N-th choice was 1.

    Vertices are tracked by the underlying 0/1 choices delta_n; the edge digit is
    delta_n, or 1 + delta_n at a relabeled depth.  Its frequency set is
    { sum_k (4**g(k) + 4**k) delta_k }.
    """

    def __init__(self, gap: Gap | None = None):
        self.gap = gap or default_gap()
        self.name = f"counterexample({self.gap.name})"

    def root(self):
        return (0, frozenset())

    def pair(self, state) -> Pair:
        n, pending = state
        return (1, 2) if n in pending else (0, 1)

    def child(self, state, digit: int):
        n, pending = state
        relabeled = n in pending
        delta = digit - 1 if relabeled else digit
        if delta not in (0, 1):
            raise VertexNotInTree(f"digit {digit} is not a label at depth {n}")
        new = set(pending)
        new.discard(n)
        if delta == 1:
            new.add(self.gap(n))
        return (n + 1, frozenset(new))

    def tail(self, state, digit: int) -> bool:
        _, pending = state
        return digit == 0 and not pending

    def reach_tail(self, state) -> bool:
        # choosing delta = 0 everywhere clears the pending levels and then stays at 0
        return True


def counterexample_set(gap: Gap, n_max: int) -> list[int]:
    """All sum_{k<=n_max} (4**g(k) + 4**k) delta_k, sorted."""
    terms = [(1 << (2 * gap(k))) + (1 << (2 * k)) for k in range(n_max + 1)]
    values = [0]
    for t in terms:
        values = values + [v + t for v in values]
    return sorted(values)


# -- the spectrum that fails the good-path hypothesis ------------------------------------


class ExR4Rule(LabelingRule):
    """Path 1 1 1 ... from the root; {0,1} at the root with a {0,1} tree under 0.

    At the vertex 1^n (n >= 1) the pair is {1,2}; the subtree hanging from 1^n
    keeps {1,2} for its first n levels and uses {0,1} afterwards.
    """

    name = "exr4"

    def root(self):
        return ("path", 0)

    def pair(self, state) -> Pair:
        kind = state[0]
        if kind == "jp":
            return (0, 1)
        if kind == "path":
            return (0, 1) if state[1] == 0 else (1, 2)
        return (1, 2)

    def child(self, state, digit: int):
        if digit not in self.pair(state):
            raise VertexNotInTree(f"digit {digit} is not a label at {state}")
        kind = state[0]
        if kind == "jp":
            return state
        if kind == "path":
            n = state[1]
            if digit == 1:
                return ("path", n + 1)
            if n == 0:
                return ("jp",)
            return self._bar(n, 1)
        _, n, k = state
        return self._bar(n, k + 1)

    @staticmethod
    def _bar(n: int, k: int):
        return ("jp",) if k >= n else ("bar", n, k)

    def tail(self, state, digit: int) -> bool:
        kind = state[0]
        if kind == "jp" or state == ("path", 0):
            return digit == 0
        return False

    def reach_tail(self, state) -> bool:
        # every barrage ends in a {0,1} tree; the path 1 1 1 ... can branch off with 2
        return True


# -- digit systems ---------------------------------------------------------------------


@dataclass(frozen=True)
class DigitSystem:
    """Digit pairs {0, a} with a odd, chosen per level or per prefix of earlier digits.

    Lookup order for the odd digit after the chosen digits ``a_prefix``:
    ``prefixes[a_prefix]``, then ``levels[len(a_prefix)]`` (or ``level_fn``), then
    ``default``.
    """

    default: int
    levels: tuple[int, ...] = ()
    prefixes: Mapping[Word, int] = field(default_factory=dict)
    level_fn: Callable[[int], int] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "levels", tuple(int(a) for a in self.levels))
        object.__setattr__(self, "prefixes", {tuple(int(x) for x in k): int(v) for k, v in self.prefixes.items()})
        for a in (self.default, *self.levels, *self.prefixes.values()):
            if a % 2 == 0:
                raise InvalidParams(f"digit pair {{0,{a}}} needs an odd second digit")

    @classmethod
    def constant(cls, a: int) -> DigitSystem:
        return cls(default=a)

    @classmethod
    def level_dependent(cls, seq: Sequence[int] | Callable[[int], int], default: int | None = None) -> DigitSystem:
        if callable(seq):
            return cls(default=1 if default is None else default, level_fn=seq)
        seq = tuple(seq)
        return cls(default=seq[-1] if default is None else default, levels=seq)

    @classmethod
    def per_prefix(cls, table: Mapping[Sequence[int], int], default: int) -> DigitSystem:
        return cls(default=default, prefixes={tuple(k): v for k, v in table.items()})

    @property
    def explicit_depth(self) -> int:
        depth = len(self.levels)
        for k in self.prefixes:
            depth = max(depth, len(k) + 1)
        return depth

    @property
    def bounded(self) -> bool:
        return self.level_fn is None

    def max_digit(self) -> int:
        if not self.bounded:
            raise InvalidParams("unbounded digit system")
        return max(abs(a) for a in (self.default, *self.levels, *self.prefixes.values()))

    # context: the chosen prefix while it still matters, then None (or the level for level_fn)

    def start(self):
        if self.level_fn is not None:
            return 0
        return () if self.explicit_depth > 0 else None

    def odd_at(self, ctx) -> int:
        if self.level_fn is not None:
            a = int(self.level_fn(ctx))
            if a % 2 == 0:
                raise InvalidParams(f"level {ctx} digit {a} is even")
            return a
        if ctx is None:
            return self.default
        if ctx in self.prefixes:
            return self.prefixes[ctx]
        if len(ctx) < len(self.levels):
            return self.levels[len(ctx)]
        return self.default

    def advance(self, ctx, a: int):
        if self.level_fn is not None:
            return ctx + 1
        if ctx is None:
            return None
        nxt = ctx + (a,)
        return nxt if len(nxt) < self.explicit_depth else None

    def digits_at(self, ctx) -> tuple[int, int]:
        return (0, self.odd_at(ctx))


@dataclass(frozen=True)
class Member:
    prefix: tuple[int, ...]
    cycle: tuple[int, ...]

    is_member = True

    def digit(self, n: int) -> int:
        if n < len(self.prefix):
            return self.prefix[n]
        return self.cycle[(n - len(self.prefix)) % len(self.cycle)]


@dataclass(frozen=True)
class NotMember:
    position: int
    residual: int

    is_member = False


ExpansionResult = Union[Member, NotMember]


def a_expansion(system: DigitSystem, k: int, max_steps: int = 10_000) -> ExpansionResult:
    """A-base 4 expansion of k: digits a_n from the system with sum a_n 4**n = k mod 4**N for all N.

    At each step the digit is forced by the residual modulo 4; the expansion is
    eventually periodic exactly when the (context, residual) state repeats.
    """
    if max_steps < 1:
        raise ValueError("max_steps must be positive")
    r = int(k)
    ctx = system.start()
    seen: dict[tuple, int] = {}
    digits: list[int] = []
    for step in range(max_steps):
        if r == 0:
            # 0 is a label at every level, so the remaining digits are all 0
            return Member(tuple(digits), (0,))
        key = (ctx, r)
        if key in seen:
            s = seen[key]
            return Member(tuple(digits[:s]), tuple(digits[s:]))
        seen[key] = step
        choices = [a for a in system.digits_at(ctx) if (a - r) % 4 == 0]
        assert len(choices) <= 1, "two digits of one pair are congruent mod 4"
        if not choices:
            return NotMember(step, r)
        a = choices[0]
        digits.append(a)
        r = (r - a) // 4
        ctx = system.advance(ctx, a)
    raise StepBudgetExceeded(f"no cycle or failure for {k} within {max_steps} steps")


def lambda_A_window(system: DigitSystem, M: int, max_steps: int = 10_000) -> set[int]:
    if M < 1:
        raise ValueError("window radius must be positive")
    return {k for k in range(-M, M + 1) if a_expansion(system, k, max_steps).is_member}


class DigitSystemRule(LabelingRule):
    """The unique spectral labeling whose frequency set is the A-expansion set of a digit system.

    State: (context, carry) where carry = (sum a_k 4**k - sum d_k 4**k) / 4**n over
    the first n positions; the next edge digits are carry and carry + a modulo 4.
    """

    def __init__(self, system: DigitSystem, name: str = "digits", tail_steps: int = 10_000):
        self.system = system
        self.name = name
        self.tail_steps = tail_steps

    def root(self):
        return (self.system.start(), 0)

    def pair(self, state) -> Pair:
        ctx, c = state
        a = self.system.odd_at(ctx)
        return tuple(sorted((c % 4, (c + a) % 4)))  # type: ignore[return-value]

    def _step(self, state, digit: int):
        ctx, c = state
        a = self.system.odd_at(ctx)
        if c % 4 == digit:
            chosen = 0
        elif (c + a) % 4 == digit:
            chosen = a
        else:
            return None
        return (self.system.advance(ctx, chosen), (c + chosen - digit) // 4)

    def child(self, state, digit: int):
        nxt = self._step(state, digit)
        if nxt is None:
            raise VertexNotInTree(f"digit {digit} is not a label at {state}")
        return nxt

    def tail(self, state, digit: int) -> bool | None:
        seen = set()
        s = state
        for _ in range(self.tail_steps):
            if s[0] is None and self.system.bounded:
                if s in seen:
                    return True
                seen.add(s)
            s = self._step(s, digit)
            if s is None:
                return False
        return None


    def reach_tail(self, state) -> bool | None:
        if self.system.bounded:
            # the carry of the 0-choice path shrinks into [-1, 0] and then stays there
            return True
        return super().reach_tail(state)


def digitsystem_to_rule(system: DigitSystem) -> DigitSystemRule:
    return DigitSystemRule(system)


# -- builtin factory -------------------------------------------------------------------


def builtin_rule(name: str, **params) -> LabelingRule:
    """Construct one of the named rules.

    ``jp``; ``uniform`` (default=pair, pairs={level: pair}); ``const03``;
    ``digits`` (system=DigitSystem); ``counterexample`` (gap=Gap);
    ``exr4``; ``override`` (table={word: pair}, fallback=rule).
    """
    key = name.lower()
    try:
        if key == "jp":
            return jp_rule()
        if key in ("uniform", "uniformpairperlevel"):
            return LevelRule(params.get("default", (0, 1)), params.get("pairs"), name=params.get("label", "uniform"))
        if key == "const03":
            return LevelRule((0, 3), name="const03")
        if key in ("digits", "digitsystemrule"):
            return DigitSystemRule(params["system"])
        if key == "counterexample":
            return CounterexampleRule(params.get("gap"))
        if key == "exr4":
            return ExR4Rule()
        if key == "override":
            return OverrideRule(params["table"], params.get("fallback") or jp_rule())
    except KeyError as exc:
        raise InvalidParams(f"rule {name!r} needs parameter {exc.args[0]!r}") from None
    raise InvalidParams(f"unknown rule {name!r}")


# -- validation ------------------------------------------------------------------------


@dataclass(frozen=True)
class ValidationReport:
    status: str  # "verified", "failed" or "inconclusive"
    depth: int
    vertex: Word | None = None
    reason: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "verified"


def _levels_of_states(rule: LabelingRule, depth: int, budget: int) -> Iterator[list[tuple[Word, Any]]]:
    level = [((), rule.root())]
    yield level
    for _ in range(depth):
        if 2 * len(level) > budget:
            raise BudgetExceeded(f"more than {budget} vertices")
        nxt = []
        for w, s in level:
            for d in rule.pair(s):
                nxt.append((w + (d,), rule.child(s, d)))
        level = nxt
        yield level


def validate_rule(rule: LabelingRule, D: int, budget: int = DEFAULT_BUDGET) -> ValidationReport:
    """Check parity everywhere above depth D and the eventually-constant path condition.

    A vertex v of depth <= D/2 passes the path condition if the rule certifies
    that some path from v ends in 0 0 0 ... or 3 3 3 ..., or if some path
    from v reaches depth D with constant labels over the last ceil(D/2) levels.
    """
    if D < 1:
        raise ValueError("depth must be at least 1")
    run_start = D // 2
    levels = []
    for n, level in enumerate(_levels_of_states(rule, D, budget)):
        if n < D:
            for w, s in level:
                a, b = rule.pair(s)
                if (a - b) % 2 == 0 or a not in range(4) or b not in range(4):
                    return ValidationReport("failed", D, w, f"labels {a},{b} at {w} violate parity")
        if n <= run_start:
            levels.append(level)
        else:
            break
    # can[w]: some path from w reaches depth D with constant labels on [run_start, D)
    can: dict[Word, bool] = {}
    for w, s in levels[run_start]:
        can[w] = any(_constant_run(rule, s, c, D - run_start) for c in (0, 3))
    for n in range(run_start - 1, -1, -1):
        for w, s in levels[n]:
            can[w] = any(can[w + (d,)] for d in rule.pair(s))
    for n in range(0, run_start + 1):
        for w, s in levels[n]:
            if can[w]:
                continue
            if rule.reach_tail(s) is True:
                continue
            return ValidationReport("inconclusive", D, w, f"no path from {w} ending in a constant 0 or 3 run by depth {D}")
    return ValidationReport("verified", D)


def _constant_run(rule: LabelingRule, state, digit: int, steps: int) -> bool:
    s = state
    for _ in range(steps):
        if digit not in rule.pair(s):
            return False
        s = rule.child(s, digit)
    return True


# -- enumeration -----------------------------------------------------------------------


@dataclass
class TreeLevels:
    """Breadth-first layout of the tree down to depth L.

    Level n+1 lists the first children of all level-n vertices, then the second
    children, so vertex i of level n+1 has parent i mod size(n).
    """

    first: list[np.ndarray]
    second: list[np.ndarray]
    tail0: np.ndarray
    tail3: np.ndarray
    depth: int

    def values(self) -> np.ndarray:
        v = np.zeros(1, dtype=np.int64)
        for n in range(self.depth):
            scale = np.int64(1) << np.int64(2 * n)
            v = np.concatenate([v + scale * self.first[n], v + scale * self.second[n]])
        return v


def tree_levels(
    rule: LabelingRule, L: int, horizon: int = DEFAULT_HORIZON, budget: int = DEFAULT_BUDGET, tails: bool = True
) -> TreeLevels:
    if L < 0:
        raise ValueError("depth must be non-negative")
    if (1 << L) > budget:
        raise BudgetExceeded(f"2^{L} leaves exceed the budget of {budget}")
    first: list[np.ndarray] = []
    second: list[np.ndarray] = []
    uniform = all(rule.level_pair(n) is not None for n in range(L + 1))
    if uniform and isinstance(rule, LevelRule):
        for n in range(L):
            a, b = rule.level_pair(n)
            first.append(np.full(1 << n, a, dtype=np.int8))
            second.append(np.full(1 << n, b, dtype=np.int8))
        size = 1 << L
        t0 = tails and constant_tail(rule, L, 0, horizon)
        t3 = tails and constant_tail(rule, L, 3, horizon)
        return TreeLevels(first, second, np.full(size, t0), np.full(size, t3), L)
    states = [rule.root()]
    for n in range(L):
        pairs = [rule.pair(s) for s in states]
        f = np.fromiter((p[0] for p in pairs), dtype=np.int8, count=len(pairs))
        g = np.fromiter((p[1] for p in pairs), dtype=np.int8, count=len(pairs))
        first.append(f)
        second.append(g)
        states = [rule.child(s, p[0]) for s, p in zip(states, pairs)] + [
            rule.child(s, p[1]) for s, p in zip(states, pairs)
        ]
    if not tails:
        empty = np.zeros(len(states), dtype=bool)
        return TreeLevels(first, second, empty, empty, L)
    t0 = np.fromiter((constant_tail(rule, s, 0, horizon) for s in states), dtype=bool, count=len(states))
    t3 = np.fromiter((constant_tail(rule, s, 3, horizon) for s in states), dtype=bool, count=len(states))
    return TreeLevels(first, second, t0, t3, L)


@dataclass(frozen=True)
class SpectrumSet:
    """Frequencies of length at most L, sorted, with their base 4 codes."""

    values: tuple[int, ...]
    rule_name: str = ""
    L: int | None = None

    def __post_init__(self) -> None:
        vals = tuple(int(v) for v in self.values)
        if any(a >= b for a, b in zip(vals, vals[1:])):
            raise ValueError("values must be strictly increasing")
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_iterable(cls, values: Iterable[int], rule_name: str = "set", L: int | None = None) -> SpectrumSet:
        return cls(tuple(sorted(set(int(v) for v in values))), rule_name, L)

    @property
    def paths(self) -> list[Code]:
        return [encode(v) for v in self.values]

    @property
    def elements(self) -> list[tuple[int, Code]]:
        return list(zip(self.values, self.paths))

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self) -> Iterator[int]:
        return iter(self.values)

    def __contains__(self, k: object) -> bool:
        return k in self._lookup

    @property
    def _lookup(self) -> frozenset:
        cached = self.__dict__.get("_set")
        if cached is None:
            cached = frozenset(self.values)
            object.__setattr__(self, "_set", cached)
        return cached

    def truncate(self, L: int) -> SpectrumSet:
        return SpectrumSet(tuple(v for v in self.values if lng(v) <= L), self.rule_name, L)


def enumerate_rule(rule: LabelingRule, L: int, horizon: int = DEFAULT_HORIZON, budget: int = DEFAULT_BUDGET) -> SpectrumSet:
    """All frequencies of the labeling whose expansion has length <= L.

    Walks the tree to depth L; a leaf contributes its prefix value when the
    constant 0 continuation is available and prefix - 4**L when the constant 3
    continuation is.
    """
    tree = tree_levels(rule, L, horizon, budget)
    v = tree.values()
    top = np.int64(1) << np.int64(2 * L)
    vals = np.concatenate([v[tree.tail0], v[tree.tail3] - top])
    vals.sort()
    return SpectrumSet(tuple(int(x) for x in vals), rule.name, L)


# -- configuration files ---------------------------------------------------------------

_BUILTIN_REFS = ("jp", "const03", "exr4", "counterexample")


def _cfg_error(msg: str, line: int, column: int) -> ConfigError:
    return ConfigError(msg, line, column)


def _parse_ints(text: str, line: int, column: int, count: int | None = None) -> list[int]:
    out = []
    offset = 0
    for tok in text.split(","):
        stripped = tok.strip()
        col = column + offset + (len(tok) - len(tok.lstrip()))
        try:
            out.append(int(stripped))
        except ValueError:
            raise _cfg_error(f"expected an integer, got {stripped!r}", line, col) from None
        offset += len(tok) + 1
    if count is not None and len(out) != count:
        raise _cfg_error(f"expected {count} comma separated integers", line, column)
    return out


def _parse_word(text: str, line: int, column: int, sep: str) -> Word:
    if text == "root":
        return ()
    parts = text.split(sep) if sep else list(text)
    try:
        return tuple(int(p) for p in parts)
    except ValueError:
        raise _cfg_error(f"bad vertex word {text!r}", line, column) from None


def _entries(text: str):
    """(key, value, line, key column, value column) for each non-comment line."""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0]
        if not body.strip():
            continue
        if "=" not in body:
            col = len(body) - len(body.lstrip()) + 1
            raise _cfg_error("expected key=value", lineno, col)
        key_part, value_part = body.split("=", 1)
        key = key_part.strip()
        kcol = len(key_part) - len(key_part.lstrip()) + 1
        value = value_part.strip()
        vcol = len(key_part) + 2 + (len(value_part) - len(value_part.lstrip()))
        if not key:
            raise _cfg_error("empty key", lineno, kcol)
        yield key, value, lineno, kcol, vcol


def parse_system_config(text: str) -> DigitSystem:
    """A digit system from ``digits.default``, ``digits.level.<n>`` and ``digits.prefix.<w>`` keys."""
    system, _ = _system_from_entries(list(_entries(text)), strict=True)
    return system


def _system_from_entries(entries, strict: bool):
    default = None
    levels: dict[int, int] = {}
    prefixes: dict[Word, int] = {}
    for key, value, ln, kc, vc in entries:
        if not key.startswith("digits."):
            if strict and key != "rule":
                raise _cfg_error(f"unknown key {key!r}", ln, kc)
            continue
        zero, a = _parse_ints(value, ln, vc, 2)
        if zero != 0:
            raise _cfg_error("digit pairs must have the form 0,<odd>", ln, vc)
        if a % 2 == 0:
            raise _cfg_error(f"second digit {a} must be odd", ln, vc)
        rest = key[len("digits.") :]
        if rest == "default":
            default = a
        elif rest.startswith("level."):
            try:
                levels[int(rest[6:])] = a
            except ValueError:
                raise _cfg_error(f"bad level in {key!r}", ln, kc) from None
        elif rest.startswith("prefix."):
            prefixes[_parse_word(rest[7:], ln, kc + 14, "_")] = a
        else:
            raise _cfg_error(f"unknown key {key!r}", ln, kc)
    if default is None:
        if strict:
            raise _cfg_error("missing digits.default", 1, 1)
        return None, None
    level_seq = ()
    if levels:
        if sorted(levels) != list(range(len(levels))):
            raise _cfg_error("digits.level.<n> keys must cover 0..N without gaps", 1, 1)
        level_seq = tuple(levels[n] for n in range(len(levels)))
    return DigitSystem(default=default, levels=level_seq, prefixes=prefixes), levels


def parse_rule_ref(ref: str, base_dir: str | None = None) -> LabelingRule:
    """A builtin rule name or the path of a rule configuration file."""
    import os

    if ref in _BUILTIN_REFS:
        return builtin_rule(ref)
    path = ref if base_dir is None or os.path.isabs(ref) else os.path.join(base_dir, ref)
    if not os.path.exists(path):
        raise InvalidParams(f"{ref!r} is neither a builtin rule ({', '.join(_BUILTIN_REFS)}) nor a file")
    with open(path, encoding="utf-8") as fh:
        return parse_rule_config(fh.read(), base_dir=os.path.dirname(os.path.abspath(path)))


def parse_rule_config(text: str, base_dir: str | None = None) -> LabelingRule:
    """Build a rule from the line-oriented ``key=value`` format; errors carry line and column."""
    entries = list(_entries(text))
    name = None
    for key, value, ln, kc, vc in entries:
        if key == "rule":
            if name is not None:
                raise _cfg_error("duplicate rule key", ln, kc)
            name = (value, ln, vc)
    if name is None:
        raise _cfg_error("missing rule=<name>", 1, 1)
    rule_name, rln, rvc = name
    allowed = {
        "jp": (),
        "const03": (),
        "exr4": (),
        "uniform": ("pairs.level.", "pairs.default"),
        "digits": ("digits.",),
        "counterexample": ("gap",),
        "override": ("pairs.vertex.", "fallback"),
        "compose": ("graft.",),
    }
    if rule_name not in allowed:
        raise _cfg_error(f"unknown rule {rule_name!r}", rln, rvc)
    for key, value, ln, kc, vc in entries:
        if key != "rule" and not any(key.startswith(p) for p in allowed[rule_name]):
            raise _cfg_error(f"key {key!r} does not apply to rule {rule_name!r}", ln, kc)
    try:
        if rule_name in ("jp", "const03", "exr4"):
            return builtin_rule(rule_name)
        if rule_name == "uniform":
            default = (0, 1)
            pairs = {}
            for key, value, ln, kc, vc in entries:
                if key == "pairs.default":
                    default = _checked_pair(value, ln, vc)
                elif key.startswith("pairs.level."):
                    try:
                        n = int(key[12:])
                    except ValueError:
                        raise _cfg_error(f"bad level in {key!r}", ln, kc) from None
                    pairs[n] = _checked_pair(value, ln, vc)
            return LevelRule(default, pairs)
        if rule_name == "digits":
            system, _ = _system_from_entries(entries, strict=False)
            if system is None:
                raise _cfg_error("missing digits.default", rln, 1)
            return DigitSystemRule(system)
        if rule_name == "counterexample":
            gap = default_gap()
            for key, value, ln, kc, vc in entries:
                if key == "gap":
                    try:
                        gap = parse_gap(value)
                    except InvalidParams as exc:
                        raise _cfg_error(str(exc), ln, vc) from None
            return CounterexampleRule(gap)
        if rule_name == "override":
            table = {}
            fallback: LabelingRule = jp_rule()
            for key, value, ln, kc, vc in entries:
                if key == "fallback":
                    fallback = _ref_at(value, base_dir, ln, vc)
                elif key.startswith("pairs.vertex."):
                    table[_parse_word(key[13:], ln, kc + 13, "")] = _checked_pair(value, ln, vc)
            return OverrideRule(table, fallback)
        grafts = []
        for key, value, ln, kc, vc in entries:
            if key.startswith("graft."):
                try:
                    edge = int(key[6:])
                except ValueError:
                    raise _cfg_error(f"bad edge in {key!r}", ln, kc) from None
                grafts.append((edge, _ref_at(value, base_dir, ln, vc), ln, kc))
        if len(grafts) != 2:
            raise _cfg_error("compose needs exactly two graft.<edge> keys", rln, 1)
        (e1, r1, ln, kc), (e2, r2, _, _) = grafts
        try:
            return compose(e1, r1, e2, r2)
        except InvalidParams as exc:
            raise _cfg_error(str(exc), ln, kc) from None
    except InvalidParams as exc:
        if hasattr(exc, "line"):
            raise
        raise _cfg_error(str(exc), rln, rvc) from None


def _checked_pair(value: str, line: int, column: int) -> Pair:
    pair = _parse_ints(value, line, column, 2)
    try:
        return check_pair(pair)
    except InvalidParams as exc:
        raise _cfg_error(str(exc), line, column) from None


def _ref_at(value: str, base_dir: str | None, line: int, column: int) -> LabelingRule:
    try:
        return parse_rule_ref(value, base_dir)
    except InvalidParams as exc:
        if hasattr(exc, "line"):
            raise
        raise _cfg_error(str(exc), line, column) from None


def parse_set_text(text: str) -> list[int]:
    """Integers, one per line; ``#`` starts a comment."""
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0]
        tok = body.strip()
        if not tok:
            continue
        try:
            out.append(int(tok))
        except ValueError:
            raise _cfg_error(f"expected an integer, got {tok!r}", lineno, len(body) - len(body.lstrip()) + 1) from None
    return out
