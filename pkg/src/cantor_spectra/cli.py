"""Command line interface: ``cantor-spectra <command> ...``.

Exit codes: 0 on success, 1 on usage or configuration errors, 2 when a
requested verdict fails.
"""

from __future__ import annotations

import argparse
import os
import shlex
import sys
from typing import Sequence

from . import __version__
from .base4 import decode, encode, parse
from .certify import (
    DeficientAt,
    ExceptionalPath,
    GoodPathParams,
    LooksComplete,
    certificate_csv,
    check_pairwise_orthogonal,
    check_propr2,
    check_thsp2,
    completeness,
    counterexample_sum,
    default_grid,
    good_path_exists,
    maximality_window,
)
from .errors import CantorSpectraError, OrthogonalityViolation
from .labeling import (
    DigitSystem,
    LabelingRule,
    a_expansion,
    compose,
    enumerate_rule,
    parse_gap,
    parse_rule_ref,
    parse_set_text,
    parse_system_config,
)
from .measure import EvalConfig, chaos_sample, empirical_cf, in_zero_set, phi_hat

THREADS_ENV = "CANTOR_SPECTRA_THREADS"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse exits with 2 by default; usage errors are 1 here
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _out(line: str = "") -> None:
    sys.stdout.write(line + "\n")


def _nonneg(text: str) -> int:
    n = int(text)
    if n < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return n


def _positive(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return n


def _header(args: argparse.Namespace, **fields) -> None:
    _out(f"# cantor-spectra {__version__}")
    _out(f"# command: {args.command}")
    for key, value in fields.items():
        _out(f"# {key}: {value}")


def _threads(args: argparse.Namespace) -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            n = int(env)
        except ValueError:
            raise UsageError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    else:
        n = args.threads
    if n < 1:
        raise UsageError("thread count must be at least 1")
    return n


# -- rule, set and system references --------------------------------------------------


def load_rule(ref: str) -> LabelingRule:
    """Builtin name, ``compose:e1,r1,e2,r2`` or the path of a rule file."""
    if ref.startswith("compose:"):
        parts = ref[len("compose:") :].split(",")
        if len(parts) != 4:
            raise UsageError("compose references look like compose:e1,rule1,e2,rule2")
        try:
            e1, e2 = int(parts[0]), int(parts[2])
        except ValueError:
            raise UsageError(f"bad root labels in {ref!r}") from None
        return compose(e1, load_rule(parts[1]), e2, load_rule(parts[3]))
    return parse_rule_ref(ref)


def load_set(ref: str, levels: int | None = None) -> list[int]:
    """A set file, or ``nonneg:<rule>`` (the non-negative frequencies of a rule up to --levels)."""
    if ref.startswith("nonneg:"):
        if levels is None:
            raise UsageError("nonneg:<rule> sets need --levels")
        return [v for v in enumerate_rule(load_rule(ref[7:]), levels).values if v >= 0]
    if not os.path.exists(ref):
        raise UsageError(f"set file {ref!r} not found")
    with open(ref, encoding="utf-8") as fh:
        return parse_set_text(fh.read())


def load_system(ref: str) -> DigitSystem:
    """``const:<a>``, ``root:<a0>,<a>`` or the path of a digit system file."""
    try:
        if ref.startswith("const:"):
            return DigitSystem.constant(int(ref[6:]))
        if ref.startswith("root:"):
            a0, a = (int(x) for x in ref[5:].split(","))
            return DigitSystem.per_prefix({(): a0}, a)
    except ValueError:
        raise UsageError(f"bad digit system reference {ref!r}") from None
    if not os.path.exists(ref):
        raise UsageError(f"digit system file {ref!r} not found")
    with open(ref, encoding="utf-8") as fh:
        return parse_system_config(fh.read())


# -- commands --------------------------------------------------------------------------


def cmd_encode(args) -> int:
    for k in args.k:
        _out(str(encode(k)))
    return 0


def cmd_decode(args) -> int:
    try:
        code = parse(args.code)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _out(str(decode(code)))
    return 0


def cmd_zeros(args) -> int:
    if args.k:
        for k in args.k:
            _out(f"{k} {'zero' if in_zero_set(k) else 'nonzero'}")
        return 0
    _out(" ".join(str(k) for k in range(-args.window, args.window + 1) if in_zero_set(k)))
    return 0


def cmd_phi(args) -> int:
    amp = phi_hat(args.t, EvalConfig(abs_tol=args.tol))
    enc = amp.sq_modulus
    _out("t,re,im,sq_lo,sq_hi")
    _out(f"{args.t!r},{amp.re:.17g},{amp.im:.17g},{enc.lo:.17g},{enc.hi:.17g}")
    return 0


def cmd_gen(args) -> int:
    rule = load_rule(args.rule)
    spec = enumerate_rule(rule, args.levels)
    _header(args, rule=rule.name, levels=args.levels, count=len(spec))
    for value, code in spec.elements:
        _out(f"{value}\t{code}")
    return 0


def cmd_ortho(args) -> int:
    values = load_set(args.set, args.levels)
    _header(args, set=args.set, count=len(values))
    try:
        check_pairwise_orthogonal(sorted(set(values)))
    except OrthogonalityViolation as exc:
        _out(f"NOT ORTHOGONAL: {exc.a} {exc.b}")
        return 2
    _out(f"ORTHOGONAL: {len(set(values))} elements")
    return 0


def cmd_maximal(args) -> int:
    values = load_set(args.set, args.levels)
    rule = load_rule(args.rule) if args.rule else None
    _header(args, set=args.set, window=args.window, rule=rule.name if rule else "none")
    report = maximality_window(values, args.window, rule=rule)
    _out(f"outsiders witnessed: {len(report.witnesses)}")
    for k in report.beyond_truncation:
        _out(f"frequency beyond truncation: {k}")
    for k in report.undominated:
        _out(f"undominated: {k}")
    if report.all_witnessed:
        _out("MAXIMAL ON WINDOW")
        return 0
    _out("NOT MAXIMAL ON WINDOW")
    return 2


def cmd_goodpath(args) -> int:
    rule = load_rule(args.rule)
    p = GoodPathParams(args.p, args.q, args.horizon)
    _header(args, rule=rule.name, P=args.p, Q=args.q, horizon=args.horizon, depth=args.depth)
    if args.vertex is not None:
        vertex = tuple(int(x) for x in args.vertex.split())
        res = good_path_exists(rule, vertex, p)
        _out(f"vertex {' '.join(map(str, vertex))}: {res if res.found else f'NotFound({res.D})'}")
        return 0 if res.found else 2
    if args.exceptional:
        paths = [ExceptionalPath.parse(s) for s in args.exceptional]
        rep = check_propr2(rule, paths, p, args.depth)
        if rep.ok:
            for u, k in rep.tail_levels.items():
                _out(f"subtree {' '.join(map(str, u))}: good paths from {k} levels down")
            _out(f"CertifiedToDepth({rep.depth})")
            return 0
        _out(f"{rep.verdict}: {rep.reason}")
        return 2
    rep = check_thsp2(rule, p, args.depth)
    if rep.all_good:
        _out(f"AllGood({rep.depth}) vertices={rep.checked}")
        return 0
    _out(f"failing vertex: {' '.join(map(str, rep.failing_vertex)) or 'root'}")
    return 2


def cmd_certify(args) -> int:
    if (args.rule is None) == (args.set is None):
        raise UsageError("certify needs exactly one of --rule and --set")
    source = load_rule(args.rule) if args.rule else load_set(args.set, args.levels)
    superset = load_rule(args.superset) if args.superset else None
    grid = default_grid(args.grid, args.tmin, args.tmax)
    workers = _threads(args)
    report = completeness(
        source, args.levels, grid, EvalConfig(abs_tol=args.tol), margin=args.margin, superset=superset, workers=workers
    )
    _header(
        args,
        source=args.rule or args.set,
        superset=args.superset or "none",
        levels=args.levels,
        grid=f"{args.grid} points in [{args.tmin}, {args.tmax})",
        margin=args.margin,
    )
    sys.stdout.write(certificate_csv(report))
    _out(f"# min_h: {report.min_h:.15f}")
    _out(f"# max_h: {report.max_h:.15f}")
    _out(f"# verdict: {report.verdict}")
    if args.expect == "deficient":
        return 0 if isinstance(report.verdict, DeficientAt) else 2
    return 0 if isinstance(report.verdict, LooksComplete) else 2


def cmd_counterexample(args) -> int:
    gap = parse_gap(args.gaps)
    res = counterexample_sum(gap, args.nmax)
    _header(args, gaps=gap.name, nmax=args.nmax, terms=res.terms)
    _out(f"numeric_sum: {res.numeric_sum:.6e} (log10 {res.log2_numeric_sum / 3.321928094887362:.6f})")
    if res.log2_tail_bound == float("inf"):
        _out("tail_bound: inf")
    else:
        _out(f"tail_bound: {res.tail_bound:.6e} (log10 {res.log2_tail_bound / 3.321928094887362:.6f})")
    if res.tail_rigorous and res.total < 1:
        _out("NOT A SPECTRUM: sum+tail < 1")
    else:
        _out("no verdict: the tail bound is not rigorous for this gap")
    return 0


def cmd_member(args) -> int:
    system = load_system(args.system)
    _header(args, system=args.system, max_steps=args.max_steps)
    res = a_expansion(system, args.k, args.max_steps)
    if not res.is_member:
        _out(f"{args.k} not in Lambda(A): no digit fits residual {res.residual} at position {res.position}")
        return 0
    digits = " ".join(map(str, res.prefix)) + " " if res.prefix else ""
    _out(f"{args.k} = {digits}({' '.join(map(str, res.cycle))})~")
    if args.check_finite is not None:
        finite = _finite_sums(system, args.check_finite)
        inside = args.k in finite
        orth = all(in_zero_set(args.k - v) for v in finite)
        _out(f"finite sums up to length {args.check_finite}: {len(finite)}")
        _out(f"{args.k} is {'one' if inside else 'not one'} of them and is {'orthogonal' if orth else 'not orthogonal'} to all of them")
    return 0


def _finite_sums(system: DigitSystem, n: int) -> set[int]:
    """All sum_{k<n} a_k 4**k with digits chosen along the system."""
    states = [(system.start(), 0)]
    for k in range(n):
        states = [(system.advance(ctx, a), value + a * 4**k) for ctx, value in states for a in system.digits_at(ctx)]
    return {value for _, value in states}


def cmd_sample(args) -> int:
    ts = [float(x) for x in args.t.split(",")]
    _header(args, count=args.count, seed=args.seed)
    xs = chaos_sample(args.count, args.seed)
    _out("t,emp_re,emp_im,phi_re,phi_im,abs_diff")
    for t in ts:
        e = empirical_cf(xs, t)
        p = phi_hat(t).value
        _out(f"{t!r},{e.real:.6f},{e.imag:.6f},{p.real:.6f},{p.imag:.6f},{abs(e - p):.6f}")
    return 0


RECIPES: dict[str, tuple[str, str]] = {
    "jp-spectrum": ("certify --rule jp --levels 16 --grid 64", "the {0,1} tree gives a spectrum"),
    "corollary-03": ("goodpath --rule const03 --p 0 --q 0 --depth 10", "the {0,3} tree satisfies the good-path condition"),
    "digits-0-3-incomplete": (
        "certify --set nonneg:const03 --levels 12 --grid 64 --tmin -1 --tmax 0 --superset const03 --expect deficient",
        "finite {0,3} sums are incomplete",
    ),
    "digits-15-9-nonmaximal": (
        "member --system root:15,9 --k 3 --check-finite 8",
        "3 = 15 999... is orthogonal to the finite {0,15}/{0,9} sums",
    ),
    "counterexample-paper": ("counterexample --gaps paper --nmax 2", "a maximal family that is not a spectrum"),
    "exr4-propr2": (
        "goodpath --rule exr4 --p 0 --q 0 --depth 10 --exceptional (1)~",
        "a spectrum outside the good-path condition, via one exceptional path",
    ),
    "compose-propr1": ("certify --rule compose:0,jp,1,jp --levels 12 --grid 64", "grafting two spectra"),
}


def cmd_recipes(args) -> int:
    if args.run:
        if args.run not in RECIPES:
            raise UsageError(f"unknown recipe {args.run!r}")
        return main(shlex.split(RECIPES[args.run][0]))
    for name, (command, what) in RECIPES.items():
        _out(f"{name}\t{command}\t# {what}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cantor-spectra", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"cantor-spectra {__version__}")
    parser.add_argument("--threads", type=_positive, default=1, help=f"worker threads (overridden by {THREADS_ENV})")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("encode", help="base 4 code of integers")
    p.add_argument("k", type=int, nargs="+")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="integer from a code such as '2 1 | 3~'")
    p.add_argument("code")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("zeros", help="integer zeros of the transform")
    p.add_argument("k", type=int, nargs="*")
    p.add_argument("--window", type=_nonneg, default=16)
    p.set_defaults(func=cmd_zeros)

    p = sub.add_parser("phi", help="the transform at t with a certified |.|^2 enclosure")
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--tol", type=float, default=1e-12)
    p.set_defaults(func=cmd_phi)

    p = sub.add_parser("gen", help="enumerate the frequencies of a rule")
    p.add_argument("--rule", required=True)
    p.add_argument("--levels", type=_nonneg, required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("ortho", help="check a set for mutual orthogonality")
    p.add_argument("--set", required=True)
    p.add_argument("--levels", type=_nonneg)
    p.set_defaults(func=cmd_ortho)

    p = sub.add_parser("maximal", help="maximality on an integer window")
    p.add_argument("--set", required=True)
    p.add_argument("--window", type=_nonneg, required=True)
    p.add_argument("--rule", help="labeling the set comes from, for witnesses beyond the set")
    p.add_argument("--levels", type=_nonneg)
    p.set_defaults(func=cmd_maximal)

    p = sub.add_parser("goodpath", help="good-path condition, optionally with exceptional paths")
    p.add_argument("--rule", required=True)
    p.add_argument("--p", type=_nonneg, required=True)
    p.add_argument("--q", type=_nonneg, required=True)
    p.add_argument("--depth", type=_nonneg, required=True)
    p.add_argument("--horizon", type=_positive, default=64)
    p.add_argument("--vertex", help="check a single vertex, digits separated by spaces")
    p.add_argument("--exceptional", action="append", help="exceptional path 'prefix (cycle)~'; repeatable")
    p.set_defaults(func=cmd_goodpath)

    p = sub.add_parser("certify", help="Parseval completeness certificate as CSV")
    p.add_argument("--rule")
    p.add_argument("--set")
    p.add_argument("--superset", help="orthogonal superset rule, enables certified deficiency")
    p.add_argument("--levels", type=_nonneg, required=True)
    p.add_argument("--grid", type=_positive, default=64)
    p.add_argument("--tmin", type=float, default=0.0)
    p.add_argument("--tmax", type=float, default=1.0)
    p.add_argument("--margin", type=float, default=1e-3)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--expect", choices=("complete", "deficient"), default="complete")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("counterexample", help="upper bound for the relabeled tree family")
    p.add_argument("--gaps", default="paper")
    p.add_argument("--nmax", type=_nonneg, required=True)
    p.set_defaults(func=cmd_counterexample)

    p = sub.add_parser("member", help="A-base 4 expansion of k")
    p.add_argument("--system", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--max-steps", type=_positive, default=10_000)
    p.add_argument("--check-finite", type=_nonneg, metavar="N", help="compare k with all finite sums of length N")
    p.set_defaults(func=cmd_member)

    p = sub.add_parser("sample", help="Monte Carlo check of the transform")
    p.add_argument("--count", type=_positive, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--t", required=True, help="comma separated t values")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("recipes", help="list or run the reproduction recipes")
    p.add_argument("--run", metavar="NAME")
    p.set_defaults(func=cmd_recipes)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        return 1
    except CantorSpectraError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except SystemExit as exc:  # --help and --version
        return int(exc.code or 0)


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
