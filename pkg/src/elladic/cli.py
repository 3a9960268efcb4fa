"""Command-line front end.

Subcommands: bound, classify, lie, verify, fixture, selftest.  Output is
line-oriented key=value text; identical configurations produce identical
bytes.  Exit codes: 0 success/verified, 1 theorem violation, 2 invalid
input, 3 resource cap exceeded.
"""

from __future__ import annotations

import argparse
import os
import random
import sys
from fractions import Fraction

from . import bounds, dickson, groups, lie, theorems
from .errors import CapExceeded, ElladicError, InvalidParams, PreconditionViolated
from .padic import BOTTOM, PadicContext

EXIT_OK = 0
EXIT_VIOLATED = 1
EXIT_INVALID = 2
EXIT_CAP = 3


def _env_cap() -> int:
    return int(os.environ.get("ELLADIC_CAP", groups.DEFAULT_CAP))


def _env_digits() -> int:
    return int(os.environ.get("ELLADIC_DIGITS", bounds.DEFAULT_DIGITS))


def _emit(out, **fields):
    for k, v in fields.items():
        out.write(f"{k} = {v}\n")


# ------------------------------------------------------------------ bound


def cmd_bound(args, out) -> int:
    if args.degree < 1:
        print("error: degree must be >= 1", file=sys.stderr)
        return EXIT_INVALID
    try:
        height = Fraction(args.height)
    except (ValueError, ZeroDivisionError):
        print("error: height must be a decimal number", file=sys.stderr)
        return EXIT_INVALID
    budget = args.digits or _env_digits()
    p = bounds.CurveParams(args.degree, height)
    mag = bounds.adelic_index_bound(p, args.variant, budget)
    _emit(
        out,
        formula="adelic_index_bound",
        variant=args.variant,
        degree=args.degree,
        height=args.height,
        digit_budget=budget,
        log10_upper=mag.log10_decimal(30),
    )
    if args.torsion is not None:
        if args.torsion < 1:
            print("error: torsion order must be >= 1", file=sys.stderr)
            return EXIT_INVALID
        low = bounds.torsion_degree_bound(mag, args.torsion, budget)
        _emit(out, torsion_order=args.torsion, torsion_degree_log10_lower=low.log10_decimal(30))
    return EXIT_OK


# --------------------------------------------------------------- classify


def _load_group(path, cap, force_precision=None):
    with open(path) as fh:
        ctx, gens = groups.parse_group_file(fh.read())
    if force_precision is not None and ctx.precision != force_precision:
        ctx = PadicContext(ctx.prime, force_precision)
        gens = [groups.Mat2(ctx, g.entries) for g in gens]
    return groups.close(gens, cap=cap, context=ctx)


def cmd_classify(args, out) -> int:
    cap = args.cap or _env_cap()
    try:
        G = _load_group(args.file, cap, force_precision=1)
    except CapExceeded:
        print("error: closure exceeded the element cap", file=sys.stderr)
        return EXIT_CAP
    except (OSError, ElladicError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    cls = dickson.classify_mod_ell(G)
    _emit(
        out,
        **{
            "class": cls.tag,
            "exceptional_type": cls.exceptional_type or "-",
            "witness": cls.witness,
            "group_order": cls.group_order,
            "projective_order": cls.projective_order,
        },
    )
    if args.dump_keys:
        with open(args.dump_keys, "w") as fh:
            fh.write(G.dump_keys())
    return EXIT_OK


# -------------------------------------------------------------------- lie


def cmd_lie(args, out) -> int:
    cap = args.cap or _env_cap()
    try:
        G = _load_group(args.file, cap)
    except CapExceeded:
        print("error: closure exceeded the element cap", file=sys.stderr)
        return EXIT_CAP
    except (OSError, ElladicError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        L = lie.special_lie_algebra(G)
    except ElladicError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    rb = L.reduced
    _emit(out, prime=G.context.prime, precision=G.context.precision, group_order=G.size)
    for name, v in zip(("lie_x1", "lie_x2", "lie_x3"), rb.vectors()):
        _emit(out, **{name: " ".join(str(e) for e in v.entries)})
    k = lie.k_of(L)
    _emit(out, rank=rb.rank, k="bottom" if k is BOTTOM else k)
    for n in range(1, G.context.precision + 1):
        _emit(out, **{f"j_{n}": lie.j_n(L, n)})
    s = lie.minimal_sl2_scale(L)
    _emit(out, minimal_sl2_scale="none" if s is BOTTOM else s)
    return EXIT_OK


# ----------------------------------------------------------------- verify


def _sampler_for(theorem, prime, precision):
    ctx = PadicContext(prime, precision)
    if prime == 2:
        def sampler(rng):
            return theorems.sample_group_two(ctx, rng)
    else:
        kinds = ["cartan", "borel", "scalar", "deep"]

        def sampler(rng):
            return theorems.sample_group(ctx, rng, rng.choice(kinds))

    return sampler


def cmd_verify(args, out) -> int:
    cap = args.cap or _env_cap()
    checks = {
        "star": lambda G: theorems.check_star(G, args.s),
        "starstar": lambda G: theorems.check_starstar(G, args.s, cap=cap),
        "sl2z2": lambda G: theorems.check_sl2z2(G, args.s),
        "gl2z2": lambda G: theorems.check_gl2z2(G, args.n, cap=cap),
        "trichotomy": lambda G: theorems.trichotomy(G, args.n, mode=args.mode, cap=cap),
    }
    if args.theorem not in checks:
        print(f"error: unknown theorem {args.theorem!r}", file=sys.stderr)
        return EXIT_INVALID
    check = checks[args.theorem]
    reports = []
    if args.fixture:
        try:
            fx = _build_fixture(args)
        except (InvalidParams, PreconditionViolated) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INVALID
        if isinstance(fx, lie.LieModule):
            reports.append(theorems.trichotomy_lie(fx, args.n))
        else:
            reports.append(check(fx))
    elif args.file:
        try:
            G = _load_group(args.file, cap)
        except CapExceeded:
            print("error: closure exceeded the element cap", file=sys.stderr)
            return EXIT_CAP
        except (OSError, ElladicError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INVALID
        reports.append(check(G))
    else:
        if args.prime is None or args.precision is None:
            print("error: random campaigns need --prime and --precision", file=sys.stderr)
            return EXIT_INVALID
        sampler = _sampler_for(args.theorem, args.prime, args.precision)
        reports = theorems.run_campaign(check, sampler, args.trials, args.seed, cap=cap)
    for rep in reports:
        out.write(rep.line() + "\n")
    out.write(theorems.summarize(reports) + "\n")
    violated = sum(1 for r in reports if r.outcome == theorems.VIOLATED)
    if violated:
        for r in reports:
            if r.outcome == theorems.VIOLATED:
                out.write(f"witness = {r.witness}\n")
        return EXIT_VIOLATED
    return EXIT_OK


def _build_fixture(args):
    name = args.fixture
    if name == "s3-lift":
        return theorems.fixture("s3-lift", ell=args.prime or 5, t=args.t, precision=args.precision or 2)
    if name == "pink-borel":
        return theorems.fixture(
            "pink-borel", ell=args.prime or 5, s=args.s, precision=args.precision or 4, order=args.order
        )
    if name == "optimal-lie":
        return theorems.fixture(
            "optimal-lie", ell=args.prime or 3, k=args.k, n=args.n, precision=args.precision or (args.n + 2 * args.k + 2)
        )
    raise InvalidParams(f"unknown fixture {name!r}")


# ---------------------------------------------------------------- fixture


def cmd_fixture(args, out) -> int:
    try:
        fx = _build_fixture(args)
    except (InvalidParams, PreconditionViolated) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except CapExceeded:
        print("error: fixture exceeded the element cap", file=sys.stderr)
        return EXIT_CAP
    if isinstance(fx, lie.LieModule):
        rb = fx.reduced
        _emit(out, fixture=args.fixture, prime=fx.context.prime, precision=fx.context.precision)
        for name, v in zip(("lie_x1", "lie_x2", "lie_x3"), rb.vectors()):
            _emit(out, **{name: " ".join(str(e) for e in v.entries)})
        return EXIT_OK
    _emit(out, fixture=args.fixture, prime=fx.context.prime, precision=fx.context.precision, order=fx.size)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(groups.format_group_file(fx.context, fx.generators))
    if args.dump_keys:
        with open(args.dump_keys, "w") as fh:
            fh.write(fx.dump_keys())
    return EXIT_OK


# --------------------------------------------------------------- selftest


def cmd_selftest(args, out) -> int:
    failures = []

    def check(name, fn):
        try:
            ok = fn()
        except Exception as exc:  # a selftest must not crash the harness
            ok = False
            name = f"{name} ({exc})"
        out.write(f"selftest {name}: {'ok' if ok else 'FAIL'}\n")
        if not ok:
            failures.append(name)

    def lemma_generation():
        for (ell, n, N) in ((3, 1, 2), (2, 2, 3), (5, 1, 2)):
            ctx = PadicContext(ell, N)
            got = groups.close(groups.congruence_generators(ctx, n), context=ctx)
            want = groups.congruence_subgroup(n, ctx)
            if got.size != want.size or any(int(a) != int(b) for a, b in zip(got.keys, want.keys)):
                return False
        return True

    def lemma_derived():
        ctx3 = PadicContext(3, 3)
        D = groups.derived_subgroup(groups.congruence_subgroup(1, ctx3))
        if not all(k in D for k in groups.congruence_subgroup(2, ctx3).keys):
            return False
        ctx2 = PadicContext(2, 5)
        D2 = groups.derived_subgroup(groups.congruence_subgroup(1, ctx2))
        return all(k in D2 for k in groups.congruence_subgroup(4, ctx2).keys)

    def addition_formula():
        rng = random.Random(12345)
        for ell in (2, 3, 5, 7):
            ctx = PadicContext(ell, 4)
            M = ctx.modulus
            for _ in range(200):
                g1, g2 = (_random_even_trace(ctx, rng) for _ in range(2))
                lhs, rhs = groups.addition_defect(g1, g2)
                if lhs.entries != rhs.entries:
                    return False
        return True

    def _random_even_trace(ctx, rng):
        M = ctx.modulus
        while True:
            e = tuple(rng.randrange(M) for _ in range(4))
            m = groups.Mat2(ctx, e)
            if m.det() % ctx.prime == 0:
                continue
            if ctx.prime == 2 and m.tr() % 2 != 0:
                continue
            return m

    def saturation_laws():
        ctx = PadicContext(5, 2)
        G = groups.close([groups.Mat2(ctx, (2, 5, 0, 13))])
        a = groups.reduce_mod(dickson.saturate(G), 1)
        b = dickson.saturate(groups.reduce_mod(G, 1))
        return a.size == b.size and all(int(x) == int(y) for x, y in zip(a.keys, b.keys))

    def bounds_goldens():
        p1 = bounds.CurveParams(1, Fraction(1))
        if bounds.isogeny_bound(p1, "elliptic").log10 != 13:
            return False
        Y = bounds._masser_Y(24, bounds.alpha(1), 64)
        lhs = Y.ln()
        rhs = bounds.alpha(1) * (
            bounds.log10_int(24, 64, "up")
            + 2 * bounds.log10_fraction(1 + bounds.ln_int(24, 64, "up"), 64, "up")
        ) * bounds.ln10(64, "up")
        return lhs == rhs

    check("lemma-generation", lemma_generation)
    check("lemma-derived", lemma_derived)
    check("addition-formula", addition_formula)
    check("saturation-laws", saturation_laws)
    check("bounds-goldens", bounds_goldens)
    out.write(f"selftest result: {'ok' if not failures else 'FAIL'}\n")
    return EXIT_OK if not failures else EXIT_VIOLATED


# ------------------------------------------------------------------ main


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="elladic")
    sub = ap.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bound", help="evaluate the adelic index bounds")
    b.add_argument("--degree", type=int, required=True)
    b.add_argument("--height", type=str, default="1")
    b.add_argument("--variant", choices=("composed", "gamma12", "gamma34"), default="composed")
    b.add_argument("--torsion", type=int, default=None)
    b.add_argument("--digits", type=int, default=None)

    c = sub.add_parser("classify", help="classify a group file modulo ell")
    c.add_argument("file")
    c.add_argument("--cap", type=int, default=None)
    c.add_argument("--dump-keys", default=None)

    l = sub.add_parser("lie", help="reduced basis and invariants of the special Lie algebra")
    l.add_argument("file")
    l.add_argument("--cap", type=int, default=None)

    v = sub.add_parser("verify", help="run a theorem verifier or campaign")
    v.add_argument("--theorem", required=True)
    v.add_argument("--prime", type=int, default=None)
    v.add_argument("--precision", type=int, default=None)
    v.add_argument("--s", type=int, default=1)
    v.add_argument("--n", type=int, default=1)
    v.add_argument("--k", type=int, default=0)
    v.add_argument("--t", type=int, default=1)
    v.add_argument("--order", type=int, default=4)
    v.add_argument("--mode", choices=("proposition", "corollary"), default="proposition")
    v.add_argument("--trials", type=int, default=10)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--cap", type=int, default=None)
    v.add_argument("--file", default=None)
    v.add_argument("--fixture", default=None)

    f = sub.add_parser("fixture", help="construct a named fixture")
    f.add_argument("--fixture", required=True, dest="fixture")
    f.add_argument("--prime", type=int, default=None)
    f.add_argument("--precision", type=int, default=None)
    f.add_argument("--s", type=int, default=1)
    f.add_argument("--n", type=int, default=1)
    f.add_argument("--k", type=int, default=0)
    f.add_argument("--t", type=int, default=1)
    f.add_argument("--order", type=int, default=4)
    f.add_argument("--out", default=None)
    f.add_argument("--dump-keys", default=None)

    sub.add_parser("selftest", help="run the embedded golden suite")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = sys.stdout
    handlers = {
        "bound": cmd_bound,
        "classify": cmd_classify,
        "lie": cmd_lie,
        "verify": cmd_verify,
        "fixture": cmd_fixture,
        "selftest": cmd_selftest,
    }
    try:
        return handlers[args.command](args, out)
    except CapExceeded:
        print("error: element cap exceeded", file=sys.stderr)
        return EXIT_CAP


if __name__ == "__main__":
    sys.exit(main())
