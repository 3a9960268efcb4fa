import random

import numpy as np
import pytest

from elladic.errors import CapExceeded, OddTrace, PreconditionViolated
from elladic.groups import (
    Mat2,
    addition_defect,
    close,
    congruence_generators,
    congruence_subgroup,
    contains_congruence,
    derived_subgroup,
    format_group_file,
    parse_group_file,
    reduce_mod,
    theta,
    theta_inverse,
)
from elladic.padic import PadicContext, val_int


def gl2_order(ell, N):
    return ell ** (4 * (N - 1)) * (ell * ell - 1) * (ell * ell - ell)


def brute_force_congruence(ctx, n):
    M = ctx.modulus
    t = ctx.prime**n
    keys = []
    for a in range(M):
        for b in range(M):
            for c in range(M):
                for d in range(M):
                    if (a * d - b * c) % M != 1:
                        continue
                    if a % t == 1 and d % t == 1 and b % t == 0 and c % t == 0:
                        keys.append(((a * M + b) * M + c) * M + d)
    return sorted(keys)


class TestClose:
    def test_identity_only(self):
        ctx = PadicContext(3, 2)
        assert close([Mat2.identity(ctx)]).size == 1

    def test_sl2_z9_size(self):
        ctx = PadicContext(3, 2)
        G = close([Mat2(ctx, (1, 1, 0, 1)), Mat2(ctx, (1, 0, 1, 1))])
        assert G.size == 648
        assert G.is_sl2_subset

    def test_gl2_f2(self):
        ctx = PadicContext(2, 1)
        G = close([Mat2(ctx, (0, 1, 1, 0)), Mat2(ctx, (1, 1, 0, 1))])
        assert G.size == 6

    def test_generator_order_irrelevant(self):
        ctx = PadicContext(5, 2)
        gens = [Mat2(ctx, (1, 1, 0, 1)), Mat2(ctx, (1, 0, 1, 1)), Mat2(ctx, (2, 0, 0, 13))]
        ref = close(gens)
        for perm in ([2, 0, 1], [1, 2, 0], [2, 1, 0]):
            got = close([gens[i] for i in perm])
            assert got.size == ref.size
            assert all(int(a) == int(b) for a, b in zip(got.keys, ref.keys))

    def test_cap_exceeded(self):
        ctx = PadicContext(3, 3)
        with pytest.raises(CapExceeded):
            close([Mat2(ctx, (1, 1, 0, 1)), Mat2(ctx, (1, 0, 1, 1))], cap=100)

    def test_noninvertible_generator_rejected(self):
        ctx = PadicContext(3, 2)
        with pytest.raises(PreconditionViolated):
            close([Mat2(ctx, (3, 0, 0, 1))])

    def test_closed_under_product_and_inverse(self):
        ctx = PadicContext(3, 2)
        G = close([Mat2(ctx, (1, 1, 0, 1)), Mat2(ctx, (2, 0, 0, 5))])
        els = list(G.elements())
        assert Mat2.identity(ctx) in G
        for x in els[::7]:
            assert x.inverse() in G
            for y in els[::11]:
                assert x.mul(y) in G

    def test_order_divides_ambient(self):
        ctx = PadicContext(3, 2)
        G = close([Mat2(ctx, (1, 1, 0, 1)), Mat2(ctx, (2, 0, 0, 1))])
        assert gl2_order(3, 2) % G.size == 0


class TestCongruenceSubgroup:
    def test_sizes(self):
        assert congruence_subgroup(1, PadicContext(3, 3)).size == 729
        assert congruence_subgroup(3, PadicContext(3, 3)).size == 1
        assert congruence_subgroup(2, PadicContext(2, 4)).size == 64

    def test_brute_force_oracle(self):
        ctx = PadicContext(3, 2)
        got = congruence_subgroup(1, ctx)
        assert [int(k) for k in got.keys] == brute_force_congruence(ctx, 1)

    def test_precondition(self):
        with pytest.raises(PreconditionViolated):
            congruence_subgroup(0, PadicContext(3, 3))
        with pytest.raises(PreconditionViolated):
            congruence_subgroup(4, PadicContext(3, 3))

    @pytest.mark.parametrize(
        "ell,n,N,size",
        [
            (3, 1, 3, 729),
            (3, 1, 2, 27),
            (2, 2, 4, 64),
            (5, 1, 2, 125),
            (2, 1, 3, 64),
            (3, 2, 4, 729),
            (5, 2, 4, 15625),
        ],
    )
    def test_generator_family_closure(self, ell, n, N, size):
        # the L/R/D one-parameter family generates the full congruence subgroup
        ctx = PadicContext(ell, N)
        M = ctx.modulus
        gens = [Mat2(ctx, (1, 0, ell**n, 1)), Mat2(ctx, (1, ell**n, 0, 1))]
        for i in range(ell ** (N - n)):
            c = ell**n * i % M
            u = (1 + c) % M
            gens.append(Mat2(ctx, (u, 0, 0, pow(u, -1, M))))
        got = close(gens)
        want = congruence_subgroup(n, ctx)
        assert got.size == want.size == size
        assert all(int(a) == int(b) for a, b in zip(got.keys, want.keys))


class TestDerivedSubgroup:
    def test_abelian_is_trivial(self):
        ctx = PadicContext(3, 3)
        assert derived_subgroup(close([Mat2(ctx, (1, 1, 0, 1))])).size == 1

    def test_contains_deeper_congruence_odd(self):
        ctx = PadicContext(3, 3)
        D = derived_subgroup(congruence_subgroup(1, ctx))
        B2 = congruence_subgroup(2, ctx)
        assert all(int(k) in D for k in B2.keys)

    def test_contains_deeper_congruence_two(self):
        ctx = PadicContext(2, 6)
        D = derived_subgroup(congruence_subgroup(1, ctx))
        B4 = congruence_subgroup(4, ctx)
        assert all(int(k) in D for k in B4.keys)

    @pytest.mark.parametrize("ell,n,N", [(3, 2, 5), (2, 2, 7)])
    def test_doubled_level_at_higher_start(self, ell, n, N):
        # derived(B(n)) contains B(2n + 2v) whenever it fits the precision
        ctx = PadicContext(ell, N)
        v = 1 if ell == 2 else 0
        D = derived_subgroup(congruence_subgroup(n, ctx))
        B = congruence_subgroup(2 * n + 2 * v, ctx)
        assert all(int(k) in D for k in B.keys)

    @pytest.mark.parametrize("ell,N", [(2, 3), (2, 4), (3, 2)])
    def test_all_pairs_oracle(self, ell, N):
        # literal closure of every element-pair commutator agrees
        ctx = PadicContext(ell, N)
        B = congruence_subgroup(1, ctx)
        fast = derived_subgroup(B)
        els = list(B.elements())
        comms = {x.mul(y).mul(x.inverse()).mul(y.inverse()).key for x in els for y in els}
        brute = close([Mat2.from_key(ctx, k) for k in sorted(comms)], context=ctx)
        assert fast.size == brute.size
        assert all(int(a) == int(b) for a, b in zip(fast.keys, brute.keys))

    def test_all_pairs_oracle_nonnormal_seed(self):
        # a group where generator commutators alone are not conjugation-closed
        ctx = PadicContext(5, 1)
        G = close([Mat2(ctx, (2, 0, 0, 3)), Mat2(ctx, (0, 1, -1, 0)), Mat2(ctx, (1, 1, 0, 1))])
        els = list(G.elements())
        comms = {x.mul(y).mul(x.inverse()).mul(y.inverse()).key for x in els for y in els}
        brute = close([Mat2.from_key(ctx, k) for k in sorted(comms)], context=ctx)
        fast = derived_subgroup(G)
        assert fast.size == brute.size
        assert all(int(a) == int(b) for a, b in zip(fast.keys, brute.keys))


class TestReduceAndContains:
    def test_reduce_identity_precision(self):
        ctx = PadicContext(3, 3)
        G = congruence_subgroup(2, ctx)
        assert reduce_mod(G, 3) is G
        assert reduce_mod(G, 2).size == 1

    def test_reduce_split_cartan_lift(self):
        ctx = PadicContext(5, 2)
        G = close([Mat2(ctx, (2, 0, 0, 1)), Mat2(ctx, (1, 0, 0, 2))])
        J = reduce_mod(G, 1)
        M = 5
        diag = sorted(((a * M + 0) * M + 0) * M + d for a in range(1, 5) for d in range(1, 5))
        assert [int(k) for k in J.keys] == diag

    def test_contains_congruence(self):
        ctx = PadicContext(3, 3)
        B2 = congruence_subgroup(2, ctx)
        assert contains_congruence(B2, 2)
        assert not contains_congruence(B2, 1)
        full = close([Mat2(ctx, (1, 1, 0, 1)), Mat2(ctx, (1, 0, 1, 1))])
        assert contains_congruence(full, 1) and contains_congruence(full, 2)
        one = close([Mat2.identity(ctx)])
        assert not contains_congruence(one, 2)
        assert contains_congruence(one, 3)


class TestTheta:
    def test_unipotent(self):
        ctx = PadicContext(5, 2)
        assert theta(Mat2(ctx, (1, 7, 0, 1))).entries == (0, 7, 0, 0)

    def test_minus_identity(self):
        ctx = PadicContext(5, 2)
        assert theta(Mat2(ctx, (-1, 0, 0, -1))).entries == (0, 0, 0, 0)

    def test_diagonal_golden(self):
        # diag(a, 1/a) with a=2 mod 25: diagonal entries +-(a^2-1)/2a = +-7
        ctx = PadicContext(5, 2)
        assert theta(Mat2(ctx, (2, 0, 0, 13))).entries == (7, 0, 0, 18)

    def test_odd_trace_rejected_at_two(self):
        ctx = PadicContext(2, 4)
        with pytest.raises(OddTrace):
            theta(Mat2(ctx, (1, 1, 1, 0)))

    def test_theta_inverse_examples(self):
        ctx = PadicContext(2, 5)
        assert theta_inverse(Mat2(ctx, (0, 0, 0, 0))).entries == (1, 0, 0, 1)
        assert theta_inverse(Mat2(ctx, (0, 4, 0, 0))).entries == (1, 4, 0, 1)
        ti = theta_inverse(Mat2(ctx, (4, 0, 0, -4)))
        assert ti.det() == 1
        c = (ti.entries[0] - 1) % 32
        assert val_int(c, 2, 5) == 2
        assert ti.entries[3] == pow(ti.entries[0], -1, 32)

    def test_theta_inverse_roundtrip(self):
        # off-diagonal entries return exactly; the diagonal is recovered at
        # the contracted two-adic precision N-1 (trace halving ambiguity)
        ctx = PadicContext(2, 6)
        half = 2 ** (ctx.precision - 1)
        rng = random.Random(5)
        for _ in range(50):
            a, b, c = (4 * rng.randrange(16) for _ in range(3))
            x = Mat2(ctx, (a, b, c, -a))
            g = theta_inverse(x)
            back = theta(g)
            assert back.entries[1] == x.entries[1] and back.entries[2] == x.entries[2]
            assert all((p - q) % half == 0 for p, q in zip(back.entries, x.entries))
            assert g.det() == 1

    def test_theta_inverse_preconditions(self):
        ctx = PadicContext(2, 5)
        with pytest.raises(PreconditionViolated):
            theta_inverse(Mat2(ctx, (1, 0, 0, 1)))  # not traceless
        with pytest.raises(PreconditionViolated):
            theta_inverse(Mat2(ctx, (2, 0, 0, -2)))  # not 0 mod 4


class TestIdentities:
    @pytest.mark.parametrize("ell", [2, 3, 5, 7])
    def test_addition_formula(self, ell):
        rng = random.Random(100 + ell)
        for N in (2, 4, 6):
            ctx = PadicContext(ell, N)
            M = ctx.modulus
            for _ in range(300):
                ms = []
                while len(ms) < 2:
                    e = tuple(rng.randrange(M) for _ in range(4))
                    m = Mat2(ctx, e)
                    if m.det() % ell == 0:
                        continue
                    if ell == 2 and m.tr() % 2 != 0:
                        continue
                    ms.append(m)
                lhs, rhs = addition_defect(ms[0], ms[1])
                assert lhs.entries == rhs.entries

    def test_conjugation_equivariance(self):
        rng = random.Random(7)
        ctx = PadicContext(3, 4)
        M = ctx.modulus
        for _ in range(200):
            g = None
            while g is None or g.det() % 3 == 0:
                g = Mat2(ctx, tuple(rng.randrange(M) for _ in range(4)))
            n = Mat2(ctx, tuple(rng.randrange(M) for _ in range(4)))
            lhs = theta(g.inverse().mul(n).mul(g))
            rhs = g.inverse().mul(theta(n)).mul(g)
            assert lhs.entries == rhs.entries

    def test_one_parameter_closure_property(self):
        # if the closure contains L_a it contains L_{au} for every u
        ctx = PadicContext(2, 4)
        G = close([Mat2(ctx, (1, 0, 2, 1)), Mat2(ctx, (5, 0, 0, 13))])
        a = 2
        for u in range(16):
            assert Mat2(ctx, (1, 0, a * u, 1)) in G

    def test_trace_deviation_quadratic_at_two(self):
        # theta(g) = 0 mod 2^e forces tr(g) - 2 = 0 mod 2^(2e)
        ctx = PadicContext(2, 9)
        rng = random.Random(3)
        for _ in range(200):
            e = rng.choice([2, 3, 4])
            x = [2**e * rng.randrange(ctx.modulus // 2**e) for _ in range(3)]
            m = Mat2(ctx, (x[0], x[1], x[2], -x[0]))
            g = theta_inverse(m)
            assert (g.tr() - 2) % 2 ** (2 * e) == 0


class TestGroupFile:
    def test_round_trip(self):
        ctx = PadicContext(3, 2)
        gens = [Mat2(ctx, (1, 1, 0, 1)), Mat2(ctx, (2, 0, 0, 5))]
        text = format_group_file(ctx, gens)
        ctx2, gens2 = parse_group_file(text)
        assert ctx2.prime == 3 and ctx2.precision == 2
        a, b = close(gens), close(gens2)
        assert a.size == b.size and all(int(x) == int(y) for x, y in zip(a.keys, b.keys))

    def test_parse_negatives_and_comments(self):
        ctx, gens = parse_group_file("# comment\nprime = 5\nprecision = 2\ngenerator = -1 0 0 -1\n")
        assert gens[0].entries == (24, 0, 0, 24)

    def test_parse_errors(self):
        with pytest.raises(PreconditionViolated):
            parse_group_file("prime = 5\n")
        with pytest.raises(PreconditionViolated):
            parse_group_file("prime = 5\nprecision = 1\ngenerator = 1 2 3\n")
        with pytest.raises(PreconditionViolated):
            parse_group_file("prime = 5\nprecision = 1\nwidget = 3\n")

    def test_dump_keys_sorted(self):
        ctx = PadicContext(2, 1)
        G = close([Mat2(ctx, (0, 1, 1, 0)), Mat2(ctx, (1, 1, 0, 1))])
        lines = G.dump_keys().strip().splitlines()
        vals = [int(x) for x in lines]
        assert vals == sorted(vals) and len(vals) == 6


def test_python_fallback_big_modulus():
    # modulus beyond the packed-int64 threshold exercises the object path
    ctx = PadicContext(3, 11)  # 3^11 = 177147 > 55000
    G = close([Mat2(ctx, (1, 3**9, 0, 1))])
    assert G.size == 9
    assert isinstance(G.keys, tuple)
    D = derived_subgroup(G)
    assert D.size == 1
    R = reduce_mod(G, 2)
    assert R.size == 1
