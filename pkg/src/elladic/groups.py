"""2x2 matrix arithmetic over Z/ell^N and explicit subgroup closures.

Groups are stored extensionally: a sorted array of packed element keys
(key = ((m11*M + m12)*M + m21)*M + m22 with M = ell^N, row-major).  The
breadth-first closure is vectorized with numpy whenever the packed keys fit
in int64, with a pure-Python fallback for larger moduli.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CapExceeded, OddTrace, PreconditionViolated
from .padic import PadicContext

DEFAULT_CAP = 2**24

_NUMPY_KEY_LIMIT = 55_000  # M**4 must stay below 2**63


# ---------------------------------------------------------------- matrices


@dataclass(frozen=True)
class Mat2:
    context: PadicContext
    entries: tuple  # (m11, m12, m21, m22), canonical residues

    def __post_init__(self):
        m = self.context.modulus
        object.__setattr__(self, "entries", tuple(int(e) % m for e in self.entries))

    @classmethod
    def identity(cls, context: PadicContext) -> "Mat2":
        return cls(context, (1, 0, 0, 1))

    @classmethod
    def from_key(cls, context: PadicContext, key: int) -> "Mat2":
        M = context.modulus
        d = key % M
        key //= M
        c = key % M
        key //= M
        b = key % M
        a = key // M
        return cls(context, (a, b, c, d))

    @property
    def key(self) -> int:
        a, b, c, d = self.entries
        M = self.context.modulus
        return ((a * M + b) * M + c) * M + d

    def det(self) -> int:
        a, b, c, d = self.entries
        return (a * d - b * c) % self.context.modulus

    def tr(self) -> int:
        a, _, _, d = self.entries
        return (a + d) % self.context.modulus

    def mul(self, other: "Mat2") -> "Mat2":
        a, b, c, d = self.entries
        e, f, g, h = other.entries
        M = self.context.modulus
        return Mat2(self.context, ((a * e + b * g) % M, (a * f + b * h) % M,
                                   (c * e + d * g) % M, (c * f + d * h) % M))

    def inverse(self) -> "Mat2":
        M = self.context.modulus
        det = self.det()
        if det % self.context.prime == 0:
            raise PreconditionViolated("matrix not invertible mod ell")
        inv = pow(det, -1, M)
        a, b, c, d = self.entries
        return Mat2(self.context, (d * inv % M, -b * inv % M, -c * inv % M, a * inv % M))

    def scale(self, u: int) -> "Mat2":
        return Mat2(self.context, tuple(u * e for e in self.entries))

    def add(self, other: "Mat2") -> "Mat2":
        return Mat2(self.context, tuple(x + y for x, y in zip(self.entries, other.entries)))

    def sub(self, other: "Mat2") -> "Mat2":
        return Mat2(self.context, tuple(x - y for x, y in zip(self.entries, other.entries)))

    def conj_by(self, g: "Mat2") -> "Mat2":
        return g.inverse().mul(self).mul(g)

    def __repr__(self):
        a, b, c, d = self.entries
        return f"[[{a},{b}],[{c},{d}]]"


def bracket(x: Mat2, y: Mat2) -> Mat2:
    return x.mul(y).sub(y.mul(x))


# ------------------------------------------------------------- group type


@dataclass(frozen=True)
class GroupClosure:
    context: PadicContext
    generators: tuple
    keys: object  # sorted np.int64 array, or sorted tuple of ints
    is_sl2_subset: bool = False
    mod2_trivial: bool = False

    @property
    def size(self) -> int:
        return len(self.keys)

    def contains_key(self, key: int) -> bool:
        ks = self.keys
        if isinstance(ks, np.ndarray):
            i = np.searchsorted(ks, key)
            return i < ks.size and int(ks[i]) == key
        from bisect import bisect_left

        i = bisect_left(ks, key)
        return i < len(ks) and ks[i] == key

    def __contains__(self, g) -> bool:
        return self.contains_key(g.key if isinstance(g, Mat2) else int(g))

    def elements(self):
        for k in self.keys:
            yield Mat2.from_key(self.context, int(k))

    def entry_arrays(self):
        """Element entries as four aligned arrays (numpy-backed groups only)."""
        return _unpack_arrays(np.asarray(self.keys, dtype=np.int64), self.context.modulus)

    def dump_keys(self) -> str:
        return "\n".join(str(int(k)) for k in self.keys) + "\n"


def _unpack_arrays(keys, M):
    d = keys % M
    t = keys // M
    c = t % M
    t = t // M
    b = t % M
    a = t // M
    return a, b, c, d


def _pack_arrays(a, b, c, d, M):
    return ((a * M + b) * M + c) * M + d


def _flags(context, keys) -> dict:
    ell = context.prime
    if isinstance(keys, np.ndarray) and keys.size:
        a, b, c, d = _unpack_arrays(keys, context.modulus)
        dets = (a * d - b * c) % context.modulus
        sl2 = bool(np.all(dets == 1 % context.modulus))
        m2 = ell == 2 and bool(
            np.all((a & 1) == 1) and np.all((d & 1) == 1) and np.all((b & 1) == 0) and np.all((c & 1) == 0)
        )
    else:
        mats = [Mat2.from_key(context, int(k)) for k in keys]
        sl2 = all(m.det() == 1 % context.modulus for m in mats)
        m2 = ell == 2 and all(
            m.entries[0] % 2 == 1 and m.entries[3] % 2 == 1 and m.entries[1] % 2 == 0 and m.entries[2] % 2 == 0
            for m in mats
        )
    return {"is_sl2_subset": sl2, "mod2_trivial": m2}


def _make_closure(context, generators, keys) -> GroupClosure:
    return GroupClosure(context, tuple(generators), keys, **_flags(context, keys))


def _numpy_ok(context) -> bool:
    return context.modulus <= _NUMPY_KEY_LIMIT


def _multiplier_tuples(generators):
    """Generators, inverses, and iterated squares of both.

    The squares are elements of the generated subgroup, so the closure is
    unchanged; they collapse the BFS diameter of nearly-cyclic groups from
    the element order to its logarithm.
    """
    seen, out = set(), []

    def add(m):
        if m.entries not in seen:
            seen.add(m.entries)
            out.append(m.entries)

    ident = None
    for g in generators:
        ident = Mat2.identity(g.context)
        for base in (g, g.inverse()):
            cur = base
            for _ in range(64):
                add(cur)
                cur = cur.mul(cur)
                if cur.entries == ident.entries or cur.entries in seen:
                    break
    return out


def _setdiff_sorted(cand, base):
    """Entries of sorted-unique `cand` absent from sorted `base`."""
    if base.size == 0:
        return cand
    pos = np.searchsorted(base, cand)
    pos_c = np.minimum(pos, base.size - 1)
    return cand[(pos == base.size) | (base[pos_c] != cand)]


def _close_keys_numpy(context, multipliers, seeds, cap):
    M = context.modulus
    seen = np.unique(np.array(seeds, dtype=np.int64))
    frontier = seen
    G = [tuple(int(x) for x in m) for m in multipliers]
    chunk = 4
    while frontier.size:
        a, b, c, d = _unpack_arrays(frontier, M)
        pending = np.empty(0, dtype=np.int64)
        for lo in range(0, len(G), chunk):
            outs = []
            for e, f, g, h in G[lo : lo + chunk]:
                na = (a * e + b * g) % M
                nb = (a * f + b * h) % M
                nc = (c * e + d * g) % M
                nd = (c * f + d * h) % M
                outs.append(_pack_arrays(na, nb, nc, nd, M))
            cand = np.unique(np.concatenate(outs))
            fresh = _setdiff_sorted(_setdiff_sorted(cand, seen), pending)
            pending = np.union1d(pending, fresh)
            if seen.size + pending.size > cap:
                raise CapExceeded(cap)
        if pending.size == 0:
            break
        seen = np.union1d(seen, pending)
        frontier = pending
    return seen


def _close_keys_python(context, multipliers, seeds, cap):
    from collections import deque

    M = context.modulus

    def unpack(k):
        d = k % M
        k //= M
        c = k % M
        k //= M
        return (k // M, k % M, c, d)

    def pack(t):
        return ((t[0] * M + t[1]) * M + t[2]) * M + t[3]

    seen = {int(s) for s in seeds}
    q = deque(unpack(s) for s in seen)
    while q:
        a, b, c, d = q.popleft()
        for e, f, g, h in multipliers:
            t = ((a * e + b * g) % M, (a * f + b * h) % M, (c * e + d * g) % M, (c * f + d * h) % M)
            k = pack(t)
            if k not in seen:
                if len(seen) + 1 > cap:
                    raise CapExceeded(cap)
                seen.add(k)
                q.append(t)
    return tuple(sorted(seen))


def _close_keys(context, generators, seeds, cap):
    multipliers = _multiplier_tuples(generators)
    if _numpy_ok(context):
        return _close_keys_numpy(context, multipliers, seeds, cap)
    return _close_keys_python(context, multipliers, seeds, cap)


# ------------------------------------------------------------- operations


def close(generators, cap: int = DEFAULT_CAP, context: PadicContext = None) -> GroupClosure:
    """Breadth-first closure of the subgroup generated by `generators`.

    Output element order is the sorted packed-key order, independent of
    generator order and of any internal batching.
    """
    if not generators and context is None:
        raise PreconditionViolated("need generators or an explicit context")
    ctx = context or generators[0].context
    for g in generators:
        if g.det() % ctx.prime == 0:
            raise PreconditionViolated("generators must be invertible mod ell")
    seeds = [Mat2.identity(ctx).key]
    keys = _close_keys(ctx, list(generators), seeds, cap)
    return _make_closure(ctx, generators, keys)


def congruence_generators(context: PadicContext, n: int):
    """L, R and D generators whose closure is the level-n congruence subgroup."""
    ell, N = context.prime, context.precision
    t = ell**n
    gens = [Mat2(context, (1, 0, t, 1)), Mat2(context, (1, t, 0, 1))]
    if n < N:
        gens.append(_diag(context, 1 + t))
        if ell == 2 and n == 1:
            gens.append(_diag(context, -1))
    return gens


def _diag(context, u):
    M = context.modulus
    u %= M
    return Mat2(context, (u, 0, 0, pow(u, -1, M)))


def congruence_subgroup(n: int, context: PadicContext, cap: int = DEFAULT_CAP) -> GroupClosure:
    """B_ell(n) at precision N, built by direct enumeration.

    Elements are parametrized by (a, b, c) with a = 1 mod ell^n a unit and
    b, c = 0 mod ell^n; then d = (1+bc)/a.  Size is exactly ell^(3(N-n)).
    """
    ell, N = context.prime, context.precision
    if not 1 <= n <= N:
        raise PreconditionViolated("need 1 <= n <= N")
    M = context.modulus
    count = ell ** (3 * (N - n))
    if count > cap:
        raise CapExceeded(cap)
    t = ell**n
    reps = ell ** (N - n)
    gens = congruence_generators(context, n)
    if _numpy_ok(context) and count > 512:
        i = np.arange(reps, dtype=np.int64)
        avals = (1 + t * i) % M
        ainv = np.array([pow(int(x), -1, M) for x in avals], dtype=np.int64)
        A = np.repeat(avals, reps * reps)
        AI = np.repeat(ainv, reps * reps)
        B = np.tile(np.repeat(t * i, reps), reps) % M
        C = np.tile(t * i, reps * reps) % M
        D = ((1 + B * C) % M) * AI % M
        keys = np.sort(_pack_arrays(A, B, C, D, M))
        return _make_closure(context, gens, keys)
    keys = []
    for ia in range(reps):
        a = (1 + t * ia) % M
        inv = pow(a, -1, M)
        for ib in range(reps):
            b = t * ib % M
            for ic in range(reps):
                c = t * ic % M
                d = (1 + b * c) * inv % M
                keys.append(((a * M + b) * M + c) * M + d)
    keys = sorted(keys)
    keys = np.array(keys, dtype=np.int64) if _numpy_ok(context) else tuple(keys)
    return _make_closure(context, gens, keys)


def _conjugate_keys(G: GroupClosure, g: Mat2):
    """Keys of g^-1 X g for all X in G."""
    M = G.context.modulus
    gi = g.inverse()
    if isinstance(G.keys, np.ndarray):
        a, b, c, d = G.entry_arrays()
        e, f, gg, h = gi.entries
        a1 = (e * a + f * c) % M
        b1 = (e * b + f * d) % M
        c1 = (gg * a + h * c) % M
        d1 = (gg * b + h * d) % M
        e, f, gg, h = g.entries
        a2 = (a1 * e + b1 * gg) % M
        b2 = (a1 * f + b1 * h) % M
        c2 = (c1 * e + d1 * gg) % M
        d2 = (c1 * f + d1 * h) % M
        return np.unique(_pack_arrays(a2, b2, c2, d2, M))
    return tuple(sorted({m.conj_by(g).key for m in G.elements()}))


def derived_subgroup(G: GroupClosure, cap: int = DEFAULT_CAP) -> GroupClosure:
    """Subgroup generated by the commutators of G.

    Seeded with commutators of the stored generators, then stabilized under
    conjugation by the generators; the result is certified stable once it is
    normal and contains every generator commutator, which pins it to the
    full commutator subgroup {[g,h] : g,h in G}-closure.  Groups without a
    recorded generating set fall back to their full element list.
    """
    ctx = G.context
    gens = list(G.generators) if G.generators else [Mat2.from_key(ctx, int(k)) for k in G.keys]
    base = []
    for s in gens:
        base.extend([s, s.inverse()])
    comms = []
    seen = set()
    for x in base:
        for y in base:
            c = x.mul(y).mul(x.inverse()).mul(y.inverse())
            if c.entries not in seen:
                seen.add(c.entries)
                comms.append(c)
    comm_gens = comms
    while True:
        C = close(comm_gens, cap=cap, context=ctx)
        fresh = []
        for s in gens:
            conj = _conjugate_keys(C, s)
            if isinstance(C.keys, np.ndarray):
                pos = np.searchsorted(C.keys, conj)
                pos_c = np.minimum(pos, C.keys.size - 1)
                missing = conj[(pos == C.keys.size) | (C.keys[pos_c] != conj)]
                fresh.extend(Mat2.from_key(ctx, int(k)) for k in missing[:64])
            else:
                fresh.extend(Mat2.from_key(ctx, k) for k in conj if k not in C)
        if not fresh:
            return _make_closure(ctx, comm_gens, C.keys)
        comm_gens = comm_gens + fresh


def reduce_mod(G: GroupClosure, m: int) -> GroupClosure:
    """Image of G in GL2(Z/ell^m), re-canonicalized at precision m."""
    ctx = G.context
    if not 1 <= m <= ctx.precision:
        raise PreconditionViolated("need 1 <= m <= N")
    if m == ctx.precision:
        return G
    new_ctx = PadicContext(ctx.prime, m, ctx.working_guard)
    Mm = new_ctx.modulus
    gens = tuple(Mat2(new_ctx, g.entries) for g in G.generators)
    if isinstance(G.keys, np.ndarray):
        a, b, c, d = G.entry_arrays()
        keys = np.unique(_pack_arrays(a % Mm, b % Mm, c % Mm, d % Mm, Mm))
    else:
        keys = tuple(sorted({Mat2(new_ctx, g.entries).key for g in G.elements()}))
        if _numpy_ok(new_ctx):
            keys = np.array(keys, dtype=np.int64)
    return _make_closure(new_ctx, gens, keys)


def contains_congruence(G: GroupClosure, n: int) -> bool:
    """True iff every determinant-1 matrix congruent to Id mod ell^n is in G."""
    ctx = G.context
    ell, N = ctx.prime, ctx.precision
    if n > N:
        raise PreconditionViolated("n must not exceed the precision")
    target = ell ** (3 * (N - n))
    t = ell**n
    M = ctx.modulus
    if isinstance(G.keys, np.ndarray):
        a, b, c, d = G.entry_arrays()
        cong = (a % t == 1 % t) & (d % t == 1 % t) & (b % t == 0) & (c % t == 0)
        det1 = (a * d - b * c) % M == 1 % M
        count = int(np.count_nonzero(cong & det1))
    else:
        count = sum(
            1
            for g in G.elements()
            if g.det() == 1 % M
            and g.entries[0] % t == 1 % t
            and g.entries[3] % t == 1 % t
            and g.entries[1] % t == 0
            and g.entries[2] % t == 0
        )
    return count == target


# ------------------------------------------------------ theta and inverse


def theta(g: Mat2) -> Mat2:
    """Traceless projection g - tr(g)/2 * Id.

    For odd ell the division is by the inverse of 2; for ell=2 the trace
    must be even and the canonical representative is halved exactly.
    """
    ctx = g.context
    M = ctx.modulus
    t = g.tr()
    if ctx.prime == 2:
        if t % 2 != 0:
            raise OddTrace("theta needs an even trace at ell=2")
        half = t // 2
    else:
        half = t * pow(2, -1, M) % M
    a, b, c, d = g.entries
    return Mat2(ctx, (a - half, b, c, d - half))


def theta_inverse(x: Mat2) -> Mat2:
    """Inverse of theta on its contraction domain: x + sqrt(1 + tr(x^2)/2) Id."""
    from .padic import sqrt_one_plus

    ctx = x.context
    M = ctx.modulus
    a, b, c, d = x.entries
    if (a + d) % M != 0:
        raise PreconditionViolated("theta_inverse needs a traceless input")
    q = (a * a + b * c) % M  # tr(x^2)/2 for traceless x
    if ctx.prime == 2:
        if any(e % 4 != 0 for e in x.entries):
            raise PreconditionViolated("need x = 0 mod 4 at ell=2")
    elif q % ctx.prime != 0:
        raise PreconditionViolated("tr(x^2)/2 must have positive valuation")
    lam = sqrt_one_plus(ctx.make(q)).residue
    return Mat2(ctx, (a + lam, b, c, d + lam))


def addition_defect(g1: Mat2, g2: Mat2) -> tuple:
    """Both sides of the division-free trace-projection addition identity.

    2*(Theta(g1 g2) - Theta(g1) - Theta(g2)) versus
    [Theta(g1), Theta(g2)] + (tr g1 - 2) Theta(g2) + (tr g2 - 2) Theta(g1),
    written so that no halving of tr(g1 g2) is needed.
    """
    ctx = g1.context
    M = ctx.modulus
    t1, t2 = theta(g1), theta(g2)
    p = g1.mul(g2)
    tp = p.tr()
    a, b, c, d = p.entries
    two_theta_p = Mat2(ctx, (2 * a - tp, 2 * b, 2 * c, 2 * d - tp))
    lhs = two_theta_p.sub(t1.scale(2)).sub(t2.scale(2))
    rhs = bracket(t1, t2).add(t2.scale(g1.tr() - 2)).add(t1.scale(g2.tr() - 2))
    return lhs, rhs


# ----------------------------------------------------------- file formats


def parse_group_file(text: str):
    """Parse the line-oriented group description (prime, precision, generators)."""
    prime = precision = None
    rows = []
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise PreconditionViolated(f"line {ln}: expected key = value")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key == "prime":
            prime = int(val)
        elif key == "precision":
            precision = int(val)
        elif key == "generator":
            parts = val.split()
            if len(parts) != 4:
                raise PreconditionViolated(f"line {ln}: generator needs 4 integers")
            rows.append(tuple(int(p) for p in parts))
        elif key.startswith("lie_x"):
            continue
        else:
            raise PreconditionViolated(f"line {ln}: unknown key {key!r}")
    if prime is None or precision is None:
        raise PreconditionViolated("file must set prime and precision")
    ctx = PadicContext(prime, precision)
    return ctx, [Mat2(ctx, r) for r in rows]


def format_group_file(context: PadicContext, generators) -> str:
    lines = [f"prime = {context.prime}", f"precision = {context.precision}"]
    for g in generators:
        lines.append("generator = " + " ".join(str(e) for e in g.entries))
    return "\n".join(lines) + "\n"
