"""Special Lie algebras of group closures over Z/ell^N.

Traceless matrices are handled in the coordinate order (m21, m11, m12), so
that triangular elimination produces the reduced-basis shape: x1 arbitrary,
x2 upper triangular, x3 strictly upper triangular.  Membership tests go
through an exact Smith-form solve over Z/ell^N.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import CapExceeded, InsufficientPrecision, PreconditionViolated
from .groups import DEFAULT_CAP, GroupClosure, Mat2, _make_closure, bracket, close, theta
from .padic import BOTTOM, PadicContext, val_int


def coords_of(x: Mat2):
    """(m21, m11, m12) for a traceless matrix."""
    a, b, c, d = x.entries
    M = x.context.modulus
    if (a + d) % M != 0:
        raise PreconditionViolated("not traceless")
    return (c, a, b)


def mat_of(context: PadicContext, coords) -> Mat2:
    c, a, b = coords
    return Mat2(context, (a, b, c, -a))


@dataclass(frozen=True)
class ReducedBasis:
    context: PadicContext
    x1: Mat2
    x2: Mat2
    x3: Mat2
    rank: int

    def vectors(self):
        return (self.x1, self.x2, self.x3)


class LieModule:
    """Z/ell^N-span of a set of traceless matrices."""

    def __init__(self, context: PadicContext, coords):
        self.context = context
        if isinstance(coords, np.ndarray):
            self.coords = coords.reshape(-1, 3) % context.modulus
        else:
            M = context.modulus
            self.coords = [(c % M, a % M, b % M) for (c, a, b) in coords]

    @classmethod
    def from_mats(cls, context, mats):
        return cls(context, [coords_of(m) for m in mats])

    def __len__(self):
        return len(self.coords)

    @cached_property
    def reduced(self) -> ReducedBasis:
        return reduced_basis_coords(self.context, self.coords)

    def contains_coords(self, coords) -> bool:
        rb = self.reduced
        cols = [coords_of(v) for v in rb.vectors()]
        return _solvable(cols, coords, self.context.prime, self.context.precision)

    def contains(self, x: Mat2) -> bool:
        return self.contains_coords(coords_of(x))

    def bracket_module(self) -> "LieModule":
        """Module spanned by the brackets of the reduced-basis pairs."""
        rb = self.reduced
        vs = rb.vectors()
        mats = [bracket(vs[i], vs[j]) for i in range(3) for j in range(i + 1, 3)]
        return LieModule.from_mats(self.context, mats)

    def span_coord_keys(self):
        """Explicit span as a set of packed coordinate keys (small modules only)."""
        ctx = self.context
        ell, N, M = ctx.prime, ctx.precision, ctx.modulus
        rb = self.reduced
        ranges = []
        for v in rb.vectors():
            vals = [val_int(e, ell, N) for e in coords_of(v)]
            vmin = min((x for x in vals if x is not BOTTOM), default=None)
            ranges.append(1 if vmin is None else ell ** (N - vmin))
        total = ranges[0] * ranges[1] * ranges[2]
        if total > 2**22:
            raise CapExceeded(2**22, "span too large to enumerate explicitly")
        cols = [coords_of(v) for v in rb.vectors()]
        out = set()
        for al in range(ranges[0]):
            p0 = tuple(al * e % M for e in cols[0])
            for be in range(ranges[1]):
                p1 = tuple((x + be * e) % M for x, e in zip(p0, cols[1]))
                for ga in range(ranges[2]):
                    c, a, b = ((x + ga * e) % M for x, e in zip(p1, cols[2]))
                    out.add((c * M + a) * M + b)
        return out


# ----------------------------------------------------------- elimination


def _valuations_vec(arr, ell, N):
    v = np.zeros(arr.shape, dtype=np.int64)
    pk = 1
    for _ in range(N):
        pk *= ell
        v += (arr % pk == 0)
    return v  # N means zero at this precision


def reduced_basis_coords(context: PadicContext, coords) -> ReducedBasis:
    """Minimal-valuation elimination in the order (m21, m11, m12).

    Among minimal-valuation pivot candidates the lowest input index wins;
    missing pivots leave zero placeholder vectors and lower the rank.
    """
    ell, N, M = context.prime, context.precision, context.modulus
    if isinstance(coords, np.ndarray):
        mat = coords.astype(np.int64) % M
    else:
        mat = np.array(list(coords) or [(0, 0, 0)], dtype=np.int64).reshape(-1, 3) % M
    if mat.shape[0] == 0:
        mat = np.zeros((1, 3), dtype=np.int64)
    alive = np.ones(mat.shape[0], dtype=bool)
    pivots = []
    for col in range(3):
        colv = mat[:, col].copy()
        colv[~alive] = 0
        vals = _valuations_vec(colv, ell, N)
        vals[~alive] = N
        kmin = int(vals.min())
        if kmin >= N:
            pivots.append(None)
            continue
        idx = int(np.argmax(vals == kmin))
        pivot = mat[idx].copy()
        alive[idx] = False
        unit = int(pivot[col]) // ell**kmin
        uinv = pow(unit, -1, M)
        q = (mat[:, col] // ell**kmin) * uinv % M
        q[~alive] = 0
        mat = (mat - q[:, None] * pivot[None, :]) % M
        pivots.append(pivot)
    vecs = []
    rank = 0
    for p in pivots:
        if p is None:
            vecs.append(mat_of(context, (0, 0, 0)))
        else:
            vecs.append(mat_of(context, tuple(int(e) for e in p)))
            rank += 1
    return ReducedBasis(context, vecs[0], vecs[1], vecs[2], rank)


def reduced_basis(mats, context: PadicContext = None) -> ReducedBasis:
    """Reduced basis of the module generated by traceless matrices."""
    if not mats and context is None:
        raise PreconditionViolated("need matrices or an explicit context")
    ctx = context or mats[0].context
    return reduced_basis_coords(ctx, [coords_of(m) for m in mats])


# ------------------------------------------------------------ Smith solve


def _diagonalize3(A):
    """U @ A @ V = diagonal over Z; returns (diagonal entries, U)."""
    A = [list(map(int, row)) for row in A]
    n = len(A)
    U = [[int(i == j) for j in range(n)] for i in range(n)]
    diag = [0] * n
    for t in range(n):
        while True:
            best, pos = None, None
            for i in range(t, n):
                for j in range(t, n):
                    if A[i][j] != 0 and (best is None or abs(A[i][j]) < best):
                        best, pos = abs(A[i][j]), (i, j)
            if pos is None:
                return diag, U
            i, j = pos
            if i != t:
                A[t], A[i] = A[i], A[t]
                U[t], U[i] = U[i], U[t]
            if j != t:
                for row in A:
                    row[t], row[j] = row[j], row[t]
            p = A[t][t]
            clean = True
            for i in range(n):
                if i != t and A[i][t] % p != 0:
                    q = A[i][t] // p
                    A[i] = [x - q * y for x, y in zip(A[i], A[t])]
                    U[i] = [x - q * y for x, y in zip(U[i], U[t])]
                    clean = False
            if not clean:
                continue
            for j in range(n):
                if j != t and A[t][j] % p != 0:
                    q = A[t][j] // p
                    for row in A:
                        row[j] -= q * row[t]
                    clean = False
            if not clean:
                continue
            for i in range(n):
                if i != t and A[i][t] != 0:
                    q = A[i][t] // p
                    A[i] = [x - q * y for x, y in zip(A[i], A[t])]
                    U[i] = [x - q * y for x, y in zip(U[i], U[t])]
            for j in range(n):
                if j != t and A[t][j] != 0:
                    q = A[t][j] // p
                    for row in A:
                        row[j] -= q * row[t]
            diag[t] = A[t][t]
            break
    return diag, U


def _solvable(cols, y, ell, N):
    """Does sum z_i * cols[i] = y admit a solution modulo ell^N?"""
    A = [[cols[j][i] for j in range(3)] for i in range(3)]
    diag, U = _diagonalize3(A)
    mod = ell**N
    for i in range(3):
        w = sum(U[i][j] * y[j] for j in range(3)) % mod
        dv = val_int(diag[i], ell, N)
        need = N if dv is BOTTOM else dv
        wv = val_int(w, ell, N)
        have = N if wv is BOTTOM else wv
        if have < need:
            return False
    return True


# ------------------------------------------------------------- module ops


def special_lie_algebra(G: GroupClosure) -> LieModule:
    """Span of the traceless projections of all closure elements."""
    ctx = G.context
    if ctx.prime == 2 and not G.mod2_trivial:
        raise PreconditionViolated("at ell=2 the group must be trivial mod 2")
    M = ctx.modulus
    if isinstance(G.keys, np.ndarray):
        a, b, c, d = G.entry_arrays()
        t = (a + d) % M
        if ctx.prime == 2:
            half = t // 2
        else:
            half = t * pow(2, -1, M) % M
        ta = (a - half) % M
        packed = np.unique((c * M + ta) * M + b)
        b2 = packed % M
        rest = packed // M
        a2 = rest % M
        c2 = rest // M
        coords = np.stack([c2, a2, b2], axis=1)
        return LieModule(ctx, coords)
    return LieModule.from_mats(ctx, [theta(g) for g in G.elements()])


def k_of(L: LieModule):
    """Minimal valuation of the bottom-left coordinate over the module."""
    rb = L.reduced
    c = coords_of(rb.x1)[0]
    return val_int(c, L.context.prime, L.context.precision)


def j_n(L: LieModule, n: int) -> int:
    """How many of the pinned reduced-basis vectors are nonzero mod ell^n."""
    if n > L.context.precision:
        raise PreconditionViolated("n must not exceed the precision")
    t = L.context.prime**n
    return sum(1 for v in L.reduced.vectors() if any(e % t for e in v.entries))


def contains_scaled_sl2(L: LieModule, s: int) -> bool:
    """Does the module contain ell^s * (E12, E21, E11-E22)?"""
    ctx = L.context
    if s >= ctx.precision:
        raise InsufficientPrecision(s + 1, "scale ell^s is invisible at this precision")
    t = ctx.prime**s
    return (
        L.contains_coords((t, 0, 0))
        and L.contains_coords((0, t, 0))
        and L.contains_coords((0, 0, t))
    )


def minimal_sl2_scale(L: LieModule):
    """Smallest s < N with ell^s sl2 inside L, or BOTTOM when there is none."""
    for s in range(L.context.precision):
        if contains_scaled_sl2(L, s):
            return s
    return BOTTOM


def trace_ideal(L: LieModule):
    """Valuation of the ideal generated by tr(xy) over the module (BOTTOM if zero)."""
    ctx = L.context
    ell, N, M = ctx.prime, ctx.precision, ctx.modulus
    vs = L.reduced.vectors()
    best = BOTTOM
    for i in range(3):
        ci, ai, bi = coords_of(vs[i])
        for j in range(i, 3):
            cj, aj, bj = coords_of(vs[j])
            tr = (2 * ai * aj + bi * cj + ci * bj) % M
            v = val_int(tr, ell, N)
            if v is not BOTTOM and (best is BOTTOM or v < best):
                best = v
    return best


# ------------------------------------- derived subgroup from Lie data

_SL2_CACHE: dict = {}


def sl2_closure(context: PadicContext, cap=DEFAULT_CAP) -> GroupClosure:
    """Full SL2(Z/ell^N), generated by the two unipotent transvections."""
    key = (context.prime, context.precision)
    if key not in _SL2_CACHE:
        gens = [Mat2(context, (1, 1, 0, 1)), Mat2(context, (1, 0, 1, 1))]
        _SL2_CACHE[key] = close(gens, cap=cap, context=context)
    return _SL2_CACHE[key]


def pink_derived(G: GroupClosure, cap=DEFAULT_CAP) -> GroupClosure:
    """Derived subgroup predicted from the Lie data of a pro-ell group.

    Filters SL2(Z/ell^N) for Theta(x) in [L,L] and tr(x)-2 in the trace
    ideal.  Agreement with derived_subgroup is only asserted after reducing
    both sides to the documented sub-precision window.
    """
    ctx = G.context
    if ctx.prime == 2:
        raise PreconditionViolated("pink_derived requires odd ell")
    if not G.is_sl2_subset:
        raise PreconditionViolated("group must sit inside SL2")
    from .groups import reduce_mod

    if reduce_mod(G, 1).size != 1:
        raise PreconditionViolated("group must be pro-ell (trivial mod ell)")
    L = special_lie_algebra(G)
    comm = L.bracket_module()
    span = comm.span_coord_keys()
    tval = trace_ideal(L)
    tmod = ctx.modulus if tval is BOTTOM else ctx.prime**tval
    sl2 = sl2_closure(ctx, cap=cap)
    M = ctx.modulus
    a, b, c, d = sl2.entry_arrays()
    t = (a + d) % M
    half = t * pow(2, -1, M) % M
    ta = (a - half) % M
    ckeys = (c * M + ta) * M + b
    span_arr = np.array(sorted(span), dtype=np.int64)
    pos = np.searchsorted(span_arr, ckeys)
    pos_c = np.minimum(pos, span_arr.size - 1)
    in_span = (pos < span_arr.size) & (span_arr[pos_c] == ckeys)
    tr_ok = (t - 2) % tmod == 0
    mask = in_span & tr_ok
    keys = np.asarray(sl2.keys)[mask]
    return _make_closure(ctx, (), keys)


def pink_window(G: GroupClosure, L: LieModule = None) -> int:
    """Precision window N - (2 s_max + v) for honest derived-subgroup comparison."""
    ctx = G.context
    L = L or special_lie_algebra(G)
    s = minimal_sl2_scale(L)
    if s is BOTTOM:
        return 1
    return max(1, ctx.precision - (2 * s + ctx.v2_shift))
