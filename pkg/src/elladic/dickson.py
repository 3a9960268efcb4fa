"""Classification of subgroups of GL2(F_ell) and the pro-ell structure theory.

The classifier reports the most specific matching class in the priority
order split Cartan > nonsplit Cartan > their normalizers > Borel >
exceptional > contains-SL2, with every answer carrying a re-checkable
witness.  Classes requiring order prime to ell are gated on that condition,
so the dichotomy "ell divides the order implies contains-SL2 or Borel"
holds by construction and a failure to classify is an internal error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CaseNotCovered, PreconditionViolated, UnclassifiableInternal
from .groups import DEFAULT_CAP, GroupClosure, Mat2, _make_closure, _pack_arrays, close, reduce_mod
from .padic import PadicContext

SPLIT_CARTAN = "SplitCartan"
NONSPLIT_CARTAN = "NonsplitCartan"
NORMALIZER_SPLIT = "NormalizerSplitCartan"
NORMALIZER_NONSPLIT = "NormalizerNonsplitCartan"
BOREL = "Borel"
EXCEPTIONAL = "Exceptional"
CONTAINS_SL2 = "ContainsSL2"

_EXC_ORDER_PROFILE = {
    12: ("A4", {1: 1, 2: 3, 3: 8}),
    24: ("S4", {1: 1, 2: 9, 3: 8, 4: 6}),
    60: ("A5", {1: 1, 2: 15, 3: 20, 5: 24}),
}


@dataclass(frozen=True)
class DicksonClass:
    tag: str
    witness: tuple
    group_order: int
    projective_order: int
    exceptional_type: str = ""

    def describe(self) -> str:
        extra = f"({self.exceptional_type})" if self.exceptional_type else ""
        return f"{self.tag}{extra} order={self.group_order} projective_order={self.projective_order}"


@dataclass(frozen=True)
class ProLStructure:
    case: str  # prime-to-ell | borel-with-ell | full-sl2
    subgroup: GroupClosure
    quotient_order: int


# ----------------------------------------------------------- small helpers


def _lines(ell):
    return [(1, t) for t in range(ell)] + [(0, 1)]


def _fixes_line(m: Mat2, v, ell) -> bool:
    a, b, c, d = m.entries
    x, y = v
    nx, ny = (a * x + b * y) % ell, (c * x + d * y) % ell
    return (nx * y - ny * x) % ell == 0


def _gen_list(J: GroupClosure):
    return list(J.generators) if J.generators else list(J.elements())


def common_fixed_lines(J: GroupClosure):
    ell = J.context.prime
    gens = _gen_list(J)
    return [v for v in _lines(ell) if all(_fixes_line(g, v, ell) for g in gens)]


def _is_scalar(m: Mat2) -> bool:
    a, b, c, d = m.entries
    return b == 0 and c == 0 and a == d

def _charpoly_irreducible(m: Mat2) -> bool:
    ell = m.context.prime
    t, d = m.tr() % ell, m.det() % ell
    return all((x * x - t * x + d) % ell != 0 for x in range(ell))


def _in_scalar_span(g: Mat2, j0: Mat2) -> bool:
    """Is g = alpha*Id + beta*j0 over F_ell?"""
    ell = g.context.prime
    a, b, c, d = j0.entries
    e, f, gg, h = g.entries
    for slot, val in ((b, f), (c, gg), ((a - d) % ell, (e - h) % ell)):
        if slot % ell:
            beta = val * pow(slot, -1, ell) % ell
            break
    else:
        return False  # j0 scalar; caller excludes this
    alpha = (e - beta * a) % ell
    return (
        (alpha + beta * a) % ell == e
        and beta * b % ell == f
        and beta * c % ell == gg
        and (alpha + beta * d) % ell == h
    )


def element_order(m: Mat2, limit=10**6) -> int:
    acc = m
    ident = Mat2.identity(m.context)
    k = 1
    while acc.entries != ident.entries:
        acc = acc.mul(m)
        k += 1
        if k > limit:
            raise PreconditionViolated("order computation ran away")
    return k


def _scalars_in(J: GroupClosure):
    return [m for m in J.elements() if _is_scalar(m)]


def projective_data(J: GroupClosure):
    """(order of PJ, element-order multiset of PJ) at precision 1."""
    if J.context.precision != 1:
        raise PreconditionViolated("projective data is a precision-1 operation")
    ell = J.context.prime
    classes = {}
    for m in J.elements():
        cls = min(m.scale(u).key for u in range(1, ell))
        if cls not in classes:
            classes[cls] = m
    orders = {}
    for rep in classes.values():
        acc = rep
        k = 1
        while not _is_scalar(acc):
            acc = acc.mul(rep)
            k += 1
        orders[k] = orders.get(k, 0) + 1
    return len(classes), orders


# ------------------------------------------------------------- classifier


def classify_mod_ell(J: GroupClosure) -> DicksonClass:
    """Dickson class of a subgroup of GL2(F_ell), with witness."""
    ctx = J.context
    if ctx.precision != 1:
        raise PreconditionViolated("classification requires precision 1")
    ell = ctx.prime
    order = J.size
    gens = _gen_list(J)
    proj_order, proj_orders = projective_data(J)

    def result(tag, witness, exc=""):
        return DicksonClass(tag, witness, order, proj_order, exc)

    if order % ell != 0:
        fixed = common_fixed_lines(J)
        if len(fixed) >= 2:
            return result(SPLIT_CARTAN, (fixed[0], fixed[1]))
        nonscalars = [m for m in J.elements() if not _is_scalar(m)]
        if nonscalars:
            j0 = nonscalars[0]
            if _charpoly_irreducible(j0) and all(_in_scalar_span(g, j0) for g in J.elements()):
                return result(NONSPLIT_CARTAN, (j0.entries,))
        # normalizer of a split Cartan: a stabilized pair of lines, with a swap
        lines = _lines(ell)
        for i in range(len(lines)):
            for j in range(i + 1, len(lines)):
                pair = (lines[i], lines[j])
                swapper = None
                ok = True
                for g in gens:
                    if _fixes_line(g, pair[0], ell) and _fixes_line(g, pair[1], ell):
                        continue
                    if _maps_line_to(g, pair[0], pair[1], ell) and _maps_line_to(g, pair[1], pair[0], ell):
                        swapper = g
                    else:
                        ok = False
                        break
                if ok and swapper is not None:
                    return result(NORMALIZER_SPLIT, (pair[0], pair[1], swapper.entries))
        # normalizer of a nonsplit Cartan: index-2 centralizer of a nonscalar
        for a0 in nonscalars:
            if not _charpoly_irreducible(a0):
                continue
            cent = [g for g in J.elements() if g.mul(a0).entries == a0.mul(g).entries]
            if 2 * len(cent) != order:
                continue
            if not all(_in_scalar_span(g, a0) for g in cent):
                continue
            cent_entries = {c.entries for c in cent}
            outside = next(m for m in J.elements() if m.entries not in cent_entries)
            if _in_scalar_span(outside.inverse().mul(a0).mul(outside), a0):
                return result(NORMALIZER_NONSPLIT, (a0.entries, outside.entries))
        if proj_order in _EXC_ORDER_PROFILE:
            name, profile = _EXC_ORDER_PROFILE[proj_order]
            if proj_orders == profile:
                return result(EXCEPTIONAL, (proj_order, tuple(sorted(proj_orders.items()))), name)
        raise UnclassifiableInternal(f"prime-to-ell group of order {order} matched no class")

    fixed = common_fixed_lines(J)
    if fixed:
        return result(BOREL, (fixed[0],))
    sl2_order = ell * (ell * ell - 1)
    det1 = sum(1 for m in J.elements() if m.det() % ell == 1)
    if det1 == sl2_order:
        return result(CONTAINS_SL2, (det1,))
    raise UnclassifiableInternal(f"order divisible by {ell} but neither Borel nor contains SL2")


def _maps_line_to(g: Mat2, src, dst, ell) -> bool:
    a, b, c, d = g.entries
    x, y = src
    img = ((a * x + b * y) % ell, (c * x + d * y) % ell)
    return (img[0] * dst[1] - img[1] * dst[0]) % ell == 0


def verify_witness(J: GroupClosure, cls: DicksonClass) -> bool:
    """Re-check the defining property of the reported class from its witness."""
    ell = J.context.prime
    els = list(J.elements())
    if cls.tag == SPLIT_CARTAN:
        v1, v2 = cls.witness
        return v1 != v2 and all(_fixes_line(g, v1, ell) and _fixes_line(g, v2, ell) for g in els)
    if cls.tag == NONSPLIT_CARTAN:
        j0 = Mat2(J.context, cls.witness[0])
        return _charpoly_irreducible(j0) and all(_in_scalar_span(g, j0) for g in els)
    if cls.tag == NORMALIZER_SPLIT:
        v1, v2, sw = cls.witness
        sw = Mat2(J.context, sw)
        pair_ok = all(
            (_fixes_line(g, v1, ell) and _fixes_line(g, v2, ell))
            or (_maps_line_to(g, v1, v2, ell) and _maps_line_to(g, v2, v1, ell))
            for g in els
        )
        return pair_ok and sw.key in J and _maps_line_to(sw, v1, v2, ell)
    if cls.tag == NORMALIZER_NONSPLIT:
        a0 = Mat2(J.context, cls.witness[0])
        cent = [g for g in els if g.mul(a0).entries == a0.mul(g).entries]
        return 2 * len(cent) == len(els) and all(
            _in_scalar_span(g.inverse().mul(a0).mul(g), a0) for g in els
        )
    if cls.tag == BOREL:
        (v,) = cls.witness
        return all(_fixes_line(g, v, ell) for g in els)
    if cls.tag == EXCEPTIONAL:
        order, profile = cls.witness
        return order in _EXC_ORDER_PROFILE and dict(profile) == _EXC_ORDER_PROFILE[order][1]
    if cls.tag == CONTAINS_SL2:
        return cls.witness[0] == ell * (ell * ell - 1)
    return False


# ----------------------------------------------------- saturation functors


def scalar_unit_generators(context: PadicContext):
    """Generators of the unit group (Z/ell^N)^* as scalar matrices."""
    ell, N = context.prime, context.precision
    M = context.modulus
    if ell == 2:
        if N == 1:
            return []
        if N == 2:
            return [Mat2(context, (-1, 0, 0, -1))]
        return [Mat2(context, (-1, 0, 0, -1)), Mat2(context, (3, 0, 0, 3))]
    r = _primitive_root(ell)
    if N > 1 and pow(r, ell - 1, ell * ell) == 1:
        r += ell
    return [Mat2(context, (r, 0, 0, r))]


def _primitive_root(ell):
    phi = ell - 1
    facs = set()
    x, p = phi, 2
    while p * p <= x:
        while x % p == 0:
            facs.add(p)
            x //= p
        p += 1
    if x > 1:
        facs.add(x)
    for r in range(2, ell):
        if all(pow(r, phi // q, ell) != 1 for q in facs):
            return r
    raise UnclassifiableInternal("no primitive root found")


def saturate(G: GroupClosure, cap: int = DEFAULT_CAP) -> GroupClosure:
    """Closure of G together with all scalar matrices."""
    gens = _gen_list(G) + scalar_unit_generators(G.context)
    return close(gens, cap=cap, context=G.context)


def det1_part(G: GroupClosure) -> GroupClosure:
    """Elements of determinant exactly 1 modulo ell^N."""
    ctx = G.context
    M = ctx.modulus
    if isinstance(G.keys, np.ndarray):
        a, b, c, d = G.entry_arrays()
        mask = (a * d - b * c) % M == 1 % M
        keys = np.asarray(G.keys)[mask]
    else:
        keys = tuple(k for k in G.keys if Mat2.from_key(ctx, int(k)).det() == 1 % M)
    return _make_closure(ctx, (), keys)


def saturated_det1_part(G: GroupClosure) -> GroupClosure:
    """Sat(G)^{det=1} without materializing the saturation.

    Each element g with square determinant contributes +-sqrt(det g)^{-1} g;
    non-square determinants contribute nothing.
    """
    ctx = G.context
    ell, N, M = ctx.prime, ctx.precision, ctx.modulus
    if ell == 2:
        return det1_part(saturate(G))
    roots = {}
    for u in range(M):
        if u % ell:
            roots.setdefault(u * u % M, u)
    out = set()
    for g in G.elements():
        dt = g.det()
        r = roots.get(dt)
        if r is None:
            continue
        ri = pow(r, -1, M)
        out.add(g.scale(ri).key)
        out.add(g.scale(-ri).key)
    keys = sorted(out)
    keys = np.array(keys, dtype=np.int64) if isinstance(G.keys, np.ndarray) else tuple(keys)
    return _make_closure(ctx, (), keys)


# ------------------------------------------------- maximal pro-ell part


def max_normal_pro_ell(G: GroupClosure) -> ProLStructure:
    """Maximal normal pro-ell subgroup of G inside SL2, by case analysis mod ell."""
    ctx = G.context
    ell = ctx.prime
    if not G.is_sl2_subset:
        raise PreconditionViolated("max_normal_pro_ell expects a subgroup of SL2")
    J = reduce_mod(G, 1)
    sl2_order = ell * (ell * ell - 1)
    if J.size % ell != 0:
        return ProLStructure("prime-to-ell", _kernel_of_reduction(G), J.size)
    if J.size == sl2_order:
        return ProLStructure("full-sl2", _kernel_of_reduction(G), J.size)
    if common_fixed_lines(J):
        syl = {m.key for m in J.elements() if _is_ell_power_order(m, ell)}
        sub = _preimage_mod_ell(G, syl)
        return ProLStructure("borel-with-ell", sub, J.size // len(syl))
    raise CaseNotCovered("mod-ell image has ell-order but is neither Borel nor full SL2")


def _is_ell_power_order(m: Mat2, ell) -> bool:
    k = element_order(m)
    while k % ell == 0:
        k //= ell
    return k == 1


def _kernel_of_reduction(G: GroupClosure) -> GroupClosure:
    ctx = G.context
    ell = ctx.prime
    if isinstance(G.keys, np.ndarray):
        a, b, c, d = G.entry_arrays()
        mask = (a % ell == 1) & (d % ell == 1) & (b % ell == 0) & (c % ell == 0)
        keys = np.asarray(G.keys)[mask]
    else:
        keys = tuple(
            k
            for k in G.keys
            if (lambda m: m.entries[0] % ell == 1
                and m.entries[3] % ell == 1
                and m.entries[1] % ell == 0
                and m.entries[2] % ell == 0)(Mat2.from_key(ctx, int(k)))
        )
    return _make_closure(ctx, (), keys)


def _preimage_mod_ell(G: GroupClosure, mod_ell_keys: set) -> GroupClosure:
    ctx = G.context
    ell = ctx.prime
    if isinstance(G.keys, np.ndarray):
        a, b, c, d = G.entry_arrays()
        k1 = _pack_arrays(a % ell, b % ell, c % ell, d % ell, ell)
        tgt = np.array(sorted(mod_ell_keys), dtype=np.int64)
        pos = np.searchsorted(tgt, k1)
        pos_c = np.minimum(pos, tgt.size - 1)
        mask = (pos < tgt.size) & (tgt[pos_c] == k1)
        keys = np.asarray(G.keys)[mask]
    else:
        keys = tuple(
            k for k in G.keys if Mat2(PadicContext(ell, 1), Mat2.from_key(ctx, int(k)).entries).key in mod_ell_keys
        )
    return _make_closure(ctx, (), keys)
