"""Finite-precision verifiers for the structure theorems, with fixtures.

A verifier never weakens a statement to fit the working precision: when N
is too small it refuses with an InsufficientPrecision outcome, and when the
structural hypotheses fail it reports Inapplicable.  A Violated outcome
carries a concrete re-checkable witness and, since the underlying theorems
are proved, indicates an implementation bug by definition.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import CapExceeded, InsufficientPrecision, InvalidParams, PreconditionViolated
from .dickson import (
    BOREL,
    CONTAINS_SL2,
    EXCEPTIONAL,
    NONSPLIT_CARTAN,
    NORMALIZER_NONSPLIT,
    NORMALIZER_SPLIT,
    SPLIT_CARTAN,
    _is_ell_power_order,
    _is_scalar,
    classify_mod_ell,
    common_fixed_lines,
    det1_part,
    element_order,
    max_normal_pro_ell,
    saturate,
    _primitive_root,
)
from .groups import (
    DEFAULT_CAP,
    GroupClosure,
    Mat2,
    _make_closure,
    _pack_arrays,
    close,
    congruence_generators,
    congruence_subgroup,
    contains_congruence,
    derived_subgroup,
    reduce_mod,
    theta_inverse,
)
from .lie import LieModule, contains_scaled_sl2, j_n, k_of, special_lie_algebra
from .padic import BOTTOM, PadicContext

VERIFIED = "Verified"
VIOLATED = "Violated"
INAPPLICABLE = "Inapplicable"
INSUFFICIENT = "InsufficientPrecision"


@dataclass(frozen=True)
class VerificationReport:
    theorem: str
    params: dict
    outcome: str
    witness: object = None
    reason: str = ""
    detail: dict = field(default_factory=dict)
    elapsed: float = 0.0

    def line(self) -> str:
        bits = [f"theorem={self.theorem}", f"outcome={self.outcome}"]
        for k in sorted(self.params):
            bits.append(f"{k}={self.params[k]}")
        if self.reason:
            bits.append(f"reason={self.reason!r}")
        if self.witness is not None:
            bits.append(f"witness={self.witness}")
        return " ".join(bits)


@dataclass(frozen=True)
class H1Selection:
    subgroup: GroupClosure
    index: int
    route: str


def _report(theorem, params, outcome, t0, **kw):
    return VerificationReport(theorem, params, outcome, elapsed=time.time() - t0, **kw)


# ---------------------------------------------------- hypothesis readers


def _legendre(a, ell):
    a %= ell
    if a == 0:
        return 0
    return 1 if pow(a, (ell - 1) // 2, ell) == 1 else -1


def dets_all_squares(G: GroupClosure) -> bool:
    """Every determinant a square unit modulo ell^N (odd ell: test mod ell)."""
    ctx = G.context
    ell = ctx.prime
    M = ctx.modulus
    if isinstance(G.keys, np.ndarray):
        a, b, c, d = G.entry_arrays()
        dets = (a * d - b * c) % M
        if ell == 2:
            return bool(np.all(dets % min(M, 8) == 1))
        residues = np.unique(dets % ell)
        return all(_legendre(int(r), ell) == 1 for r in residues)
    if ell == 2:
        return all(g.det() % min(M, 8) == 1 for g in G.elements())
    return all(_legendre(g.det(), ell) == 1 for g in G.elements())


def _sylow_count_mod_ell(J: GroupClosure) -> int:
    ell = J.context.prime
    return sum(1 for m in J.elements() if _is_ell_power_order(m, ell))


def remark_hypothesis(G: GroupClosure):
    """Theorem hypotheses on Sat(G)^{det=1}, read off modulo ell.

    Returns (ok, reason).  The mod-ell group must be cyclic of order != 4,
    or Borel-contained with ell dividing its order and quotient-by-Sylow of
    order != 4.
    """
    J = det1_part(saturate(reduce_mod(G, 1)))
    ell = J.context.prime
    if J.size % ell != 0:
        orders = [element_order(m) for m in J.elements()]
        if max(orders, default=1) != J.size:
            return False, f"mod-ell group of order {J.size} is not cyclic"
        if J.size == 4:
            return False, "cyclic mod-ell group of order exactly 4"
        return True, ""
    if not common_fixed_lines(J):
        return False, "ell divides the order but the group is not Borel-contained"
    q = J.size // _sylow_count_mod_ell(J)
    if q == 4:
        return False, "quotient by the ell-Sylow has order exactly 4"
    return True, ""


def star_hypothesis(G: GroupClosure):
    """Cartan/Borel containment mod ell and quotient != 4, for G inside SL2."""
    J = reduce_mod(G, 1)
    cls = classify_mod_ell(J)
    if cls.tag not in (SPLIT_CARTAN, NONSPLIT_CARTAN, BOREL):
        return False, f"mod-ell image is {cls.tag}, not Cartan- or Borel-contained"
    st = max_normal_pro_ell(G)
    if st.quotient_order == 4:
        return False, "G / N(G) has order exactly 4"
    return True, ""


# ------------------------------------------------------------- verifiers


def _scaled_basis_witness(L: LieModule, s: int):
    ctx = L.context
    t = ctx.prime**s
    for coords, name in (((t, 0, 0), "E21"), ((0, t, 0), "E11-E22"), ((0, 0, t), "E12")):
        if not L.contains_coords(coords):
            return f"ell^{s}*{name} missing from the module"
    return None


def check_star(G: GroupClosure, s: int) -> VerificationReport:
    """(star): ell^s sl2 in L(G) forces ell^(2s) sl2 in L(N(G))."""
    t0 = time.time()
    ctx = G.context
    params = {"prime": ctx.prime, "precision": ctx.precision, "s": s}
    if ctx.prime == 2:
        raise PreconditionViolated("check_star requires odd ell")
    if not G.is_sl2_subset:
        raise PreconditionViolated("check_star expects G inside SL2")
    if s < 1:
        raise PreconditionViolated("s must be a positive integer")
    ok, why = star_hypothesis(G)
    if not ok:
        return _report("star", params, INAPPLICABLE, t0, reason=why)
    if ctx.precision < 2 * s + 1:
        return _report("star", params, INSUFFICIENT, t0, reason=f"need N >= {2*s+1}")
    L = special_lie_algebra(G)
    if not contains_scaled_sl2(L, s):
        return _report("star", params, VERIFIED, t0, detail={"hypothesis_holds": False})
    st = max_normal_pro_ell(G)
    L0 = special_lie_algebra(st.subgroup)
    if contains_scaled_sl2(L0, 2 * s):
        return _report("star", params, VERIFIED, t0, detail={"hypothesis_holds": True})
    return _report("star", params, VIOLATED, t0, witness=_scaled_basis_witness(L0, 2 * s))


def _find_missing_congruence_witness(D: GroupClosure, level: int):
    ctx = D.context
    B = congruence_subgroup(level, ctx)
    for m in B.elements():
        if m not in D:
            return m.entries
    return None


def check_starstar(G: GroupClosure, s: int, cap: int = DEFAULT_CAP) -> VerificationReport:
    """(star star): ell^s sl2 in L(G) forces B_ell(4s) inside G'."""
    t0 = time.time()
    ctx = G.context
    params = {"prime": ctx.prime, "precision": ctx.precision, "s": s}
    if ctx.prime == 2:
        raise PreconditionViolated("check_starstar requires odd ell")
    if s < 1:
        raise PreconditionViolated("s must be a positive integer")
    if not dets_all_squares(G):
        return _report("starstar", params, INAPPLICABLE, t0, reason="determinants are not all squares")
    ell = ctx.prime
    if ell >= 5:
        J = reduce_mod(G, 1)
        if sum(1 for m in J.elements() if m.det() % ell == 1) == ell * (ell * ell - 1):
            # full mod-ell image: the derived subgroup is everything, so the
            # conclusion holds for every s without enumerating it
            return _report("starstar", params, VERIFIED, t0, detail={"route": "full-derived"})
    ok, why = remark_hypothesis(G)
    if not ok:
        return _report("starstar", params, INAPPLICABLE, t0, reason=why)
    if ctx.precision < 4 * s + 1:
        return _report("starstar", params, INSUFFICIENT, t0, reason=f"need N >= {4*s+1}")
    L = special_lie_algebra(G)
    if not contains_scaled_sl2(L, s):
        return _report("starstar", params, VERIFIED, t0, detail={"hypothesis_holds": False})
    D = derived_subgroup(G, cap=cap)
    if contains_congruence(D, 4 * s):
        return _report("starstar", params, VERIFIED, t0, detail={"hypothesis_holds": True})
    return _report(
        "starstar", params, VIOLATED, t0, witness=_find_missing_congruence_witness(D, 4 * s)
    )


def check_sl2z2(G: GroupClosure, s: int) -> VerificationReport:
    """ell=2: 2^s sl2 in L(G) forces B_2(6s) inside G, for mod-4-trivial G."""
    t0 = time.time()
    ctx = G.context
    params = {"prime": 2, "precision": ctx.precision, "s": s}
    if ctx.prime != 2:
        raise PreconditionViolated("check_sl2z2 is the ell=2 statement")
    if s < 2:
        raise PreconditionViolated("the statement needs s >= 2")
    if ctx.precision < 2 or reduce_mod(G, min(2, ctx.precision)).size != 1:
        return _report("sl2z2", params, INAPPLICABLE, t0, reason="reduction mod 4 is not trivial")
    if ctx.precision < 6 * s + 1:
        return _report("sl2z2", params, INSUFFICIENT, t0, reason=f"need N >= {6*s+1}")
    L = special_lie_algebra(G)
    if not contains_scaled_sl2(L, s):
        return _report("sl2z2", params, VERIFIED, t0, detail={"hypothesis_holds": False})
    if contains_congruence(G, 6 * s):
        return _report("sl2z2", params, VERIFIED, t0, detail={"hypothesis_holds": True})
    return _report("sl2z2", params, VIOLATED, t0, witness=_find_missing_congruence_witness(G, 6 * s))


def check_gl2z2(G: GroupClosure, n: int, cap: int = DEFAULT_CAP) -> VerificationReport:
    """ell=2: 2^n sl2 in L(G) forces B_2(12n+2) inside G', under the GL2 hypotheses."""
    t0 = time.time()
    ctx = G.context
    params = {"prime": 2, "precision": ctx.precision, "n": n}
    if ctx.prime != 2:
        raise PreconditionViolated("check_gl2z2 is the ell=2 statement")
    if n < 1:
        raise PreconditionViolated("n must be a positive integer")
    if ctx.precision < 3:
        return _report("gl2z2", params, INSUFFICIENT, t0, reason="need N >= 3 to read the hypotheses")
    if reduce_mod(G, 2).size != 1:
        return _report("gl2z2", params, INAPPLICABLE, t0, reason="G(4) is not trivial")
    if not dets_all_squares(G):
        return _report("gl2z2", params, INAPPLICABLE, t0, reason="det(G) != 1 mod 8")
    required = 12 * n + 3
    if ctx.precision < required:
        L = special_lie_algebra(G)
        hyp = contains_scaled_sl2(L, n) if n < ctx.precision else None
        return _report(
            "gl2z2",
            params,
            INSUFFICIENT,
            t0,
            reason=f"need N >= {required}",
            detail={"hypothesis_at_current_precision": hyp},
        )
    L = special_lie_algebra(G)
    if not contains_scaled_sl2(L, n):
        return _report("gl2z2", params, VERIFIED, t0, detail={"hypothesis_holds": False})
    D = derived_subgroup(G, cap=cap)
    if contains_congruence(D, 12 * n + 2):
        return _report("gl2z2", params, VERIFIED, t0, detail={"hypothesis_holds": True})
    return _report(
        "gl2z2", params, VIOLATED, t0, witness=_find_missing_congruence_witness(D, 12 * n + 2)
    )


def _lines_mod(ctx_prec, ell, m):
    """Projective lines over Z/ell^m: primitive vectors up to unit scaling."""
    mod = ell**m
    out = [(1, t) for t in range(mod)]
    out += [(ell * t, 1) for t in range(mod // ell)]
    return out


def _common_eigenline_mod(G: GroupClosure, m: int):
    """A line in (Z/ell^m)^2 stabilized by every generator, or None."""
    ctx = G.context
    ell = ctx.prime
    mod = ell**m
    gens = list(G.generators) if G.generators else list(G.elements())
    mats = [tuple(e % mod for e in g.entries) for g in gens]
    for v in _lines_mod(ctx.precision, ell, m):
        x, y = v
        ok = True
        for a, b, c, d in mats:
            nx, ny = (a * x + b * y) % mod, (c * x + d * y) % mod
            if (nx * y - ny * x) % mod != 0:
                ok = False
                break
        if ok:
            return v
    return None


def _is_abelian(G: GroupClosure) -> bool:
    gens = list(G.generators) if G.generators else list(G.elements())
    for i, g in enumerate(gens):
        for h in gens[i + 1 :]:
            if g.mul(h).entries != h.mul(g).entries:
                return False
    return True


def trichotomy(G: GroupClosure, n: int, mode: str = "proposition", cap: int = DEFAULT_CAP) -> VerificationReport:
    """The three-way alternative for G(ell^n) driven by j_n, j_2n, k(L)."""
    t0 = time.time()
    ctx = G.context
    ell = ctx.prime
    params = {"prime": ell, "precision": ctx.precision, "n": n, "mode": mode}
    if mode not in ("proposition", "corollary"):
        raise PreconditionViolated("mode must be proposition or corollary")
    if n < 1:
        raise PreconditionViolated("n must be a positive integer")
    if ell == 2:
        if ctx.precision < 3:
            return _report("trichotomy", params, INSUFFICIENT, t0, reason="need N >= 3")
        if reduce_mod(G, 2).size != 1:
            return _report("trichotomy", params, INAPPLICABLE, t0, reason="G(4) is not trivial")
        if not dets_all_squares(G):
            return _report("trichotomy", params, INAPPLICABLE, t0, reason="det(G) != 1 mod 8")
    else:
        if not dets_all_squares(G):
            return _report("trichotomy", params, INAPPLICABLE, t0, reason="determinants are not all squares")
        ok, why = remark_hypothesis(G)
        if not ok:
            return _report("trichotomy", params, INAPPLICABLE, t0, reason=why)
    required = 2 * n
    level = None
    if mode == "corollary":
        level = 16 * n - 4 if ell != 2 else 48 * n - 10
        required = max(required, level + 1)
    if ctx.precision < required:
        return _report("trichotomy", params, INSUFFICIENT, t0, reason=f"need N >= {required}")
    L = special_lie_algebra(G)
    k = k_of(L)
    if k is BOTTOM:
        # every bottom-left entry vanishes at this precision, so k(L) >= N > n
        return _report(
            "trichotomy", params, INAPPLICABLE, t0,
            reason="n < k(L): the bottom-left coordinate vanishes at this precision",
        )
    if n < k:
        return _report("trichotomy", params, INAPPLICABLE, t0, reason=f"n < k(L) = {k}")
    jn = j_n(L, n)
    j2n = j_n(L, 2 * n)
    v = ctx.v2_shift
    detail = {"j_n": jn, "j_2n": j2n, "k": k}
    if jn <= 1:
        if _is_abelian(reduce_mod(G, n)):
            detail["case"] = "abelian"
            return _report("trichotomy", params, VERIFIED, t0, detail=detail)
        return _report("trichotomy", params, VIOLATED, t0, witness="j_n <= 1 but G(ell^n) is nonabelian", detail=detail)
    if jn == 2:
        if j2n == 3:
            detail["case"] = "deferred-to-2n"
            return _report("trichotomy", params, VERIFIED, t0, detail=detail)
        m = n - k + 1 - 2 * v
        if m <= 0:
            detail["case"] = "triangular-vacuous"
            return _report("trichotomy", params, VERIFIED, t0, detail=detail)
        line = _common_eigenline_mod(reduce_mod(G, m), m)
        if line is not None:
            detail["case"] = "triangular"
            detail["eigenline"] = line
            return _report("trichotomy", params, VERIFIED, t0, detail=detail)
        return _report(
            "trichotomy", params, VIOLATED, t0,
            witness=f"j_n=2, j_2n=2 but no stable line mod ell^{m}", detail=detail,
        )
    s_req = n + 2 * k - 1
    if s_req >= ctx.precision:
        return _report("trichotomy", params, INSUFFICIENT, t0, reason=f"need N >= {s_req+1} to see ell^{s_req}")
    if not contains_scaled_sl2(L, s_req):
        return _report(
            "trichotomy", params, VIOLATED, t0, witness=_scaled_basis_witness(L, s_req), detail=detail
        )
    detail["case"] = "scaled-sl2"
    detail["s"] = s_req
    if mode == "corollary":
        D = derived_subgroup(G, cap=cap)
        if not contains_congruence(D, level):
            return _report(
                "trichotomy", params, VIOLATED, t0,
                witness=_find_missing_congruence_witness(D, level), detail=detail,
            )
        detail["congruence_level"] = level
    return _report("trichotomy", params, VERIFIED, t0, detail=detail)


def trichotomy_lie(L: LieModule, n: int) -> VerificationReport:
    """Module-only form of the three-way alternative (the j_n = 3 case).

    The abelian and triangular branches are statements about a group, so a
    bare module is only checkable when j_n = 3: the scaled-sl2 containment
    at s = n + 2k(L) - 1, with tightness at s - 1 recorded when visible.
    """
    t0 = time.time()
    ctx = L.context
    params = {"prime": ctx.prime, "precision": ctx.precision, "n": n}
    k = k_of(L)
    if k is BOTTOM or n < k:
        return _report("trichotomy-lie", params, INAPPLICABLE, t0, reason="n < k(L)")
    jn = j_n(L, n) if n <= ctx.precision else None
    if jn != 3:
        return _report(
            "trichotomy-lie", params, INAPPLICABLE, t0,
            reason=f"j_n = {jn}: the remaining cases are group statements",
        )
    s_req = n + 2 * k - 1
    if s_req >= ctx.precision:
        return _report("trichotomy-lie", params, INSUFFICIENT, t0, reason=f"need N >= {s_req+1}")
    detail = {"j_n": jn, "k": k, "s": s_req}
    if not contains_scaled_sl2(L, s_req):
        return _report("trichotomy-lie", params, VIOLATED, t0, witness=_scaled_basis_witness(L, s_req), detail=detail)
    detail["tight"] = True if s_req == 0 else not contains_scaled_sl2(L, s_req - 1)
    return _report("trichotomy-lie", params, VERIFIED, t0, detail=detail)


# ----------------------------------------------------------- H1 selection


def _filter_group(G: GroupClosure, pred_arrays):
    ctx = G.context
    if isinstance(G.keys, np.ndarray):
        mask = pred_arrays(*G.entry_arrays())
        keys = np.asarray(G.keys)[mask]
    else:
        keys = tuple(
            k for k in G.keys if bool(pred_arrays(*(np.array([e]) for e in Mat2.from_key(ctx, int(k)).entries))[0])
        )
    return _make_closure(ctx, (), keys)


def _det_square_kernel(G: GroupClosure) -> GroupClosure:
    ctx = G.context
    ell, M = ctx.prime, ctx.modulus
    squares = {(u * u) % ell for u in range(1, ell)}

    def pred(a, b, c, d):
        dets = (a * d - b * c) % M % ell
        return np.isin(dets, np.array(sorted(squares), dtype=np.int64))

    return _filter_group(G, pred)


def _preimage_of_mod_ell_keys(G: GroupClosure, keys_mod_ell) -> GroupClosure:
    ctx = G.context
    ell = ctx.prime
    tgt = np.array(sorted(set(int(k) for k in keys_mod_ell)), dtype=np.int64)

    def pred(a, b, c, d):
        k1 = _pack_arrays(a % ell, b % ell, c % ell, d % ell, ell)
        pos = np.searchsorted(tgt, k1)
        pos_c = np.minimum(pos, tgt.size - 1)
        return (pos < tgt.size) & (tgt[pos_c] == k1)

    return _filter_group(G, pred)


def _sat_det1_mod_ell(J: GroupClosure) -> GroupClosure:
    return det1_part(saturate(J))


def _cartan_refine(G_cur: GroupClosure, route: str):
    """Accept G_cur when Sat(.)^{det=1}(ell) has order != 4, else pass to the
    kernel of the projective character."""
    ctx = G_cur.context
    ell = ctx.prime
    J = reduce_mod(G_cur, 1)
    SJ = _sat_det1_mod_ell(J)
    if SJ.size != 4:
        return G_cur, route
    scalar_keys = [m.key for m in J.elements() if _is_scalar(m)]
    H = _preimage_of_mod_ell_keys(G_cur, scalar_keys)
    return H, route + "+projective-kernel"


def select_h1(G: GroupClosure) -> H1Selection:
    """Bounded-index subgroup selection for odd ell (the case router).

    Follows the determinant-square kernel first, then routes on the Dickson
    class of the reduction: full-SL2 image (ell >= 5), the ell=3 Sylow
    route, exceptional via a cyclic projective subgroup, Cartan with the
    order-4 refinement, normalizer reduction, and the Borel character
    kernel.
    """
    ctx = G.context
    ell = ctx.prime
    if ell == 2:
        raise PreconditionViolated("use select_h1_two at ell=2")
    J_full = reduce_mod(G, 1)
    sl2_order = ell * (ell * ell - 1)
    if ell >= 5:
        det1 = sum(1 for m in J_full.elements() if m.det() % ell == 1)
        if det1 == sl2_order:
            return H1Selection(G, 1, "derived-subgroup-full")
    G1 = _det_square_kernel(G)
    if ell == 3:
        J1 = reduce_mod(G1, 1)
        if J1.size % 3 == 0:
            unip = min(
                (m for m in J1.elements() if not _is_scalar(m) and _is_ell_power_order(m, 3)),
                key=lambda m: m.key,
            )
            syl = close([unip], context=J1.context)
            keys = [m.key for m in syl.elements()]
        else:
            keys = [Mat2.identity(J1.context).key]
        H = _preimage_of_mod_ell_keys(G1, keys)
        return H1Selection(H, G.size // H.size, "ell3-sylow")
    J1 = reduce_mod(G1, 1)
    cls = classify_mod_ell(J1)
    if cls.tag in (SPLIT_CARTAN, NONSPLIT_CARTAN):
        H, route = _cartan_refine(G1, "cartan")
        return H1Selection(H, G.size // H.size, route)
    if cls.tag == NORMALIZER_SPLIT:
        v1, v2, _ = cls.witness
        from .dickson import _fixes_line

        keys = [m.key for m in J1.elements() if _fixes_line(m, v1, ell) and _fixes_line(m, v2, ell)]
        G2 = _preimage_of_mod_ell_keys(G1, keys)
        H, route = _cartan_refine(G2, "normalizer-split+cartan")
        return H1Selection(H, G.size // H.size, route)
    if cls.tag == NORMALIZER_NONSPLIT:
        a0 = Mat2(J1.context, cls.witness[0])
        keys = [m.key for m in J1.elements() if m.mul(a0).entries == a0.mul(m).entries]
        G2 = _preimage_of_mod_ell_keys(G1, keys)
        H, route = _cartan_refine(G2, "normalizer-nonsplit+cartan")
        return H1Selection(H, G.size // H.size, route)
    if cls.tag == EXCEPTIONAL:
        target = 5 if cls.exceptional_type == "A5" else 3
        b = None
        for m in sorted(J1.elements(), key=lambda m: m.key):
            if _is_scalar(m):
                continue
            acc, k = m, 1
            while not _is_scalar(acc):
                acc = acc.mul(m)
                k += 1
            if k == target:
                b = m
                break
        if b is None:
            raise PreconditionViolated("exceptional image without the expected cyclic subgroup")
        keys = set()
        for u in range(1, ell):
            acc = Mat2(J1.context, (u, 0, 0, u))
            for _ in range(target):
                keys.add(acc.key)
                acc = acc.mul(b)
        keys &= {m.key for m in J1.elements()}
        H = _preimage_of_mod_ell_keys(G1, keys)
        return H1Selection(H, G.size // H.size, "exceptional-cyclic")
    if cls.tag == BOREL:
        SJ = _sat_det1_mod_ell(J1)
        if SJ.size % ell == 0:
            q = SJ.size // _sylow_count_mod_ell(SJ)
        else:
            q = SJ.size
        if q != 4:
            return H1Selection(G1, G.size // G1.size, "borel")
        (v,) = cls.witness
        x, y = v
        if x % ell:
            P = Mat2(J1.context, (x, 0, y, 1))
        else:
            P = Mat2(J1.context, (x, 1, y, 0))
        Pi = P.inverse()
        keys = []
        for m in J1.elements():
            t = Pi.mul(m).mul(P)
            a, b, c, d = t.entries
            if a % ell == d % ell:
                keys.append(m.key)
        H = _preimage_of_mod_ell_keys(G1, keys)
        return H1Selection(H, G.size // H.size, "borel-tau-kernel")
    if cls.tag == CONTAINS_SL2:
        return H1Selection(G, 1, "derived-subgroup-full")
    raise PreconditionViolated(f"unrouted class {cls.tag}")


def select_h1_two(G: GroupClosure) -> H1Selection:
    """ell=2 selection: trivial mod 4 and determinant 1 mod 8."""
    ctx = G.context
    if ctx.prime != 2:
        raise PreconditionViolated("select_h1_two is the ell=2 selection")
    if ctx.precision < 3:
        raise InsufficientPrecision(3)
    M = ctx.modulus

    def pred(a, b, c, d):
        cong = (a % 4 == 1) & (d % 4 == 1) & (b % 4 == 0) & (c % 4 == 0)
        det8 = ((a * d - b * c) % M) % 8 == 1
        return cong & det8

    H = _filter_group(G, pred)
    index = G.size // H.size
    if index > 192:
        raise PreconditionViolated(f"index {index} exceeds the structural bound 192")
    return H1Selection(H, index, "double-kernel")


# --------------------------------------------------------------- fixtures


def _unit_of_order(ctx: PadicContext, order: int) -> int:
    ell, N, M = ctx.prime, ctx.precision, ctx.modulus
    if (ell - 1) % order != 0:
        raise InvalidParams(f"no unit of order {order} prime to {ell}")
    r = _primitive_root(ell)
    if N > 1 and pow(r, ell - 1, ell * ell) == 1:
        r += ell
    phi = (ell - 1) * ell ** (N - 1)
    return pow(r, phi // order, M)


def sqrt_minus_one(ctx: PadicContext) -> int:
    if ctx.prime % 4 != 1:
        raise InvalidParams("need ell = 1 mod 4")
    return _unit_of_order(ctx, 4)


def fixture(name: str, **params) -> object:
    """Named constructions used by the tightness checks.

    s3-lift(ell, t, precision): the 12-element lift joined with B_ell(t).
    pink-borel(ell, s, precision, order): the trace-congruence group of the
        module ell^s E12 + ell^s E21 + ell^(2s) D, joined with diag(a, 1/a)
        for a unit a of the given multiplicative order.
    optimal-lie(ell, k, n, precision): the extremal Lie module (a LieModule).
    """
    if name == "s3-lift":
        return _fixture_s3_lift(**params)
    if name == "pink-borel":
        return _fixture_pink_borel(**params)
    if name == "optimal-lie":
        return _fixture_optimal_lie(**params)
    raise InvalidParams(f"unknown fixture {name!r}")


def _fixture_s3_lift(ell: int, t: int, precision: int, cap: int = DEFAULT_CAP) -> GroupClosure:
    if ell % 4 != 1:
        raise InvalidParams("s3-lift needs ell = 1 mod 4")
    if not 1 <= t <= precision:
        raise InvalidParams("need 1 <= t <= precision")
    ctx = PadicContext(ell, precision)
    i = sqrt_minus_one(ctx)
    rot = Mat2(ctx, (0, 1, -1, 1))
    swap = Mat2(ctx, (0, i, i, 0))
    gens = [rot, swap] + congruence_generators(ctx, t)
    G = close(gens, cap=cap, context=ctx)
    return G


def _fixture_pink_borel(ell: int, s: int, precision: int, order: int = 4) -> GroupClosure:
    if ell == 2:
        raise InvalidParams("pink-borel is an odd-ell fixture")
    if s < 1 or precision < 2 * s + 1:
        raise InvalidParams("need s >= 1 and precision >= 2s+1")
    ctx = PadicContext(ell, precision)
    N, M = ctx.precision, ctx.modulus
    a = _unit_of_order(ctx, order)
    ts = ell**s
    t2s = ell ** (2 * s)
    n1 = ell ** (N - s)
    n2 = ell ** (N - 2 * s)
    al = np.repeat(np.arange(n1, dtype=np.int64), n1 * n2)
    be = np.tile(np.repeat(np.arange(n1, dtype=np.int64), n2), n1)
    ga = np.tile(np.arange(n2, dtype=np.int64), n1 * n1)
    top = (al * ts) % M  # m12
    bot = (be * ts) % M  # m21
    dia = (ga * t2s) % M  # m11
    q = (dia * dia + top * bot) % M
    lam = np.array([_sqrt_unit(ctx, int(x)) for x in np.unique(q)], dtype=np.int64)
    lut = {int(x): int(l) for x, l in zip(np.unique(q), lam)}
    lamv = np.array([lut[int(x)] for x in q], dtype=np.int64)
    x11 = (dia + lamv) % M
    x22 = (lamv - dia) % M
    base = np.stack([x11, top, bot, x22], axis=1)
    keys = []
    ak = 1
    for k in range(order):
        u = pow(a, k, M)
        ui = pow(u, -1, M)
        keys.append(_pack_arrays(base[:, 0] * u % M, base[:, 1] * u % M, base[:, 2] * ui % M, base[:, 3] * ui % M, M))
    allk = np.unique(np.concatenate(keys))
    gens = (Mat2(ctx, (a, 0, 0, pow(a, -1, M))),)
    return _make_closure(ctx, gens, allk)


def _sqrt_unit(ctx: PadicContext, q: int) -> int:
    from .padic import _sqrt_int_odd

    return _sqrt_int_odd((1 + q) % (ctx.prime ** (ctx.precision + 2)), ctx.prime, ctx.precision)


def _fixture_optimal_lie(ell: int, k: int, n: int, precision: int) -> LieModule:
    if k < 0 or n < 1:
        raise InvalidParams("need k >= 0 and n >= 1")
    ctx = PadicContext(ell, precision)
    x1 = Mat2(ctx, (1, 0, ell**k, -1))
    x2 = Mat2(ctx, (ell ** (k + n - 1), 0, 0, -(ell ** (k + n - 1))))
    x3 = Mat2(ctx, (0, ell ** (n - 1), 0, 0))
    return LieModule.from_mats(ctx, [x1, x2, x3])


# --------------------------------------------------------------- sampling


def _random_b_element(ctx: PadicContext, level: int, rng: random.Random) -> Mat2:
    """A determinant-1 matrix congruent to Id mod ell^level."""
    ell, N, M = ctx.prime, ctx.precision, ctx.modulus
    level = min(level, N)
    t = ell**level
    reps = ell ** (N - level)
    a = (1 + t * rng.randrange(reps)) % M
    b = t * rng.randrange(reps) % M
    c = t * rng.randrange(reps) % M
    d = (1 + b * c) * pow(a, -1, M) % M
    return Mat2(ctx, (a, b, c, d))


def sample_group(ctx: PadicContext, rng: random.Random, kind: str) -> list:
    """Structured generator families for the randomized campaigns.

    Interesting cases live near the boundary, so generators mix Cartan and
    Borel lifts with congruence-level perturbations rather than uniform
    matrices (which almost surely generate everything).
    """
    ell, M = ctx.prime, ctx.modulus
    if kind == "cartan":
        a = _unit_of_order(ctx, rng.choice([d for d in (2, 3, 4, 6) if (ell - 1) % d == 0]))
        gens = [Mat2(ctx, (a, 0, 0, pow(a, -1, M)))]
        level = rng.choice([1, 1, 2])
        if rng.random() < 0.6:
            gens.extend(congruence_generators(ctx, level))
        else:
            gens.extend(_random_b_element(ctx, level, rng) for _ in range(rng.randrange(1, 3)))
        return gens
    if kind == "borel":
        a = _unit_of_order(ctx, rng.choice([d for d in (2, 3, 6) if (ell - 1) % d == 0]))
        up = Mat2(ctx, (a, rng.randrange(M), 0, pow(a, -1, M)))
        gens = [up, Mat2(ctx, (1, rng.randrange(1, M), 0, 1))]
        if rng.random() < 0.5:
            gens.append(_random_b_element(ctx, 2, rng))
        return gens
    if kind == "scalar":
        return [_random_b_element(ctx, rng.choice([1, 2]), rng).scale(rng.choice([1, -1]))]
    if kind == "deep":
        lvl = rng.choice([2, 3])
        return [_random_b_element(ctx, lvl, rng) for _ in range(rng.randrange(1, 3))]
    raise InvalidParams(f"unknown sample kind {kind!r}")


def sample_group_two(ctx: PadicContext, rng: random.Random) -> list:
    """ell=2 families: mostly small pro-2 groups, a few near the cap.

    The mix keeps most closures enumerable (cyclic or triangular inside
    B_2(2)) while still probing wide three-generator groups that are
    expected to hit the cap at full width.
    """
    if ctx.prime != 2:
        raise InvalidParams("sample_group_two is the ell=2 sampler")
    M = ctx.modulus
    roll = rng.random()
    if roll < 0.62:
        return [_random_b_element(ctx, rng.choice([2, 3, 4]), rng)]
    if roll < 0.88:
        u = (1 + 4 * rng.randrange(1, ctx.modulus // 8)) % M
        upper = Mat2(ctx, (1, 4 * rng.randrange(1, M // 4), 0, 1))
        diag = Mat2(ctx, (u, 0, 0, pow(u, -1, M)))
        return [upper, diag]
    mats = []
    for _ in range(3):
        a = 4 * rng.randrange(M // 4)
        b = 4 * rng.randrange(1, M // 4)
        c = 4 * rng.randrange(M // 4)
        mats.append(theta_inverse(Mat2(ctx, (a, b, c, -a))))
    return mats


def run_campaign(check, sampler, trials: int, seed: int, cap: int = DEFAULT_CAP,
                 applicable_only: bool = False, max_attempts: int = None):
    """Run seeded trials, merging reports in trial order.

    The sampler draws generator sets; closures past the cap are recorded as
    Inapplicable with reason cap-exceeded (capped, not failed).  With
    applicable_only, inapplicable draws are discarded and resampled until
    `trials` reports pass the applicability filter.
    """
    rng = random.Random(seed)
    reports = []
    attempts = 0
    limit = max_attempts or 20 * trials
    while len(reports) < trials and attempts < limit:
        attempts += 1
        gens = sampler(rng)
        t0 = time.time()
        try:
            G = close(gens, cap=cap, context=gens[0].context)
            rep = check(G)
        except CapExceeded:
            rep = VerificationReport(
                "campaign", {"trial": len(reports)}, INAPPLICABLE, reason="cap-exceeded",
                elapsed=time.time() - t0,
            )
        if applicable_only and rep.outcome == INAPPLICABLE:
            continue
        reports.append(rep)
    return reports


def summarize(reports) -> str:
    counts = {VERIFIED: 0, VIOLATED: 0, INAPPLICABLE: 0, INSUFFICIENT: 0}
    for r in reports:
        counts[r.outcome] += 1
    return (
        f"trials={len(reports)} verified={counts[VERIFIED]} violated={counts[VIOLATED]} "
        f"inapplicable={counts[INAPPLICABLE]} insufficient={counts[INSUFFICIENT]}"
    )
