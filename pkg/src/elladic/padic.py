"""Fixed-precision arithmetic in Z/ell^N with ell-adic valuation semantics.

Everything here is exact: a residue is the canonical representative of an
ell-adic integer known modulo ell^N.  Series-based operations (square root,
logarithm, exponential) run at an internal guard precision and carry a
documented per-prime output-precision loss: 0 digits for odd ell, 1 digit
for ell=2.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import NotAUnit, PreconditionViolated

BOTTOM = None  # valuation ">= N": indistinguishable from 0 at this precision

DEFAULT_GUARD = 8


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1 if d == 2 else 2
    return True


def val_int(r: int, ell: int, cap: int):
    """Valuation of the integer r, capped at `cap`; BOTTOM if ell^cap | r."""
    r = abs(r)
    if r == 0:
        return BOTTOM
    v = 0
    while v < cap and r % ell == 0:
        r //= ell
        v += 1
    return BOTTOM if v >= cap else v


@dataclass(frozen=True)
class PadicContext:
    prime: int
    precision: int
    working_guard: int = DEFAULT_GUARD

    def __post_init__(self):
        if not is_prime(self.prime):
            raise PreconditionViolated(f"{self.prime} is not prime")
        if self.precision < 1:
            raise PreconditionViolated("precision must be >= 1")
        if self.working_guard < 0:
            raise PreconditionViolated("working_guard must be >= 0")

    @property
    def modulus(self) -> int:
        return self.prime ** self.precision

    @property
    def v2_shift(self) -> int:
        """v = v_ell(2): 1 for ell=2, else 0."""
        return 1 if self.prime == 2 else 0

    def make(self, residue: int) -> "PadicInt":
        return PadicInt(self, residue % self.modulus)

    def one(self) -> "PadicInt":
        return self.make(1)

    def zero(self) -> "PadicInt":
        return self.make(0)


@dataclass(frozen=True)
class PadicInt:
    context: PadicContext
    residue: int

    def __post_init__(self):
        if not 0 <= self.residue < self.context.modulus:
            object.__setattr__(self, "residue", self.residue % self.context.modulus)

    def _lift(self, other) -> int:
        if isinstance(other, PadicInt):
            if other.context.prime != self.context.prime or other.context.precision != self.context.precision:
                raise PreconditionViolated("mixed p-adic contexts")
            return other.residue
        return int(other)

    def __add__(self, other):
        return self.context.make(self.residue + self._lift(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self.context.make(self.residue - self._lift(other))

    def __rsub__(self, other):
        return self.context.make(self._lift(other) - self.residue)

    def __mul__(self, other):
        return self.context.make(self.residue * self._lift(other))

    __rmul__ = __mul__

    def __neg__(self):
        return self.context.make(-self.residue)

    def __int__(self):
        return self.residue

    def __repr__(self):
        c = self.context
        return f"{self.residue} (mod {c.prime}^{c.precision})"


def valuation(x: PadicInt):
    """Largest t < N with ell^t | x, or BOTTOM when x = 0 at this precision."""
    return val_int(x.residue, x.context.prime, x.context.precision)


def unit_inverse(x: PadicInt) -> PadicInt:
    if valuation(x) != 0:
        raise NotAUnit(f"{x.residue} is divisible by {x.context.prime}")
    return x.context.make(pow(x.residue, -1, x.context.modulus))


def _sqrt_int_odd(a: int, ell: int, prec: int) -> int:
    # Newton iteration for x^2 = a with x = 1 mod ell; a = 1 mod ell required.
    mod = ell ** prec
    x = 1
    # error valuation doubles each step
    steps = max(1, prec).bit_length() + 1
    inv2 = pow(2, -1, mod)
    for _ in range(steps + 1):
        x = ((x + a * pow(x, -1, mod)) * inv2) % mod
    return x


def _sqrt_int_two(a: int, prec: int) -> int:
    # Bit-by-bit lift of x^2 = a, x = 1 mod 4; needs a = 1 mod 8.
    if prec <= 3:
        return 1
    x = 1
    for m in range(3, prec):
        # x is a root mod 2^m; adjust bit m-1 so it becomes one mod 2^(m+1)
        if ((a - x * x) >> m) & 1:
            x += 1 << (m - 1)
    return x % (1 << prec)


def sqrt_one_plus(x: PadicInt) -> PadicInt:
    """The square root of 1+x congruent to 1 mod ell (mod 4 for ell=2).

    Computed by Hensel lifting from the canonical representative of x; the
    binomial series converges to the same root on this domain.  Guaranteed
    output precision: N for odd ell, N-1 for ell=2 (the top digit depends
    on the unknown lift of x).
    """
    ctx = x.context
    ell, n = ctx.prime, ctx.precision
    v = valuation(x)
    if x.residue == 0:
        return ctx.one()
    if ell == 2:
        if v is not BOTTOM and v < 3:
            raise PreconditionViolated("need v_2(x) >= 3 for the 2-adic square root")
        root = _sqrt_int_two(1 + x.residue, n + ctx.working_guard)
    else:
        if v is not BOTTOM and v < 1:
            raise PreconditionViolated("need v_ell(x) >= 1 for the square root")
        root = _sqrt_int_odd(1 + x.residue, ell, n + ctx.working_guard)
    return ctx.make(root)


def _series_sum(x: PadicInt, kind: str) -> int:
    """Truncated log(1+x) or exp(x) over the canonical lift, at guard precision.

    Terms are r^j/j (log) or r^j/j! (exp); the ell-part of each denominator
    divides the numerator exactly on the stated domains, the unit part is
    inverted modulo the working modulus.  On both domains term valuations
    grow at least like j/2, so 2*work+8 terms always suffice.
    """
    ctx = x.context
    ell, n = ctx.prime, ctx.precision
    work = n + ctx.working_guard
    j_max = 2 * work + 8
    # extra digits absorb the exact division by the ell-part of j or j!
    buf = work + j_max + 2
    big = ell ** buf
    wmod = ell ** work
    r = x.residue
    total = 1 if kind == "exp" else 0
    power = 1
    den_val, den_unit = 0, 1  # ell-adic valuation and unit part of j or j!
    for j in range(1, j_max + 1):
        power = (power * r) % big
        jv = val_int(j, ell, buf) or 0
        if kind == "log":
            den_val, den_unit = jv, j // ell**jv
        else:
            den_val += jv
            den_unit = (den_unit * (j // ell**jv)) % wmod
        term = (power // ell**den_val) * pow(den_unit, -1, wmod) % wmod
        if kind == "log" and j % 2 == 0:
            term = -term
        total = (total + term) % wmod
    return total % (ell**n)


def log_one_plus(x: PadicInt) -> PadicInt:
    """log(1+x) by the alternating series; v(log(1+x)) = v(x) on the domain."""
    ctx = x.context
    v = valuation(x)
    need = 2 if ctx.prime == 2 else 1
    if x.residue != 0 and (v is not BOTTOM and v < need):
        raise PreconditionViolated(f"log requires v(x) >= {need}")
    if x.residue == 0:
        return ctx.zero()
    return ctx.make(_series_sum(x, "log"))


def exp(y: PadicInt) -> PadicInt:
    """exp(y) by the exponential series on its convergence domain."""
    ctx = y.context
    v = valuation(y)
    need = 2 if ctx.prime == 2 else 1
    if y.residue != 0 and (v is not BOTTOM and v < need):
        raise PreconditionViolated(f"exp requires v(y) >= {need}")
    if y.residue == 0:
        return ctx.one()
    return ctx.make(_series_sum(y, "exp"))


def pow_padic(u: PadicInt, w) -> PadicInt:
    """u^w = exp(w log u) for u = 1 mod ell (mod 4 for ell=2), w in Z/ell^N.

    Agrees with iterated multiplication for machine-integer w.
    """
    ctx = u.context
    ell = ctx.prime
    base = 4 if ell == 2 else ell
    if u.residue % base != 1 % base:
        raise PreconditionViolated(f"base must be 1 mod {base}")
    wr = w.residue if isinstance(w, PadicInt) else int(w) % ctx.modulus
    if u.residue == 1:
        return ctx.one()
    lg = log_one_plus(u - 1)
    return exp(ctx.make(lg.residue * wr))
