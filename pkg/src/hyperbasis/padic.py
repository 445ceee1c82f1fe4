"""Truncated p-adic numbers with tracked relative precision.

A nonzero scalar is ``p**val * unit`` where ``unit`` is known modulo
``p**prec``.  Two kinds of zero exist: the exact zero, and ``O(p**a)``,
a value about which we only know that it lies in ``p**a Z_p``.
Arithmetic never guesses; decisions that depend on unknown digits raise
:class:`PrecisionExhausted`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import DivisionByZero, NotASquare, PrecisionExhausted

INFINITY = math.inf


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def vp(n: int, p: int) -> int:
    """Valuation of a nonzero integer."""
    if n == 0:
        raise ValueError("valuation of 0")
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def legendre(a: int, p: int) -> int:
    a %= p
    if a == 0:
        return 0
    return 1 if pow(a, (p - 1) // 2, p) == 1 else -1


def sqrt_mod_prime(a: int, p: int) -> int:
    """Tonelli-Shanks; ``a`` must be a nonzero square mod the odd prime ``p``."""
    a %= p
    if p % 4 == 3:
        return pow(a, (p + 1) // 4, p)
    q, s = p - 1, 0
    while q % 2 == 0:
        q //= 2
        s += 1
    z = 2
    while legendre(z, p) != -1:
        z += 1
    m, c, t, r = s, pow(z, q, p), pow(a, q, p), pow(a, (q + 1) // 2, p)
    while t != 1:
        i, t2 = 0, t
        while t2 != 1:
            t2 = t2 * t2 % p
            i += 1
        b = pow(c, 1 << (m - i - 1), p)
        m, c, t, r = i, b * b % p, t * b * b % p, r * b % p
    return r


def parse_rational(text) -> Fraction:
    """Accept ints, Fractions, or strings of the form ``"a/b"`` / ``"a"``."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    if isinstance(text, str):
        return Fraction(text.strip())
    raise TypeError(f"cannot read a rational from {text!r}")


@dataclass(frozen=True)
class PAdicContext:
    """The prime, working precision N and decision margin M."""

    p: int
    precision: int = 48
    margin: int = 8

    def __post_init__(self):
        if not is_prime(self.p):
            raise ValueError(f"{self.p} is not prime")
        if not (self.precision > self.margin >= 1):
            raise ValueError("need precision > margin >= 1")

    def __call__(self, q) -> "PAdicScalar":
        return from_rational(q, self)

    @property
    def zero(self) -> "PAdicScalar":
        return PAdicScalar(self, None, 0, None)

    @property
    def one(self) -> "PAdicScalar":
        return PAdicScalar(self, 0, 1, self.precision)

    def uniformizer(self, k: int = 1) -> "PAdicScalar":
        return PAdicScalar(self, k, 1, self.precision)

    def O(self, a: int) -> "PAdicScalar":
        return PAdicScalar(self, a, 0, 0)

    def with_precision(self, n: int) -> "PAdicContext":
        return PAdicContext(self.p, n, self.margin)


class PAdicScalar:
    __slots__ = ("ctx", "val", "unit", "prec")

    def __init__(self, ctx: PAdicContext, val, unit: int, prec):
        self.ctx = ctx
        self.val = val
        self.unit = unit
        self.prec = prec

    # -- inspection -------------------------------------------------------

    @property
    def is_exact_zero(self) -> bool:
        return self.prec is None

    @property
    def is_inexact_zero(self) -> bool:
        return self.prec == 0

    @property
    def known_digits(self) -> int:
        """Certified relative precision (0 for an inexact zero)."""
        return self.ctx.precision if self.prec is None else self.prec

    @property
    def absprec(self):
        if self.prec is None:
            return INFINITY
        return self.val + self.prec

    def valuation(self):
        if self.prec is None:
            return INFINITY
        if self.prec == 0:
            raise PrecisionExhausted(f"valuation of O({self.ctx.p}^{self.val})")
        return self.val

    def valuation_bound(self):
        """A certified lower bound for the valuation."""
        return INFINITY if self.prec is None else self.val

    def is_zero(self) -> bool:
        if self.prec is None:
            return True
        if self.prec > 0:
            return False
        if self.val >= self.ctx.margin:
            return True
        raise PrecisionExhausted(f"cannot decide whether O({self.ctx.p}^{self.val}) is zero")

    def val_ge(self, k: int) -> bool:
        """Decide ``valuation >= k``."""
        if self.prec is None:
            return True
        if self.prec > 0:
            return self.val >= k
        if self.val >= k + self.ctx.margin:
            return True
        raise PrecisionExhausted(
            f"cannot decide valuation >= {k} for O({self.ctx.p}^{self.val})")

    def is_unit(self) -> bool:
        return self.val_ge(0) and not self.val_ge(1)

    def digits(self) -> list[int]:
        p, u, out = self.ctx.p, self.unit, []
        for _ in range(self.prec or 0):
            u, d = divmod(u, p)
            out.append(d)
        return out

    def agrees(self, other) -> bool:
        """True when no certified digit of ``self - other`` is nonzero."""
        d = self - other
        return d.prec is None or d.prec == 0

    __eq__ = agrees
    __hash__ = None

    def __bool__(self):
        return not self.is_zero()

    # -- arithmetic -------------------------------------------------------

    def _coerce(self, other) -> "PAdicScalar":
        if isinstance(other, PAdicScalar):
            if other.ctx.p != self.ctx.p:
                raise ValueError("mixing p-adic scalars for different primes")
            return other
        return from_rational(other, self.ctx)

    def __add__(self, other):
        return _add(self, self._coerce(other))

    __radd__ = __add__

    def __neg__(self):
        if not self.prec:
            return self
        m = self.ctx.p ** self.prec
        return PAdicScalar(self.ctx, self.val, (-self.unit) % m, self.prec)

    def __sub__(self, other):
        return _add(self, -self._coerce(other))

    def __rsub__(self, other):
        return _add(self._coerce(other), -self)

    def __mul__(self, other):
        return _mul(self, self._coerce(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return _div(self, self._coerce(other))

    def __rtruediv__(self, other):
        return _div(self._coerce(other), self)

    def __pow__(self, k: int):
        if k < 0:
            return _div(self.ctx.one, self ** (-k))
        if k == 0:
            return self.ctx.one
        if self.prec is None:
            return self
        if self.prec == 0:
            return PAdicScalar(self.ctx, self.val * k, 0, 0)
        m = self.ctx.p ** self.prec
        return PAdicScalar(self.ctx, self.val * k, pow(self.unit, k, m), self.prec)

    def unit_part(self) -> "PAdicScalar":
        if not self.prec:
            raise PrecisionExhausted("unit part of a zero")
        return PAdicScalar(self.ctx, 0, self.unit, self.prec)

    def scale_pow(self, k: int) -> "PAdicScalar":
        """Multiply by ``p**k`` (exactly, no precision loss)."""
        if self.prec is None:
            return self
        return PAdicScalar(self.ctx, self.val + k, self.unit, self.prec)

    # -- digit-level helpers ----------------------------------------------

    def remainder(self, e: int) -> "PAdicScalar":
        """The representative of ``self mod p**e R`` with digits only below ``p**e``."""
        if self.prec is None:
            return self
        if self.val >= e:
            return self.ctx.zero
        if self.absprec < e:
            raise PrecisionExhausted(f"digits below p^{e} not certified")
        m = self.ctx.p ** (e - self.val)
        return PAdicScalar(self.ctx, self.val, self.unit % m, self.ctx.precision)

    def lift(self, k: int, shift: int = 0) -> int:
        """An integer congruent to ``self * p**shift`` modulo ``p**k``."""
        if self.prec is None:
            return 0
        v = self.val + shift
        if v >= k:
            return 0
        if v < 0:
            raise ValueError("not integral after shift")
        if self.absprec + shift < k:
            raise PrecisionExhausted(f"residue mod p^{k} not certified")
        p = self.ctx.p
        return (self.unit * p ** v) % p ** k

    def truncate(self, n: int) -> "PAdicScalar":
        """Drop relative precision to at most ``n`` digits."""
        if not self.prec or self.prec <= n:
            return self
        return PAdicScalar(self.ctx, self.val, self.unit % self.ctx.p ** n, n)

    def rational(self):
        """Rational reconstruction; None unless the value is convincingly rational."""
        if self.prec is None:
            return Fraction(0)
        if self.prec == 0:
            return None
        p, k = self.ctx.p, self.prec
        mod = p ** k
        bound = math.isqrt(p ** max(k - self.ctx.margin, 0) // 2)
        r0, r1, s0, s1 = mod, self.unit, 0, 1
        while r1 > bound:
            q = r0 // r1
            r0, r1 = r1, r0 - q * r1
            s0, s1 = s1, s0 - q * s1
        if s1 == 0 or abs(s1) > bound or math.gcd(r1, s1) != 1:
            return None
        return Fraction(r1, s1) * Fraction(p) ** self.val

    # -- square classes ---------------------------------------------------

    def is_square(self) -> bool:
        try:
            self.sqrt()
        except NotASquare:
            return False
        return True

    def sqrt(self) -> "PAdicScalar":
        if self.prec is None:
            return self
        if self.prec == 0:
            raise PrecisionExhausted("square root of an inexact zero")
        if self.val % 2:
            raise NotASquare("odd valuation")
        p, u, k = self.ctx.p, self.unit, self.prec
        if p != 2:
            if legendre(u, p) != 1:
                raise NotASquare(f"unit {u % p} is a non-residue mod {p}")
            r = sqrt_mod_prime(u, p)
            if r > (p - 1) // 2:
                r = p - r
            # Newton iteration doubles the number of correct digits.
            done = 1
            while done < k:
                done = min(2 * done, k)
                m = p ** done
                r = (r - (r * r - u) * pow(2 * r, -1, m)) % m
            return PAdicScalar(self.ctx, self.val // 2, r, k)
        if k < 3:
            raise PrecisionExhausted("need 3 digits to take a 2-adic square root")
        if u % 8 != 1:
            raise NotASquare(f"unit {u % 8} mod 8")
        r = 1
        for i in range(3, k):
            if (r * r - u) % (1 << (i + 1)):
                r += 1 << (i - 1)
        m = 1 << (k - 1)
        r %= m
        if r % 4 == 3:
            r = (-r) % m
        return PAdicScalar(self.ctx, self.val // 2, r, k - 1)

    # -- rendering --------------------------------------------------------

    def __repr__(self):
        p = self.ctx.p
        if self.prec is None:
            return "0"
        if self.prec == 0:
            return f"O({p}^{self.val})"
        terms = [f"{d}*{p}^{i}" for i, d in enumerate(self.digits()) if d]
        terms.append(f"O({p}^{self.prec})")
        return f"{p}^{self.val} * (" + " + ".join(terms) + ")"

    def to_json(self) -> dict:
        if self.prec is None:
            return {"zero": True}
        out = {"v": self.val, "k": self.prec, "digits": self.digits()}
        q = self.rational()
        if q is not None:
            out["rational"] = str(q)
        return out


def from_json(obj, ctx: PAdicContext) -> PAdicScalar:
    if isinstance(obj, (str, int)):
        return from_rational(obj, ctx)
    if obj.get("zero"):
        return ctx.zero
    p, k = ctx.p, obj["k"]
    unit = sum(d * p ** i for i, d in enumerate(obj["digits"]))
    if k == 0:
        return ctx.O(obj["v"])
    if unit % p == 0:
        raise ValueError("p-adic digits must start with a unit digit")
    return PAdicScalar(ctx, obj["v"], unit % p ** k, k).truncate(ctx.precision)


def from_rational(q, ctx: PAdicContext) -> PAdicScalar:
    q = parse_rational(q)
    if q == 0:
        return ctx.zero
    p, n = ctx.p, ctx.precision
    num, den = q.numerator, q.denominator
    a, b = vp(num, p), vp(den, p)
    num //= p ** a
    den //= p ** b
    m = p ** n
    return PAdicScalar(ctx, a - b, num * pow(den, -1, m) % m, n)


def _add(a: PAdicScalar, b: PAdicScalar) -> PAdicScalar:
    if a.prec is None:
        return b
    if b.prec is None:
        return a
    ctx = a.ctx
    p = ctx.p
    absprec = min(a.val + a.prec, b.val + b.prec)
    vmin = min(a.val, b.val)
    if vmin >= absprec:
        return PAdicScalar(ctx, absprec, 0, 0)
    x = (a.unit * p ** (a.val - vmin) + b.unit * p ** (b.val - vmin)) % p ** (absprec - vmin)
    if x == 0:
        return PAdicScalar(ctx, absprec, 0, 0)
    w = 0
    while x % p == 0:
        x //= p
        w += 1
    val = vmin + w
    prec = absprec - val
    if prec > ctx.precision:
        prec = ctx.precision
        x %= p ** prec
    return PAdicScalar(ctx, val, x, prec)


def _mul(a: PAdicScalar, b: PAdicScalar) -> PAdicScalar:
    if a.prec is None:
        return a
    if b.prec is None:
        return b
    if a.prec == 0 or b.prec == 0:
        return PAdicScalar(a.ctx, a.val + b.val, 0, 0)
    prec = min(a.prec, b.prec)
    return PAdicScalar(a.ctx, a.val + b.val, a.unit * b.unit % a.ctx.p ** prec, prec)


def _div(a: PAdicScalar, b: PAdicScalar) -> PAdicScalar:
    if b.prec is None:
        raise DivisionByZero("division by exact zero")
    if b.prec == 0:
        raise PrecisionExhausted("division by an inexact zero")
    if a.prec is None:
        return a
    if a.prec == 0:
        return PAdicScalar(a.ctx, a.val - b.val, 0, 0)
    prec = min(a.prec, b.prec)
    m = a.ctx.p ** prec
    return PAdicScalar(a.ctx, a.val - b.val, a.unit * pow(b.unit, -1, m) % m, prec)


def hilbert_symbol(a: PAdicScalar, b: PAdicScalar) -> int:
    """The local Hilbert symbol (a, b) over Q_p."""
    p = a.ctx.p
    need = 3 if p == 2 else 1
    for x in (a, b):
        if x.prec is None:
            raise ValueError("Hilbert symbol of zero")
        if x.prec < need:
            raise PrecisionExhausted("unit class not certified")
    alpha, beta, u, v = a.val, b.val, a.unit, b.unit
    if p != 2:
        s = -1 if (alpha * beta * (p - 1) // 2) % 2 else 1
        if beta % 2:
            s *= legendre(u, p)
        if alpha % 2:
            s *= legendre(v, p)
        return s
    u, v = u % 8, v % 8

    def eps(x):
        return ((x - 1) // 2) % 2

    def omega(x):
        return ((x * x - 1) // 8) % 2

    e = eps(u) * eps(v) + alpha * omega(v) + beta * omega(u)
    return -1 if e % 2 else 1


def square_class_representatives(p: int) -> list[int]:
    """Integers representing Q_p^*/Q_p^*^2."""
    if p == 2:
        return [1, 3, 5, 7, 2, 6, 10, 14]
    n = next(a for a in range(2, p) if legendre(a, p) == -1)
    return [1, n, p, n * p]
