"""Independent certification and brute-force oracles.

The checks here rebuild every claimed lattice from raw vectors and compare
canonical bases with ``linalg`` primitives only; nothing from the
decomposition code in ``lattice``/``align`` is reused.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm

from . import linalg as la
from .errors import HyperbasisError, PrecisionExhausted, TooLarge
from .padic import parse_rational, vp

ORACLE_BUDGET = 2_000_000


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class Certificate:
    kind: str
    checks: list = field(default_factory=list)
    precision_used: int = 0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed_names(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    @property
    def undecided(self) -> list[str]:
        """Checks that failed only because the working precision ran out."""
        return [c.name for c in self.checks if not c.passed and c.detail.startswith("precision:")]

    def add(self, name: str, fn, detail: str = ""):
        """Record ``fn()``; an undecidable check fails rather than guessing."""
        try:
            ok = bool(fn())
        except PrecisionExhausted as exc:
            ok, detail = False, f"precision: {exc}"
        except (HyperbasisError, ValueError, ZeroDivisionError) as exc:
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        self.checks.append(Check(name, ok, detail))
        return ok

    def to_json(self):
        return {"kind": self.kind, "pass": self.passed, "precision_used": self.precision_used,
                "checks": [{"name": c.name, "pass": c.passed, **({"detail": c.detail} if c.detail else {})}
                           for c in self.checks]}


# -- raw module helpers -------------------------------------------------------------

def _form(gram, x, y):
    return la.dot(la.vec_mat(x, gram), y)


def _module(rows):
    return la.hermite_basis(tuple(tuple(r) for r in rows))


def _contains(H, v) -> bool:
    c = la.coordinates(H, v)
    return c is not None and all(x.val_ge(0) for x in c)


def _same(H1, H2) -> bool:
    return len(H1) == len(H2) and la.same_module(H1, H2)


def _is_zero(x) -> bool:
    return x.is_zero()


def _is_value(x, target) -> bool:
    return (x - target).is_zero()


def _gram_checks(cert: Certificate, gram, kind, e, f, K, pairing):
    n = len(e)
    alt = kind == "alternating"
    ctx = gram[0][0].ctx
    for i in range(n):
        if not alt:
            cert.add(f"Q(e_{i + 1})=0", lambda i=i: _is_zero(_form(gram, e[i], e[i])))
            cert.add(f"Q(f_{i + 1})=0", lambda i=i: _is_zero(_form(gram, f[i], f[i])))
        for j in range(n):
            if j > i:
                cert.add(f"b(e_{i + 1},e_{j + 1})=0", lambda i=i, j=j: _is_zero(_form(gram, e[i], e[j])))
                cert.add(f"b(f_{i + 1},f_{j + 1})=0", lambda i=i, j=j: _is_zero(_form(gram, f[i], f[j])))
            target = pairing[i] if i == j else 0
            cert.add(f"b(e_{i + 1},f_{j + 1})={target}",
                     lambda i=i, j=j, t=target: _is_value(_form(gram, e[i], f[j]), ctx(t)))
    for k, z in enumerate(K):
        cert.add(f"kernel_{k + 1} orthogonal",
                 lambda z=z: all(_is_zero(_form(gram, z, v)) for v in list(e) + list(f)))


def check_alignment(A, C1, C2) -> Certificate:
    """Re-derive the Gram identities and all member equalities of a chain alignment."""
    S = C1.members[0].space
    gram, ctx = S.gram, S.ctx
    cert = Certificate("alignment", precision_used=ctx.precision)
    e, f, K = list(A.basis.e), list(A.basis.f), list(A.basis.kernel_basis)
    n = len(e)
    cert.add("dimension", lambda: 2 * n + len(K) == S.dim and len(f) == n)
    _gram_checks(cert, gram, S.kind, e, f, K, [1] * n)
    cert.add("exponents vanish on the first member of the first chain",
             lambda: all(x == 0 for x in A.r[0][0]) and all(x == 0 for x in A.s[0][0]))
    P = ctx.uniformizer
    for nu, C in enumerate((C1, C2)):
        if len(A.r[nu]) != len(C.members) or len(A.s[nu]) != len(C.members):
            cert.add(f"shape[chain {nu + 1}]", lambda: False, "exponent table length differs from chain")
            continue
        for j, L in enumerate(C.members):
            rj, sj = A.r[nu][j], A.s[nu][j]
            if len(rj) != n or len(sj) != n:
                cert.add(f"shape[chain {nu + 1}, member {j}]", lambda: False)
                continue
            H = L.basis

            def rebuilt(rj=rj, sj=sj):
                rows = [la.vec_scale(P(a), v) for a, v in zip(rj, e)]
                rows += [la.vec_scale(P(b), v) for b, v in zip(sj, f)]
                return _module(rows + K)

            cert.add(f"member[chain {nu + 1}, {j}] equals its reconstruction",
                     lambda H=H, rebuilt=rebuilt: _same(rebuilt(), _module(H)))
            for i in range(n):
                for label, a, v in (("e", rj[i], e[i]), ("f", sj[i], f[i])):
                    cert.add(f"exponent[chain {nu + 1}, {j}, {label}_{i + 1}]={a}",
                             lambda H=H, a=a, v=v: _contains(H, la.vec_scale(P(a), v))
                             and not _contains(H, la.vec_scale(P(a - 1), v)))
    return cert


def check_adapted(L, X, A) -> Certificate:
    """Gram identities, e-span = X and the direct-sum reconstruction of L."""
    S = L.space
    ctx = S.ctx
    cert = Certificate("adapted_basis", precision_used=ctx.precision)
    # the adapted basis lives in L's scaled form
    gram = tuple(tuple(x.scale_pow(L.scale) for x in row) for row in S.gram)
    e, f, K = list(A.e), list(A.f), list(A.kernel_basis)
    _gram_checks(cert, gram, S.kind, e, f, K, list(A.pairing))
    cert.add("pairings in {1, p}", lambda: all(v in (1, ctx.p) for v in A.pairing))
    cert.add("e spans X", lambda: _same(_module(e), _module(X.basis)) if e else X.rank == 0)
    cert.add("L = sum Re + sum Rf + K", lambda: _same(_module(e + f + K), _module(L.basis)))
    return cert


def check_isometry(g, L, X1=None, X2=None) -> Certificate:
    S = L.space
    cert = Certificate("isometry", precision_used=S.ctx.precision)
    H = la.congruence(g, S.gram)
    cert.add("g G g^T = G", lambda: all(_is_value(a, b) for ra, rb in zip(H, S.gram) for a, b in zip(ra, rb)))
    cert.add("L g = L", lambda: _same(_module(la.mat_mul(L.basis, g)), _module(L.basis)))
    if X1 is not None:
        cert.add("X1 g = X2", lambda: _same(_module(la.mat_mul(X1.basis, g)), _module(X2.basis)))
    return cert


def chain_certificate(report, precision: int) -> Certificate:
    cert = Certificate("chain_valid", precision_used=precision)
    if report.ok:
        cert.checks.append(Check("chain invariants", True))
    for msg in report.failures:
        cert.checks.append(Check("chain invariants", False, msg))
    return cert


# -- brute-force oracles ---------------------------------------------------------------

def _square_class_int(q: Fraction, p: int) -> int:
    """An integer in the same square class as q with p-valuation 0 or 1."""
    n = q.numerator * q.denominator  # q times a square
    v = vp(n, p)
    return n // p ** (v - v % 2)


def brute_hilbert(a, b, p: int, k: int = 7) -> int:
    """Decide solubility of a x^2 + b y^2 = z^2 by a search for lifted solutions mod p^m.

    A primitive triple with v(F) >= m > 2 v(grad F) lifts to a true zero by
    Hensel's lemma; conversely a true primitive zero has gradient valuation
    at most v(2) + 1, so m = 2 v(2) + 3 is enough.  m is capped at ``k``.
    """
    a, b = _square_class_int(parse_rational(a), p), _square_class_int(parse_rational(b), p)
    e2 = vp(2, p)
    m = min(k, 2 * e2 + 3)
    mod = p ** m
    roots = {}
    for z in range(mod):
        t = z * z % mod
        g = vp(2 * z, p) if z else m
        if g < roots.get(t, m + 1):
            roots[t] = g
    if mod > ORACLE_BUDGET:
        raise TooLarge("Hilbert symbol search beyond budget")

    def val(n):
        return vp(n, p) if n % mod else m

    for fixed in (0, 1):
        for t in range(mod):
            x, y = (1, t) if fixed == 0 else (t, 1)
            if fixed == 1 and x % p != 0:
                continue  # covered by the x = 1 normalization
            s = (a * x * x + b * y * y) % mod
            gz = roots.get(s)
            if gz is None:
                continue
            g = min(gz, val(2 * a * x), val(2 * b * y))
            if 2 * g < m:
                return 1
    return -1


def _rational_rows(S):
    """Gram rows as Fractions, from a BilinearSpace or a nested list."""
    if hasattr(S, "gram"):
        rows = [[x.rational() for x in r] for r in S.gram]
        if any(x is None for r in rows for x in r):
            raise ValueError("Gram matrix is not rational")
        return rows
    return [[parse_rational(x) for x in r] for r in S]


def _integer_gram(S, p: int):
    G = _rational_rows(S)
    D = lcm(*[x.denominator for r in G for x in r])
    return [[int(x * D) for x in r] for r in G], vp(D, p)


def brute_isotropic(S, p: int = None, k: int = 5, budget: int = 200_000) -> bool:
    """Search a primitive zero of Q = x G x^T / 2 (p odd) mod p^j, j <= k, that lifts.

    Depth-first over the Hensel tree of normalized vectors (first unit
    coordinate equal to 1); returns True as soon as a node satisfies the
    lifting criterion 2 v(G x) < j.
    """
    p = S.ctx.p if p is None else p
    G, _ = _integer_gram(S, p)
    d = len(G)
    nodes = 0

    def F(x, mod):
        return sum(x[i] * G[i][j] * x[j] for i in range(d) for j in range(d)) % mod

    def grad_val(x, j):
        mod = p ** j
        best = j
        for i in range(d):
            s = sum(G[i][l] * x[l] for l in range(d)) % mod
            if s:
                best = min(best, vp(s, p))
        return best

    def dfs(x, j, lead):
        nonlocal nodes
        nodes += 1
        if nodes > budget:
            raise TooLarge("isotropy search beyond budget")
        if F(x, p ** j):
            return False
        if 2 * grad_val(x, j) < j:
            return True
        if j == k:
            return False
        step = p ** j
        free = [i for i in range(d) if i != lead]
        for digits in itertools.product(range(p), repeat=len(free)):
            y = list(x)
            for i, t in zip(free, digits):
                y[i] += t * step
            if dfs(y, j + 1, lead):
                return True
        return False

    for lead in range(d):
        for digits in itertools.product(range(p), repeat=d - lead - 1):
            x = [0] * lead + [1] + list(digits)
            if dfs(x, 1, lead):
                return True
    return False


def _q_valuation(G, Dv, y, p, window):
    """v_p of Q(y / p^window) where Q = x G x^T / (2 D) and v_p(D) = Dv."""
    d = len(G)
    s = sum(y[i] * G[i][j] * y[j] for i in range(d) for j in range(d))
    if s == 0:
        return None
    return vp(s, p) - Dv - 2 * window


def _grid(p, d, k, window):
    size = (p ** (k + window)) ** d
    if k > 4 or size > ORACLE_BUDGET:
        raise TooLarge(f"grid of {size} points is beyond the oracle budget")
    return itertools.product(range(p ** (k + window)), repeat=d)


def brute_maximal(S, k: int = 1, window: int = 1, p: int = None) -> frozenset:
    """Residues y (meaning y / p^window mod p^k) of vectors with Q-valuation >= 0.

    ``S`` is a BilinearSpace or a rational Gram matrix (then pass ``p``).
    Intended for anisotropic forms of dimension <= 3, where the set is a
    lattice containing p^k times the standard lattice.
    """
    p = S.ctx.p if p is None else p
    G, Dv = _integer_gram(S, p)
    d = len(G)
    out = set()
    for y in _grid(p, d, k, window):
        v = _q_valuation(G, Dv, y, p, window)
        if v is None or v >= 0:
            out.add(y)
    return frozenset(out)


def lattice_residues(L, k: int = 1, window: int = 1) -> frozenset:
    """Grid points y with y / p^window in L (same grid as brute_maximal)."""
    p = L.ctx.p
    d = L.space.dim
    B = [[parse_rational(x.rational()) if x.rational() is not None else None for x in r] for r in L.basis]
    if any(x is None for r in B for x in r):
        raise ValueError("lattice basis is not rational")
    inv = _fraction_inverse(B)
    D = lcm(*[x.denominator for r in inv for x in r])
    Dv = vp(D, p)
    M = [[int(x * D) for x in r] for r in inv]
    out = set()
    for y in _grid(p, d, k, window):
        ok = True
        for j in range(d):
            s = sum(y[i] * M[i][j] for i in range(d))
            if s and vp(s, p) < Dv + window:
                ok = False
                break
        if ok:
            out.add(y)
    return frozenset(out)


def _fraction_inverse(B):
    n = len(B)
    A = [list(r) + [Fraction(int(i == j)) for j in range(n)] for i, r in enumerate(B)]
    for c in range(n):
        k = next(i for i in range(c, n) if A[i][c] != 0)
        A[c], A[k] = A[k], A[c]
        piv = A[c][c]
        A[c] = [x / piv for x in A[c]]
        for i in range(n):
            if i != c and A[i][c] != 0:
                t = A[i][c]
                A[i] = [x - t * y for x, y in zip(A[i], A[c])]
    return [r[n:] for r in A]
