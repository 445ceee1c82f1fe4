"""Hyperbolic bases adapted to isotropic submodules and to pairs of lattice chains."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Optional

from . import linalg as la
from .chains import LatticeChain, apply_matrix, validate_chain
from .errors import (InvalidChain, NoIsotropicVectors, NotAnIsometry, NotAPTE, NotASquare,
                     NotMaximalIsotropic, SearchExhausted)
from .lattice import (Lattice, apte_decompose, change_of_basis, includes, isotropic_generators,
                      lattice_equal, modified_dual, split_off)
from .space import QUADRATIC, BilinearSpace, orthogonal_blocks


@dataclass(frozen=True)
class HyperbolicBasis:
    e: tuple
    f: tuple
    kernel_basis: tuple

    @property
    def n(self) -> int:
        return len(self.e)


@dataclass(frozen=True)
class AdaptedBasis:
    e: tuple
    f: tuple
    pairing: tuple  # b(e_i, f_i), each 1 or p
    kernel_basis: tuple

    @property
    def n(self) -> int:
        return len(self.e)

    def vectors(self) -> list:
        return list(self.e) + list(self.f) + list(self.kernel_basis)


@dataclass
class ChainAlignment:
    """Common hyperbolic basis for two chains.

    ``r[nu][j][i]`` and ``s[nu][j][i]`` (nu = 0, 1 for the two chains) are the
    exponents with member j of chain nu equal to
    sum R p^r e_i + sum R p^s f_i + K.
    """

    basis: HyperbolicBasis
    r: list
    s: list
    trace: list = field(default_factory=list)


# -- maximal isotropic submodules -------------------------------------------------

def max_isotropic(L: Lattice) -> Lattice:
    dec = apte_decompose(L)
    if not dec.pairs:
        raise NoIsotropicVectors("lattice has no isotropic vectors")
    return Lattice(L.space, tuple(e for e, _ in dec.pairs), L.scale)


def _check_maximal_isotropic(L: Lattice, X: Lattice, n: int):
    if X.rank != n:
        raise NotMaximalIsotropic(f"rank {X.rank} differs from the Witt index {n}")
    if not includes(L, X):
        raise NotMaximalIsotropic("submodule is not contained in the lattice")
    if not all(x.is_zero() for row in X.gram for x in row):
        raise NotMaximalIsotropic("submodule is not totally isotropic")
    if not all(L.q(x).is_zero() for x in X.basis):
        raise NotMaximalIsotropic("submodule is not totally isotropic")
    if n and any(la.elementary_divisors(change_of_basis(X, L))):
        raise NotMaximalIsotropic("submodule is not primitive")


def _partner(L: Lattice, u, w, buw):
    """w / b(u, w) adjusted to be isotropic, so that b(u, y) = 1."""
    y = la.vec_scale(1 / buw, w)
    if L.space.alternating:
        return y
    return la.vec_sub(y, la.vec_scale(L.q(y), u))


def adapt_to_isotropic(L: Lattice, X: Lattice) -> AdaptedBasis:
    """Basis e of X and f in L with b(e_i, f_j) in {d_ij, p d_ij} and L = Re + Rf + K."""
    dec = apte_decompose(L)
    _check_maximal_isotropic(L, X, len(dec.pairs))
    # Work in L's own coordinates, where the Gram matrix is integral; ambient
    # coordinates can carry negative valuations that eat digits on every split.
    T = BilinearSpace(L.space.kind, L.gram, L.ctx, validate=False)
    e, f, pairing, K = _adapt(Lattice(T, la.identity(L.rank, L.ctx)), Lattice(T, change_of_basis(X, L)))

    def back(vs):
        return tuple(la.vec_mat(c, L.basis) for c in vs)
    return AdaptedBasis(back(e), back(f), tuple(pairing), back(K))


def _adapt(L: Lattice, X: Lattice):
    ctx = L.ctx
    if not X.rank:
        return [], [], [], list(L.basis)
    entries, where = [], []
    for i, x in enumerate(X.basis):
        for k, val in enumerate(L.left_pairings(x)):
            entries.append(val)
            where.append((i, k))
    piv = la.choose_pivot(entries)
    if piv is None:
        raise NotMaximalIsotropic("submodule pairs trivially with the lattice")
    m = entries[piv].valuation()
    if m == 0:
        i, k = where[piv]
        x = X.basis[i]
        y = _partner(L, x, L.basis[k], entries[piv])
        L1 = split_off(L, x, y)
        if L1 is None:
            raise NotAPTE("not-p-elementary", "unimodular plane failed to split")
        X1 = Lattice(L.space, tuple(la.vec_sub(z, la.vec_scale(L.b(z, y), x)) for z in X.basis), L.scale)
        e, f, pairing, K = _adapt(L1, X1)
        return [x] + e, [y] + f, [1] + pairing, K
    if m == 1:
        # Pass to the modified dual, where p^-1 X pairs unimodularly.
        M = modified_dual(L)
        inv_p = ctx.uniformizer(-1)
        Xs = Lattice(L.space, la.mat_scale(inv_p, X.basis), M.scale)
        es, fs, pairing, _ = _adapt(M, Xs)
        if any(v != 1 for v in pairing):
            raise NotAPTE("not-p-elementary", "modified dual produced a p-modular pairing")
        p = ctx.uniformizer(1)
        e = [la.vec_scale(p, v) for v in es]
        f = [la.vec_scale(p, v) for v in fs]
        K = L
        for u, w in zip(e, f):
            K = split_off(K, u, w)
            if K is None:
                raise NotAPTE("not-p-elementary", "p-modular plane failed to split")
        return e, f, [ctx.p] * len(e), list(K.basis)
    raise NotAPTE("not-p-elementary", f"isotropic submodule pairs into p^{m}")


# -- isometries between maximal isotropic submodules -----------------------------

def _sqrt_ratio(a, c):
    try:
        return (a / c).sqrt()
    except NotASquare as exc:
        raise NotAnIsometry("kernels are not isometric") from exc


def _kernel_isometry(L: Lattice, K1, K2):
    """Bases (src, dst) of two maximal anisotropic lattices with matching Gram matrices."""
    if len(K1) != len(K2):
        raise NotAnIsometry("kernel ranks differ")
    if not K1:
        return [], []
    ctx = L.ctx
    p = ctx.p

    def jordan(vecs):
        groups = {}
        for (w,), G in orthogonal_blocks(QUADRATIC, vecs, L.space.gram_of(vecs)):
            a = G[0][0]
            groups.setdefault(a.valuation(), []).append((w, a))
        return groups

    g1, g2 = jordan(K1), jordan(K2)
    src, dst = [], []
    for v in sorted(g1):
        b1, b2 = g1[v], g2.get(v, [])
        if len(b1) != len(b2):
            raise NotAnIsometry("kernel Jordan blocks differ")
        if len(b1) == 1:
            (w, a), (u, c) = b1[0], b2[0]
            src.append(w)
            dst.append(la.vec_scale(_sqrt_ratio(a, c), u))
        elif len(b1) == 2:
            (w1, a1), (w2, a2) = b1
            (u1, c1), (u2, c2) = b2
            r1, r2, t = c1.lift(1, -v), c2.lift(1, -v), a1.lift(1, -v)
            sol = next(((al, be) for al in range(p) for be in range(p)
                        if (al or be) and (r1 * al * al + r2 * be * be - t) % p == 0), None)
            if sol is None:
                raise NotAnIsometry("kernel block does not represent the required value")
            al0, be0 = sol
            if al0:
                be = ctx(be0)
                al = _sqrt_ratio(a1 - be * be * c2, c1)
                if al.lift(1) != al0:
                    al = -al
            else:
                al = ctx(al0)
                be = _sqrt_ratio(a1 - al * al * c1, c2)
                if be.lift(1) != be0:
                    be = -be
            x = la.vec_add(la.vec_scale(al, u1), la.vec_scale(be, u2))
            pv = ctx.uniformizer(-v)
            x2 = la.vec_scale(pv, la.vec_add(la.vec_scale(-(be * c2), u1), la.vec_scale(al * c1, u2)))
            lam = _sqrt_ratio(a2, L.space.b(x2, x2))
            src += [w1, w2]
            dst += [x, la.vec_scale(lam, x2)]
        else:
            raise NotAnIsometry("anisotropic Jordan block of rank > 2")
    return src, dst


def isometry_between(L: Lattice, X1: Lattice, X2: Lattice) -> la.Matrix:
    """Isometry g of (L, b, Q) with X1 g = X2 (row convention), certified."""
    A1 = adapt_to_isotropic(L, X1)
    A2 = adapt_to_isotropic(L, X2)
    o1 = sorted(range(A1.n), key=lambda i: A1.pairing[i])
    o2 = sorted(range(A2.n), key=lambda i: A2.pairing[i])
    if [A1.pairing[i] for i in o1] != [A2.pairing[i] for i in o2]:
        raise NotAnIsometry("adapted bases have different pairing multisets")
    src, dst = _kernel_isometry(L, A1.kernel_basis, A2.kernel_basis)
    B1 = tuple([A1.e[i] for i in o1] + [A1.f[i] for i in o1] + src)
    B2 = tuple([A2.e[i] for i in o2] + [A2.f[i] for i in o2] + dst)
    g = la.mat_mul(la.inverse(B1), B2)
    S = L.space
    if not S.is_isometry(g):
        raise NotAnIsometry("constructed map does not preserve the form")
    if not lattice_equal(apply_matrix(L, g), L):
        raise NotAnIsometry("constructed map does not preserve the lattice")
    if not lattice_equal(apply_matrix(X1, g), X2):
        raise NotAnIsometry("constructed map does not carry X1 to X2")
    return g


# -- common hyperbolic basis for two chains --------------------------------------------

def _pow_exponent(A: Lattice, B: Lattice) -> int:
    """Least r >= 0 with p^r A inside B."""
    m = min(x.valuation_bound() for row in change_of_basis(A, B) for x in row)
    return max(0, -m)


def _line_exponent(L: Lattice, v) -> Optional[int]:
    """a with L ∩ F v = R p^a v."""
    c = L.coordinates(v)
    if c is None:
        return None
    return -min(x.valuation_bound() for x in c)


def _split_member(L: Lattice, e, f):
    """Exponents (a, b) and complement if R p^a e + R p^b f splits L, else None."""
    a, b = _line_exponent(L, e), _line_exponent(L, f)
    if a is None or b is None:
        return None
    p = L.ctx
    comp = split_off(L, la.vec_scale(p.uniformizer(a), e), la.vec_scale(p.uniformizer(b), f))
    if comp is None:
        return None
    return a, b, comp


def _top_index(M: list, x) -> int:
    """Largest k with x in M[k] (the chain decreases), -1 if none."""
    k = -1
    for j, L in enumerate(M):
        if x in L:
            k = j
        else:
            break
    return k


def _min_pairing_valuation(L: Lattice, u) -> int:
    vals = L.pairings(u)
    k = la.choose_pivot(vals)
    return vals[k].valuation() if k is not None else 10 ** 9


def _unit_partners(L: Lattice, u) -> Iterator:
    """Isotropic y in L with b(u, y) = 1, one per basis vector pairing unimodularly with u."""
    vals = L.left_pairings(u)
    order = sorted(range(len(vals)), key=lambda k: (vals[k].valuation_bound(), k))
    for k in order:
        if vals[k].prec and vals[k].val == 0:
            yield _partner(L, u, L.basis[k], vals[k])


@dataclass
class _Level:
    """State of one recursion level: members of both chains in the current orientation."""
    A: list
    B: list
    swapped: bool


def _gens(cache: dict, L: Lattice, key) -> list:
    if key not in cache:
        try:
            cache[key] = isotropic_generators(L)
        except NoIsotropicVectors:
            cache[key] = []
    return cache[key]


def _candidates(lv: _Level, r: int, trace_base: dict) -> Iterator[tuple]:
    """Yield (x, y, info) triples following the proof's case analysis, best first."""
    A, B = lv.A, lv.B
    n = len(A) - 1
    topA, botA, topB, botB = A[0], A[-1], B[0], B[-1]
    ctx = topA.ctx
    P = ctx.uniformizer
    cache: dict = {}
    case_a = not includes(topB, topA.scaled(r - 1))
    shift = r if case_a else r - 1
    # x qualifies when p^shift x is primitive in the top of B, i.e. p^(shift-1) x is outside it.
    qualifies = lambda x: la.vec_scale(P(shift - 1), x) not in topB
    seen = []
    ranked = []
    for k in range(n, -1, -1):
        for x in _gens(cache, A[k], ("A", k)):
            if qualifies(x):
                ranked.append((-_top_index(A, x), 0, len(ranked), x))
    if not case_a and ranked and -min(ranked)[0] == n:
        # Among x in the last member prefer those in p (A^(i+1))* with i minimal.
        extra = []
        for i in range(n):
            T = modified_dual(A[i + 1])
            for w in _gens(cache, T, ("T", i)):
                x = la.vec_scale(P(1), w)
                if qualifies(x) and x in botA:
                    extra.append((-n, -(n - i), len(extra), x, i))
        ranked = [(k, 0, o, x, None) for k, _, o, x in ranked]
        ranked = sorted(extra) + sorted(ranked)
    else:
        ranked = [(k, 0, o, x, None) for k, _, o, x in sorted(ranked)]
    for negk, _, _, x, i in ranked:
        if any(all(a.agrees(b) for a, b in zip(x, s)) for s in seen):
            continue
        seen.append(x)
        k = -negk
        u = la.vec_scale(P(shift), x)
        info = dict(trace_base, k=k, i=i)
        if case_a:
            j = max(jj for jj in range(len(B)) if _min_pairing_valuation(B[jj], u) == 0)
            for y in _unit_partners(B[j], u):
                yield x, la.vec_scale(P(r), y), dict(info, case="A", j=j)
            continue
        if u in botB:
            j = max(jj for jj in range(len(B)) if _min_pairing_valuation(B[jj], u) == 0)
            for y in _unit_partners(B[j], u):
                f = la.vec_scale(P(r - 1), y)
                sub = "i" if f in botA else "ii"
                yield x, f, dict(info, case="B1", j=j, chain1=sub)
        else:
            j = _top_index(B, u)
            T = modified_dual(B[j + 1])
            for y1 in _unit_partners(T, u):
                f = la.vec_scale(P(r), y1)
                sub = "i" if f in botA else "ii"
                yield x, f, dict(info, case="B2", j=j, chain1=sub)


def _fallback_candidates(lv: _Level) -> Iterator[tuple]:
    """Exhaustive pairs from isotropic generators of all members (never needed in practice)."""
    ctx = lv.A[0].ctx
    pool = []
    for M in lv.A + lv.B:
        try:
            pool += isotropic_generators(M)
        except NoIsotropicVectors:
            pass
    for x, w in itertools.permutations(pool, 2):
        bxw = lv.A[0].b(x, w)
        if bxw.is_zero():
            continue
        v = bxw.valuation()
        xs = la.vec_scale(ctx.uniformizer(-v), x) if v else x
        yield xs, _partner(lv.A[0], xs, w, bxw.scale_pow(-v)), {"case": "fallback"}


def _try_pair(members: list, e, f):
    out = []
    for L in members:
        res = _split_member(L, e, f)
        if res is None:
            return None
        out.append(res)
    return out


def _align(M1: list, M2: list, depth: int, trace: list):
    n = len(apte_decompose(M1[0]).pairs)
    if n == 0:
        K = M1[0]
        for L in M1 + M2:
            if not lattice_equal(L, K):
                raise SearchExhausted("anisotropic remainders of the two chains differ")
        return [], list(K.basis), [[] for _ in M1], [[] for _ in M2]
    r12, r21 = _pow_exponent(M1[0], M2[-1]), _pow_exponent(M2[0], M1[-1])
    r = max(r12, r21)
    lv = _Level(M1, M2, False)
    if includes(lv.B[-1], lv.A[0].scaled(r - 1)):
        lv = _Level(lv.B, lv.A, not lv.swapped)
    # Without a candidate for the first case on this side, the other side may have one.
    if includes(lv.B[0], lv.A[0].scaled(r - 1)) and not includes(lv.A[0], lv.B[0].scaled(r - 1)):
        lv = _Level(lv.B, lv.A, not lv.swapped)
    base = {"level": depth, "r": r, "swapped": lv.swapped}
    tried = 0
    for source in (_candidates(lv, r, base), _fallback_candidates(lv)):
        for x, f, info in source:
            tried += 1
            e = x
            if not lv.A[0].b(e, f).agrees(lv.A[0].ctx.one):
                continue
            top = _split_member(M1[0], e, f)
            if top is None:
                continue
            a, b, _ = top
            if a + b != 0:
                continue
            P = M1[0].ctx.uniformizer
            e, f = la.vec_scale(P(a), e), la.vec_scale(P(-a), f)
            s1 = _try_pair(M1, e, f)
            s2 = _try_pair(M2, e, f) if s1 is not None else None
            if s2 is None:
                continue
            info = dict(info, tried=tried)
            trace.append(info)
            mark = len(trace)
            try:
                pairs, K, E1, E2 = _align([c for *_, c in s1], [c for *_, c in s2], depth + 1, trace)
            except SearchExhausted:
                del trace[mark - 1:]
                continue
            E1 = [[(a_, b_)] + rest for (a_, b_, _), rest in zip(s1, E1)]
            E2 = [[(a_, b_)] + rest for (a_, b_, _), rest in zip(s2, E2)]
            return [(e, f)] + pairs, K, E1, E2
    raise SearchExhausted(f"no candidate plane splits both chains at level {depth}")


def common_basis(C1: LatticeChain, C2: LatticeChain, check: bool = True) -> ChainAlignment:
    if C1.space is not C2.space and C1.space.gram != C2.space.gram:
        raise InvalidChain(["chains live on different spaces"])
    for name, C in (("first", C1), ("second", C2)):
        rep = validate_chain(C)
        if not rep.ok:
            raise InvalidChain([f"{name} chain: {msg}" for msg in rep.failures])
    trace: list = []
    pairs, K, E1, E2 = _align(list(C1.members), list(C2.members), 0, trace)
    basis = HyperbolicBasis(tuple(e for e, _ in pairs), tuple(f for _, f in pairs), tuple(K))
    r = [[[a for a, _ in row] for row in E] for E in (E1, E2)]
    s = [[[b for _, b in row] for row in E] for E in (E1, E2)]
    out = ChainAlignment(basis, r, s, trace)
    if check:
        from .verify import check_alignment
        cert = check_alignment(out, C1, C2)
        if not cert.passed:
            raise SearchExhausted("alignment failed verification: " + ", ".join(cert.failed_names()))
    return out
