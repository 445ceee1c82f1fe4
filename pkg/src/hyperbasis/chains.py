"""Maximal admissible lattice chains."""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from . import linalg as la
from .errors import HyperbasisError, NotAnIsometry, PrecisionExhausted
from .lattice import (Lattice, apte_decompose, includes, index_exponents, is_pr_maximal,
                      lattice_equal, maximal_on_span)
from .space import BilinearSpace, WittDecomposition


@dataclass(frozen=True)
class LatticeChain:
    members: tuple  # Lattice, largest first

    @property
    def space(self) -> BilinearSpace:
        return self.members[0].space

    @property
    def n(self) -> int:
        return len(self.members) - 1

    @property
    def top(self) -> Lattice:
        return self.members[0]

    @property
    def bottom(self) -> Lattice:
        return self.members[-1]

    def __len__(self):
        return len(self.members)

    def __getitem__(self, j) -> Lattice:
        return self.members[j]


@dataclass
class ValidationReport:
    failures: list = field(default_factory=list)
    block_counts: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_json(self):
        return {"valid": self.ok, "failures": list(self.failures),
                "block_counts": [list(c) for c in self.block_counts]}


def validate_chain(C: LatticeChain) -> ValidationReport:
    rep = ValidationReport()
    fail = rep.failures.append
    if not C.members:
        fail("empty chain")
        return rep
    S = C.space
    n = S.witt_index
    if any(L.space is not S for L in C.members):
        fail("members live on different spaces")
        return rep
    if any(L.scale != 0 for L in C.members):
        fail("members must carry the unscaled forms")
    if any(L.rank != S.dim for L in C.members):
        fail("members must have full rank")
        return rep
    if len(C.members) != n + 1:
        fail(f"length {len(C.members)} but Witt index is {n} (expected {n + 1} members)")
    if not is_pr_maximal(C.top, 0):
        fail("first member is not maximal")
    for j, L in enumerate(C.members):
        try:
            dec = apte_decompose(L)
        except PrecisionExhausted:
            raise
        except HyperbasisError as exc:
            fail(f"member {j} is not almost p-elementary totally even ({exc})")
            rep.block_counts.append(None)
            continue
        u, m, a = dec.counts
        rep.block_counts.append((u, m, a))
        if m != j or u != n - j:
            fail(f"member {j} has {u} unimodular and {m} p-modular planes (expected {n - j} and {j})")
    for j in range(len(C.members) - 1):
        big, small = C.members[j], C.members[j + 1]
        if not includes(big, small):
            fail(f"member {j + 1} is not contained in member {j}")
            continue
        ex = index_exponents(small, big)
        if ex != [0] * (len(ex) - 1) + [1]:
            fail(f"step {j} -> {j + 1} has elementary divisors {ex}, expected index p")
    if not includes(C.bottom, C.top.scaled(1)):
        fail("p * first member is not contained in the last member")
    return rep


def standard_chain(W: WittDecomposition, S: BilinearSpace) -> LatticeChain:
    """Members sum_{i<=j}(Re_i + Rpf_i) + sum_{i>j}(Re_i + Rf_i) + K."""
    K = maximal_on_span(S, W.kernel_basis, 0) if W.kernel_basis else None
    kb = K.basis if K is not None else ()
    p = S.ctx.uniformizer(1)
    members = []
    for j in range(W.witt_index + 1):
        rows = []
        for i, (e, f) in enumerate(W.pairs):
            rows += [e, la.vec_scale(p, f) if i < j else f]
        members.append(Lattice(S, tuple(rows) + kb))
    return LatticeChain(tuple(members))


def apply_matrix(L: Lattice, g) -> Lattice:
    return Lattice(L.space, la.mat_mul(L.basis, g), L.scale)


def transform_chain(C: LatticeChain, g) -> LatticeChain:
    """Image of every member under x -> x g (row vectors)."""
    if not C.space.is_isometry(g):
        raise NotAnIsometry("matrix does not preserve the form")
    return LatticeChain(tuple(apply_matrix(L, g) for L in C.members))


def chains_equal(C1: LatticeChain, C2: LatticeChain) -> bool:
    return len(C1) == len(C2) and all(lattice_equal(a, b) for a, b in zip(C1.members, C2.members))


# -- random isometries ----------------------------------------------------------

def _outer(S: BilinearSpace, v, w, c):
    """Matrix of x -> c b(x, v) w (row convention): c (G v^T) w."""
    gv = la.mat_vec(S.gram, v)
    return tuple(tuple(c * a * b for b in w) for a in gv)


def _random_scalar(rng: random.Random, ctx, lo=-1, hi=1):
    p = ctx.p
    u = rng.randrange(1, p * p)
    while u % p == 0:
        u = rng.randrange(1, p * p)
    return ctx(u) * ctx.uniformizer(rng.randint(lo, hi))


def _random_vector(rng: random.Random, ctx, dim):
    while True:
        v = [rng.randrange(-ctx.p, ctx.p + 1) for _ in range(dim)]
        if any(v):
            return la.to_vector(v, ctx)


def random_isometry(S: BilinearSpace, seed: int, steps: int = 4) -> la.Matrix:
    """Deterministic product of ``steps`` elementary isometries of S.

    Alternating forms use symplectic transvections; quadratic forms mix
    reflections in anisotropic vectors (Q of valuation 0 or 1) with Eichler
    transformations built from an isotropic vector.
    """
    rng = random.Random(seed)
    ctx = S.ctx
    d = S.dim
    g = la.identity(d, ctx)
    iso = None
    if not S.alternating and S.witt_index:
        iso = S.witt.pairs[0][0]
    for _ in range(steps):
        if S.alternating:
            v = _random_vector(rng, ctx, d)
            t = la.mat_add(la.identity(d, ctx), _outer(S, v, v, _random_scalar(rng, ctx)))
        elif iso is not None and rng.random() < 0.5:
            t = _eichler(S, iso, rng)
        else:
            while True:
                v = _random_vector(rng, ctx, d)
                qv = S.q(v)
                if not qv.is_zero() and qv.valuation() <= 1:
                    break
            t = la.mat_sub(la.identity(d, ctx), _outer(S, v, v, 1 / qv))
        g = la.mat_mul(g, t)
    if not S.is_isometry(g):
        raise NotAnIsometry("random isometry failed certification")
    return g


def _eichler(S: BilinearSpace, e, rng: random.Random):
    """x -> x + b(x,e) z - b(x,z) e - Q(z) b(x,e) e for z orthogonal to e."""
    ctx = S.ctx
    d = S.dim
    while True:
        v = _random_vector(rng, ctx, d)
        ge = S.b(v, e)
        # make v orthogonal to e by subtracting a multiple of a partner of e
        z = v
        if not ge.is_zero():
            k = la.choose_pivot(la.mat_vec(S.gram, e))
            y = la.identity(d, ctx)[k]
            z = la.vec_sub(v, la.vec_scale(ge / S.b(y, e), y))
        if any(not x.is_zero() for x in z):
            break
    z = la.vec_scale(_random_scalar(rng, ctx, 0, 1), z)
    return _eichler_map(S, e, z, ctx.one)


def random_apte_lattice(S: BilinearSpace, seed: int, mix_steps: int = 3) -> Lattice:
    """A member of a transformed standard chain: a handy source of APTE lattices."""
    rng = random.Random(seed)
    C = standard_chain(S.witt, S)
    L = C.members[rng.randrange(len(C.members))]
    return apply_matrix(L, random_isometry(S, rng.randrange(1 << 30), mix_steps))


def random_lattice_automorphism(L: Lattice, seed: int, steps: int = 4) -> la.Matrix:
    """Deterministic isometry g of the space with L g = L.

    Built from maps that are integral on L together with their inverses:
    transvections in vectors of L (alternating) and Eichler transformations
    E(e, z) with e, z in the span of an APTE decomposition of L, e isotropic
    and z orthogonal to e (quadratic).
    """
    rng = random.Random(seed)
    S = L.space
    ctx = S.ctx
    d = S.dim
    dec = apte_decompose(L)
    g = la.identity(d, ctx)
    for _ in range(steps):
        if S.alternating:
            v = la.vec_combination([ctx(rng.randint(-2, 2)) for _ in L.basis], L.basis)
            c = ctx(rng.randint(1, 3)) * ctx.uniformizer(L.scale)
            t = la.mat_add(la.identity(d, ctx), _outer(S, v, v, c))
        else:
            if not dec.pairs:
                break
            k = rng.randrange(len(dec.pairs))
            e, f = dec.pairs[k]
            if rng.random() < 0.5:
                e, f = f, e
            others = [w for i, (a, b) in enumerate(dec.pairs) if i != k for w in (a, b)]
            others += list(dec.an_basis) + [e]
            z = la.vec_combination([ctx(rng.randint(-2, 2)) for _ in others], others)
            # b(x, e) and b(x, z) are integral on L only up to the scale factor
            t = _eichler_map(S, e, z, ctx.uniformizer(L.scale))
        g = la.mat_mul(g, t)
    if not S.is_isometry(g) or not lattice_equal(apply_matrix(L, g), L):
        raise NotAnIsometry("random automorphism failed certification")
    return g


def _eichler_map(S: BilinearSpace, e, z, c):
    """x -> x + c b(x,e) z - c b(x,z) e - c^2 Q(z) b(x,e) e (e isotropic, z orthogonal to e)."""
    I = la.identity(S.dim, S.ctx)
    t = la.mat_add(I, _outer(S, e, z, c))
    t = la.mat_sub(t, _outer(S, z, e, c))
    return la.mat_sub(t, _outer(S, e, e, c * c * S.q(z)))

