"""Lattices on a bilinear space: duals, predicates, maximal lattices, APTE splittings.

A lattice here is the row span of a canonical basis over Z_p.  It may have
rank smaller than the ambient dimension (orthogonal complements produced
while splitting are lattices on subspaces).  ``scale`` records that the
forms in force are p^scale * b and p^scale * Q.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Optional

from . import linalg as la
from .errors import DoesNotSplit, NoIsotropicVectors, NotAPTE, PrecisionExhausted
from .padic import legendre
from .space import (ALTERNATING, QUADRATIC, AnisotropicCertificate, BilinearSpace, best_minor,
                    find_isotropic, lift_zero, orthogonal_blocks, residue_zero)


@dataclass(frozen=True, eq=False)
class Lattice:
    space: BilinearSpace
    basis: la.Matrix
    scale: int = 0

    def __post_init__(self):
        object.__setattr__(self, "basis", la.hermite_basis(tuple(tuple(r) for r in self.basis)))

    @property
    def ctx(self):
        return self.space.ctx

    @property
    def rank(self) -> int:
        return len(self.basis)

    @cached_property
    def pivots(self) -> list[int]:
        return la.pivot_columns(self.basis)

    @cached_property
    def gram(self) -> la.Matrix:
        G = self.space.gram_of(self.basis) if self.basis else ()
        if self.scale:
            G = tuple(tuple(x.scale_pow(self.scale) for x in r) for r in G)
        return G

    def b(self, x, y):
        return self.space.b(x, y).scale_pow(self.scale)

    def q(self, x):
        return self.space.q(x).scale_pow(self.scale)

    def pairings(self, w) -> tuple:
        """b(x_i, w) for the basis vectors x_i, in the scaled form."""
        gw = la.mat_vec(self.space.gram, w)
        return tuple(la.dot(x, gw).scale_pow(self.scale) for x in self.basis)

    def left_pairings(self, u) -> tuple:
        """b(u, x_i) for the basis vectors x_i, in the scaled form."""
        ug = la.vec_mat(u, self.space.gram)
        return tuple(la.dot(ug, x).scale_pow(self.scale) for x in self.basis)

    def coordinates(self, v) -> Optional[la.Vector]:
        """Coefficients of ``v`` in the basis (over F_p-adic), or None if ``v`` is off the span."""
        return la.coordinates(self.basis, v, self.pivots)

    def __contains__(self, v) -> bool:
        c = self.coordinates(v)
        return c is not None and all(x.val_ge(0) for x in c)

    def scaled(self, k: int) -> "Lattice":
        """p^k * L with the same forms."""
        u = self.ctx.uniformizer(k)
        return Lattice(self.space, la.mat_scale(u, self.basis), self.scale)

    def with_scale(self, t: int) -> "Lattice":
        return Lattice(self.space, self.basis, t)

    def rational_basis(self):
        return [[x.rational() for x in r] for r in self.basis]

    def __repr__(self):
        return f"Lattice(rank={self.rank}, scale={self.scale}, basis={self.rational_basis()})"


def lattice_from_rationals(space: BilinearSpace, rows, scale: int = 0) -> Lattice:
    return Lattice(space, la.to_matrix(rows, space.ctx), scale)


def standard_lattice(space: BilinearSpace) -> Lattice:
    return Lattice(space, la.identity(space.dim, space.ctx))


# -- comparisons ---------------------------------------------------------------

def member(v, L: Lattice) -> bool:
    return v in L


def includes(L1: Lattice, L2: Lattice) -> bool:
    """True iff L2 is contained in L1."""
    return all(v in L1 for v in L2.basis)


def lattice_equal(L1: Lattice, L2: Lattice) -> bool:
    if L1.scale != L2.scale or L1.rank != L2.rank:
        return False
    return la.same_module(L1.basis, L2.basis)


def lattice_sum(L1: Lattice, L2: Lattice) -> Lattice:
    return Lattice(L1.space, L1.basis + L2.basis, L1.scale)


def change_of_basis(sub: Lattice, sup: Lattice) -> la.Matrix:
    """Coordinates of the basis of ``sub`` in the basis of ``sup`` (rows)."""
    rows = []
    for v in sub.basis:
        c = sup.coordinates(v)
        if c is None:
            raise ValueError("lattices span different subspaces")
        rows.append(c)
    return tuple(rows)


def index_exponents(sub: Lattice, sup: Lattice) -> list[int]:
    """Elementary divisor exponents of sup/sub (all >= 0 iff sub is inside sup)."""
    return la.elementary_divisors(change_of_basis(sub, sup))


# -- duals ---------------------------------------------------------------------

def dual(L: Lattice) -> Lattice:
    """{x in FL : b(x, L) in R} for the scaled form."""
    if not L.rank:
        return L
    return Lattice(L.space, la.mat_mul(la.inverse(L.gram), L.basis), L.scale)


def double_dual_check(L: Lattice) -> bool:
    return lattice_equal(dual(dual(L)), L)


# -- predicates ------------------------------------------------------------------

def _ge(x, k) -> bool:
    return x.val_ge(k)


def bounds_hold(L: Lattice, r: int) -> bool:
    """Q(L) and b(L, L) inside p^r R."""
    G = L.gram
    if not all(_ge(x, r) for row in G for x in row):
        return False
    if L.space.alternating:
        return True
    # Q(sum c_i x_i) = sum c_i^2 Q(x_i) + sum_{i<j} c_i c_j b(x_i, x_j)
    return all(_ge(G[i][i] / 2, r) for i in range(L.rank))


def enlargement(L: Lattice, r: int) -> Optional[la.Vector]:
    """A vector w/p such that L + R w/p still satisfies the p^r bounds, or None.

    Assumes the bounds hold for L.  Every index-p overlattice inside p^-1 L
    is L + R w/p for some w in L \\ pL; the b-bound forces w into the radical
    of b/p^r mod p, and for quadratic forms the Q-bound is a quadratic
    condition on that radical, solved over F_p.
    """
    p = L.ctx.p
    d = L.rank
    if not d:
        return None
    G = L.gram
    M = [[x.lift(1, -r) for x in row] for row in G]
    rad = la.left_kernel_mod_p(M, p)
    if not rad:
        return None
    if L.space.alternating:
        z = rad[0]
    else:
        # H_kl = c_k G c_l^T is divisible by p^(r+1); search Q = 0 on H / p^(r+1).
        cvecs = [la.to_vector(c, L.ctx) for c in rad]
        H = [[la.dot(la.vec_mat(ck, G), cl).lift(1, -(r + 1)) for cl in cvecs] for ck in cvecs]
        t = fp_isotropic(H, p)
        if t is None:
            return None
        z = [sum(tk * c[i] for tk, c in zip(t, rad)) % p for i in range(d)]
    w = la.vec_combination(la.to_vector(z, L.ctx), L.basis)
    return la.vec_scale(L.ctx.uniformizer(-1), w)


def fp_diagonalize(H: list[list[int]], p: int):
    """Congruence-diagonalize a symmetric matrix over F_p (p odd).

    Returns (rows, values, radical): ``rows[i]`` pairs with value
    ``values[i]`` (nonzero), and ``radical`` spans the radical.
    """
    m = len(H)
    A = [[x % p for x in row] for row in H]
    T = [[int(i == j) for j in range(m)] for i in range(m)]

    def add(k, l, c):
        # row/column operation v_k += c v_l
        A[k] = [(x + c * y) % p for x, y in zip(A[k], A[l])]
        for row in A:
            row[k] = (row[k] + c * row[l]) % p
        T[k] = [(x + c * y) % p for x, y in zip(T[k], T[l])]

    alive = list(range(m))
    rows, values = [], []
    while alive:
        i = next((k for k in alive if A[k][k]), None)
        if i is None:
            pair = next(((k, l) for k in alive for l in alive if k < l and A[k][l]), None)
            if pair is None:
                break
            add(pair[0], pair[1], 1)
            i = pair[0]
        inv = pow(A[i][i], -1, p)
        for k in alive:
            if k != i and A[k][i]:
                add(k, i, (-A[k][i] * inv) % p)
        alive.remove(i)
        rows.append(T[i])
        values.append(A[i][i])
    return rows, values, [T[k] for k in alive]


def fp_isotropic(H: list[list[int]], p: int) -> Optional[list[int]]:
    """Nonzero z in F_p^m with z H z^T = 0 for a symmetric H (p odd), or None."""
    rows, vals, radical = fp_diagonalize(H, p)
    if radical:
        return radical[0]
    if len(vals) >= 3:
        a, b, c = vals[:3]
        for x in range(p):
            for y in range(p):
                if (a * x * x + b * y * y + c) % p == 0:
                    return [(x * s + y * t + u) % p for s, t, u in zip(*rows[:3])]
    if len(vals) == 2:
        a, b = vals
        for x in range(p):
            if (a * x * x + b) % p == 0:
                return [(x * s + t) % p for s, t in zip(*rows)]
    return None


def zero_span_mod_p(H: list[list[int]], p: int) -> list[list[int]]:
    """Spanning set of the span of {z : z H z^T = 0} in F_p^m."""
    rows, vals, radical = fp_diagonalize(H, p)
    m = len(vals)
    if m >= 3 or m == 0 or (m == 2 and legendre(-vals[0] * vals[1], p) == 1):
        return rows + radical
    return radical


def maximalize(L: Lattice, r: int = 0) -> Lattice:
    """Greedily enlarge ``L`` (which must satisfy the p^r bounds) to a p^r-maximal lattice."""
    if not bounds_hold(L, r):
        raise ValueError(f"lattice does not satisfy the p^{r} bounds")
    while True:
        w = enlargement(L, r)
        if w is None:
            return L
        L = Lattice(L.space, L.basis + (w,), L.scale)


def is_pr_maximal(L: Lattice, r: int = 0) -> bool:
    return bounds_hold(L, r) and enlargement(L, r) is None


def _bounding_power(L: Lattice, r: int) -> int:
    """Least k >= 0 with p^k L inside the p^r bounds."""
    lo = min((x.valuation_bound() for row in L.gram for x in row), default=r)
    if lo >= r:
        return 0
    return -((lo - r) // 2)


def maximal_lattice(S: BilinearSpace, r: int = 0) -> Lattice:
    L = standard_lattice(S)
    return maximalize(L.scaled(_bounding_power(L, r)), r)


def maximal_on_span(S: BilinearSpace, vectors, r: int = 0, scale: int = 0) -> Lattice:
    """A p^r-maximal lattice on the span of ``vectors``."""
    L = Lattice(S, tuple(vectors), scale)
    if not L.rank:
        return L
    return maximalize(L.scaled(_bounding_power(L, r)), r)


@dataclass(frozen=True)
class LatticePredicates:
    r: int
    integral: bool
    even: bool
    totally_even: bool
    p_elementary: bool
    pr_modular: bool
    pr_maximal: bool

    def to_json(self):
        return {"r": self.r, "integral": self.integral, "even": self.even,
                "totally_even": self.totally_even, "p_elementary": self.p_elementary,
                "pr_modular": self.pr_modular, "pr_maximal": self.pr_maximal}


def predicates(L: Lattice, r: int = 0) -> LatticePredicates:
    G = L.gram
    integral = all(_ge(x, 0) for row in G for x in row)
    alt = L.space.alternating
    even = integral and (alt or all(_ge(G[i][i] / 2, 0) for i in range(L.rank)))
    if not integral:
        totally_even = False
    elif alt:
        totally_even = True
    else:
        # Odd p: Q(x) = b(x, x)/2 already lies in b(x, L), so row minima suffice.
        totally_even = True
        for i in range(L.rank):
            k = la.choose_pivot(G[i])
            if k is None or not _ge(G[i][i] / 2, G[i][k].val):
                totally_even = False
    D = dual(L)
    p_elem = includes(D, L) and includes(L, D.scaled(1))
    modular = lattice_equal(L, D.scaled(r))
    return LatticePredicates(r, integral, even, totally_even, p_elem, modular, is_pr_maximal(L, r))


# -- splitting ---------------------------------------------------------------------

def split_off(L: Lattice, u, w) -> Optional[Lattice]:
    """The complement L ∩ {u, w}^⊥ if Ru + Rw (u, w isotropic) splits L orthogonally, else None."""
    cu, cw = L.coordinates(u), L.coordinates(w)
    if cu is None or cw is None or not all(x.val_ge(0) for x in cu + cw):
        return None
    buw = L.b(u, w)
    bwu = -buw if L.space.alternating else buw
    pw, pu = L.pairings(w), L.pairings(u)
    alphas = [x / buw for x in pw]
    betas = [x / bwu for x in pu]
    if not all(a.val_ge(0) and b.val_ge(0) for a, b in zip(alphas, betas)):
        return None
    k1, k2, minor = best_minor([cu, cw])
    if not minor.is_unit():
        return None
    rest = []
    for i, x in enumerate(L.basis):
        if i in (k1, k2):
            continue
        rest.append(la.vec_sub(x, la.vec_add(la.vec_scale(alphas[i], u), la.vec_scale(betas[i], w))))
    return Lattice(L.space, tuple(rest), L.scale)


@dataclass(frozen=True)
class HyperbolicSplit:
    plane: Lattice
    complement: Lattice
    pairing: int  # 0 for unimodular, 1 for p-modular


def split_hyperbolic(L: Lattice, e, f, check: bool = True) -> HyperbolicSplit:
    ctx = L.ctx
    if not (L.q(e).is_zero() and L.q(f).is_zero()):
        raise DoesNotSplit("plane vectors must be isotropic")
    bef = L.b(e, f)
    if bef.is_zero() or bef.valuation() not in (0, 1):
        raise DoesNotSplit("b(e, f) must be a unit or p times a unit")
    a = bef.valuation()
    f = la.vec_scale(ctx.uniformizer(a) / bef, f)
    comp = split_off(L, e, f)
    if comp is None:
        raise DoesNotSplit("the plane does not split the lattice")
    if check:
        apte_decompose(comp)
    return HyperbolicSplit(Lattice(L.space, (e, f), L.scale), comp, a)


# -- almost p-elementary totally even decomposition ---------------------------------

@dataclass(frozen=True)
class APTEDecomposition:
    unimodular_pairs: tuple
    p_modular_pairs: tuple
    an_basis: tuple
    witness: la.Matrix

    @property
    def counts(self) -> tuple[int, int, int]:
        return len(self.unimodular_pairs), len(self.p_modular_pairs), len(self.an_basis)

    @property
    def pairs(self) -> tuple:
        return self.unimodular_pairs + self.p_modular_pairs

    def vectors(self) -> list:
        out = []
        for e, f in self.pairs:
            out += [e, f]
        return out + list(self.an_basis)


def _extract_planes(G, vecs: list, a: int):
    """Split hyperbolic p^a-modular planes off a p^a-modular orthogonal block.

    Vectors are coordinate rows for a basis with Gram matrix ``G`` (of the
    form in force); keeping everything integral avoids the digit loss of
    working with ambient coordinates.  ``vecs`` is an orthogonal basis of
    the block with b(w, w) of valuation exactly a.  Returns (pairs, remainder)
    with b(e, f) = p^a exactly.
    """
    ctx = G[0][0].ctx
    p = ctx.p
    pa = ctx.uniformizer(a)

    def b(u, v):
        return la.dot(la.vec_mat(u, G), v)

    def q(u):
        return b(u, u) / 2

    pairs = []
    while len(vecs) >= 2:
        blocks = orthogonal_blocks(QUADRATIC, vecs, [[b(u, v) for v in vecs] for u in vecs])
        vecs = [blk[0][0] for blk in blocks]
        qs = [q(w) for w in vecs]
        res = [x.lift(1, -a) for x in qs]
        z = residue_zero(res, p)
        if z is None:
            break
        coords = lift_zero(qs, z, a)
        x = la.vec_combination(coords, vecs)
        k = max(i for i, t in enumerate(z) if t % p)
        s = pa / b(x, vecs[k])
        y = la.vec_scale(s, vecs[k])
        c = q(y) / pa
        y = la.vec_sub(y, la.vec_scale(c, x))
        ycoords = [-(c * t) for t in coords]
        ycoords[k] = ycoords[k] + s
        k1, k2, minor = best_minor([list(coords), ycoords])
        if not minor.is_unit():
            raise PrecisionExhausted("hyperbolic plane is not primitive in its block")
        pairs.append((y, x))
        rest = []
        for i, w in enumerate(vecs):
            if i in (k1, k2):
                continue
            al = b(w, y) / pa
            be = b(w, x) / pa
            rest.append(la.vec_sub(w, la.vec_add(la.vec_scale(al, x), la.vec_scale(be, y))))
        vecs = rest
    return pairs, vecs


def _anisotropic_reason(L: Lattice, vecs) -> str:
    """Classify an out-of-range Jordan block: isotropic blocks break p-elementarity."""
    sub = L.space.subspace(vecs)
    if isinstance(find_isotropic(sub), AnisotropicCertificate):
        return "anisotropic-part-not-maximal"
    return "not-p-elementary"


def apte_decompose(L: Lattice) -> APTEDecomposition:
    """Split L as (unimodular planes) ⊥ (p-modular planes) ⊥ (maximal anisotropic part).

    Works from a Jordan splitting: APTE lattices are exactly those whose
    Jordan blocks are unimodular or p-modular, and hyperbolic planes are
    peeled off each block by Hensel-lifted residue zeros.
    """
    ctx = L.ctx
    if not L.rank:
        return APTEDecomposition((), (), (), ())
    kind = L.space.kind
    # Work in L's own coordinates: the Gram matrix is integral there.
    G = L.gram
    blocks = orthogonal_blocks(kind, la.identity(L.rank, ctx), G)
    groups = {}
    for vecs, B in blocks:
        v = B[0][0].valuation() if kind == QUADRATIC else B[0][1].valuation()
        groups.setdefault(v, []).append((vecs, B))
    bad = sorted(v for v in groups if v not in (0, 1))
    if bad:
        if bad[0] < 0:
            raise NotAPTE("not-p-elementary", f"form takes values of valuation {bad[0]}")
        vecs = [la.vec_mat(w, L.basis) for v in bad for blk in groups[v] for w in blk[0]]
        if kind == ALTERNATING:
            raise NotAPTE("not-p-elementary", f"p^{bad[0]}-modular component")
        raise NotAPTE(_anisotropic_reason(L, vecs), f"Jordan component of scale p^{bad[0]}")
    uni, pmod, an = [], [], []
    for a, target in ((0, uni), (1, pmod)):
        blks = groups.get(a, [])
        if kind == ALTERNATING:
            for (e, f), B in blks:
                bef = B[0][1]
                target.append((e, la.vec_scale(ctx.uniformizer(a) / bef, f)))
        else:
            pairs, rest = _extract_planes(G, [blk[0][0] for blk in blks], a)
            target.extend(pairs)
            an.extend(rest)
    W = []
    for e, f in uni + pmod:
        W += [e, f]
    W = tuple(W + an)
    if any(x != 0 for x in la.elementary_divisors(W)):
        raise PrecisionExhausted("decomposition witness is not unimodular")
    amb = lambda c: la.vec_mat(c, L.basis)
    uni = [(amb(e), amb(f)) for e, f in uni]
    pmod = [(amb(e), amb(f)) for e, f in pmod]
    an = [amb(w) for w in an]
    if an and not is_pr_maximal(Lattice(L.space, tuple(an), L.scale), 0):
        raise NotAPTE("anisotropic-part-not-maximal")
    return APTEDecomposition(tuple(uni), tuple(pmod), tuple(an), W)


def is_apte(L: Lattice) -> bool:
    try:
        apte_decompose(L)
    except NotAPTE:
        return False
    return True


def modified_dual(L: Lattice) -> Lattice:
    """{x in L# : pQ(x) in R} carrying p*b and p*Q (scale + 1)."""
    dec = apte_decompose(L)
    ctx = L.ctx
    inv_p = ctx.uniformizer(-1)
    vecs = []
    for e, f in dec.unimodular_pairs:
        vecs += [e, f]
    for e, f in dec.p_modular_pairs:
        vecs += [la.vec_scale(inv_p, e), la.vec_scale(inv_p, f)]
    if dec.an_basis:
        an = maximalize(Lattice(L.space, dec.an_basis, L.scale + 1), 0)
        vecs += list(an.basis)
    return Lattice(L.space, tuple(vecs), L.scale + 1)


def identify(L: Lattice) -> Lattice:
    """Identify (p^-1 L, p^2 Q) with (L, Q): lower the scale by steps of two."""
    k = L.scale // 2
    if k <= 0:
        return L
    return Lattice(L.space, la.mat_scale(L.ctx.uniformizer(k), L.basis), L.scale - 2 * k)


# -- isotropic generation --------------------------------------------------------------

def isotropic_generators(L: Lattice, dec: Optional[APTEDecomposition] = None) -> list:
    """Isotropic vectors of L generating the sublattice spanned by all isotropic vectors."""
    dec = dec or apte_decompose(L)
    if not dec.pairs:
        raise NoIsotropicVectors("lattice has no isotropic vectors")
    gens = []
    for e, f in dec.pairs:
        gens += [e, f]
    if not dec.an_basis:
        return gens
    if dec.unimodular_pairs:
        e, f = dec.unimodular_pairs[0]
        zs = dec.an_basis
        scale_ef = L.ctx.one
    else:
        e, f = dec.p_modular_pairs[0]
        zs = _q_in_pR(L, dec.an_basis).basis
        scale_ef = L.ctx.uniformizer(1)
    for z in zs:
        # e + z - (Q(z)/b(e,f)) f is isotropic and orthogonal to nothing in particular
        c = L.q(z) / scale_ef
        gens.append(la.vec_sub(la.vec_add(e, z), la.vec_scale(c, f)))
    return gens


def _q_in_pR(L: Lattice, an_basis) -> Lattice:
    """{x in the anisotropic part : Q(x) in pR}, the p-maximal lattice on its span."""
    A = Lattice(L.space, tuple(an_basis), L.scale)
    return maximalize(A.scaled(1), 1)


def isotropic_sublattice(L: Lattice) -> Lattice:
    return Lattice(L.space, tuple(isotropic_generators(L)), L.scale)


def _preimage(L: Lattice, residues) -> Lattice:
    """The sublattice of L lying over the given F_p-span of L/pL."""
    ctx = L.ctx
    gens = [la.vec_combination(la.to_vector(z, ctx), L.basis) for z in residues]
    return Lattice(L.space, tuple(gens) + L.scaled(1).basis, L.scale)


def dual_inclusion_holds(L: Lattice) -> bool:
    """{z in p S# : Q(z) in R} is inside L, S generated by {x in L : Q(x) in pR}.

    Both sets are decided on residue spaces: Q mod p is a quadratic form on
    L/pL, and pQ mod p is one on T/pT for T = p S#.
    """
    dec = apte_decompose(L)
    if not dec.pairs:
        raise NoIsotropicVectors("lattice has no isotropic vectors")
    p = L.ctx.p
    if L.space.alternating:
        return includes(L, dual(L).scaled(1))
    H = [[x.lift(1) for x in row] for row in L.gram]
    S = _preimage(L, zero_span_mod_p(H, p))
    T = dual(S).scaled(1)
    HT = [[x.lift(1, 1) for x in row] for row in T.gram]
    Z = _preimage(T, zero_span_mod_p(HT, p))
    return includes(L, Z)
