"""The ambient space (V, b, Q) over Q_p."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Union

from . import linalg as la
from .errors import PrecisionExhausted
from .padic import PAdicContext, PAdicScalar, hilbert_symbol

QUADRATIC = "quadratic"
ALTERNATING = "alternating"


@dataclass(frozen=True, eq=False)
class BilinearSpace:
    """V = Q_p^dim with the bilinear form given by ``gram``.

    For the quadratic kind Q(x) = b(x, x) / 2, which needs p odd.  For the
    alternating kind Q is identically zero.
    """

    kind: str
    gram: la.Matrix
    ctx: PAdicContext
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        if self.kind not in (QUADRATIC, ALTERNATING):
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.validate:
            self._check()

    def _check(self):
        n = self.dim
        if any(len(r) != n for r in self.gram):
            raise ValueError("Gram matrix must be square")
        if self.kind == QUADRATIC and self.ctx.p == 2:
            raise ValueError("quadratic spaces need an odd prime")
        for i in range(n):
            for j in range(i, n):
                a, b = self.gram[i][j], self.gram[j][i]
                if self.kind == QUADRATIC:
                    ok = (a - b).is_zero()
                else:
                    ok = (a + b).is_zero() and (i != j or a.is_zero())
                if not ok:
                    raise ValueError(f"Gram matrix is not {'symmetric' if self.kind == QUADRATIC else 'alternating'}")
        if n and la.det(self.gram).is_zero():
            raise ValueError("bilinear form is degenerate")

    @classmethod
    def from_rationals(cls, kind: str, rows, ctx: PAdicContext) -> "BilinearSpace":
        return cls(kind, la.to_matrix(rows, ctx), ctx)

    @property
    def dim(self) -> int:
        return len(self.gram)

    @property
    def alternating(self) -> bool:
        return self.kind == ALTERNATING

    def b(self, x, y) -> PAdicScalar:
        return la.dot(la.vec_mat(x, self.gram), y)

    def q(self, x) -> PAdicScalar:
        if self.alternating:
            return self.ctx.zero
        return self.b(x, x) / 2

    def gram_of(self, vectors) -> la.Matrix:
        return la.congruence(tuple(vectors), self.gram)

    def subspace(self, vectors) -> "BilinearSpace":
        """The span of ``vectors`` in the coordinates given by those vectors."""
        return BilinearSpace(self.kind, self.gram_of(vectors), self.ctx, validate=False)

    def vector(self, entries) -> la.Vector:
        return la.to_vector(entries, self.ctx)

    def is_isometry(self, g: la.Matrix) -> bool:
        """Row convention: x -> x g preserves b iff g G g^T = G."""
        H = la.congruence(g, self.gram)
        return all((a - b).is_zero() for ra, rb in zip(H, self.gram) for a, b in zip(ra, rb))

    def with_context(self, ctx: PAdicContext) -> "BilinearSpace":
        rows = [[x.truncate(ctx.precision) if x.ctx.precision > ctx.precision else x for x in r]
                for r in self.gram]
        return BilinearSpace(self.kind, la.to_matrix(
            [[PAdicScalar(ctx, x.val, x.unit, x.prec) for x in r] for r in rows], ctx), ctx)

    @cached_property
    def witt(self) -> "WittDecomposition":
        return witt_decompose(self)

    @property
    def witt_index(self) -> int:
        return self.witt.witt_index


def eval_b(S: BilinearSpace, x, y) -> PAdicScalar:
    return S.b(x, y)


def eval_q(S: BilinearSpace, x) -> PAdicScalar:
    return S.q(x)


# -- orthogonal splittings ---------------------------------------------------

def _gram_add(G, i, j, c):
    """Gram update for v_i += c v_j."""
    G[i] = [a + c * b for a, b in zip(G[i], G[j])]
    for r in G:
        r[i] = r[i] + c * r[j]


def orthogonal_blocks(kind: str, vectors, G) -> list[tuple[list, list]]:
    """Split the R-module spanned by ``vectors`` into orthogonal blocks.

    ``G`` is the Gram matrix of ``vectors`` for the form in force.  Blocks
    have rank 1 (quadratic) or 2 (alternating) and are produced by
    unimodular operations with a pivot of minimal valuation, so the blocks
    together span the same R-module.  Returns ``[(block_vectors, block_gram)]``.
    """
    vecs = [tuple(v) for v in vectors]
    G = [list(r) for r in G]
    alive = list(range(len(vecs)))
    blocks = []
    while alive:
        flat = [(i, j) for i in alive for j in alive]
        k = la.choose_pivot([G[i][j] for i, j in flat])
        if k is None:
            raise PrecisionExhausted("degenerate block in orthogonal splitting")
        if kind == QUADRATIC:
            m = G[flat[k][0]][flat[k][1]].val
            diag = [i for i in alive if G[i][i].prec and G[i][i].val == m]
            if diag:
                i = diag[0]
            else:
                i, j = flat[k]
                _gram_add(G, i, j, 1)
                vecs[i] = la.vec_add(vecs[i], vecs[j])
            a = G[i][i]
            for k2 in alive:
                if k2 == i or G[k2][i].prec is None:
                    continue
                c = -(G[k2][i] / a)
                _gram_add(G, k2, i, c)
                vecs[k2] = la.vec_add(vecs[k2], la.vec_scale(c, vecs[i]))
                G[k2][i] = G[i][k2] = a.ctx.zero
            alive.remove(i)
            blocks.append(([vecs[i]], [[G[i][i]]]))
        else:
            i, j = flat[k]
            for k2 in alive:
                if k2 in (i, j):
                    continue
                t = -(G[k2][i] / G[j][i]) if G[k2][i].prec is not None else None
                s = -(G[k2][j] / G[i][j]) if G[k2][j].prec is not None else None
                if s is not None:
                    _gram_add(G, k2, i, s)
                    vecs[k2] = la.vec_add(vecs[k2], la.vec_scale(s, vecs[i]))
                if t is not None:
                    _gram_add(G, k2, j, t)
                    vecs[k2] = la.vec_add(vecs[k2], la.vec_scale(t, vecs[j]))
                z = G[i][j].ctx.zero
                G[k2][i] = G[i][k2] = G[k2][j] = G[j][k2] = z
            alive.remove(i)
            alive.remove(j)
            blocks.append(([vecs[i], vecs[j]], [[G[i][i], G[i][j]], [G[j][i], G[j][j]]]))
    return blocks


def diagonalize(S: BilinearSpace, vectors=None):
    """Orthogonal basis of the span of ``vectors`` (default: all of V) with the values b(w, w)."""
    if vectors is None:
        vectors = la.identity(S.dim, S.ctx)
    blocks = orthogonal_blocks(QUADRATIC, vectors, S.gram_of(vectors))
    return [blk[0][0] for blk in blocks], [blk[1][0][0] for blk in blocks]


# -- isotropy ----------------------------------------------------------------

@dataclass(frozen=True)
class AnisotropicCertificate:
    """Witness that Q has no nonzero zero.

    After rescaling, Q = sum(a_i x_i^2) with v(a_i) in {0, 1}; the residue
    forms of the unit part and of the p-part are both anisotropic over
    F_p, so a zero of Q cannot exist (its terms would have distinct
    valuation parities).
    """

    values: tuple
    unit_residues: tuple
    p_residues: tuple
    hasse_dim: int

    def to_json(self):
        return {"kind": "anisotropic",
                "q_values": [v.to_json() for v in self.values],
                "unit_residues": list(self.unit_residues),
                "p_residues": list(self.p_residues)}


def residue_zero(coeffs: list[int], p: int) -> Optional[list[int]]:
    """First nonzero x in F_p^m (lexicographic) with sum c_i x_i^2 = 0, m <= 3 used."""
    m = min(len(coeffs), 3)
    if m < 2:
        return None
    for x in itertools.product(range(p), repeat=m):
        if not any(x):
            continue
        if sum(c * t * t for c, t in zip(coeffs, x)) % p == 0:
            return list(x) + [0] * (len(coeffs) - m)
    return None


def lift_zero(q_values: list[PAdicScalar], residue: list[int], shift: int) -> list[PAdicScalar]:
    """Hensel-lift a nonsingular residue zero of sum(q_i x_i^2) (q_i = p^shift * unit).

    All coordinates but one are kept as exact integers; the remaining one
    is a p-adic square root, so the equation holds to full precision.
    """
    ctx = q_values[0].ctx
    p = ctx.p
    k = max(i for i, t in enumerate(residue) if t % p)
    rest = sum((q * t * t for i, (q, t) in enumerate(zip(q_values, residue)) if i != k and t),
               ctx.zero)
    root = (-(rest / q_values[k])).sqrt()
    if root.lift(1) != residue[k] % p:
        root = -root
    return [root if i == k else ctx(t) for i, t in enumerate(residue)]


def _normalized_diagonal(S: BilinearSpace):
    basis, bvals = diagonalize(S)
    ctx = S.ctx
    out_basis, qvals = [], []
    for w, a in zip(basis, bvals):
        q = a / 2
        t = q.valuation() // 2
        if t:
            w = la.vec_scale(ctx.uniformizer(-t), w)
            q = q.scale_pow(-2 * t)
        out_basis.append(w)
        qvals.append(q)
    return out_basis, qvals


def find_isotropic(S: BilinearSpace) -> Union[la.Vector, AnisotropicCertificate]:
    """A nonzero x with Q(x) = 0 to full working precision, or a certificate of anisotropy."""
    ctx = S.ctx
    if S.dim == 0:
        return AnisotropicCertificate((), (), (), 0)
    if S.alternating:
        return la.identity(S.dim, ctx)[0]
    basis, qvals = _normalized_diagonal(S)
    p = ctx.p
    groups = {0: [], 1: []}
    for i, q in enumerate(qvals):
        groups[q.val].append(i)
    residues = {}
    for shift, idx in groups.items():
        units = [qvals[i].scale_pow(-shift) for i in idx]
        res = [u.lift(1) for u in units]
        residues[shift] = tuple(res)
        x = residue_zero(res, p)
        if x is None:
            continue
        coords = lift_zero([qvals[i] for i in idx], x, shift)
        return la.vec_combination(coords, [basis[i] for i in idx])
    return AnisotropicCertificate(tuple(qvals), residues[0], residues[1], S.dim)


def is_anisotropic(S: BilinearSpace) -> bool:
    """Decide anisotropy from discriminant and Hasse invariant (dim <= 4)."""
    n = S.dim
    if S.alternating:
        return n == 0
    if n == 0:
        return True
    if n >= 5:
        return False
    if n == 1:
        return True
    _, bvals = diagonalize(S)
    a = [x / 2 for x in bvals]
    ctx = S.ctx
    d = ctx.one
    for x in a:
        d = d * x
    eps = 1
    for i in range(n):
        for j in range(i + 1, n):
            eps *= hilbert_symbol(a[i], a[j])
    minus_one = ctx(-1)
    if n == 2:
        return not (-d).is_square()
    if n == 3:
        return hilbert_symbol(minus_one, -d) != eps
    return d.is_square() and eps != hilbert_symbol(minus_one, minus_one)


# -- Witt decomposition ------------------------------------------------------

@dataclass(frozen=True)
class WittDecomposition:
    pairs: tuple  # ((e_i, f_i), ...)
    kernel_basis: tuple
    witt_index: int


def best_minor(coords: list[la.Vector]) -> tuple[int, int, PAdicScalar]:
    """Columns (k1, k2) of a 2 x m coordinate matrix with a minor of minimal valuation."""
    m = len(coords[0])
    cols = [(i, j) for i in range(m) for j in range(i + 1, m)]
    minors = [coords[0][i] * coords[1][j] - coords[0][j] * coords[1][i] for i, j in cols]
    k = la.choose_pivot(minors)
    if k is None:
        raise PrecisionExhausted("pair is linearly dependent")
    return cols[k][0], cols[k][1], minors[k]


def project_out(S: BilinearSpace, w, e, f, bef, scale_factor=None):
    """w minus its orthogonal projection to the plane Fe + Ff, where b(e, f) = bef."""
    bfe = -bef if S.alternating else bef
    alpha = S.b(w, f) / bef
    beta = S.b(w, e) / bfe
    return la.vec_sub(w, la.vec_add(la.vec_scale(alpha, e), la.vec_scale(beta, f)))


def witt_decompose(S: BilinearSpace) -> WittDecomposition:
    ctx = S.ctx
    cur = list(la.identity(S.dim, ctx))
    pairs = []
    while cur:
        x = find_isotropic(S.subspace(cur))
        if isinstance(x, AnisotropicCertificate):
            break
        e = la.vec_combination(x, cur)
        vals = [S.b(e, w) for w in cur]
        k = la.choose_pivot(vals)
        y = la.vec_scale(1 / vals[k], cur[k])
        f = la.vec_sub(y, la.vec_scale(S.q(y), e))
        pairs.append((e, f))
        ycoords = [ctx.zero] * len(cur)
        ycoords[k] = 1 / vals[k]
        fcoords = [yc - S.q(y) * xc for yc, xc in zip(ycoords, x)]
        k1, k2, _ = best_minor([x, fcoords])
        cur = [project_out(S, w, e, f, ctx.one) for i, w in enumerate(cur) if i not in (k1, k2)]
    return WittDecomposition(tuple(pairs), tuple(cur), len(pairs))
