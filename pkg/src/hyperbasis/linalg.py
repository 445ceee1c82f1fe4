"""Vectors and matrices over truncated p-adic scalars.

Matrices are tuples of rows; a lattice is always the row span of its
basis matrix.  Pivots are chosen by minimal valuation (ties: lowest row,
then lowest column), which makes the canonical forms deterministic.
"""

from __future__ import annotations

from typing import Optional, Sequence

from .errors import PrecisionExhausted, SingularMatrix
from .padic import PAdicContext, PAdicScalar

Vector = tuple  # tuple[PAdicScalar, ...]
Matrix = tuple  # tuple[Vector, ...]


def to_vector(entries, ctx: PAdicContext) -> Vector:
    return tuple(x if isinstance(x, PAdicScalar) else ctx(x) for x in entries)


def to_matrix(rows, ctx: PAdicContext) -> Matrix:
    return tuple(to_vector(r, ctx) for r in rows)


def identity(n: int, ctx: PAdicContext) -> Matrix:
    z, o = ctx.zero, ctx.one
    return tuple(tuple(o if i == j else z for j in range(n)) for i in range(n))


def zeros(r: int, c: int, ctx: PAdicContext) -> Matrix:
    z = ctx.zero
    return tuple(tuple(z for _ in range(c)) for _ in range(r))


def shape(A: Matrix) -> tuple[int, int]:
    return len(A), (len(A[0]) if A else 0)


# -- elementary operations ---------------------------------------------------

def dot(u: Sequence[PAdicScalar], v: Sequence[PAdicScalar]) -> PAdicScalar:
    acc = None
    for a, b in zip(u, v):
        if a.prec is None or b.prec is None:
            continue
        t = a * b
        acc = t if acc is None else acc + t
    return acc if acc is not None else u[0].ctx.zero


def vec_add(u: Vector, v: Vector) -> Vector:
    return tuple(a + b for a, b in zip(u, v))


def vec_sub(u: Vector, v: Vector) -> Vector:
    return tuple(a - b for a, b in zip(u, v))


def vec_scale(c, v: Vector) -> Vector:
    return tuple(c * a for a in v)


def vec_combination(coeffs, vectors) -> Vector:
    """sum(c_i * v_i)."""
    out = None
    for c, v in zip(coeffs, vectors):
        if c.prec is None:
            continue
        t = vec_scale(c, v)
        out = t if out is None else vec_add(out, t)
    if out is None:
        return tuple(vectors[0][0].ctx.zero for _ in vectors[0])
    return out


def transpose(A: Matrix) -> Matrix:
    return tuple(zip(*A))


def mat_mul(A: Matrix, B: Matrix) -> Matrix:
    if len(A[0]) != len(B):
        raise ValueError(f"shape mismatch {shape(A)} x {shape(B)}")
    Bt = transpose(B)
    return tuple(tuple(dot(row, col) for col in Bt) for row in A)


def vec_mat(v: Vector, A: Matrix) -> Vector:
    """Row vector times matrix."""
    return tuple(dot(v, col) for col in transpose(A))


def mat_vec(A: Matrix, v: Vector) -> Vector:
    return tuple(dot(row, v) for row in A)


def mat_add(A: Matrix, B: Matrix) -> Matrix:
    return tuple(vec_add(a, b) for a, b in zip(A, B))


def mat_sub(A: Matrix, B: Matrix) -> Matrix:
    return tuple(vec_sub(a, b) for a, b in zip(A, B))


def mat_scale(c, A: Matrix) -> Matrix:
    return tuple(vec_scale(c, r) for r in A)


def congruence(B: Matrix, G: Matrix) -> Matrix:
    """B G B^T, the Gram matrix of the rows of B."""
    return mat_mul(mat_mul(B, G), transpose(B))


# -- pivoting ----------------------------------------------------------------

def choose_pivot(entries) -> Optional[int]:
    """Index of the entry of minimal valuation, or None if all are zero.

    Raises PrecisionExhausted when an inexact zero could hide a smaller
    valuation than the chosen pivot.
    """
    best, bestv = None, None
    fuzzy = []
    for i, x in enumerate(entries):
        if x.prec is None:
            continue
        if x.prec == 0:
            fuzzy.append(x.val)
            continue
        if bestv is None or x.val < bestv:
            best, bestv = i, x.val
    if fuzzy:
        margin = entries[0].ctx.margin
        floor = margin if best is None else bestv + margin
        if min(fuzzy) < floor:
            raise PrecisionExhausted("pivot choice not certified")
    return best


def det(A: Matrix) -> PAdicScalar:
    n = len(A)
    rows = [list(r) for r in A]
    ctx = A[0][0].ctx
    sign = 1
    acc = ctx.one
    for c in range(n):
        k = choose_pivot([rows[i][c] for i in range(c, n)])
        if k is None:
            return ctx.zero
        k += c
        if k != c:
            rows[c], rows[k] = rows[k], rows[c]
            sign = -sign
        piv = rows[c][c]
        acc = acc * piv
        for i in range(c + 1, n):
            x = rows[i][c]
            if x.prec is None:
                continue
            f = x / piv
            rows[i] = [a - f * b if j > c else ctx.zero for j, (a, b) in enumerate(zip(rows[i], rows[c]))]
    return acc if sign == 1 else -acc


def inverse(A: Matrix) -> Matrix:
    n = len(A)
    ctx = A[0][0].ctx
    I = identity(n, ctx)
    rows = [list(A[i]) + list(I[i]) for i in range(n)]
    for c in range(n):
        k = choose_pivot([rows[i][c] for i in range(c, n)])
        if k is None:
            raise SingularMatrix("matrix is singular")
        k += c
        rows[c], rows[k] = rows[k], rows[c]
        piv = rows[c][c]
        rows[c] = [x / piv for x in rows[c]]
        for i in range(n):
            if i == c:
                continue
            x = rows[i][c]
            if x.prec is None:
                continue
            rows[i] = [a - x * b for a, b in zip(rows[i], rows[c])]
            rows[i][c] = ctx.zero
    return tuple(tuple(r[n:]) for r in rows)


def solve(A: Matrix, b: Vector) -> Vector:
    """x with A x = b."""
    n = len(A)
    ctx = A[0][0].ctx
    rows = [list(A[i]) + [b[i]] for i in range(n)]
    for c in range(n):
        k = choose_pivot([rows[i][c] for i in range(c, n)])
        if k is None:
            raise SingularMatrix("matrix is singular")
        k += c
        rows[c], rows[k] = rows[k], rows[c]
        piv = rows[c][c]
        rows[c] = [x / piv for x in rows[c]]
        for i in range(n):
            if i == c:
                continue
            x = rows[i][c]
            if x.prec is None:
                continue
            rows[i] = [a - x * y for a, y in zip(rows[i], rows[c])]
            rows[i][c] = ctx.zero
    return tuple(r[n] for r in rows)


def matrix_arith(A, B=None, op="mul"):
    """Dispatcher over the basic matrix operations."""
    if op == "mul":
        return mat_mul(A, B)
    if op == "add":
        return mat_add(A, B)
    if op == "inverse":
        return inverse(A)
    if op == "det":
        return det(A)
    if op == "transpose":
        return transpose(A)
    raise ValueError(f"unknown op {op!r}")


# -- canonical bases ---------------------------------------------------------

def hermite_basis(B: Matrix) -> Matrix:
    """Canonical echelon basis of the R-module spanned by the rows of ``B``.

    Rows are ordered by pivot column; each pivot is exactly ``p**e`` and
    every entry above a pivot is reduced to digits below ``p**e``.  The
    rows of ``B`` may be linearly dependent; dependent rows are dropped.
    """
    if not B:
        return ()
    ctx = B[0][0].ctx
    ncols = len(B[0])
    remaining = [list(r) for r in B]
    out, pivcols = [], []
    for c in range(ncols):
        if not remaining:
            break
        k = choose_pivot([r[c] for r in remaining])
        if k is None:
            for r in remaining:
                r[c] = ctx.zero
            continue
        piv = remaining.pop(k)
        x = piv[c]
        u = x.unit_part()
        piv = [y / u for y in piv]
        piv[c] = ctx.uniformizer(x.val)
        for r in remaining:
            y = r[c]
            if y.prec is None:
                continue
            f = y / piv[c]
            for j in range(c + 1, ncols):
                if piv[j].prec is not None:
                    r[j] = r[j] - f * piv[j]
            r[c] = ctx.zero
        out.append(piv)
        pivcols.append(c)
    for r in remaining:
        for y in r:
            if not y.is_zero():
                raise PrecisionExhausted("dependent row did not reduce to zero")
    for k, c in enumerate(pivcols):
        e = out[k][c].val
        for i in range(k):
            x = out[i][c]
            rem = x.remainder(e)
            q = (x - rem) / out[k][c]
            if q.prec is not None:
                for j in range(c + 1, ncols):
                    if out[k][j].prec is not None:
                        out[i][j] = out[i][j] - q * out[k][j]
            out[i][c] = rem
    return tuple(tuple(r) for r in out)


def pivot_columns(H: Matrix) -> list[int]:
    cols = []
    for r in H:
        for j, x in enumerate(r):
            if x.prec is not None and x.prec > 0:
                cols.append(j)
                break
    return cols


def same_module(H1: Matrix, H2: Matrix) -> bool:
    """Compare two canonical bases digit for digit."""
    if len(H1) != len(H2):
        return False
    return all(a.agrees(b) for r1, r2 in zip(H1, H2) for a, b in zip(r1, r2))


def coordinates(H: Matrix, v: Vector, pivcols=None) -> Optional[Vector]:
    """Coefficients c with c H = v for a canonical basis H, or None if v is outside the span."""
    if pivcols is None:
        pivcols = pivot_columns(H)
    ctx = v[0].ctx
    coeffs = []
    for k, c in enumerate(pivcols):
        acc = v[c]
        for i in range(k):
            h = H[i][c]
            if h.prec is not None and coeffs[i].prec is not None:
                acc = acc - coeffs[i] * h
        coeffs.append(acc / H[k][c])
    for j in range(len(v)):
        if j in pivcols:
            continue
        acc = v[j]
        for i, ci in enumerate(coeffs):
            if H[i][j].prec is not None and ci.prec is not None:
                acc = acc - ci * H[i][j]
        if not acc.is_zero():
            return None
    return tuple(coeffs) if coeffs else ()


def elementary_divisors(A: Matrix) -> list[int]:
    """Exponents of the p-power elementary divisors, sorted ascending."""
    rows = [list(r) for r in A]
    m, n = shape(A)
    out = []
    for c in range(min(m, n)):
        entries, where = [], []
        for i in range(c, m):
            for j in range(c, n):
                entries.append(rows[i][j])
                where.append((i, j))
        k = choose_pivot(entries)
        if k is None:
            break
        i0, j0 = where[k]
        rows[c], rows[i0] = rows[i0], rows[c]
        for r in rows:
            r[c], r[j0] = r[j0], r[c]
        piv = rows[c][c]
        out.append(piv.val)
        for i in range(c + 1, m):
            x = rows[i][c]
            if x.prec is None:
                continue
            f = x / piv
            rows[i] = [a - f * b for a, b in zip(rows[i], rows[c])]
        # Clearing row c by column operations leaves the trailing block unchanged.
    return sorted(out)


# -- linear algebra over the residue field -----------------------------------

def left_kernel_mod_p(M: list[list[int]], p: int) -> list[list[int]]:
    """Basis of {c in F_p^m : c M = 0} for an m x n integer matrix."""
    m = len(M)
    n = len(M[0]) if M else 0
    # Row-reduce [M | I] and read the kernel off the rows whose M-part vanishes.
    rows = [[x % p for x in M[i]] + [1 if j == i else 0 for j in range(m)] for i in range(m)]
    r = 0
    for c in range(n):
        k = next((i for i in range(r, m) if rows[i][c]), None)
        if k is None:
            continue
        rows[r], rows[k] = rows[k], rows[r]
        inv = pow(rows[r][c], -1, p)
        rows[r] = [x * inv % p for x in rows[r]]
        for i in range(m):
            if i != r and rows[i][c]:
                f = rows[i][c]
                rows[i] = [(a - f * b) % p for a, b in zip(rows[i], rows[r])]
        r += 1
    return [row[n:] for row in rows[r:]]
