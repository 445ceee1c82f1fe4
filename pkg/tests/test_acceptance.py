"""End-to-end acceptance checks, one test per criterion.

Each test prints a single PASS/FAIL line (visible even under output capture)
before asserting, so a plain ``pytest`` run doubles as the acceptance report.
"""

import copy
import functools
import itertools
import random
import statistics
import time

import pytest

from hyperbasis import linalg as la
from hyperbasis.align import (ChainAlignment, HyperbolicBasis, adapt_to_isotropic, common_basis,
                              isometry_between, max_isotropic)
from hyperbasis.chains import (apply_matrix, random_apte_lattice, random_isometry,
                               random_lattice_automorphism, standard_chain, transform_chain)
from hyperbasis.errors import PrecisionExhausted, SearchExhausted
from hyperbasis.lattice import (Lattice, apte_decompose, dual, includes, index_exponents,
                                lattice_equal, maximal_lattice, modified_dual, split_hyperbolic)
from hyperbasis.padic import PAdicContext, hilbert_symbol, legendre, square_class_representatives
from hyperbasis.space import QUADRATIC, is_anisotropic
from hyperbasis.verify import (brute_hilbert, brute_maximal, check_adapted, check_alignment,
                               check_isometry, lattice_residues)

from conftest import SPACE_RECIPES, make_space


@pytest.fixture
def report(capsys):
    def emit(number, title, ok, detail):
        with capsys.disabled():
            print(f"\n[acceptance {number:2d}] {'PASS' if ok else 'FAIL'} {title}: {detail}")
    return emit


@functools.lru_cache(maxsize=None)
def spaces(precision=48):
    return tuple(make_space(kind, gram, p, precision) for kind, p, gram in SPACE_RECIPES)


def random_lattice(S, rng):
    """Full-rank lattice with integer coordinates scaled by small powers of p."""
    p, d = S.ctx.p, S.dim
    while True:
        rows = [[rng.randint(-p * p, p * p) * p ** rng.randint(0, 2) for _ in range(d)] for _ in range(d)]
        L = Lattice(S, la.to_matrix(rows, S.ctx))
        if L.rank == d:
            return L


def lattice_pair(k, precision=48):
    """(L, X): a random APTE lattice and a random maximal isotropic submodule of it."""
    S = spaces(precision)[k % len(SPACE_RECIPES)]
    L = random_apte_lattice(S, 1000 + k)
    return L, apply_matrix(max_isotropic(L), random_lattice_automorphism(L, 2000 + k))


def chain_pair(k, precision=48):
    """(C, C g) for a random isometry g."""
    S = spaces(precision)[k % len(SPACE_RECIPES)]
    C = standard_chain(S.witt, S)
    return C, transform_chain(C, random_isometry(S, 3000 + k, steps=4 + 4 * (k % 3)))


def escalating(run, k):
    """``run(k, N)`` at N = 48, 96, 192, 384, stopping at the first N with enough digits.

    Mirrors the command line's precision policy; returns (result, doublings).
    """
    for doublings in range(4):
        try:
            return run(k, 48 << doublings), doublings
        except PrecisionExhausted:
            if doublings == 3:
                raise


def test_double_dual(report):
    rng = random.Random(1)
    pool = spaces()
    start = time.perf_counter()
    failures = 0
    for k in range(210):
        L = random_lattice(pool[k % len(pool)], rng)
        failures += not lattice_equal(dual(dual(L)), L)
    elapsed = time.perf_counter() - start
    ok = failures == 0 and elapsed < 30
    report(1, "double dual", ok, f"210 lattices, {failures} failures, {elapsed:.1f}s")
    assert ok


def test_modified_double_dual(report):
    failures = 0
    pool = spaces()
    for k in range(108):
        S = pool[k % len(pool)]
        L = random_apte_lattice(S, k)
        DD = modified_dual(modified_dual(L))
        expected = Lattice(S, la.mat_scale(S.ctx.uniformizer(-1), L.basis), L.scale + 2)
        failures += not lattice_equal(DD, expected)
    report(2, "modified double dual", failures == 0, f"108 lattices, {failures} failures")
    assert failures == 0


def test_split_complements_are_apte(report):
    trials = failures = 0
    pool = spaces()
    for k in range(60):
        S = pool[k % len(pool)]
        L = random_apte_lattice(S, 500 + k)
        g = random_lattice_automorphism(L, 600 + k)
        # planes from the decomposition and their images under an automorphism of L
        for e, f in apte_decompose(L).pairs:
            for u, w in ((e, f), (la.vec_mat(e, g), la.vec_mat(f, g))):
                trials += 1
                comp = split_hyperbolic(L, u, w, check=False).complement
                try:
                    apte_decompose(comp)
                except Exception:
                    failures += 1
    ok = failures == 0 and trials >= 100
    report(3, "split complements are APTE", ok, f"{trials} trials, {failures} failures")
    assert ok


def test_adapted_bases(report):
    def run(k, precision):
        L, X = lattice_pair(k, precision)
        return check_adapted(L, X, adapt_to_isotropic(L, X)).passed

    failures = escalated = 0
    for k in range(108):
        ok, doublings = escalating(run, k)
        failures += not ok
        escalated += doublings > 0
    report(4, "adapt_to_isotropic", failures == 0,
           f"108 pairs, {failures} failures, {escalated} rerun at higher precision")
    assert failures == 0


def test_isometry_between(report):
    def run(k, precision):
        L, X1 = lattice_pair(k, precision)
        X2 = apply_matrix(X1, random_lattice_automorphism(L, 4000 + k))
        return check_isometry(isometry_between(L, X1, X2), L, X1, X2).passed

    failures = escalated = 0
    for k in range(54):
        ok, doublings = escalating(run, k)
        failures += not ok
        escalated += doublings > 0
    report(5, "isometry_between", failures == 0,
           f"54 pairs, {failures} failures, {escalated} rerun at higher precision")
    assert failures == 0


def test_common_basis(report):
    def run(k, precision):
        C1, C2 = chain_pair(k, precision)
        start = time.perf_counter()
        A = common_basis(C1, C2, check=False)
        elapsed = time.perf_counter() - start
        return check_alignment(A, C1, C2).passed, elapsed

    failures = exhausted = escalated = 0
    times = []
    for k in range(108):
        try:
            (ok, elapsed), doublings = escalating(run, k)
        except SearchExhausted:
            exhausted += 1
            continue
        failures += not ok
        escalated += doublings > 0
        times.append(elapsed)
    median = statistics.median(times)
    ok = failures == 0 and exhausted == 0 and median < 5
    report(6, "common_basis", ok, f"108 pairs, {failures} failures, {exhausted} exhausted, "
           f"{escalated} rerun at higher precision, median {median:.3f}s")
    assert ok


def test_chain_structure(report):
    failures = checked = 0
    for k in range(108):
        for C in chain_pair(k):
            checked += 1
            if not includes(C.bottom, C.top.scaled(1)):
                failures += 1
                continue
            for big, small in zip(C.members, C.members[1:]):
                ex = index_exponents(small, big)
                if sum(ex) != 1 or min(ex) < 0:
                    failures += 1
                    break
    report(7, "chain structure", failures == 0, f"{checked} chains, {failures} failures")
    assert failures == 0


def _nonresidue(p):
    return next(a for a in range(2, p) if legendre(a, p) == -1)


def test_oracle_equivalence(report):
    hilbert = mismatches = 0
    for p in (2, 3, 5, 7):
        ctx = PAdicContext(p)
        for a, b in itertools.product(square_class_representatives(p), repeat=2):
            hilbert += 1
            mismatches += hilbert_symbol(ctx(a), ctx(b)) != brute_hilbert(a, b, p)
    maximal = 0
    for p in (3, 5, 7):
        u = _nonresidue(p)
        for d in (1, 2, 3):
            for diag in itertools.combinations_with_replacement([1, u, p, u * p, -1, -p], d):
                S = make_space(QUADRATIC, [[2 * diag[i] if i == j else 0 for j in range(d)] for i in range(d)], p)
                if not is_anisotropic(S):
                    continue
                maximal += 1
                mismatches += brute_maximal(S) != lattice_residues(maximal_lattice(S, 0))
    report(8, "oracle equivalence", mismatches == 0,
           f"{hilbert} Hilbert symbols, {maximal} maximal lattices, {mismatches} mismatches")
    assert mismatches == 0


def _digits_agree(rows1, rows2) -> bool:
    return all(a.agrees(b) for r1, r2 in zip(rows1, rows2) for a, b in zip(r1, r2))


def test_precision_robustness(report):
    mismatches = []
    for k in range(27):
        (L1, X1), (L2, X2) = lattice_pair(k, 48), lattice_pair(k, 96)
        A1, A2 = adapt_to_isotropic(L1, X1), adapt_to_isotropic(L2, X2)
        if A1.pairing != A2.pairing or not _digits_agree(A1.vectors(), A2.vectors()) \
                or not _digits_agree(L1.basis, L2.basis):
            mismatches.append(f"adapted #{k}")
    for k in range(27):
        (C1, D1), (C2, D2) = chain_pair(k, 48), chain_pair(k, 96)
        A1, A2 = common_basis(C1, D1, check=False), common_basis(C2, D2, check=False)
        b1 = list(A1.basis.e) + list(A1.basis.f) + list(A1.basis.kernel_basis)
        b2 = list(A2.basis.e) + list(A2.basis.f) + list(A2.basis.kernel_basis)
        members = all(_digits_agree(m1.basis, m2.basis) for m1, m2 in zip(D1.members, D2.members))
        if (A1.r, A1.s) != (A2.r, A2.s) or not _digits_agree(b1, b2) or not members:
            mismatches.append(f"alignment #{k}")
    ok = not mismatches
    report(9, "precision robustness (48 vs 96)", ok,
           f"54 fixtures, mismatches: {', '.join(mismatches) or 'none'}")
    assert ok


def _mutations(A, ctx, rng):
    """Endless stream of single-field edits: exponent shifts and basis-vector changes."""
    n = len(A.r[0][0])
    fields = [f for f in ("e", "f", "kernel_basis") if getattr(A.basis, f)]
    while True:
        kind = rng.choice(["exponent", "exponent", "entry", "scale", "mix"])
        r, s, basis = copy.deepcopy(A.r), copy.deepcopy(A.s), A.basis
        if kind == "exponent" and n:
            table = rng.choice([r, s])
            nu, j, i = rng.randrange(2), rng.randrange(len(A.r[0])), rng.randrange(n)
            table[nu][j][i] += rng.choice([1, -1])
        else:
            field = rng.choice(fields)
            vecs = list(getattr(basis, field))
            i = rng.randrange(len(vecs))
            if kind == "entry":
                c = rng.randrange(len(vecs[i]))
                delta = ctx.uniformizer(rng.randint(0, ctx.precision - ctx.margin))
                vecs[i] = tuple(x + delta if k == c else x for k, x in enumerate(vecs[i]))
            elif kind == "scale":
                vecs[i] = la.vec_scale(ctx.uniformizer(1), vecs[i])
            else:
                others = [v for f in fields for v in getattr(basis, f) if v is not vecs[i]]
                if not others:
                    continue
                vecs[i] = la.vec_add(vecs[i], rng.choice(others))
            basis = HyperbolicBasis(**{**basis.__dict__, field: tuple(vecs)})
        yield ChainAlignment(basis, r, s)


def _still_valid(A, C1, C2) -> bool:
    """Independent validity test through the lattice module.

    An edit can land on another correct alignment (say e + p^k f where the
    chain exponents absorb the change); such edits are not corruptions.
    """
    S = C1.space
    ctx = S.ctx
    e, f, K = list(A.basis.e), list(A.basis.f), list(A.basis.kernel_basis)
    try:
        for i, x in enumerate(e):
            if not S.q(x).is_zero() or not S.q(f[i]).is_zero():
                return False
            for j, y in enumerate(f):
                if not (S.b(x, y) - (1 if i == j else 0)).is_zero():
                    return False
                if not S.b(x, e[j]).is_zero() or not S.b(f[i], y).is_zero():
                    return False
            if any(not S.b(x, k).is_zero() or not S.b(f[i], k).is_zero() for k in K):
                return False
        if any(a or b for a, b in zip(A.r[0][0], A.s[0][0])):
            return False
        for nu, C in enumerate((C1, C2)):
            for j, M in enumerate(C.members):
                rows = [la.vec_scale(ctx.uniformizer(a), x) for a, x in zip(A.r[nu][j], e)]
                rows += [la.vec_scale(ctx.uniformizer(a), y) for a, y in zip(A.s[nu][j], f)]
                if not lattice_equal(Lattice(S, tuple(rows + K)), M):
                    return False
        return len(e) + len(f) + len(K) == S.dim
    except PrecisionExhausted:
        return False


def test_mutation_sensitivity(report):
    rng = random.Random(7)
    missed = total = benign = 0
    for k in range(9):
        C1, C2 = chain_pair(k)
        A = common_basis(C1, C2)
        assert check_alignment(A, C1, C2).passed and _still_valid(A, C1, C2)
        stream = _mutations(A, C1.space.ctx, rng)
        for _ in range(12):
            M = next(stream)
            while _still_valid(M, C1, C2):
                benign += 1
                M = next(stream)
            total += 1
            missed += check_alignment(M, C1, C2).passed
    ok = missed == 0 and total >= 100
    report(10, "mutation sensitivity", ok,
           f"{total} corruptions, {missed} accepted (skipped {benign} edits that stayed valid)")
    assert ok
