import random

import pytest
from hypothesis import given, strategies as st

from hyperbasis import linalg as la
from hyperbasis.chains import random_apte_lattice, random_isometry, apply_matrix
from hyperbasis.errors import DoesNotSplit, NotAPTE
from hyperbasis.lattice import (Lattice, apte_decompose, double_dual_check, dual, includes,
                                isotropic_sublattice, lattice_equal, lattice_from_rationals,
                                dual_inclusion_holds, maximal_lattice, member, modified_dual, predicates,
                                split_hyperbolic, standard_lattice)
from hyperbasis.space import ALTERNATING, QUADRATIC

from conftest import SPACE_RECIPES, hyperbolic_gram, make_space


def std(kind, gram, p):
    return standard_lattice(make_space(kind, gram, p))


def H1Hp(p=5):
    return std(QUADRATIC, hyperbolic_gram(QUADRATIC, [1, p]), p)


# -- duals ----------------------------------------------------------------------------

def test_dual_examples():
    L = std(QUADRATIC, [[0, 1], [1, 0]], 5)
    assert lattice_equal(dual(L), L)
    P = std(QUADRATIC, [[0, 5], [5, 0]], 5)
    assert lattice_equal(dual(P), lattice_from_rationals(P.space, [["1/5", 0], [0, "1/5"]]))
    S = make_space(QUADRATIC, [[2, 0], [0, 2]], 5)
    L = lattice_from_rationals(S, [[1, 0], [0, 5]])
    # Gram inversion by hand: diag(1/2, 1/10) rows, i.e. R x p^-1 R after unit rescaling
    assert lattice_equal(dual(L), lattice_from_rationals(S, [[1, 0], [0, "1/5"]]))
    for M in (L, P):
        assert double_dual_check(M)


@pytest.mark.parametrize("idx", range(len(SPACE_RECIPES)))
def test_double_dual_on_mixed_lattices(idx):
    kind, p, gram = SPACE_RECIPES[idx]
    S = make_space(kind, gram, p)
    rng = random.Random(idx)
    for _ in range(4):
        rows = [[rng.randint(-p, p) * p ** rng.randint(0, 2) for _ in range(S.dim)] for _ in range(S.dim)]
        try:
            L = lattice_from_rationals(S, rows)
        except ValueError:
            continue
        if L.rank == S.dim:
            assert double_dual_check(L)


def test_modified_dual_examples():
    Hp = std(ALTERNATING, [[0, 2], [-2, 0]], 2)
    M = modified_dual(Hp)
    assert M.scale == 1
    assert lattice_equal(M, lattice_from_rationals(Hp.space, [["1/2", 0], [0, "1/2"]], 1))
    assert M.b(M.basis[0], M.basis[1]).rational() in (1, -1)
    H1 = std(QUADRATIC, [[0, 1], [1, 0]], 3)
    M = modified_dual(H1)
    assert lattice_equal(M, H1.with_scale(1))
    assert apte_decompose(M).counts == (0, 1, 0)
    R = std(QUADRATIC, [[2]], 5)
    once = modified_dual(R)
    twice = modified_dual(once)
    assert once.scale == 1 and lattice_equal(once, R.with_scale(1))
    assert twice.scale == 2
    assert lattice_equal(twice, lattice_from_rationals(R.space, [["1/5"]], 2))


# -- predicates and maximal lattices --------------------------------------------------------

def test_predicate_examples():
    H1 = std(QUADRATIC, [[0, 1], [1, 0]], 5)
    pr = predicates(H1, 0)
    assert pr.p_elementary and pr.pr_modular and pr.pr_maximal and pr.totally_even
    Hp2 = std(QUADRATIC, [[0, 25], [25, 0]], 5)
    assert not predicates(Hp2).p_elementary
    L = lattice_from_rationals(H1.space, [[1, 0], [0, 5]])
    pr = predicates(L, 1)
    assert pr.pr_maximal and pr.even


def test_maximal_lattice_examples():
    S = make_space(QUADRATIC, [[0, 1], [1, 0]], 5)
    assert lattice_equal(maximal_lattice(S, 0), standard_lattice(S))
    S = make_space(QUADRATIC, [[2, 0], [0, -4]], 5)  # x^2 - 2y^2, 2 a non-residue mod 5
    assert lattice_equal(maximal_lattice(S, 0), standard_lattice(S))
    A = make_space(ALTERNATING, [[0, 1], [-1, 0]], 2)
    assert lattice_equal(maximal_lattice(A, 0), standard_lattice(A))


# -- APTE decomposition ---------------------------------------------------------------------

def test_apte_examples():
    dec = apte_decompose(H1Hp())
    assert dec.counts == (1, 1, 0)
    with pytest.raises(NotAPTE) as info:
        apte_decompose(std(QUADRATIC, [[0, 25], [25, 0]], 5))
    assert info.value.reason == "not-p-elementary"


def test_apte_witness_and_pair_identities():
    L = H1Hp()
    dec = apte_decompose(L)
    assert all(x == 0 for x in la.elementary_divisors(dec.witness))
    for (e, f), target in zip(dec.pairs, (1, 5)):
        assert L.q(e).is_zero() and L.q(f).is_zero()
        assert L.b(e, f).rational() == target


@given(st.integers(0, 10 ** 6))
def test_block_counts_survive_unimodular_rebasing(seed):
    rng = random.Random(seed)
    L = H1Hp()
    U = la.identity(4, L.ctx)
    for _ in range(3):
        i, j = rng.sample(range(4), 2)
        row = la.vec_add(U[i], la.vec_scale(L.ctx(rng.randint(-4, 4)), U[j]))
        U = tuple(row if k == i else U[k] for k in range(4))
    M = Lattice(L.space, la.mat_mul(U, L.basis))
    assert lattice_equal(M, L)
    assert apte_decompose(M).counts == (1, 1, 0)


@pytest.mark.parametrize("idx", range(len(SPACE_RECIPES)))
def test_modified_dual_swaps_block_types(idx):
    kind, p, gram = SPACE_RECIPES[idx]
    S = make_space(kind, gram, p)
    for seed in range(3):
        L = random_apte_lattice(S, seed)
        u, m, a = apte_decompose(L).counts
        M = modified_dual(L)
        assert apte_decompose(M).counts == (m, u, a)
        MM = modified_dual(M)
        assert MM.scale == L.scale + 2
        assert lattice_equal(MM, Lattice(S, la.mat_scale(S.ctx.uniformizer(-1), L.basis), L.scale + 2))


# -- splitting --------------------------------------------------------------------------------

def test_split_examples():
    L = H1Hp()
    (e1, f1), (e2, f2) = apte_decompose(L).pairs
    sp = split_hyperbolic(L, e1, f1)
    assert sp.pairing == 0 and apte_decompose(sp.complement).counts == (0, 1, 0)
    sp = split_hyperbolic(L, e2, f2)
    assert sp.pairing == 1 and apte_decompose(sp.complement).counts == (1, 0, 0)
    H1 = std(QUADRATIC, [[0, 1], [1, 0]], 5)
    e, y = la.to_vector([1, 0], H1.ctx), la.to_vector([0, 1], H1.ctx)
    f = la.vec_sub(y, la.vec_scale(H1.q(y), e))
    assert split_hyperbolic(H1, e, f).complement.rank == 0


def test_split_rejects_non_splitting_planes():
    L = H1Hp()
    (e1, f1), _ = apte_decompose(L).pairs
    with pytest.raises(DoesNotSplit):
        split_hyperbolic(L, la.vec_scale(L.ctx(5), e1), f1)


@pytest.mark.parametrize("idx", range(len(SPACE_RECIPES)))
def test_split_complements_stay_apte(idx):
    kind, p, gram = SPACE_RECIPES[idx]
    S = make_space(kind, gram, p)
    for seed in range(3):
        L = random_apte_lattice(S, seed)
        for e, f in apte_decompose(L).pairs:
            apte_decompose(split_hyperbolic(L, e, f).complement)


# -- isotropic sublattice and the dual-inclusion property -----------------------------------

def test_isotropic_sublattice_examples():
    L = H1Hp()
    assert lattice_equal(isotropic_sublattice(L), L)
    S = make_space(QUADRATIC, [[0, 5, 0], [5, 0, 0], [0, 0, 2]], 5)
    L = standard_lattice(S)
    assert lattice_equal(isotropic_sublattice(L), lattice_from_rationals(S, [[1, 0, 0], [0, 1, 0], [0, 0, 5]]))
    Hp = std(QUADRATIC, [[0, 5], [5, 0]], 5)
    assert lattice_equal(isotropic_sublattice(Hp), Hp)


def test_dual_inclusion_examples():
    assert dual_inclusion_holds(H1Hp())
    assert dual_inclusion_holds(std(QUADRATIC, [[0, 5, 0], [5, 0, 0], [0, 0, 2]], 5))


@pytest.mark.parametrize("idx", range(len(SPACE_RECIPES)))
def test_dual_inclusion_on_random_lattices(idx):
    kind, p, gram = SPACE_RECIPES[idx]
    S = make_space(kind, gram, p)
    for seed in range(3):
        L = random_apte_lattice(S, seed)
        if apte_decompose(L).pairs:
            assert dual_inclusion_holds(L)


# -- inclusion and membership -------------------------------------------------------------

def test_inclusion_examples():
    L = H1Hp()
    assert includes(L, L.scaled(1)) and not includes(L.scaled(1), L)
    S = make_space(QUADRATIC, [[2, 0], [0, 2]], 5)
    M = lattice_from_rationals(S, [[1, 1], [0, 5]])
    assert not member(la.to_vector([1, 0], S.ctx), M)
    g = random_isometry(L.space, 1)
    assert lattice_equal(apply_matrix(L, la.identity(4, L.ctx)), L)
    assert includes(apply_matrix(L, g), apply_matrix(L.scaled(1), g))
