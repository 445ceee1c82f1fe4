import pytest

from hyperbasis import linalg as la
from hyperbasis.chains import (LatticeChain, chains_equal, random_isometry, standard_chain,
                               transform_chain, validate_chain)
from hyperbasis.errors import NotAnIsometry
from hyperbasis.lattice import (apte_decompose, includes, index_exponents, lattice_equal,
                                lattice_from_rationals, maximal_lattice)
from hyperbasis.space import ALTERNATING, QUADRATIC

from conftest import hyperbolic_gram, make_space


def test_standard_chain_on_two_planes_is_valid():
    S = make_space(QUADRATIC, hyperbolic_gram(QUADRATIC, [1, 1]), 3)
    C = standard_chain(S.witt, S)
    assert len(C) == 3 and validate_chain(C).ok
    assert apte_decompose(C[1]).counts == (1, 1, 0)


def test_alternating_standard_chain_members():
    S = make_space(ALTERNATING, [[0, 1], [-1, 0]], 2)
    C = standard_chain(S.witt, S)
    assert lattice_equal(C[0], lattice_from_rationals(S, [[1, 0], [0, 1]]))
    assert lattice_equal(C[1], lattice_from_rationals(S, [[1, 0], [0, 2]]))


def test_anisotropic_space_has_single_member_chain():
    S = make_space(QUADRATIC, [[2, 0], [0, -4]], 5)
    C = standard_chain(S.witt, S)
    assert len(C) == 1 and lattice_equal(C[0], maximal_lattice(S, 0))
    assert validate_chain(C).ok


def test_invalid_chains_are_reported():
    S = make_space(ALTERNATING, [[0, 1], [-1, 0]], 2)
    C = standard_chain(S.witt, S)
    scaled = LatticeChain((C[0], C[0].scaled(1)))
    assert not validate_chain(scaled).ok
    short = LatticeChain((C[0],))
    rep = validate_chain(short)
    assert not rep.ok and any("length" in m for m in rep.failures)


def test_transform_examples():
    S = make_space(ALTERNATING, [[0, 1], [-1, 0]], 2)
    C = standard_chain(S.witt, S)
    assert chains_equal(transform_chain(C, la.identity(2, S.ctx)), C)
    swapped = transform_chain(C, la.to_matrix([[0, 1], [-1, 0]], S.ctx))
    assert lattice_equal(swapped[1], lattice_from_rationals(S, [[0, 1], [2, 0]]))
    with pytest.raises(NotAnIsometry):
        transform_chain(C, la.to_matrix([[1, 1], [0, 2]], S.ctx))


def test_random_isometry_basics(recipe_space):
    S = recipe_space
    g0, I = random_isometry(S, 0, steps=0), la.identity(S.dim, S.ctx)
    assert all(a.agrees(b) for ra, rb in zip(g0, I) for a, b in zip(ra, rb))
    g = random_isometry(S, 7)
    assert S.is_isometry(g)
    assert all(a.agrees(b) for ra, rb in zip(g, random_isometry(S, 7)) for a, b in zip(ra, rb))


def test_transformed_chains_stay_valid(recipe_space):
    S = recipe_space
    C = standard_chain(S.witt, S)
    for seed in range(3):
        D = transform_chain(C, random_isometry(S, seed))
        rep = validate_chain(D)
        assert rep.ok, rep.failures
        assert includes(D.bottom, D.top.scaled(1))
        for j in range(len(D) - 1):
            assert index_exponents(D[j + 1], D[j]) == [0] * (S.dim - 1) + [1]
