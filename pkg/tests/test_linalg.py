import random
from fractions import Fraction

from hypothesis import given, strategies as st

from hyperbasis import linalg as la
from hyperbasis.padic import PAdicContext

C2, C5 = PAdicContext(2), PAdicContext(5)


def rationals(M):
    return [[x.rational() for x in r] for r in M]


def test_identity_is_neutral():
    A = la.to_matrix([[1, 2], [3, 4]], C5)
    assert rationals(la.mat_mul(la.identity(2, C5), A)) == [[1, 2], [3, 4]]


def test_det_of_diagonal_adds_valuations():
    d = la.det(la.to_matrix([[5, 0], [0, 25]], C5))
    assert d.val == 3 and d.unit == 1


def test_swap_is_an_involution():
    S = la.to_matrix([[0, 1], [1, 0]], C5)
    assert rationals(la.inverse(S)) == [[0, 1], [1, 0]]


def test_hermite_examples():
    assert rationals(la.hermite_basis(la.to_matrix([[5, 0], [0, 1]], C5))) == [[5, 0], [0, 1]]
    H = la.hermite_basis(la.to_matrix([[1, 1], [1, -1]], C2))
    assert rationals(H) == [[1, 1], [0, 2]]
    H = la.hermite_basis(la.to_matrix([[1, 1], [0, 5]], C5))
    assert rationals(H) == [[1, 1], [0, 5]]


def test_coordinates_detect_non_members():
    H = la.hermite_basis(la.to_matrix([[1, 1], [0, 5]], C5))
    c = la.coordinates(H, la.to_vector([1, 0], C5))
    assert c is not None and not all(x.val_ge(0) for x in c)  # coefficient -1/5


def test_elementary_divisors_examples():
    assert la.elementary_divisors(la.identity(3, C5)) == [0, 0, 0]
    assert la.elementary_divisors(la.to_matrix([[1, 0], [0, 5]], C5)) == [0, 1]
    assert la.elementary_divisors(la.to_matrix([[5, 1], [0, 5]], C5)) == [0, 2]


def test_solve_examples():
    b = la.to_vector([3, -7], C5)
    assert [x.rational() for x in la.solve(la.identity(2, C5), b)] == [3, -7]
    x = la.solve(la.to_matrix([[5, 0], [0, 1]], C5), la.to_vector([5, 0], C5))
    assert [t.rational() for t in x] == [1, 0]


def _fraction_det(M):
    M = [list(map(Fraction, r)) for r in M]
    n, d = len(M), Fraction(1)
    for c in range(n):
        k = next((i for i in range(c, n) if M[i][c]), None)
        if k is None:
            return Fraction(0)
        if k != c:
            M[c], M[k] = M[k], M[c]
            d = -d
        d *= M[c][c]
        for i in range(c + 1, n):
            t = M[i][c] / M[c][c]
            M[i] = [a - t * b for a, b in zip(M[i], M[c])]
    return d


SMALL = st.integers(-6, 6)


@given(st.lists(st.lists(SMALL, min_size=3, max_size=3), min_size=3, max_size=3), st.sampled_from([2, 3, 5]))
def test_det_matches_fraction_oracle(rows, p):
    ctx = PAdicContext(p)
    assert la.det(la.to_matrix(rows, ctx)).agrees(ctx(_fraction_det(rows)))


@given(st.lists(st.lists(SMALL, min_size=3, max_size=3), min_size=3, max_size=3), st.lists(SMALL, min_size=3, max_size=3))
def test_solve_has_small_residual(rows, rhs):
    if _fraction_det(rows) == 0:
        return
    A, b = la.to_matrix(rows, C5), la.to_vector(rhs, C5)
    x = la.solve(A, b)
    r = la.vec_sub(la.mat_vec(A, x), b)
    assert all(t.is_exact_zero or t.valuation_bound() >= C5.precision - 8 for t in r)


@given(st.integers(0, 10 ** 6))
def test_hermite_basis_is_invariant_under_unimodular_mixing(seed):
    rng = random.Random(seed)
    rows = [[rng.randint(-9, 9) for _ in range(3)] for _ in range(3)]
    if _fraction_det(rows) == 0:
        return
    U = [[1, rng.randint(-3, 3), rng.randint(-3, 3)], [0, 1, rng.randint(-3, 3)], [0, 0, 1]]
    rng.shuffle(U)
    A = la.to_matrix(rows, C5)
    B = la.mat_mul(la.to_matrix(U, C5), A)
    assert la.same_module(la.hermite_basis(A), la.hermite_basis(B))
    assert [[x.rational() for x in r] for r in la.hermite_basis(A)] == \
           [[x.rational() for x in r] for r in la.hermite_basis(B)]
