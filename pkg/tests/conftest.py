import pytest
from hypothesis import HealthCheck, settings

from hyperbasis.padic import PAdicContext
from hyperbasis.space import ALTERNATING, QUADRATIC, BilinearSpace

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def block_diagonal(blocks):
    n = sum(len(b) for b in blocks)
    G = [[0] * n for _ in range(n)]
    k = 0
    for b in blocks:
        for i, row in enumerate(b):
            for j, x in enumerate(row):
                G[k + i][k + j] = x
        k += len(b)
    return G


def hyperbolic_gram(kind, scales, extra=()):
    """Gram of H(s_1) + ... + H(s_k) followed by diagonal entries ``extra`` (b-values)."""
    sign = -1 if kind == ALTERNATING else 1
    blocks = [[[0, s], [sign * s, 0]] for s in scales]
    blocks += [[[a]] for a in extra]
    return block_diagonal(blocks)


def make_space(kind, gram, p, precision=48):
    return BilinearSpace.from_rationals(kind, gram, PAdicContext(p, precision))


# Spaces used by the randomized end-to-end checks: Witt index <= 3, dim <= 8.
SPACE_RECIPES = [
    (ALTERNATING, 2, hyperbolic_gram(ALTERNATING, [1])),
    (ALTERNATING, 2, hyperbolic_gram(ALTERNATING, [1, 1])),
    (ALTERNATING, 2, hyperbolic_gram(ALTERNATING, [1, 1, 1])),
    (QUADRATIC, 3, [[2, 0], [0, -2]]),
    (QUADRATIC, 3, [[2, 0, 0], [0, -2, 0], [0, 0, 6]]),
    (QUADRATIC, 3, block_diagonal([[[2]], [[6]], [[-2]], [[-6]], [[2]]])),
    (QUADRATIC, 5, hyperbolic_gram(QUADRATIC, [1, 1])),
    (QUADRATIC, 5, block_diagonal([[[2]], [[-2]], [[2]], [[-2]], [[4]], [[-20]], [[6]]])),
    (QUADRATIC, 5, block_diagonal([[[2]], [[-2]], [[2]], [[-2]], [[2]], [[-2]], [[2]], [[10]]])),
]


@pytest.fixture(params=range(len(SPACE_RECIPES)), ids=lambda i: f"{SPACE_RECIPES[i][0][:3]}-p{SPACE_RECIPES[i][1]}-d{len(SPACE_RECIPES[i][2])}")
def recipe_space(request):
    kind, p, gram = SPACE_RECIPES[request.param]
    return make_space(kind, gram, p)
