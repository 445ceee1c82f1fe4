"""Hyperbolic bases for lattices and lattice chains in p-adic quadratic and alternating spaces."""

__version__ = "0.1.0"

from .errors import (DivisionByZero, DoesNotSplit, HyperbasisError, InvalidChain,  # noqa: E402
                     NoIsotropicVectors, NotAnIsometry, NotAPTE, NotASquare, NotMaximalIsotropic,
                     PrecisionExhausted, SearchExhausted, SingularMatrix, TooLarge)
from .padic import PAdicContext, PAdicScalar, hilbert_symbol  # noqa: E402
from .space import ALTERNATING, QUADRATIC, BilinearSpace, find_isotropic, witt_decompose  # noqa: E402
from .lattice import (Lattice, apte_decompose, dual, lattice_equal, lattice_from_rationals,  # noqa: E402
                      maximal_lattice, modified_dual, predicates, split_hyperbolic, standard_lattice)
from .chains import LatticeChain, standard_chain, transform_chain, validate_chain  # noqa: E402
from .align import (AdaptedBasis, ChainAlignment, HyperbolicBasis, adapt_to_isotropic,  # noqa: E402
                    common_basis, isometry_between, max_isotropic)
from .verify import Certificate, check_adapted, check_alignment, check_isometry  # noqa: E402
