"""Exception hierarchy shared by all modules."""


class HyperbasisError(Exception):
    pass


class PrecisionExhausted(HyperbasisError, ArithmeticError):
    """A decision needed more certified p-adic digits than are available.

    Callers recover by restarting the computation at a higher precision.
    """


class DivisionByZero(HyperbasisError, ZeroDivisionError):
    pass


class NotASquare(HyperbasisError, ValueError):
    pass


class SingularMatrix(HyperbasisError, ValueError):
    pass


class NotAnIsometry(HyperbasisError, ValueError):
    pass


class NotAPTE(HyperbasisError, ValueError):
    """Raised when a lattice is not almost p-elementary totally even."""

    REASONS = ("not-p-elementary", "not-totally-even", "anisotropic-part-not-maximal")

    def __init__(self, reason, detail=""):
        assert reason in self.REASONS, reason
        self.reason = reason
        super().__init__(f"{reason}: {detail}" if detail else reason)


class DoesNotSplit(HyperbasisError, ValueError):
    pass


class NoIsotropicVectors(HyperbasisError, ValueError):
    pass


class NotMaximalIsotropic(HyperbasisError, ValueError):
    pass


class InvalidChain(HyperbasisError, ValueError):
    def __init__(self, failures):
        self.failures = list(failures)
        super().__init__("; ".join(self.failures))


class SearchExhausted(HyperbasisError, RuntimeError):
    """No candidate completed the construction; indicates a defect."""


class TooLarge(HyperbasisError, ValueError):
    """A brute-force oracle was asked to exceed its fixed budget."""
