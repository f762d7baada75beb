"""Exception hierarchy.

Input problems derive from :class:`ValidationError`, numerical breakdowns from
:class:`NumericalError`; the CLI maps the two families to exit codes 2 and 3.
"""


class DiscScatError(Exception):
    pass


class ValidationError(DiscScatError, ValueError):
    pass


class NumericalError(DiscScatError, ArithmeticError):
    pass


class SignConditionViolated(ValidationError):
    def __init__(self, which, value):
        self.which = which
        self.value = value
        super().__init__(f"SignConditionViolated: {which} = {value!r}")


class AllZeroCoefficients(ValidationError):
    pass


class NegativeAbscissa(ValidationError):
    pass


class TruncationTooSmall(ValidationError):
    pass


class NonHermitianData(ValidationError):
    pass


class InvalidProblem(ValidationError):
    pass


class OutOfRange(ValidationError):
    pass


class StepRejected(NumericalError):
    pass


class CharacteristicVanishes(NumericalError):
    pass


class SearchCeilingHit(NumericalError):
    pass


class ContourThroughZero(NumericalError):
    pass


class NonpositiveNorm(NumericalError):
    pass


class BoundaryPolynomialVanishes(NumericalError):
    pass


class IllConditioned(NumericalError):
    def __init__(self, x, cond):
        self.x = x
        self.cond = cond
        super().__init__(f"IllConditioned: condition estimate {cond:.3e} at x = {x:.6g}")


class SingularSystem(NumericalError):
    pass


class FamilyIncomplete(NumericalError):
    def __init__(self, failed):
        self.failed = list(failed)
        xs = ", ".join(f"{x:.6g}" for x, _ in self.failed)
        super().__init__(f"FamilyIncomplete: solves failed at x = {xs}")


class InsufficientNodes(NumericalError):
    pass


class NoInteriorNodes(NumericalError):
    pass
