"""Exception types shared across the package."""


class UcplabError(Exception):
    """Base class for all package errors."""


class DomainError(UcplabError, ValueError):
    """An expression evaluated to a non-finite value inside its box."""


class DimensionMismatch(UcplabError, ValueError):
    pass


class SingularSystem(UcplabError):
    pass


class EllipticityViolated(UcplabError):
    pass


class DenominatorVanishes(UcplabError):
    pass


class RankDeficient(UcplabError):
    pass


class PositivityLost(UcplabError):
    pass


class NotHarmonic(UcplabError):
    pass


class PathInconsistent(UcplabError):
    pass


class SingularA(UcplabError):
    pass


class GVanishes(UcplabError):
    pass


class PsiNotPositive(UcplabError):
    pass


class CriticalSetTooLarge(UcplabError):
    pass


class DegenerateIplusA(UcplabError):
    pass


class NotSymmetric(UcplabError):
    pass


class NotPositive(UcplabError):
    pass


class GradientVanishesAtBase(UcplabError):
    pass


class ZeroPolynomial(UcplabError):
    pass


class OrthogonalityViolated(UcplabError):
    pass


class DegenerateFit(UcplabError):
    pass


class NormalizationFailed(UcplabError):
    pass


class StepFailure(UcplabError):
    pass


class AffineStructureViolated(UcplabError):
    pass


class MatrixDriftRefused(UcplabError, TypeError):
    """A matrix-valued drift was passed where a scalar ODE is required."""


class DegenerateMetric(UcplabError):
    pass


class OracleNonConvergent(UcplabError):
    pass


class MetricNotIsothermal(UcplabError):
    pass


class ConfigError(UcplabError):
    pass


class CheckFailure(UcplabError):
    pass
