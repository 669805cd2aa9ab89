from __future__ import annotations

from ghostlab.exit_codes import EXIT_CODES


class FieldError(Exception):
    pass


class RealityViolation(FieldError):
    pass


class DivergenceViolation(FieldError):
    pass


class TruncationViolation(FieldError):
    pass


class ZeroModeViolation(FieldError):
    pass


class SupportViolation(FieldError):
    pass


class NotAnEigenvalue(FieldError):
    pass


class ShellViolation(FieldError):
    pass


class DocumentError(Exception):
    pass


class DynamicsError(Exception):
    pass


class NonFinite(DynamicsError):
    pass


class GeometryError(Exception):
    pass


class DegenerateDiagnostics(GeometryError):
    pass


class FrameDegenerate(GeometryError):
    """
    Gram-Schmidt hit a vanishing denominator.

    For the new frame this is exactly the chained condition, so the error
    carries the fitted (gamma, beta, alpha) when they could be computed.
    """

    def __init__(self, message: str, *, index: int, coefficients=None):
        super().__init__(message)
        self.index = index
        self.coefficients = coefficients


class NotPositiveDefinite(GeometryError):
    pass


class DegenerateCoordinates(GeometryError):
    pass


class SingularGram(GeometryError):
    pass


class DecompositionResidual(GeometryError):
    pass


class NoAdmissibleBranch(GeometryError):
    pass


class DomainError(GeometryError):
    pass


class ChainedInvariantViolation(GeometryError):
    pass


class ConstraintError(Exception):
    pass


class ConstraintParseError(ConstraintError):
    pass


class GenerationMismatch(ConstraintError):
    def __init__(self, message: str, *, ids=()):
        super().__init__(message)
        self.ids = tuple(ids)


class PropagationStall(ConstraintError):
    def __init__(self, message: str, *, state=None):
        super().__init__(message)
        self.state = state


class PropagationConflict(ConstraintError):
    pass


class ConfigError(Exception):
    pass


class MissingParamError(ConfigError):
    def __init__(self, keys):
        self.keys = sorted(keys)
        super().__init__(f"Missing required config keys: {', '.join(self.keys)}")


class ConversionError(ConfigError):
    pass


class InvalidConfigValue(ConfigError):
    pass


class CommandFailure(Exception):
    """
    Error raised by a CLI command, classified by exit code
    """

    def __init__(self, code: int, detail: str | None = None):
        self.code = code
        self.detail = detail
        self.description = EXIT_CODES.get(code, None)

    def __str__(self):
        if self.description is None:
            return f"Exit code = {self.code}; {self.detail}"
        if self.detail:
            return f"{self.description} ({self.code}): {self.detail}"
        return f"{self.description} ({self.code})"
