"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class DimbreakError(Exception):
    exit_code = 4


class DomainError(DimbreakError, ValueError):
    """Argument outside the domain where a formula is defined."""

    exit_code = 2


class ConfigError(DimbreakError):
    exit_code = 2

    def __init__(self, message, field=None):
        self.field = field
        if field and not message.startswith(field):
            message = f"{field}: {message}"
        super().__init__(message)


class RootIsolationError(DimbreakError):
    exit_code = 3


class SingularCoefficientError(DimbreakError):
    exit_code = 3


class ResonanceError(DimbreakError):
    exit_code = 3


class NoSolitonError(DimbreakError):
    exit_code = 3


class AssemblyError(DimbreakError):
    exit_code = 4


class DiscretizationError(DimbreakError):
    exit_code = 3


class SpectralStructureError(DimbreakError):
    exit_code = 3


class BracketError(DimbreakError, ValueError):
    exit_code = 3


class CoercivityError(DimbreakError):
    exit_code = 3

    def __init__(self, message, vector=None):
        self.vector = vector
        super().__init__(message)


class SingularModeError(DomainError):
    """q = 0 mode passed to a Green's-function routine."""


class OracleError(DimbreakError):
    exit_code = 4


class DivergenceError(DimbreakError):
    exit_code = 3

    def __init__(self, message, eps=None, ratios=None):
        self.eps = eps
        self.ratios = ratios
        super().__init__(message)


class SearchFailure(DimbreakError):
    exit_code = 3

    def __init__(self, message, diagnostics=None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)


class SymmetryError(DimbreakError, ValueError):
    exit_code = 2
