"""Exception hierarchy shared by every belcal module."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Span:
    """A source location: 1-based line/column plus the end offset on that line."""

    line: int
    col: int
    end_col: int | None = None

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    span: Span | None = None
    severity: str = "error"

    def format(self, path: str = "<input>") -> str:
        where = f"{path}:{self.span}" if self.span else path
        return f"{where}: {self.severity}: [{self.code}] {self.message}"


class BelcalError(Exception):
    """Root of all belcal errors."""

    code = "BelcalError"


# -- evaluation ------------------------------------------------------------

class EvaluationError(BelcalError):
    code = "EvaluationError"


class DivisionByZero(EvaluationError):
    code = "DivisionByZero"


class NonPositiveVariance(EvaluationError):
    code = "NonPositiveVariance"


class UnboundReference(EvaluationError):
    code = "UnboundReference"


class HistoryIndexOutOfRange(EvaluationError):
    code = "HistoryIndexOutOfRange"


class NonFiniteValue(EvaluationError):
    code = "NonFiniteValue"


class TypeMismatch(EvaluationError):
    code = "TypeMismatch"


class NegativeLikelihood(EvaluationError):
    code = "NegativeLikelihood"


class DomainViolation(EvaluationError):
    code = "DomainViolation"


# -- parsing ---------------------------------------------------------------

class TheoryError(BelcalError):
    """A parse or name-resolution failure; carries one diagnostic per problem."""

    code = "TheoryError"

    def __init__(self, message: str, span: Span | None = None, diagnostics: list[Diagnostic] | None = None):
        super().__init__(f"{span}: {message}" if span else message)
        self.message = message
        self.span = span
        self.diagnostics = diagnostics or [Diagnostic(self.code, message, span)]


class DslSyntaxError(TheoryError):
    code = "SyntaxError"

    def __init__(self, message: str, span: Span | None = None, expected: frozenset[str] = frozenset()):
        super().__init__(message, span)
        self.expected = expected


class DuplicateName(TheoryError):
    code = "DuplicateName"


class UnknownIdentifier(TheoryError):
    code = "UnknownIdentifier"


class ArityMismatch(TheoryError):
    code = "ArityMismatch"


class DomainMismatch(TheoryError):
    code = "DomainMismatch"


class StaticTypeError(TheoryError):
    code = "TypeError"


# -- engine ----------------------------------------------------------------

class EngineError(BelcalError):
    code = "EngineError"


class DegenerateBelief(EngineError):
    code = "DegenerateBelief"


class DimensionLimit(EngineError):
    code = "DimensionLimit"


class UnboundedSupport(EngineError):
    code = "UnboundedSupport"


class ConfigError(EngineError):
    code = "ConfigError"


class UnrecognizedInitForm(EngineError):
    code = "UnrecognizedInitForm"


class UnrecognizedLikelihoodForm(EngineError):
    code = "UnrecognizedLikelihoodForm"


class FiniteFluentMarginal(EngineError):
    code = "FiniteFluentMarginal"


# -- oracle ----------------------------------------------------------------

class InfiniteDomain(BelcalError):
    code = "InfiniteDomain"


class ZeroEvidence(BelcalError):
    code = "ZeroEvidence"


class SimulationError(BelcalError):
    """An evaluation error raised while applying the action at ``index``."""

    def __init__(self, index: int, cause: BelcalError):
        super().__init__(f"action #{index}: {cause}")
        self.index = index
        self.cause = cause
        self.code = cause.code
