"""
🚨 BKS COLLAPSE - ERROR HIERARCHY
Every failure the generator, verifier, oracle and certificate layer can raise.
"""

from typing import Optional


class CollapseError(Exception):
    """Root of every error raised by bks_collapse"""


# Scalars

class ScalarError(CollapseError):
    pass


class ZeroDivisorError(ScalarError, ZeroDivisionError):
    def __init__(self, message: str = "zero divisor"):
        super().__init__(message)


class NotInTowerError(ScalarError, ValueError):
    """Square root requested for a value outside the rational square-root tower"""


class ScalarGrammarError(ScalarError, ValueError):
    """Malformed scalar or vector expression"""

    def __init__(self, message: str, text: str = "", column: Optional[int] = None):
        self.text = text
        self.column = column
        where = f" at column {column}" if column is not None else ""
        super().__init__(f"{message}{where}: {text!r}" if text else message)


# Intervals

class IntervalError(CollapseError):
    pass


class MissingBindingError(IntervalError, KeyError):
    def __init__(self, symbol: str):
        self.symbol = symbol
        super().__init__(symbol)

    def __str__(self) -> str:
        return f"missing binding for symbol {self.symbol}"


class UndecidedSignError(IntervalError):
    def __init__(self, message: str = "undecided sign"):
        super().__init__(message)


# Geometry and rules

class GeometryError(CollapseError, ValueError):
    pass


class RuleError(CollapseError, ValueError):
    """A rule precondition failed; the message names the failed identity"""


class ChainError(CollapseError, ValueError):
    pass


class TargetError(CollapseError, ValueError):
    pass


class DerivationStructureError(CollapseError):
    pass


class UnverifiedDerivationError(CollapseError):
    pass


# Oracle

class OracleError(CollapseError):
    pass


class ColoringProblemError(OracleError, ValueError):
    pass


class ExhaustiveLimitError(OracleError, ValueError):
    pass


class ContradictoryPinError(OracleError, ValueError):
    pass


# Certificates

class CertificateError(CollapseError):
    pass


class CertificateSyntaxError(CertificateError):
    def __init__(self, message: str, line: int, column: int):
        self.line = line
        self.column = column
        super().__init__(f"{message} (line {line}, column {column})")


class UnknownVersionError(CertificateError):
    pass


class UnresolvedIdError(CertificateError, KeyError):
    def __init__(self, identifier: str, where: str = ""):
        self.identifier = identifier
        self.where = where
        super().__init__(identifier)

    def __str__(self) -> str:
        suffix = f" in {self.where}" if self.where else ""
        return f"unresolved id {self.identifier!r}{suffix}"


class CertificateStructureError(CertificateError):
    pass
