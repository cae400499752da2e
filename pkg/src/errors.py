"""
Metaclust - Error Hierarchy
===========================

Every failure the library raises derives from MetaclustError.
Each class carries the CLI exit code it maps to.
"""

from typing import Optional


class MetaclustError(Exception):
    """Base class for all library errors"""
    exit_code: int = 1


class ConformanceError(MetaclustError, ValueError):
    """Operand shapes do not conform for the requested operation"""
    exit_code = 3


class DomainError(MetaclustError, ValueError):
    """Argument outside the mathematical domain of a primitive"""
    exit_code = 1

    def __init__(self, primitive: str, message: str):
        self.primitive = primitive
        super().__init__(f"{primitive}: {message}")


class ContractError(MetaclustError, ValueError):
    """A documented precondition was violated by the caller"""
    exit_code = 3


class NumericalError(MetaclustError, ArithmeticError):
    """Non-finite values appeared where finite ones are required"""
    exit_code = 1

    def __init__(self, message: str, index: Optional[object] = None):
        self.index = index
        super().__init__(message)


class DataParseError(MetaclustError, ValueError):
    """A data file could not be parsed"""
    exit_code = 3

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class SyntheticSpecError(MetaclustError, ValueError):
    """A synthetic dataset specification cannot be realised"""
    exit_code = 5


class ModelMismatchError(MetaclustError, ValueError):
    """Checkpoint and data disagree on feature dimensionality"""
    exit_code = 4


class ConfigError(MetaclustError, ValueError):
    """Run configuration failed validation"""
    exit_code = 2
