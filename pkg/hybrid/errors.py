# hybrid/errors.py
"""
Exception hierarchy shared by the parser, the symbolic layer, the runtime and the CLI.
"""
from typing import Iterable, List, Optional


class HybridError(Exception):
    """Base class for every error raised by this package."""


# ============================================================
# LANGUAGE
# ============================================================

class ParseError(HybridError):
    def __init__(self, message: str, line: int, column: int, expected: Iterable[str] = ()):
        self.line = line
        self.column = column
        self.expected = sorted(set(expected))
        detail = f" (expected one of: {', '.join(self.expected)})" if self.expected else ""
        super().__init__(f"line {line}, column {column}: {message}{detail}")


class ValidationError(HybridError):
    def __init__(self, stmt_id: Optional[int], rule: str, message: str, line: Optional[int] = None):
        self.stmt_id = stmt_id
        self.rule = rule
        self.line = line
        where = f"stmt {stmt_id}" if stmt_id is not None else "program"
        if line is not None:
            where += f" (line {line})"
        super().__init__(f"{where}: {rule}: {message}")

    def __eq__(self, other):
        if not isinstance(other, ValidationError):
            return NotImplemented
        return (self.stmt_id, self.rule, str(self)) == (other.stmt_id, other.rule, str(other))

    def __hash__(self):
        return hash((self.stmt_id, self.rule, str(self)))


class ValidationFailed(HybridError):
    def __init__(self, errors: List[ValidationError]):
        self.errors = list(errors)
        super().__init__(f"{len(self.errors)} validation error(s)")


# ============================================================
# SYMBOLIC STATE
# ============================================================

class UnknownParent(HybridError):
    pass


class NotConjugate(HybridError):
    pass


class NotRoot(HybridError):
    pass


class DomainError(HybridError):
    pass


class DegenerateVariance(HybridError):
    pass


# ============================================================
# RUNTIME
# ============================================================

class ExactViolation(HybridError):
    def __init__(self, variable: str, stmt_id: int, iteration: int, cause: str, line: Optional[int] = None):
        self.variable = variable
        self.stmt_id = stmt_id
        self.iteration = iteration
        self.cause = cause
        self.line = line
        at = f"line {line}" if line is not None else f"stmt {stmt_id}"
        super().__init__(f"{variable} at {at}, iteration {iteration} ({cause})")


class DataError(HybridError):
    pass


class ConfigError(HybridError):
    pass


class AllParticlesDead(HybridError):
    pass


class TooManyDiscrete(HybridError):
    pass


class NonEnumerable(HybridError):
    pass
