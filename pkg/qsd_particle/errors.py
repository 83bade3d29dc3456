"""
Errors
======

Exception hierarchy shared by the library and the command line.

Exit codes (stable, for scripting):
- 0: success
- 2: configuration error (bad JSON, schema violation, bad option)
- 3: runtime model error (survivability violated, null conditioning, ...)

Errors raised inside replica worker processes travel back pickled, so
every subclass with extra constructor arguments defines ``__reduce__``.
"""

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_MODEL = 3


class QsdParticleError(Exception):
    """Base class for every error raised by qsd_particle."""


class UsageError(QsdParticleError, ValueError):
    """A library function was called with arguments outside its domain."""


class ConfigError(QsdParticleError):
    """
    A model or experiment document failed to load or validate.

    Args:
        message: Human readable description
        field: Dotted/indexed path of the offending field, e.g. ``rows[1][0]``
        line: 1-based line of a JSON syntax error, when known
    """

    def __init__(self, message: str, field: str = None, line: int = None):
        self.message = message
        self.field = field
        self.line = line
        where = []
        if field:
            where.append(f"field '{field}'")
        if line is not None:
            where.append(f"line {line}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)

    def __reduce__(self):
        return (type(self), (self.message, self.field, self.line))


class ModelError(QsdParticleError):
    """The model misbehaved while running."""


class KernelValidationError(ModelError):
    """A substochastic matrix failed validation."""

    def __init__(self, violations: list):
        self.violations = list(violations)
        details = "; ".join(v.message for v in self.violations[:5])
        if len(self.violations) > 5:
            details += f"; ... ({len(self.violations) - 5} more)"
        super().__init__(f"invalid substochastic matrix: {details}")

    def __reduce__(self):
        return (type(self), (self.violations,))


class NullConditioningError(ModelError):
    """Conditioning on an event of (numerically) zero probability."""


class ConvergenceError(ModelError):
    """Power iteration did not settle; carries the last residual."""

    def __init__(self, message: str, residual: float, iterations: int):
        self.message = message
        self.residual = residual
        self.iterations = iterations
        super().__init__(f"{message} (residual={residual:.3e} after {iterations} iterations)")

    def __reduce__(self):
        return (type(self), (self.message, self.residual, self.iterations))


class StuckEnsembleError(ModelError):
    """
    The particle step exceeded its iteration cap.

    Under the survivability assumption the step terminates almost surely,
    so hitting the cap points at states from which survival is impossible.
    """

    def __init__(self, states: list, iterations: int):
        self.states = list(states)
        self.iterations = iterations
        shown = ", ".join(repr(s) for s in self.states[:8])
        if len(self.states) > 8:
            shown += ", ..."
        super().__init__(
            f"suspected survivability violation: step not finished after "
            f"{iterations} iterations; pending states: {shown}"
        )

    def __reduce__(self):
        return (type(self), (self.states, self.iterations))
