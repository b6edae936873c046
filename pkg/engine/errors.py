"""Exception hierarchy shared by the engine, the CLI and the HTTP routes."""


class RefactoringOptimizerError(Exception):
    """Base class for every error raised by the engine."""


class ConfigError(RefactoringOptimizerError):
    pass


class ModelError(RefactoringOptimizerError):
    pass


class ModelParseError(ModelError):
    """A model document could not be read; carries the locus of the problem."""

    def __init__(self, message, line=None, column=None, field=None):
        self.line = line
        self.column = column
        self.field = field
        locus = []
        if line is not None:
            locus.append(f"line {line}")
        if column is not None:
            locus.append(f"column {column}")
        if field is not None:
            locus.append(f"field '{field}'")
        prefix = f"{', '.join(locus)}: " if locus else ""
        super().__init__(f"{prefix}{message}")


class ModelValidationError(ModelError):
    """A model violates one or more invariants. All violations are listed."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class UnknownElementError(ModelError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "unknown element"


class RefactoringError(RefactoringOptimizerError):
    pass


class UnresolvedTargetError(RefactoringError):
    pass


class PreconditionError(RefactoringError):
    pass


class ConditionConflictError(RefactoringError):
    pass


class ExhaustionError(RefactoringError):
    pass


class SolverError(RefactoringOptimizerError):
    pass


class LqnStructureError(SolverError):
    pass


class ObjectiveError(RefactoringOptimizerError):
    pass


class IndexMismatchError(ObjectiveError):
    pass


class EvaluationError(ObjectiveError):
    pass


class AntipatternError(RefactoringOptimizerError):
    pass


class IndicatorError(RefactoringOptimizerError):
    pass


class HarnessError(RefactoringOptimizerError):
    pass
