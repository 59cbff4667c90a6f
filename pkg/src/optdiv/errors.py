"""Exception hierarchy.

Every error carries the process exit code the CLI maps it to:
1 for IO/usage problems, 2 for validation or feasibility failures,
3 for ill-posed or numerically unresolvable problems.
"""


class OptdivError(Exception):
    exit_code = 1


class UsageError(OptdivError):
    exit_code = 1


class EmptyTable(UsageError):
    pass


class UnsupportedParameter(UsageError):
    pass


class ValidationError(OptdivError):
    exit_code = 2


class AssumptionViolation(ValidationError):
    """A standing model assumption failed; ``name`` identifies which one."""

    def __init__(self, name: str, detail: str = ""):
        self.name = name
        self.detail = detail
        super().__init__(f"{name}: {detail}" if detail else name)


class NonpositiveLoading(ValidationError):
    pass


class DomainError(ValidationError):
    pass


class EtaIsOne(ValidationError):
    pass


class DispatchAmbiguity(ValidationError):
    pass


class InfeasibleC(ValidationError):
    pass


class FeasibilityLost(ValidationError):
    pass


class NoAnalyticGradient(ValidationError):
    pass


class NoCrossing(ValidationError):
    pass


class NoInteriorMax(ValidationError):
    pass


class IllPosed(OptdivError):
    exit_code = 3


class ConvergenceFailure(OptdivError):
    exit_code = 3

    def __init__(self, message: str, **diagnostics):
        self.diagnostics = diagnostics
        if diagnostics:
            extra = ", ".join(f"{k}={v!r}" for k, v in diagnostics.items())
            message = f"{message} ({extra})"
        super().__init__(message)
