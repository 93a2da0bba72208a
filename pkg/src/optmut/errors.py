"""Exception types shared across the package."""


class OptmutError(Exception):
    """Base class for all optmut errors."""


class ModelInvalid(OptmutError):
    pass


class DuplicateName(ModelInvalid):
    pass


class UnknownVariable(ModelInvalid):
    pass


class UnknownParameter(OptmutError):
    pass


class NotInStandardForm(OptmutError):
    pass


class NonPositiveFactor(OptmutError):
    pass


class MissingVariable(OptmutError):
    pass


class SchemaViolation(OptmutError):
    """Raised when a JSON bundle fails schema validation.

    ``json_path`` is a JSON-pointer-style location of the offending value.
    """

    def __init__(self, message, json_path=""):
        super().__init__(f"{json_path or '/'}: {message}" if json_path else message)
        self.json_path = json_path


class BindingIncomplete(OptmutError):
    def __init__(self, missing):
        super().__init__(f"binding does not cover: {', '.join(sorted(missing))}")
        self.missing = tuple(sorted(missing))


class InterfaceInvalid(OptmutError):
    pass


class EvaluationError(OptmutError):
    pass


class DivisionByZero(EvaluationError):
    def __init__(self, kpi):
        super().__init__(f"division by zero while evaluating KPI {kpi!r}")
        self.kpi = kpi


class NoApplicableOperator(OptmutError):
    pass


class NoValidMutants(OptmutError):
    pass


class LlmOutputInvalid(OptmutError):
    def __init__(self, message, diagnostics=()):
        super().__init__(message)
        self.diagnostics = tuple(diagnostics)


class ProviderUnavailable(OptmutError):
    pass


class UnbindableSuite(OptmutError):
    def __init__(self, names):
        super().__init__(f"cannot bind: {', '.join(sorted(names))}")
        self.names = tuple(sorted(names))
