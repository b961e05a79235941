class ValidationError(Exception):
    pass


class InvalidGeometryError(ValidationError):
    pass


class NotPositiveDefiniteError(Exception):
    pass


class IllConditionedError(Exception):
    pass


class BudgetError(Exception):
    pass


class PreconditionError(Exception):
    pass


class SearchSpaceTooLarge(Exception):
    pass


class SolverError(Exception):
    pass
