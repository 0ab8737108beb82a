"""Exception hierarchy shared by every module in the package."""


class DGAError(Exception):
    """Base class for all package errors."""


class DegenerateVariable(DGAError, ValueError):
    pass


class ParseError(DGAError, ValueError):
    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class SchemaError(DGAError, ValueError):
    pass


class InvalidConfig(DGAError, ValueError):
    pass


class IncompleteRecord(DGAError, ValueError):
    pass


class InvalidK(DGAError, ValueError):
    pass


class DimensionMismatch(DGAError, ValueError):
    pass


class EmptyBatch(DGAError, ValueError):
    pass


class NonFiniteLoss(DGAError, ArithmeticError):
    pass


class IncompleteTrainingData(DGAError, ValueError):
    pass


class SingleClassData(DGAError, ValueError):
    pass


class AllMissing(DGAError, ValueError):
    pass


class NoValidPairs(DGAError, ValueError):
    pass


class EmptyPopulation(DGAError, ValueError):
    pass


class BudgetZero(DGAError, ValueError):
    pass


class ModelMismatch(DGAError, ValueError):
    pass


class TooManyMissing(DGAError, ValueError):
    pass


class MissingModel(DGAError, ValueError):
    pass


class MissingOptimizer(DGAError, ValueError):
    pass
