"""Exception types raised across the package."""


class AbsCsError(Exception):
    """Base class for all package errors."""


class InvalidSparsityError(AbsCsError, ValueError):
    pass


class InvalidShapeError(AbsCsError, ValueError):
    pass


class DegenerateColumnError(AbsCsError, ValueError):
    pass


class InvalidInputError(AbsCsError, ValueError):
    pass


class InvalidBudgetError(AbsCsError, ValueError):
    pass


class BudgetTooSmallError(AbsCsError, ValueError):
    pass


class InvalidLevelsError(AbsCsError, ValueError):
    pass


class DegenerateTrainingError(AbsCsError, ValueError):
    pass


class CorruptIndexError(AbsCsError, IndexError):
    pass


class InstanceTooLargeError(AbsCsError, ValueError):
    pass


class InvalidDimensionError(AbsCsError, ValueError):
    pass


class ConfigError(AbsCsError, ValueError):
    pass


class EmptyInputError(AbsCsError, ValueError):
    pass


class CsvParseError(AbsCsError, ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno
