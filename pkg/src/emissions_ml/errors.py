"""Exception hierarchy.

Each family maps onto one CLI exit code: configuration problems exit 1, data
problems exit 2 and failures while fitting exit 3.
"""


class EmissionsError(Exception):
    exit_code = 1


class ConfigError(EmissionsError):
    exit_code = 1


class DataError(EmissionsError):
    exit_code = 2


class TrainingError(EmissionsError):
    exit_code = 3


class IoError(DataError):
    pass


class MissingColumn(DataError):
    def __init__(self, name):
        super().__init__(f"missing column: {name!r}")
        self.name = name


class MalformedCsv(DataError):
    def __init__(self, line, detail=""):
        msg = f"malformed CSV at line {line}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
        self.line = line


class EmptyResult(DataError):
    pass


class EmptyTable(DataError):
    pass


class EmptyInput(DataError):
    pass


class TooFewRows(DataError):
    pass


class UnknownOrdinalCategory(DataError):
    def __init__(self, column, value):
        super().__init__(f"column {column!r}: category {value!r} not in ordinal_order")
        self.column = column
        self.value = value


class DimensionMismatch(DataError):
    pass


class NonFiniteInput(DataError):
    pass


class NotFitted(TrainingError):
    pass


class EmptySpace(ConfigError):
    pass
