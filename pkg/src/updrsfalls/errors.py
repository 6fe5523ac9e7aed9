"""Exception taxonomy shared across the package.

All errors raised by this library derive from :class:`UpdrsFallsError` so
callers can catch one base type at the CLI boundary.
"""


class UpdrsFallsError(Exception):
    """Base class for every error raised by this package."""


# ---- cohort ingestion -----------------------------------------------------

class MissingColumn(UpdrsFallsError):
    def __init__(self, column):
        self.column = column
        super().__init__(f"required column missing: {column!r}")


class OutOfRangeScore(UpdrsFallsError):
    def __init__(self, item_id, row):
        self.item_id = item_id
        self.row = row
        super().__init__(f"item {item_id} score out of range at data row {row}")


class DuplicateParticipant(UpdrsFallsError):
    def __init__(self, participant_id):
        self.participant_id = participant_id
        super().__init__(f"duplicate participant_id: {participant_id!r}")


class EmptyFile(UpdrsFallsError):
    def __init__(self, path):
        self.path = path
        super().__init__(f"no data rows in {path}")


class InvalidFieldValue(UpdrsFallsError):
    def __init__(self, column, row, value):
        self.column = column
        self.row = row
        self.value = value
        super().__init__(f"invalid value {value!r} for column {column!r} at data row {row}")


class UnknownItem(UpdrsFallsError):
    def __init__(self, item_id):
        self.item_id = item_id
        super().__init__(f"item id {item_id} not present in the schema")


class InvalidConfig(UpdrsFallsError):
    pass


# ---- numerics -------------------------------------------------------------

class EmptyNode(UpdrsFallsError):
    pass


class DimensionMismatch(UpdrsFallsError):
    pass


class NonConvergence(UpdrsFallsError):
    """Raised when an iterative fit fails to converge and the caller asked
    for strict behavior; fits normally return a flagged result instead."""


class SingularHessian(UpdrsFallsError):
    pass


class NegativeWeight(UpdrsFallsError):
    pass


class SingleClass(UpdrsFallsError):
    pass


class ZeroMarginal(UpdrsFallsError):
    pass


class DegenerateVariance(UpdrsFallsError):
    pass
