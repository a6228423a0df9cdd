"""Exception hierarchy.

Every error carries a stable ``code`` (the class name) so the CLI can emit
machine-readable diagnostics. Subclasses of :class:`InputError` signal bad
user input (CLI exit code 2); anything else is an internal failure.
"""
from __future__ import annotations


class RashomonError(Exception):
    """Base class for all package errors."""

    @property
    def code(self) -> str:
        return type(self).__name__

    def to_dict(self) -> dict:
        return {"error": self.code, "message": str(self)}


class InputError(RashomonError, ValueError):
    """Invalid user-supplied data or configuration."""


# data
class MissingTarget(InputError):
    pass


class NonBinaryTarget(InputError):
    pass


class RaggedRow(InputError):
    def __init__(self, row_index: int, expected: int, got: int):
        super().__init__(f"row {row_index} has {got} cells, expected {expected}")
        self.row_index = row_index


class MissingValue(InputError):
    def __init__(self, row: int, column: str):
        super().__init__(f"missing value at row {row}, column {column!r}")
        self.row = row
        self.column = column


class DegenerateSplit(InputError):
    pass


class TooFewPerClass(InputError):
    pass


# learners
class InvalidHyperparameter(InputError):
    pass


class SingleClassData(InputError):
    pass


class SingleClass(InputError):
    pass


class VersionMismatch(InputError):
    pass


class CorruptPayload(InputError):
    pass


# profiles
class CategoricalVariable(InputError):
    pass


class NumericVariable(InputError):
    pass


class DegenerateDomain(InputError):
    pass


class UnknownVariable(InputError):
    pass


class SchemaMismatch(InputError):
    pass


class GridMismatch(InputError):
    pass


# measures
class ProfileTooShort(InputError):
    pass


class BadWindow(InputError):
    pass


class CategoryMismatch(InputError):
    pass


# rashomon
class UnknownExplicitId(InputError):
    pass


class BundleIncomplete(InputError):
    def __init__(self, model_id: str):
        super().__init__(f"no profiles for model {model_id!r}")
        self.model_id = model_id


# scenarios
class UnknownScenario(InputError):
    pass


# cli
class MissingRunDirectory(InputError):
    pass
