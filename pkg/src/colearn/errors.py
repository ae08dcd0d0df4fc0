"""Exception hierarchy shared by every module.

The CLI maps these onto process exit codes (see ``colearn.cli``).
"""


class ColearnError(Exception):
    """Base class for all library errors."""


class InvalidInputError(ColearnError, ValueError):
    """Malformed or out-of-range input (exit code 2)."""


class DomainMismatchError(InvalidInputError):
    """A hypothesis or dataset refers to points outside the instance space."""


class CapacityError(ColearnError):
    """The requested operation exceeds a documented desk-scale cap (exit code 3)."""


class RefutabilityViolation(ColearnError):
    """Merging an independent set failed: the class is not 2-refutable on this data.

    ``witness`` carries the unrealizable pair found by the refutation search,
    or ``None`` when no pair explains the inconsistency.
    """

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class NotTwoRefutable(ColearnError):
    """An unrealizable dataset with no unrealizable 2-example subset."""

    def __init__(self, dataset):
        super().__init__(f"unrealizable dataset of size {len(dataset)} has no refuting pair")
        self.dataset = dataset


class PromiseViolation(ColearnError):
    """A coloring promise (k-colorability) was found to be false (exit code 4)."""
