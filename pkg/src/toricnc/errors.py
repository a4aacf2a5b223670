"""Exception hierarchy.

``ValidationError`` subclasses signal a malformed or inconsistent input
object; the CLI maps them to exit code 1.  ``ParseError`` maps to exit code 2.
"""

from __future__ import annotations


class ToricError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(ToricError):
    pass


class ParseError(ToricError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(where + message)


class InvariantBreach(ToricError):
    """An internal consistency check failed; indicates a bug."""


class DimensionMismatch(ValidationError):
    pass


class Inconsistent(ValidationError):
    """Linear system has no solution."""


class InvalidGenerator(ValidationError):
    pass


class AlgebraMismatch(ValidationError):
    pass


class DegreeMismatch(ValidationError):
    pass


class InhomogeneousRelation(ValidationError):
    def __init__(self, index: int, message: str = ""):
        self.index = index
        super().__init__(message or f"relation {index} is not homogeneous")


class MissingInverseRelation(ValidationError):
    pass


class DeformationMismatch(ValidationError):
    pass


class MorphismSourceMismatch(ValidationError):
    pass


class NotCoinvariant(ValidationError):
    def __init__(self, message: str = "element is not coinvariant", index: int | None = None):
        self.index = index
        super().__init__(message)


class ZeroElement(ValidationError):
    pass


class DegreeViolation(ValidationError):
    def __init__(self, index: int, message: str = ""):
        self.index = index
        super().__init__(message or f"image of generator {index} has the wrong degree")


class RelationViolation(ValidationError):
    def __init__(self, index: int, residue=None):
        self.index = index
        self.residue = residue
        super().__init__(f"relation {index} is not preserved (residue {residue})")


class CompositionMismatch(ValidationError):
    pass


class PartitionOfUnityFails(ValidationError):
    def __init__(self, residue):
        self.residue = residue
        super().__init__(f"sum of witnesses times elements minus 1 reduces to {residue}")


class IndexOutOfRange(ValidationError):
    pass


class NotMatching(ValidationError):
    pass


class NoSolutionAtCap(ValidationError):
    pass


class AmbiguousAtCap(ValidationError):
    pass


class StageMismatch(ValidationError):
    pass


class NotPointed(ValidationError):
    pass


class LeibnizViolation(ValidationError):
    def __init__(self, index: int, residue=None):
        self.index = index
        self.residue = residue
        super().__init__(f"Leibniz extension does not annihilate relation {index} (residue {residue})")


class DegreeError(ValidationError):
    pass


class UnknownCommand(ValidationError):
    pass
