"""Exception types shared across the package.

Every operation raises one of these instead of bare ValueError so callers
(and the CLI exit-code mapping) can tell input problems from compile
problems apart.
"""


class PerceptError(Exception):
    """Base class for all errors raised by this package."""


# -- coordinate / grid ------------------------------------------------------

class OutOfBounds(PerceptError):
    """Pixel coordinate outside the image domain."""


class GridTooFine(PerceptError):
    """Requested grid order exceeds the image's smaller dimension."""


class InvalidGrid(PerceptError):
    """Grid order below 1."""


class IndexOutOfRange(PerceptError):
    """Cell index outside [0, rows*cols)."""


# -- compilers --------------------------------------------------------------

class NonFiniteValue(PerceptError):
    """NaN or infinity in a field that must be finite."""


class OutOfRangeDepth(PerceptError):
    """Depth value outside [0, 1]."""


class EmptyInput(PerceptError):
    """Operation requires at least one element."""


class DimsMismatch(PerceptError):
    """Image/raster dimensions disagree where they must match."""


class StripTooWide(PerceptError):
    """Edge strip width exceeds the candidate raster."""


class DuplicateLabel(PerceptError):
    """Labels must be unique within one input set."""


# -- image metrics ----------------------------------------------------------

class ShapeMismatch(PerceptError):
    """Strips being compared do not share the same shape."""


# -- serializer -------------------------------------------------------------

class InvalidProgram(PerceptError):
    """Program failed validation before serialization."""


class ParseError(PerceptError):
    """Program text rejected; carries line/column when known."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" at line {line}" + (f", column {column}" if column is not None else "")
        super().__init__(f"{message}{where}")


# -- ingestion --------------------------------------------------------------

class IngestError(PerceptError):
    """Base class for file-reading failures."""


class UnsupportedFormat(IngestError):
    pass


class CorruptFile(IngestError):
    pass


class BadMagic(IngestError):
    pass


class TruncatedFile(IngestError):
    pass


class FileTooLarge(IngestError):
    pass


class SchemaViolation(IngestError):
    """JSON document violates an ingestion schema; carries a JSON pointer."""

    def __init__(self, message, pointer=""):
        self.pointer = pointer
        super().__init__(f"{message} (at {pointer or '/'})")


# -- solvers / metrics ------------------------------------------------------

class MissingGrid(PerceptError):
    pass


class PointOutsideGrid(PerceptError):
    pass


class TieVote(PerceptError):
    pass


class WrongModality(PerceptError):
    pass


class MissingRef(PerceptError):
    pass


class MissingItems(PerceptError):
    pass


class MissingReadout(PerceptError):
    pass


class NoDetections(PerceptError):
    pass


class IdSetMismatch(PerceptError):
    pass


class TooFewItems(PerceptError):
    pass


class LengthMismatch(PerceptError):
    pass


class MissingKey(PerceptError):
    pass


# -- llm harness ------------------------------------------------------------

class MissingTemplate(PerceptError):
    pass


class AttachmentTooLarge(PerceptError):
    pass


class AuthFailure(PerceptError):
    pass


class ExhaustedRetries(PerceptError):
    pass


class MalformedResponse(PerceptError):
    pass
