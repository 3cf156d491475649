"""Exception types shared across the package."""

from __future__ import annotations


class PlanmatchError(Exception):
    """Base class for all errors raised by this package."""


class MalformedNumber(PlanmatchError):
    """A numeric literal does not match the accepted grammar."""


class MalformedTree(PlanmatchError):
    """The plan-text tree section cannot be resolved into a plan."""


class SchemaViolation(PlanmatchError):
    """A structured document does not match its schema.

    ``path`` points at the offending field, e.g. ``pops[2].popProperties[0].sign``.
    """

    def __init__(self, message: str, path: str = "$"):
        super().__init__(f"{path}: {message}")
        self.path = path


class DanglingReference(PlanmatchError):
    """A pattern relationship references a node ID that does not exist."""


class InconsistentInverse(PlanmatchError):
    """A child's hasOutputStream entry contradicts the parent-side relation."""


class UnknownResource(PlanmatchError):
    """A resource URI is not present in the graph's origin map."""


class PatternValidationError(PlanmatchError):
    """A pattern failed validation; carries the validator diagnostics."""

    def __init__(self, diagnostics):
        super().__init__("; ".join(str(d) for d in diagnostics))
        self.diagnostics = list(diagnostics)


class TemplateSyntax(PlanmatchError):
    """Recommendation template text failed to parse."""

    def __init__(self, message: str, position: int, expected: str = ""):
        detail = f"at offset {position}: {message}"
        if expected:
            detail += f" (expected {expected})"
        super().__init__(detail)
        self.position = position
        self.expected = expected


class UnknownAlias(PlanmatchError):
    """A template token names no returned node of its pattern."""


class MissingDetail(PlanmatchError):
    """listColumns was applied to an operator lacking the detail key."""


class IoFailure(PlanmatchError):
    """Reading or writing a knowledge-base file failed."""


class CorruptKb(PlanmatchError):
    """A knowledge-base file failed its checksum or schema check."""


class NoValidPlans(PlanmatchError):
    """Workload ingestion produced no usable plans."""


class InfeasibleEmbedding(PlanmatchError):
    """The synthetic generator cannot honour the requested embeddings."""


class TooLarge(PlanmatchError):
    """The brute-force oracle refused an input above its size guard."""


class BindFailure(PlanmatchError):
    """The HTTP service could not bind its address."""
