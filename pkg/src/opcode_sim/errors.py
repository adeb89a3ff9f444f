"""Exception hierarchy shared by all modules."""

from typing import Optional


class OpcodeSimError(Exception):
    """Base class for every error raised by opcode-sim."""

    exit_code: int = 3

    def to_record(self) -> dict:
        """Machine-readable form used by the CLI error output."""
        return {
            "error": type(self).__name__,
            "message": str(self),
            "exit_code": self.exit_code,
        }


class UsageError(OpcodeSimError):
    """Invalid flags or missing inputs."""

    exit_code = 1


class ParseError(OpcodeSimError):
    """Input could not be read into the domain model."""

    exit_code = 2


class ComputationError(OpcodeSimError):
    """A feature, distance, mutation or classification step failed."""

    exit_code = 3


# Parsing

class ListingSyntaxError(ParseError):
    """Malformed line in an assembly listing."""

    def __init__(self, line: int, reason: str, source: Optional[str] = None):
        self.line = line
        self.reason = reason
        self.source = source
        where = f"{source}:{line}" if source else f"line {line}"
        super().__init__(f"{where}: {reason}")

    def to_record(self) -> dict:
        record = super().to_record()
        record["line"] = self.line
        record["reason"] = self.reason
        return record


class DuplicateSubroutine(ListingSyntaxError):
    """A `proc` name appears twice in one listing."""


class OrphanInstruction(ListingSyntaxError):
    """An instruction appears outside any proc/endp block."""


class EmptyListing(ParseError):
    """The listing contains no subroutine at all."""


class CacheFormatError(ParseError):
    """A histogram cache document is malformed."""


# Features and distances

class EmptySubroutine(ComputationError):
    """Histogram requested for a subroutine with no instructions."""


class ZeroMass(ComputationError):
    """Normalization of a histogram whose counts sum to zero."""


class NoFeatures(ComputationError):
    """Every subroutine of a program is empty."""


class KindMismatch(ComputationError):
    """A raw histogram was passed where a normalized one is required."""


class EmptySet(ComputationError):
    """A histogram set without histograms was compared."""


class DuplicateId(ComputationError):
    """Two programs in one matrix share an id."""


class TooFewPrograms(ComputationError):
    """A distance matrix needs at least two programs."""


# Mutation

class InvalidPermutation(ComputationError):
    """Register mapping is not a bijection or touches esp."""


class EmptyRulebook(ComputationError):
    """Substitution requested with no rules."""


class InvalidRule(ComputationError):
    """Substitution rule with unbound placeholders or a bad template."""


# Classification

class InvalidMatrix(ComputationError):
    """Distance matrix is not symmetric or has a nonzero diagonal."""


class InvalidLabels(ComputationError):
    """Family labels do not cover the matrix or name fewer than two families."""
