"""Exception hierarchy shared by the protocols, the harness and the CLI."""

from __future__ import annotations


class CommLearnError(Exception):
    """Base class for every error raised by commlearn."""


class EmptyInput(CommLearnError):
    """An operation received no points."""


class NotSeparable(CommLearnError):
    """Two labelled point sets cannot be split by a halfplane."""


class InvalidChord(CommLearnError):
    """A projection chord does not join two distinct hull vertices."""


class NoUncertainPoints(CommLearnError):
    """A median was requested over zero total weight."""


class AmbiguousWitness(CommLearnError):
    """A witness pair leaves both sub-intervals of a direction interval feasible."""


class EmptyFeasible(CommLearnError):
    """No direction survives a witness cut; the data was not separable."""


class DimMismatch(CommLearnError):
    """A hypothesis and a dataset disagree on dimension."""


class NotRealizable(CommLearnError):
    """No zero-error hypothesis of the requested family exists."""


class TooLarge(CommLearnError):
    """An exhaustive oracle was asked to search an oversized instance."""


class RoundCapExceeded(CommLearnError):
    """A two-party protocol ran past its round cap."""


class EpochCapExceeded(CommLearnError):
    """A k-party two-way protocol ran past its epoch cap."""


class ConstructionFailed(CommLearnError):
    """A generator could not produce an instance meeting its self-checks."""


class ConfigError(CommLearnError):
    """A configuration file or flag combination is invalid."""
