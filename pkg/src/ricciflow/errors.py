"""Exception types shared across the package."""


class RicciFlowError(Exception):
    """Base class for all package errors."""


class PoleRegularityError(RicciFlowError):
    """|psi_s| at a cap end deviates from 1 beyond tolerance."""


class StepCollapse(RicciFlowError):
    """Stable time step underflowed; singularity handling must take over."""


class StandardBlowUp(RicciFlowError):
    """Standard-solution integration blew up before the requested end time."""


class NotComparable(RicciFlowError):
    """Candidate region lacks a pole; cannot compare against the standard cap."""


class NotClosed(RicciFlowError):
    """Eigenvalue solve requires a closed component (two cap ends)."""


class NotApplicable(RicciFlowError):
    """Point classification queried in a region where it is undefined."""


class DecompositionIncomplete(RicciFlowError):
    """A region could not be assigned to any decomposition piece type."""

    def __init__(self, msg, interval=None):
        super().__init__(msg)
        self.interval = interval


class ResolutionExhausted(RicciFlowError):
    """Cutoff-radius search went below the grid resolution floor."""


class SurgeryImpossible(RicciFlowError):
    """No admissible neck point for surgery was found."""


class GlueRejected(RicciFlowError):
    """Post-glue checks failed; retry with different blend parameters."""


class LedgerCorrupt(RicciFlowError):
    """Topology ledger update produced an inconsistent connected-sum word."""


class InsufficientHistory(RicciFlowError):
    """Not enough snapshots to estimate a time derivative."""
