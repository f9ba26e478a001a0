"""Exception hierarchy shared by all branchsite modules."""

from __future__ import annotations


class BranchSiteError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(BranchSiteError):
    """A geometric or numeric precondition was violated (bad coordinates,
    degenerate polygon, empty feature index, ...)."""


class SpecificationError(BranchSiteError):
    """A criterion specification is malformed or cannot be normalized."""


class InputError(BranchSiteError):
    """Input data (layers, features, ids, matrices) violates a contract."""


class ConfigError(BranchSiteError):
    """The project configuration is invalid or references missing files."""


class GateError(ConfigError):
    """A pairwise comparison matrix failed the consistency-ratio gate."""

    def __init__(self, failures):
        self.failures = tuple(failures)  # (matrix_id, cr) pairs
        detail = "; ".join(f"{mid}: CR={cr:.4f}" for mid, cr in self.failures)
        super().__init__(f"consistency gate failed for: {detail}")


class NumericalError(BranchSiteError):
    """An iterative numeric procedure failed to converge."""


class SolverRefused(BranchSiteError):
    """The exact solver refused an instance above its size cap."""


class StageError(BranchSiteError):
    """A pipeline stage failed; wraps the causing error with the stage name."""

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"pipeline stage '{stage}' failed: {cause}")
