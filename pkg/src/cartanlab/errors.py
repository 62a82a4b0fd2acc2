"""Exception taxonomy for cartanlab.

Every failure mode that callers are expected to catch has its own class;
all inherit from :class:`CartanLabError` so a bare ``except CartanLabError``
catches any domain failure without swallowing programming errors.
"""


class CartanLabError(Exception):
    """Base class for all cartanlab domain errors."""


class NonCommuting(CartanLabError):
    """Generator matrices do not commute in exact integer arithmetic."""


class NotCartanEligible(CartanLabError):
    """A matrix lacks distinct real eigenvalues, or an element is not hyperbolic."""


class ProportionalExponents(CartanLabError):
    """Two Lyapunov functionals are proportional (degenerate rank-one spectrum)."""


class IncompleteEnumeration(CartanLabError):
    """Chamber scan found fewer than 2^(k+1)-2 realizable sign patterns."""


class MissingChamber(CartanLabError):
    """A requested sign pattern is not present in the arrangement."""


class Infeasible(CartanLabError):
    """No strictly positive scaling makes the chamber elements sum to zero."""


class NoConvergence(CartanLabError):
    """An iterative solver (Newton inversion, direction iteration) failed to converge."""


class WordTooLong(CartanLabError):
    """Requested action element exceeds the configured maximum word length."""


class NoContraction(CartanLabError):
    """The linear part is not hyperbolic, so the Franks iteration cannot contract."""


class StalledResidual(CartanLabError):
    """Semiconjugacy residual plateaued above tolerance (interpolation floor)."""


class DegenerateQR(CartanLabError):
    """A QR step collapsed (vanishing column norm); signals eigenvalue collision."""


class TailNotBounded(CartanLabError):
    """Density product tail could not be bounded (contraction rate estimate failed)."""


class NonMonotoneChart(CartanLabError):
    """Chart values are not strictly monotone; the leaf density is not positive."""


class ConfigError(CartanLabError):
    """Experiment configuration failed schema validation."""


class UnknownPreset(CartanLabError):
    """Requested preset name is not registered."""
