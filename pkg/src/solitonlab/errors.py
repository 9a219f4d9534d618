"""Exception hierarchy shared by all solitonlab modules."""


class SolitonLabError(Exception):
    """Base class for every error raised by this package."""


class ConfigInvalid(SolitonLabError):
    """Configuration file failed validation; message carries field names."""


class GridMismatch(SolitonLabError):
    """Two fields built on different grids were combined."""


class NonFiniteInput(SolitonLabError):
    """An operation received NaN/inf samples."""


class NewtonDiverged(SolitonLabError):
    """Newton iteration failed to converge."""


class NegativeSolution(SolitonLabError):
    """Newton converged to a sign-indefinite profile (not a ground state)."""


class SingularSystem(SolitonLabError):
    """Linear system is numerically singular (degenerate branch point)."""


class TailTooShort(SolitonLabError):
    """Not enough tail points for a decay-rate fit."""


class GapEmpty(SolitonLabError):
    """No internal mode found inside the spectral gap."""


class EmbeddedMode(SolitonLabError):
    """Internal-mode candidate sits on or beyond the essential spectrum."""


class DegeneratePairing(SolitonLabError):
    """delta'(lambda) or <xi,eta> too small to build projections."""


class IllConditioned(SolitonLabError):
    """A discretized operator failed its conditioning self-test."""


class SolveFailed(SolitonLabError):
    """Linear solver stagnated or back-substitution residual too large."""


class SpectralPointOnDiscrete(SolitonLabError):
    """Resolvent requested at a discrete eigenvalue without projection."""


class ExtrapolationUnstable(SolitonLabError):
    """Limiting-absorption extrapolation estimates disagree too much."""


class BlowupDetected(SolitonLabError):
    """Sup norm of the evolving field exceeded the blow-up guard."""


class NonFiniteState(SolitonLabError):
    """Time integration produced NaN/inf."""


class WindowTooShort(SolitonLabError):
    """Requested fit window contains too few samples."""


class ZeroMass(SolitonLabError):
    """Observables requested for a field with (near-)zero mass."""


class BranchExhausted(SolitonLabError):
    """Tracked lambda left the interval covered by the stored branch."""


class IllConditionedRegression(SolitonLabError):
    """Regression design matrix is numerically collinear."""


class SmallDenominator(SolitonLabError):
    """Normal-form denominator |m-n-1|*epsilon below tolerance."""


class NotDecaying(SolitonLabError):
    """Riccati fit requested on a non-decaying envelope."""


class NonConvergent(SolitonLabError):
    """lambda(t) shows no sign of convergence on the fit window."""


class NoOscillation(SolitonLabError):
    """Center coordinate has too few oscillation periods to fit."""


class MissingArtifact(SolitonLabError):
    """Report generation could not find a required input file."""
