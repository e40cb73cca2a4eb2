"""Exception types shared across the package."""


class PagarLabError(Exception):
    """Base class for all package-specific errors."""


class BudgetExceeded(PagarLabError):
    """Trajectory enumeration exceeded the configured node budget."""


class InfeasibleTrajectory(PagarLabError):
    """A trajectory contains a transition with zero dynamics probability."""


class SolveFailure(PagarLabError):
    """A policy-evaluation linear system was singular beyond tolerance."""


class NonConvergence(PagarLabError):
    """An iterative solver hit its iteration cap before reaching tolerance."""


class EmptyRewardSet(PagarLabError):
    """No member of a reward family passed the IRL-loss membership test."""


class AssumptionViolated(PagarLabError):
    """A policy had constant utility across the reward grid."""


class DegenerateDenominator(PagarLabError):
    """The decision-rule coefficient denominator vanished with nonzero regret."""


class RewardDomainError(PagarLabError):
    """A discriminator value fell outside the open interval (0, 1)."""


class EmptyBatch(PagarLabError):
    """An objective estimator received an empty rollout batch."""


class RatioOverflow(PagarLabError):
    """An importance-sampling ratio exceeded the configured cap."""


class NonFinite(PagarLabError):
    """Training parameters diverged to non-finite values."""


class InfeasibleLP(PagarLabError):
    """The optimal-transport linear program reported infeasibility."""
