"""PAGAR lab: adversarial reward design and imitation learning on small MDPs.

A library plus CLI for reward-design games on exactly solvable MDPs:
maximum-entropy IRL losses and delta-optimal reward sets, the protagonist /
antagonist minimax-regret game with its mixed-reward decision rule,
task-reward alignment analysis, exact verification of the advantage-based
regret bounds, and tabular adversarial imitation trainers.
"""

__version__ = "0.1.0"

from .mdp import (
    DemonstrationSet,
    Mdp,
    RewardFunction,
    TabularPolicy,
    Trajectory,
    demo_average_return,
    enumerate_trajectories,
    event_probability,
    trajectory_probability,
    trajectory_return,
)
from .solvers import (
    SoftSolution,
    Visitation,
    entropy,
    soft_policy_evaluation,
    solve_soft,
    solve_standard,
    standard_policy_evaluation,
    utility,
    visitation,
)
from .irl import (
    IrlLossKind,
    RewardFamily,
    RewardSet,
    delta_star,
    gan_reward_from_discriminator,
    in_reward_set,
    irl_loss,
)
from .game import (
    DecisionRule,
    ParametricPolicySpace,
    RegretReport,
    StandardUtility,
    TabularPolicySpace,
    WindowedUtility,
    build_decision_rule,
    max_regret,
    minimax_regret,
    mixed_utility,
    regret,
    simplex_policy_grid,
)
from .alignment import (
    AlignmentResult,
    BoundReport,
    CustomPredicate,
    GuaranteeReport,
    VisitThreshold,
    WassersteinReport,
    check_guarantee_conditions,
    classify_alignment,
    domination,
    verify_bounds,
    wasserstein1,
    wasserstein_to_expert,
)
from .training import (
    GameState,
    ObjectiveEstimate,
    RolloutBatch,
    TrainConfig,
    estimate_objectives,
    train_gail_pagar,
    train_pagar,
    update_lambda,
)

__all__ = [
    "AlignmentResult", "BoundReport", "CustomPredicate", "DecisionRule",
    "DemonstrationSet", "GameState", "GuaranteeReport", "IrlLossKind", "Mdp",
    "ObjectiveEstimate", "ParametricPolicySpace", "RegretReport",
    "RewardFamily", "RewardFunction", "RewardSet", "RolloutBatch",
    "SoftSolution", "StandardUtility", "TabularPolicy", "TabularPolicySpace",
    "TrainConfig", "Trajectory", "VisitThreshold", "Visitation",
    "WassersteinReport", "WindowedUtility", "build_decision_rule",
    "check_guarantee_conditions", "classify_alignment", "delta_star",
    "demo_average_return", "domination", "entropy", "enumerate_trajectories",
    "estimate_objectives", "event_probability",
    "gan_reward_from_discriminator", "in_reward_set", "irl_loss",
    "max_regret", "minimax_regret", "mixed_utility", "regret",
    "simplex_policy_grid", "soft_policy_evaluation", "solve_soft",
    "solve_standard", "standard_policy_evaluation", "train_gail_pagar",
    "train_pagar", "trajectory_probability", "trajectory_return",
    "update_lambda", "utility", "verify_bounds", "visitation",
    "wasserstein1", "wasserstein_to_expert", "__version__",
]
