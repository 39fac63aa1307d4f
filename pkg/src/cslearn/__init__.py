"""cslearn: learn hidden coalition structures by designing games.

A population of agents hides a set partition: agents in one block coordinate
and pool utility. Each round we present a game plus a specified strategy
profile and observe, per agent, whether their coalition's joint best response
would move them. The library provides the game gadgets, the observation
oracle (closed-form rules plus an exhaustive reference), five learning
algorithms with provable round budgets, and a verified experiment harness.
"""

from .core import (
    FAMILIES,
    BoundsReport,
    CoalitionStructure,
    bell_number,
    bounds_report,
    ceil_log2,
    floor_log2,
    graphical_round_lower_bound,
    info_lower_bound,
    iter_partitions,
    upper_bound,
)
from .games import (
    AuctionGame,
    BraessFactor,
    CongestionGame,
    FactoredNormalFormGame,
    GraphicalGameView,
    PrisonerDilemmaFactor,
    StrategySpace,
    all_pairs_braess,
    all_pairs_game,
    auction_gadget,
    braess,
    braess_product,
    classify_auction,
    first_move_game,
    game_from_json,
    game_key,
    game_to_json,
    graphical_view,
    prisoner_dilemma,
    product,
)
from .oracle import (
    AdversaryPolicy,
    HiddenOracle,
    Observation,
    Transcript,
    TranscriptRecord,
    admissible_observations,
    brute_force_admissible_observations,
    brute_force_observe,
    observe_auction,
    observe_braess,
    observe_factored,
    stable_hash,
)
from .learners import (
    LearnerReport,
    VerificationResult,
    learn_auction_bitwise,
    learn_auction_iterative,
    learn_congestion,
    learn_graphical,
    learn_normal_form,
    run_learner,
    verify_report,
)
from .harness import (
    CampaignError,
    CampaignResult,
    CampaignRow,
    ExperimentConfig,
    TruthModel,
    chinese_restaurant_partition,
    emit,
    max_coalition_partition,
    random_partition,
    render_csv,
    report_to_json,
    run_campaign,
)

__version__ = "0.1.0"
