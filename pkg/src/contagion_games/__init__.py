"""Two-player competitive contagion on directed networks.

Simulation of seeded spreading processes, exact payoff computation (full
state-space enumeration, layered dynamic programming, replicated-chain forward
passes), pure-equilibrium search with efficiency ratios, coupled-run soundness
checks, and a library of benchmark gadget families with verified predictions.
"""

from .errors import (
    AllocationSpaceCapError,
    CapError,
    ContagionError,
    CouplingHypothesisError,
    DynamicsDefinitionError,
    GraphValidationError,
    ScheduleError,
    StateSpaceCapError,
    ValidationError,
    VerificationFailure,
)
from .graphs import BLUE, RED, UNINFECTED, Graph, load_graph, neighbor_fractions, serialize_graph, state_name
from .dynamics import (
    AdoptionFunction,
    AdditiveViolation,
    BuiltinAdoption,
    CompetitiveViolation,
    Decomposition,
    HalfPointSwitch,
    LayerOrder,
    ParallelRounds,
    PhaseRecord,
    PowerSwitch,
    RandomSequential,
    SelectionFunction,
    SimOutcome,
    SinglePassOrder,
    SwitchSelectAdoption,
    SwitchingFunction,
    TableSelection,
    TableSwitch,
    ThresholdSwitch,
    TullockSelection,
    UpdateSchedule,
    candidate_vertices,
    check_additive,
    check_competitive,
    decompose,
    filter_phase_candidates,
    from_switch_select,
    is_additive,
    is_competitive,
    linear_selection,
    load_dynamics,
    load_schedule,
    realizable_fraction_pairs,
    run_contagion,
)
from .engine import (
    DEFAULT_NODE_CAP,
    DEFAULT_TRIALS,
    EXACT_ENUMERATION,
    EXACT_LAYERED_DP,
    MONTE_CARLO,
    Allocation,
    GameSpec,
    MixedAllocation,
    PayoffEstimate,
    StrategyProfile,
    estimate_payoffs,
    exact_payoffs,
    load_profile,
    resolve_contested_seeds,
    run_profile_once,
)
from .layered import (
    LayeredStructure,
    layered_estimate_payoffs,
    layered_exact_payoffs,
    sample_layered_counts,
    validate_layered_graph,
)
from .equilibrium import (
    DEFAULT_ALLOCATION_CAP,
    DEFAULT_PAIR_CAP,
    DeviationRecord,
    DeviationReport,
    EfficiencyReport,
    JointOptimum,
    NashReport,
    PayoffOracle,
    allocation_count,
    best_response,
    budget_multiplier,
    enumerate_allocations,
    find_pure_nash,
    max_joint_payoff,
    price_of_anarchy,
    verify_profile_deviations,
)
from .coupling import (
    ALL_MODES,
    MODE_ALIASES,
    MODE_ATTRIBUTION,
    MODE_JOINT_TOTAL,
    MODE_SOLO_VS_JOINT,
    AttributionOutcome,
    CoupledAttributionResult,
    CoupledRunResult,
    CoupleTestResult,
    attribution_run,
    canonical_mode,
    check_linear_split,
    couple_test,
    coupled_attribution_run,
    coupled_run,
    require_mode_hypotheses,
)
from .gadgets import (
    GADGET_BUILDERS,
    ChainLayout,
    GadgetSpec,
    GadgetVerification,
    Prediction,
    PredictionRow,
    ProfileCase,
    build_gadget,
    chain_exact_payoffs,
    chain_final_vertex_distribution,
    chain_replication,
    convexity_amplifier,
    influencer_components,
    polarization_amplifier,
    polarization_closed_form_small_final,
    sample_chain_block,
    threshold_two_layer,
    verify_gadget,
)

__version__ = "0.1.0"
