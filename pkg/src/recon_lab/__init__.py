"""Semi-random graph perturbation lab.

Samples graphs with per-pair edge probabilities, applies constrained
adversarial perturbations, decides the subgraph uniqueness/asymmetry events
behind deck reconstruction, reconstructs graphs from hypomorphisms, evaluates
the closed-form tail bounds, and verifies the probabilistic claims at desk
scale through a seeded Monte Carlo harness.
"""

__version__ = "0.1.0"

from .graph_core import (
    BALL_CAP,
    BALL_CAP_TOTAL,
    EditSet,
    Graph,
    ResourceCapError,
    VertexPair,
    apply_edits,
    enumerate_ball,
    enumerate_radius_ball,
    from_graph6,
    induced_subgraph,
    pair_count,
    pair_index,
    pair_of_index,
    to_graph6,
)
from .isomorphism import (
    Certificate,
    VertexMap,
    automorphism_generators,
    automorphisms,
    are_similar,
    canonical_form,
    find_isomorphism,
    find_nontrivial_automorphism,
    is_asymmetric,
    is_fixed_set,
    verify_map,
)
from .sampling import (
    EdgeProbabilities,
    SeedSpec,
    expected_distinct,
    sample_edit_subset,
    sample_edit_tuple,
    sample_graph,
    uniform_box_probabilities,
)
from .events import (
    EventResult,
    EventWitness,
    check_event,
    check_event_ball,
    check_event_collection,
    check_event_radius,
    exact_event_failure_probability,
)
from .reconstruction import (
    Deck,
    Hypomorphism,
    deck,
    delete_vertex,
    find_hypomorphism,
    iso_class_representatives,
    reconstruct_two_anchor,
    unique_asymmetric_pair,
    verify_reconstructibility_exhaustive,
)
from .bounds import (
    BoundParams,
    InjectionCensus,
    OrbitStats,
    UnionBoundTerms,
    eps_prime,
    f_bound,
    injection_census,
    minimal_alpha,
    na_orbit_events_exact,
    orbit_stats,
    paley_zygmund_floor,
    subset_containment_bound,
    tuple_containment_joint,
    tuple_membership_probability,
    union_bound_failure,
    union_bound_threshold_n,
)
from .harness import (
    ExperimentConfig,
    TrialRecord,
    clopper_pearson,
    replay,
    run_experiment,
    summarize,
    summarize_rows,
)
