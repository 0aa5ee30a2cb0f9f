"""Consensus and opinion-cluster simulation for networked agents whose
opinions are Dempster-Shafer bodies of evidence, updated by conditional
belief mixing under bounded confidence."""

from .dst import (
    BodyOfEvidence,
    Frame,
    belief_table,
    boe_from_dict,
    boe_to_dict,
    jaccard_matrix,
    jousselme_distance,
    mass_table,
    masses_from_beliefs,
    pairwise_jousselme,
    prop_from_indices,
    prop_from_str,
    prop_to_str,
    validate,
    validate_masses,
)
from .graph import (
    DirectedGraph,
    PrunedView,
    erdos_renyi,
    erdos_renyi_connected,
    in_component,
    is_connected,
    neighbors,
    out_component,
    prune,
)
from .dynamics import (
    AgentSpec,
    ConfidenceMatrix,
    NetworkState,
    Strategy,
    dirichlet_confidence_matrix,
    dirichlet_step,
    general_step,
    opinion_profile,
    pmf_confidence_matrix,
    pmf_step,
    singleton_profiles,
    update_weights,
)
from .analysis import (
    ClusterReport,
    DrivenChain,
    LeftProduct,
    check_consensus_rank_one,
    classify_chain,
    detect_clusters,
    detect_convergence,
    infinity_norm,
    left_product_accumulate,
    verify_one_group_chain,
    verify_two_group_chain,
)
from .scenario import Scenario, SamplingSpec, list_assets, load_scenario, sample_boe
from .runner import BifurcationResult, RunResult, run_simulation, run_sweep

__version__ = "0.1.0"
