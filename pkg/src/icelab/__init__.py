"""icelab: a lattice statistical-mechanics laboratory for ice-type models.

Six-vertex representations (heights, spins, arrows), the random-cluster model
with a modified boundary-cluster weight, the executable coupling between them,
the FK-Ising / double-Ising stack on the self-dual curve, exact desk-scale
oracles for every identity, and seeded MCMC experiment drivers.
"""

from .coupling import (
    CouplingParams,
    UnsupportedRegimeError,
    derive_params,
    is_compatible,
    joint_weight_cluster,
    joint_weight_edge,
    marginal_checks,
    sample_heights_given_rc,
    variance_decomposition_check,
)
from .heights import (
    ArrowConfig,
    HeightFunction,
    ModelParams,
    SpinConfig,
    VertexType,
    arrow_event_A,
    arrows_to_height,
    classify_vertex,
    flat_boundary,
    height_to_arrows,
    height_to_spin,
    height_weight,
    spin_to_height,
    spin_weight,
)
from .lattice import (
    CornerGraph,
    Domain,
    TCircuit,
    boundary_vertex_set,
    build_corner_graphs,
    build_diamond,
    build_domain,
    build_rectangle,
    external_boundary,
    exteriormost_t_circuit,
    parity,
    t_neighbors,
)
from .oracle import (
    ExactMeasure,
    PosetStructure,
    enumerate_heights,
    enumerate_rc,
    fkg_lattice_check,
    pushforward_equality_check,
    stochastic_domination_check,
    transition_matrix,
)
from .random_cluster import (
    ClusterDecomposition,
    EdgeGraph,
    GraphPair,
    RcConfig,
    RcParams,
    anisotropic_critical,
    decompose,
    heat_bath_edge_ratio,
    p_critical,
    rc_weight,
)
from .fk_ising import (
    AtParams,
    FkIsingConfig,
    at_joint_check,
    at_weight,
    enumerate_spins,
    joint_weight_sigma_xi,
    resample_spins_given_xi,
    sample_tau_given_xi_star,
    sample_xi_given_spins,
    sample_xi_star_given_tau,
    selfdual_params,
)
from .samplers import (
    ChainSpec,
    CouplingChain,
    EstimateWithError,
    HeightChain,
    RcChain,
    exactness_gate,
    height_heat_bath_sweep,
    rc_heat_bath_sweep,
    run_chain,
)

__version__ = "0.1.0"
