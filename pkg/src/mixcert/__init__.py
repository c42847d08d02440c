"""Small-set bipartite density certification and random-walk mixing analysis
for regular graphs."""

from .construct import (
    PlantedInstance,
    bipartite_regular,
    planted_expander,
    planted_ssve,
    random_regular,
    verify_claims,
)
from .density import (
    DensityCertificate,
    MinimalWitness,
    certify_exact,
    min_conductance_exact,
    minimize_witness,
    search_witness,
)
from .graph import (
    RegularGraph,
    SetPair,
    VertexSet,
    build_graph,
    conductance_of_cut,
    density_surplus,
    edge_boundary,
    make_pair,
    neighbor_set,
    ordered_edge_count,
    read_edge_list,
    vertex_boundary,
    write_edge_list,
)
from .spectral import (
    SpectralSummary,
    alon_boppana_ref,
    cheeger_check,
    eml_check,
    spectrum,
    tanner_bound,
)
from .walk import (
    MixingEstimate,
    WalkTrace,
    l2_decrease_audit,
    lower_bound_audit,
    mixing_time,
    step,
    submultiplicativity_audit,
    trace_walk,
    variation_distance,
)

__version__ = "0.1.0"
