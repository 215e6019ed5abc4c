"""Root clustering by semialgebraic stability regions.

Classify polynomials and matrices by root location relative to a stability
region, compute the topology of the resulting strata, build adjacency
digraphs, scan affine families into D-decomposition maps and test boundary
curves for symbolic invariance.
"""
from .adjacency import (
    Digraph,
    FlowWitness,
    MultisetVertex,
    adjacent_flow,
    base_adjacency,
    brute_force_adjacent,
    dot_export,
    local_adjacency,
    local_base_digraph,
    sym_product_digraph,
    validate_local_digraph,
    validate_theory_digraph,
)
from .curves import (
    BivarPoly,
    classify_standard,
    conj_transform,
    inv_transform,
    is_invariant,
    orbit_polynomial,
    palindrome_test,
    palindromic_family,
    radial_coefficients,
)
from .ddecomp import (
    AffineFamily,
    DecompositionMap,
    MatrixFamily,
    evaluate_family,
    export,
    extract_regions,
    scan,
)
from .polys import (
    ComplexPoly,
    RootMultiset,
    StabilityIndex,
    char_poly,
    companion_matrix,
    duality_check,
    find_roots,
    perturb_monic,
    perturb_nonmonic,
    roots_to_coeffs,
    stability_index,
)
from .regions import (
    RegionExpr,
    StabilityTheory,
    StratumKind,
    StratumTopologySample,
    TopologyTriple,
    builtin_theory,
    classify_point,
    dualize,
    estimate_stratum_topology,
    eval_membership,
    load_theory,
    validate_theory,
)
from .topology import (
    ComponentSpec,
    GroupDescriptor,
    HomotopyExpr,
    betti,
    component_count,
    enumerate_components,
    fundamental_group,
    homeomorphism_type_circle_boundary,
    homotopy_type,
    local_stratum_info,
    poincare_series_oracle,
    pole_placement_poset,
)

__version__ = "0.1.0"
