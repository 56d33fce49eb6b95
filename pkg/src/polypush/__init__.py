"""Radial push-out of closed sets off the partial simplices of a complex."""

from .complex_core import (
    Simplex,
    SimplicialComplex,
    barycentric_coords,
    expand_simplex,
    geometrically_independent,
    incidence,
    opposite_face,
    ray_boundary_intersection,
    simplex_metrics,
    subdivide,
    validate_complex,
)
from .measure import (
    K_constants,
    N_filtrations,
    hausdorff_measure_est,
    lambda_eig,
    magnification_bound,
    phi_constants,
    psi_m,
    select_z0,
)
from .pushout import (
    ConeModel,
    SetModel,
    TransportMap,
    approximate_near,
    cone_build,
    detect_partial_and_rank,
    g_inverse,
    g_map,
    push,
    retract_chain,
    run,
    transport_eval,
)

__all__ = [
    "Simplex", "SimplicialComplex", "barycentric_coords", "expand_simplex",
    "geometrically_independent", "incidence", "opposite_face", "ray_boundary_intersection",
    "simplex_metrics", "subdivide", "validate_complex",
    "K_constants", "N_filtrations", "hausdorff_measure_est", "lambda_eig",
    "magnification_bound", "phi_constants", "psi_m", "select_z0",
    "ConeModel", "SetModel", "TransportMap", "approximate_near", "cone_build",
    "detect_partial_and_rank", "g_inverse", "g_map", "push", "retract_chain", "run",
    "transport_eval",
]

__version__ = "0.1.0"
