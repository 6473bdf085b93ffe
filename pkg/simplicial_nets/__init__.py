"""Exact two-hidden-layer networks from simplicial approximations."""

from simplicial_nets.error_analysis import (
    ApproximationReport,
    complexity,
    estimate_extended_mesh,
    estimate_modulus,
    estimate_sup_distance,
    verify_equivalence,
)
from simplicial_nets.network_generator import (
    SynthesizedNetwork,
    forward,
    forward_batch,
    synthesize_network,
)
from simplicial_nets.simplicial_approximation import (
    FunctionSampler,
    VertexMap,
    approximate_function,
    build_vertex_map,
    check_star_condition,
    evaluate_simplicial_map,
)
from simplicial_nets.simplicial_complex import (
    SimplexRef,
    SimplicialComplex,
    barycentric_subdivide,
    build_complex,
    mesh,
)

__version__ = "0.1.0"

__all__ = [
    "ApproximationReport",
    "FunctionSampler",
    "SimplexRef",
    "SimplicialComplex",
    "SynthesizedNetwork",
    "VertexMap",
    "approximate_function",
    "barycentric_subdivide",
    "build_complex",
    "build_vertex_map",
    "check_star_condition",
    "complexity",
    "estimate_extended_mesh",
    "estimate_modulus",
    "estimate_sup_distance",
    "evaluate_simplicial_map",
    "forward",
    "forward_batch",
    "mesh",
    "synthesize_network",
    "verify_equivalence",
]
