"""Age-based spatial preferential attachment networks and their local limit.

A simulator for the growing network on the torus, an exact sampler for the
neighborhood of a typical vertex in the infinite limit graph, empirical
network statistics, and an independent analytic layer reproducing every
closed-form limit law for validation.
"""

from .geometry import Space, Vertex, torus_distance, rescale_vertex, wrap_position
from .graph import Graph, export_text, palm_recenter, parse_text, rescale_graph
from .growth import derive_seed, simulate
from .kernel import (
    CustomProfile,
    EdgeCoinSource,
    IndicatorProfile,
    ModelParams,
    PolynomialProfile,
    Profile,
    connection_probability,
    format_profile,
    kernel_argument,
    normalization_by_quadrature,
    normalization_constant,
    parse_profile,
    unit_ball_volume,
)
from .palm import (
    NeighborhoodSample,
    estimate_average_clustering,
    estimate_local_clustering,
    pair_connect_probability,
    sample_neighborhood,
    sample_older,
    sample_younger,
)

__version__ = "0.1.0"
