"""Detecting sparse degree corrections in two-block stochastic block models."""
__version__ = "0.1.0"

from .model import (  # noqa: E402
    AdjacencySample,
    CommunityAssignment,
    GraphParams,
    NullMoments,
    ParameterDomainError,
    ThetaVector,
    make_theta,
    sample_graph,
    sample_graph_coupled,
)
from .stats import TestOutcome  # noqa: E402

__all__ = [
    "__version__",
    "AdjacencySample",
    "CommunityAssignment",
    "GraphParams",
    "NullMoments",
    "ParameterDomainError",
    "TestOutcome",
    "ThetaVector",
    "make_theta",
    "sample_graph",
    "sample_graph_coupled",
]
