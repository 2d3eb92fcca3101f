"""Beta-posterior edge masks for explaining small graph neural networks."""

from ._kernels import available_backends, backend_name
from .graphs import (EdgeMask, Graph, GroundTruth, KhopResult, LabelVector,
                     build_graph, induce_subgraph, khop_subgraph)

__version__ = "0.1.0"

__all__ = [
    "EdgeMask",
    "Graph",
    "GroundTruth",
    "KhopResult",
    "LabelVector",
    "available_backends",
    "backend_name",
    "build_graph",
    "induce_subgraph",
    "khop_subgraph",
    "__version__",
]
