"""Streaming edge coloring with batch forests, expander palettes and a verification harness."""

from .estimator import StreamEdgeColorer
from .generators import GenSpec, generate
from .pipeline import ColoringConfig, RunStats, StreamColorer, color_edges, run_pipeline
from .stream import ColorId

__all__ = [
    "ColorId",
    "ColoringConfig",
    "GenSpec",
    "RunStats",
    "StreamColorer",
    "StreamEdgeColorer",
    "color_edges",
    "generate",
    "run_pipeline",
]

__version__ = "0.1.0"
