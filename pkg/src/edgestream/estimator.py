"""scikit-learn style wrapper around the streaming colorer."""

from __future__ import annotations

from fractions import Fraction

import numpy as np
from sklearn.base import BaseEstimator

from .pipeline import ColoringConfig, color_edges

__all__ = ["StreamEdgeColorer"]


class StreamEdgeColorer(BaseEstimator):
    """Edge coloring as a transductive estimator.

    ``fit(X)`` takes an (m, 2) integer array of edges in arrival order and stores
    one color label per edge in ``labels_`` (dense integers in order of first
    use).  The structured colors are kept in ``colors_``.  There is no ``predict``
    for unseen edges, in the same way clustering estimators without an inductive
    rule only offer ``fit_predict``.
    """

    def __init__(self, mode="rand", epsilon=0.5, seed=0, batch_size=None, multigraph=False,
                 force_det_path=False, det_lambda=None, instrument=False, memory_factor=8.0,
                 max_depth=None, n_vertices=None, max_degree=None):
        self.mode = mode
        self.epsilon = epsilon
        self.seed = seed
        self.batch_size = batch_size
        self.multigraph = multigraph
        self.force_det_path = force_det_path
        self.det_lambda = det_lambda
        self.instrument = instrument
        self.memory_factor = memory_factor
        self.max_depth = max_depth
        self.n_vertices = n_vertices
        self.max_degree = max_degree

    def _config(self) -> ColoringConfig:
        return ColoringConfig(
            mode=self.mode, epsilon=Fraction(self.epsilon), seed=self.seed,
            batch_size=self.batch_size, multigraph=self.multigraph,
            force_det_path=self.force_det_path, det_lambda=self.det_lambda,
            instrument=self.instrument, memory_factor=self.memory_factor, max_depth=self.max_depth)

    def fit(self, X, y=None):
        edges = np.asarray(X)
        if edges.ndim != 2 or edges.shape[1] != 2:
            raise ValueError(f"expected an (m, 2) edge array, got shape {edges.shape}")
        if edges.size and not np.issubdtype(edges.dtype, np.integer):
            raise ValueError("edge endpoints must be integers")
        if edges.size and edges.min() < 0:
            raise ValueError("vertex ids must be non-negative")
        n = self.n_vertices if self.n_vertices is not None else (int(edges.max()) + 1 if edges.size else 1)
        final, stats = color_edges(map(tuple, edges.tolist()), n, self._config(),
                                   delta=self.max_degree, m=len(edges))
        self.colors_ = [final[i] for i in range(len(edges))]
        index: dict = {}
        self.labels_ = np.array([index.setdefault(c, len(index)) for c in self.colors_], dtype=np.int64)
        self.n_colors_ = len(index)
        self.stats_ = stats
        self.n_vertices_ = n
        return self

    def fit_predict(self, X, y=None):
        return self.fit(X).labels_
