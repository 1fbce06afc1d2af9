"""Kernel evaluation and Gram-matrix construction.

Everything downstream (window maintenance, classifiers, model selection)
funnels its kernel arithmetic through this module, so the functions here are
deliberately strict: they validate shapes, reject non-finite input, and use
``scipy.spatial.distance`` so that ``gram(X, Y)`` and ``gram(Y, X)`` are exact
transposes of each other.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist, pdist, squareform

from .errors import DegenerateDataError, DimensionError, InvalidInputError

RBF = "rbf"


@dataclass(frozen=True)
class KernelSpec:
    """A Mercer kernel. Currently only the Gaussian (RBF) kernel is supported.

    Parameters
    ----------
    kind : str
        Kernel family name. Only ``"rbf"``.
    sigma : float
        Kernel width, in the same units as feature-space distance. Must be > 0.
    """

    kind: str = RBF
    sigma: float = 1.0

    def __post_init__(self):
        if self.kind != RBF:
            raise InvalidInputError(f"unsupported kernel kind: {self.kind!r}")
        if not np.isfinite(self.sigma) or self.sigma <= 0:
            raise InvalidInputError(f"sigma must be a positive finite real, got {self.sigma!r}")

    @property
    def self_similarity(self) -> float:
        """k(x, x); equals 1 for the RBF kernel."""
        return 1.0


def _as_matrix(X, name: str) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2:
        raise DimensionError(f"{name} must be a 2-D sample matrix, got ndim={X.ndim}")
    if not np.isfinite(X).all():
        raise InvalidInputError(f"{name} contains NaN or Inf")
    return X


def eval_kernel(spec: KernelSpec, x, y) -> float:
    """Evaluate k(x, y) = exp(-||x - y||^2 / (2 sigma^2)) for two vectors.

    Raises
    ------
    DimensionError
        If ``x`` and ``y`` differ in length.
    InvalidInputError
        If either vector contains NaN/Inf.
    """
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise DimensionError(f"vector lengths differ: {x.shape[0]} vs {y.shape[0]}")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise InvalidInputError("kernel inputs must be finite")
    d2 = float(np.sum((x - y) ** 2))
    return float(np.exp(-d2 / (2.0 * spec.sigma**2)))


def gram(spec: KernelSpec, X, Y=None) -> np.ndarray:
    """Kernel matrix with entry (i, j) = k(X_i, Y_j).

    With ``Y`` omitted (or equal to ``X``) the symmetric path is used: only
    the upper triangle is computed and mirrored, so the result is exactly
    symmetric with an exact unit diagonal.

    Raises
    ------
    DimensionError
        If ``X`` and ``Y`` disagree on feature dimension.
    """
    X = _as_matrix(X, "X")
    if Y is None:
        Y = X
    symmetric = Y is X
    if not symmetric:
        Y = _as_matrix(Y, "Y")
        if X.shape[1] != Y.shape[1]:
            raise DimensionError(
                f"feature dimensions differ: X has {X.shape[1]}, Y has {Y.shape[1]}"
            )
        symmetric = X.shape == Y.shape and np.array_equal(X, Y)
    denom = 2.0 * spec.sigma**2
    if symmetric:
        d2 = squareform(pdist(X, "sqeuclidean"))
        return np.exp(-d2 / denom)
    return np.exp(-cdist(X, Y, "sqeuclidean") / denom)


def pairwise_distance_range(X) -> tuple[float, float]:
    """Smallest strictly positive and largest pairwise Euclidean distance.

    Zero distances (duplicated rows) are excluded so the returned minimum is
    always usable as a kernel width.

    Raises
    ------
    DegenerateDataError
        If ``X`` has fewer than two rows or all rows are identical.
    """
    X = _as_matrix(X, "X")
    if X.shape[0] < 2:
        raise DegenerateDataError("need at least 2 samples to measure pairwise distances")
    d2 = pdist(X, "sqeuclidean")
    d2 = d2[d2 > 0.0]
    if d2.size == 0:
        raise DegenerateDataError("all samples are identical; pairwise distances are all zero")
    return float(np.sqrt(d2.min())), float(np.sqrt(d2.max()))
