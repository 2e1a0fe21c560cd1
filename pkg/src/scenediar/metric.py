"""Within-speaker covariance and the Mahalanobis metric it induces."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Iterable, Optional

import numpy as np

from .core import StructureError


@dataclass(frozen=True, eq=False)
class CovarianceModel:
    """Within-class covariance ``matrix`` and its regularised inverse square root.

    ``whitener @ (matrix + epsilon * I) @ whitener.T`` is the identity, so the
    Mahalanobis distance is the Euclidean distance between whitened vectors.
    """

    matrix: np.ndarray
    whitener: np.ndarray
    epsilon: float

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_matrix(cls, matrix, epsilon_scale: float = 1e-6) -> "CovarianceModel":
        w = np.asarray(matrix, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise StructureError(f"covariance must be square, got {w.shape}")
        w = 0.5 * (w + w.T)
        d = w.shape[0]
        eps = epsilon_scale * np.trace(w) / d
        if eps <= 0:
            # degenerate training data: fall back to an absolute ridge
            eps = epsilon_scale if epsilon_scale > 0 else 1e-12
        vals, vecs = np.linalg.eigh(w + eps * np.eye(d))
        if np.any(vals <= 0):
            raise StructureError("regularised covariance is not positive definite")
        whitener = (vecs / np.sqrt(vals)) @ vecs.T
        whitener = 0.5 * (whitener + whitener.T)
        for arr in (w, whitener):
            arr.setflags(write=False)
        return cls(w, whitener, float(eps))

    @classmethod
    def identity(cls, dimension: int) -> "CovarianceModel":
        eye = np.eye(dimension)
        eye.setflags(write=False)
        return cls(eye, eye, 0.0)

    def whiten(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.dimension:
            raise StructureError(
                f"vector dimension {x.shape[-1]} does not match model dimension {self.dimension}"
            )
        return x @ self.whitener.T

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "epsilon": self.epsilon,
            "matrix": self.matrix.tolist(),
            "whitener": self.whitener.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CovarianceModel":
        matrix = np.array(data["matrix"], dtype=np.float64)
        whitener = np.array(data["whitener"], dtype=np.float64)
        if matrix.shape != whitener.shape or matrix.shape[0] != data["dimension"]:
            raise StructureError("covariance document has inconsistent shapes")
        matrix.setflags(write=False)
        whitener.setflags(write=False)
        return cls(matrix, whitener, float(data["epsilon"]))


def within_class_covariance(
    training: Iterable[tuple[Hashable, np.ndarray]],
    epsilon_scale: float = 1e-6,
    dimension: Optional[int] = None,
) -> CovarianceModel:
    """Pooled covariance of embeddings around their own speaker's mean.

    ``training`` yields ``(speaker, embedding)`` pairs. The scatter of every
    speaker around its mean is summed and divided by the total number of
    segments.
    """
    by_speaker: dict[Hashable, list[np.ndarray]] = {}
    dims = set()
    for speaker, emb in training:
        emb = np.asarray(emb, dtype=np.float64)
        dims.add(emb.shape)
        by_speaker.setdefault(speaker, []).append(emb)
    if not by_speaker:
        raise StructureError("no training segments")
    if len(dims) != 1 or len(next(iter(dims))) != 1:
        raise StructureError(f"inconsistent embedding dimensions: {sorted(dims)}")
    d = next(iter(dims))[0]
    if dimension is not None and d != dimension:
        raise StructureError(f"embeddings have dimension {d}, expected {dimension}")

    n = 0
    scatter = np.zeros((d, d))
    for speaker in sorted(by_speaker, key=repr):
        u = np.stack(by_speaker[speaker])
        centred = u - u.mean(axis=0)
        scatter += centred.T @ centred
        n += len(u)
    return CovarianceModel.from_matrix(scatter / n, epsilon_scale)


def mahalanobis_distance(x, y, model: CovarianceModel) -> float:
    """Euclidean distance between the whitened images of ``x`` and ``y``."""
    diff = model.whiten(x) - model.whiten(y)
    return float(np.sqrt(diff @ diff))
