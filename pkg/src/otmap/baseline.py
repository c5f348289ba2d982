"""Cluster-mixture comparison model: K-means, one Gaussian per cluster.

Fits Lloyd's algorithm with k-means++ seeding, then approximates each
cluster with a full-covariance Gaussian weighted by its occupancy fraction.
Sampling the mixture gives the comparison generator.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidCount, ModelError, SpecError
from .ot import PointSet

COV_RIDGE = 1e-6


@dataclass(frozen=True)
class ClusterModel:
    """Mixture of k Gaussians fitted to k-means clusters."""

    weights: np.ndarray  # (k,), >= 0, sums to 1
    means: np.ndarray  # (k, d)
    covariances: np.ndarray  # (k, d, d), symmetric PSD up to -1e-9

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 1 or (w < 0).any() or abs(w.sum() - 1.0) > 1e-9:
            raise ModelError("cluster weights must be non-negative and sum to 1")
        if self.means.shape[0] != len(w) or self.covariances.shape[:2] != (len(w), self.means.shape[1]):
            raise ModelError("weights, means, and covariances disagree on k or d")
        for cov in self.covariances:
            if not np.allclose(cov, cov.T, atol=1e-12):
                raise ModelError("covariance matrices must be symmetric")

    @property
    def k(self) -> int:
        return len(self.weights)

    @property
    def d(self) -> int:
        return self.means.shape[1]

    def to_json(self) -> str:
        return json.dumps(
            {
                "weights": self.weights.tolist(),
                "means": self.means.tolist(),
                "covariances": self.covariances.tolist(),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "ClusterModel":
        obj = json.loads(text)
        return cls(
            weights=np.asarray(obj["weights"], dtype=np.float64),
            means=np.asarray(obj["means"], dtype=np.float64),
            covariances=np.asarray(obj["covariances"], dtype=np.float64),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path: str | Path) -> "ClusterModel":
        return cls.from_json(Path(path).read_text())


@dataclass
class KmeansResult:
    model: ClusterModel
    labels: np.ndarray  # (n,) cluster index per input point
    sse_history: list[float] = field(default_factory=list)  # per Lloyd iteration


def _plusplus_seeds(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    centers = np.empty((k, x.shape[1]))
    centers[0] = x[rng.integers(len(x))]
    d2 = np.square(x - centers[0]).sum(axis=1)
    for i in range(1, k):
        total = d2.sum()
        if total <= 0:  # all points coincide with chosen centers
            centers[i:] = centers[0]
            break
        centers[i] = x[rng.choice(len(x), p=d2 / total)]
        d2 = np.minimum(d2, np.square(x - centers[i]).sum(axis=1))
    return centers


def kmeans_fit(points: PointSet, k: int, max_iters: int = 100, seed: int = 0) -> KmeansResult:
    """Lloyd's algorithm with k-means++ seeding, then per-cluster Gaussians.

    Stops when no assignment changes or after ``max_iters``.  A cluster that
    empties is re-seeded at the point farthest from its current centroid.
    Covariances are full sample covariances with a small diagonal ridge.
    """
    if k < 1:
        raise InvalidCount(f"need k >= 1 clusters, got {k}")
    if k > points.k:
        raise SpecError(f"cannot fit {k} clusters to {points.k} points")
    x = points.data
    rng = np.random.default_rng(seed)
    centers = _plusplus_seeds(x, k, rng)
    labels = np.full(points.k, -1, dtype=np.int64)
    sse_history: list[float] = []
    for _ in range(max_iters):
        d2 = np.square(x[:, None, :] - centers[None, :, :]).sum(axis=2)
        new_labels = d2.argmin(axis=1)
        for c in range(k):
            mask = new_labels == c
            if mask.any():
                centers[c] = x[mask].mean(axis=0)
            else:
                # Farthest point from its own centroid restarts the cluster.
                far = d2[np.arange(len(x)), new_labels].argmax()
                centers[c] = x[far]
                new_labels[far] = c
        sse_history.append(float(np.square(x - centers[new_labels]).sum()))
        if (new_labels == labels).all():
            break
        labels = new_labels

    d = points.d
    weights = np.empty(k)
    means = np.empty((k, d))
    covs = np.empty((k, d, d))
    for c in range(k):
        members = x[labels == c]
        weights[c] = len(members) / points.k
        means[c] = members.mean(axis=0)
        centered = members - means[c]
        covs[c] = (centered.T @ centered) / len(members) + COV_RIDGE * np.eye(d)
    model = ClusterModel(weights=weights, means=means, covariances=covs)
    return KmeansResult(model=model, labels=labels, sse_history=sse_history)


def _gaussian_factor(cov: np.ndarray) -> np.ndarray:
    """Matrix L with L L^T = cov.

    Cholesky on the fast path; on the PSD boundary (e.g. a degenerate
    cluster) fall back to an eigendecomposition with negative eigenvalues
    clipped at the -1e-9 tolerance, beyond which the model is rejected.
    """
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        pass
    evals, evecs = np.linalg.eigh(cov)
    if evals.min() < -1e-9:
        raise ModelError(f"covariance is not PSD (min eigenvalue {evals.min():.3e})")
    return evecs * np.sqrt(np.clip(evals, 0.0, None))


def sample_cluster_model(model: ClusterModel, n: int, seed: int = 0) -> PointSet:
    """Draw n points: cluster by weight, then its Gaussian."""
    if n < 1:
        raise InvalidCount(f"need n >= 1 samples, got {n}")
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(n, model.weights)
    factors = [_gaussian_factor(cov) for cov in model.covariances]
    chunks = []
    for c, count in enumerate(counts):
        if count == 0:
            continue
        z = rng.standard_normal((count, model.d))
        chunks.append(model.means[c] + z @ factors[c].T)
    out = np.concatenate(chunks)
    return PointSet(out[rng.permutation(n)])
