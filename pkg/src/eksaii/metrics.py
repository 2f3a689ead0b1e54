"""Density-based class entropy, entropy imbalance, EIG and Gini impurity.

The local density of a point is the mean inverse distance to its K nearest
same-class neighbours.  Normalising densities within a class gives a
probability vector whose Shannon entropy (bits) describes how evenly the
class is spread in a given representation.  The entropy imbalance of a
representation is the gap between the most diffuse class and the average
class; the entropy imbalance gain of a classifier is how much that gap
shrinks when instances are mapped into the classifier's output space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .data import Instance, LabeledDataset
from .errors import ContractError, DegenerateNode, DimensionError

METRICS = ("euclidean", "manhattan")
_SCIPY_METRIC = {"euclidean": "euclidean", "manhattan": "cityblock"}


@dataclass(frozen=True)
class DensityConfig:
    k_neighbors: int = 5
    metric: str = "euclidean"
    epsilon: float = 1e-12

    def __post_init__(self):
        if int(self.k_neighbors) != self.k_neighbors or self.k_neighbors < 1:
            raise ContractError(f"k_neighbors must be a positive integer, got {self.k_neighbors}")
        if self.metric not in METRICS:
            raise ContractError(f"metric must be one of {METRICS}, got {self.metric!r}")
        if not self.epsilon > 0:
            raise ContractError("epsilon must be positive")


@dataclass(frozen=True)
class EntropyReport:
    per_class_entropy: dict
    imbalance: float
    representation_tag: str = "raw"


@dataclass(frozen=True)
class EigScore:
    classifier_id: str
    eig: float


def _vector(x) -> np.ndarray:
    if isinstance(x, Instance):
        return x.features
    return np.asarray(x, dtype=float)


def _matrix(points) -> np.ndarray:
    if isinstance(points, np.ndarray):
        return np.atleast_2d(points.astype(float))
    rows = [_vector(p) for p in points]
    if not rows:
        return np.empty((0, 0))
    lengths = {len(r) for r in rows}
    if len(lengths) != 1:
        raise DimensionError(f"inconsistent vector lengths {sorted(lengths)}")
    return np.vstack(rows)


def distance(a, b, metric: str = "euclidean") -> float:
    a, b = _vector(a), _vector(b)
    if a.shape != b.shape:
        raise DimensionError(f"length mismatch: {a.shape[0]} vs {b.shape[0]}")
    diff = np.abs(a - b)
    if metric == "euclidean":
        # rescale first so tiny differences do not underflow to zero when squared
        top = float(diff.max(initial=0.0))
        if top == 0.0:
            return 0.0
        r = diff / top
        return top * float(np.sqrt(np.dot(r, r)))
    if metric == "manhattan":
        return float(diff.sum())
    raise ContractError(f"unknown metric {metric!r}")


def local_density(target, class_peers, cfg: DensityConfig = DensityConfig()) -> float:
    """Mean inverse distance from ``target`` to its nearest class peers.

    ``class_peers`` must already exclude the target.  Only the
    ``min(cfg.k_neighbors, len(class_peers))`` nearest peers count, and each
    distance is floored at ``cfg.epsilon`` so duplicates stay finite.
    """
    peers = _matrix(class_peers)
    if peers.shape[0] == 0:
        raise DegenerateNode("local density of a singleton class is undefined")
    t = _vector(target)
    if peers.shape[1] != t.shape[0]:
        raise DimensionError(f"target has {t.shape[0]} features, peers have {peers.shape[1]}")
    d = cdist(t[None, :], peers, metric=_SCIPY_METRIC[cfg.metric])[0]
    k = min(cfg.k_neighbors, len(d))
    nearest = np.sort(np.maximum(d, cfg.epsilon))[:k]
    return float(np.sum(1.0 / nearest) / k)


def _densities(Z: np.ndarray, cfg: DensityConfig) -> np.ndarray:
    n = Z.shape[0]
    D = cdist(Z, Z, metric=_SCIPY_METRIC[cfg.metric])
    np.maximum(D, cfg.epsilon, out=D)
    np.fill_diagonal(D, np.inf)
    k = min(cfg.k_neighbors, n - 1)
    if k < n - 1:
        nearest = np.partition(D, k - 1, axis=1)[:, :k]
        nearest.sort(axis=1)
    else:
        nearest = np.sort(D, axis=1)[:, :k]
    return np.sum(1.0 / nearest, axis=1) / k


def normalized_densities(class_instances, cfg: DensityConfig = DensityConfig()) -> np.ndarray:
    """Local densities of every class member, normalised to sum to one."""
    Z = _matrix(class_instances)
    n = Z.shape[0]
    if n == 0:
        raise ContractError("normalized_densities needs at least one instance")
    if n == 1:
        return np.ones(1)
    lam = _densities(Z, cfg)
    return lam / np.sum(lam)


def class_entropy(gammas: Sequence[float]) -> float:
    g = np.asarray(gammas, dtype=float)
    if g.size == 0 or np.any(g < 0) or abs(np.sum(g) - 1.0) > 1e-9:
        raise ContractError("class_entropy expects a normalised non-negative vector")
    nz = g[g > 0]
    theta = float(-np.sum(nz * np.log2(nz)))
    # rounding can push a uniform vector a hair past its bounds
    return min(max(theta, 0.0), math.log2(g.size)) if g.size > 1 else 0.0


def entropy_imbalance(per_class_entropy: Mapping[str, float]) -> float:
    if not per_class_entropy:
        raise ContractError("entropy_imbalance needs at least one class")
    values = np.asarray(list(per_class_entropy.values()), dtype=float)
    top = float(np.max(values))
    if np.all(values == top):
        return 0.0
    return max(top - float(np.mean(values)), 0.0)


def imbalance_from_matrix(
    Z: np.ndarray,
    labels: Sequence[str],
    class_set: Sequence[str],
    cfg: DensityConfig = DensityConfig(),
    tag: str = "raw",
) -> EntropyReport:
    """Entropy report for points ``Z`` grouped by ``labels``.

    Classes of ``class_set`` with no rows are skipped; a class with a single
    row contributes zero entropy.
    """
    Z = np.asarray(Z, dtype=float)
    labels = np.asarray(labels, dtype=object)
    if Z.ndim != 2 or Z.shape[0] != labels.shape[0]:
        raise DimensionError("representation must have one row per instance")
    per_class = {}
    for c in class_set:
        rows = Z[labels == c]
        if rows.shape[0] == 0:
            continue
        per_class[c] = class_entropy(normalized_densities(rows, cfg))
    if not per_class:
        raise ContractError("no instances to compute an entropy report on")
    return EntropyReport(per_class, entropy_imbalance(per_class), tag)


def representation_imbalance(
    dataset: LabeledDataset,
    repr_fn: Callable[[Instance], Sequence[float]] | None = None,
    cfg: DensityConfig = DensityConfig(),
    tag: str = "raw",
) -> EntropyReport:
    """Entropy imbalance of ``dataset`` after mapping each instance with ``repr_fn``.

    ``repr_fn=None`` is the identity on raw features, which gives the
    reference imbalance of the raw representation.
    """
    if repr_fn is None:
        Z = dataset.X
    else:
        rows = [np.asarray(repr_fn(inst), dtype=float).ravel() for inst in dataset.instances]
        lengths = {len(r) for r in rows}
        if len(lengths) > 1:
            raise DimensionError(f"repr_fn returned vectors of lengths {sorted(lengths)}")
        Z = np.vstack(rows)
    return imbalance_from_matrix(Z, dataset.y, dataset.class_set, cfg, tag)


def eig(raw: EntropyReport, transformed: EntropyReport) -> EigScore:
    return EigScore(transformed.representation_tag, raw.imbalance - transformed.imbalance)


def gini(label_counts) -> float:
    if isinstance(label_counts, Mapping):
        counts = np.asarray(list(label_counts.values()), dtype=float)
    else:
        counts = np.asarray(label_counts, dtype=float)
    total = counts.sum()
    if total < 1 or np.any(counts < 0):
        raise ContractError("gini of an empty partition")
    p = counts / total
    return float(1.0 - np.sum(p * p))
