"""SMOTE oversampling of rare classes.

A synthetic point is drawn on the segment between a minority instance and one
of its k nearest same-class neighbours (exact Euclidean search).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .data import Instance, LabeledDataset, concat
from .errors import ConfigError, ResamplingError


class SmoteWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SmoteConfig:
    target_count: int
    k_neighbors: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.k_neighbors < 1:
            raise ConfigError("SMOTE k_neighbors must be >= 1")
        if self.target_count < 0:
            raise ConfigError("SMOTE target_count must be non-negative")


def smote(minority: Sequence[Instance], cfg: SmoteConfig, id_prefix: str = "syn") -> list:
    """Synthesize ``cfg.target_count - len(minority)`` new instances.

    Sources are drawn uniformly with replacement, one neighbour is picked
    uniformly among the source's ``min(k, n - 1)`` nearest, and the
    interpolation weight ``u`` is uniform on [0, 1].  Draws come from a single
    seeded generator in that order, so the output is a pure function of the
    inputs and ``cfg``.
    """
    minority = list(minority)
    if len(minority) < 2:
        raise ResamplingError(f"SMOTE needs at least 2 minority instances, got {len(minority)}")
    n_new = cfg.target_count - len(minority)
    if n_new < 0:
        warnings.warn(
            f"target_count {cfg.target_count} is below the current count {len(minority)}; nothing synthesized",
            SmoteWarning,
            stacklevel=2,
        )
        return []
    X = np.vstack([inst.features for inst in minority])
    k = min(cfg.k_neighbors, len(minority) - 1)
    D = cdist(X, X)
    np.fill_diagonal(D, np.inf)
    neighbours = np.argsort(D, axis=1, kind="stable")[:, :k]

    rng = np.random.default_rng(cfg.seed)
    out = []
    for j in range(n_new):
        i = int(rng.integers(len(minority)))
        nn = int(neighbours[i, int(rng.integers(k))])
        u = float(rng.random())
        src = minority[i]
        out.append(Instance(
            id=f"{id_prefix}-{src.label}-{j}",
            features=interpolate(X[i], X[nn], u),
            label=src.label,
            domain=src.domain,
            synthetic=True,
        ))
    return out


def interpolate(x, neighbour, u: float) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x + u * (np.asarray(neighbour, dtype=float) - x)


def balance_dataset(data: LabeledDataset, per_class: Mapping[str, SmoteConfig]) -> LabeledDataset:
    """Append SMOTE synthetics so each configured class reaches its target.

    Original rows keep their order, ids and values; synthetics follow them,
    flagged ``synthetic=True``.
    """
    for c in per_class:
        if c not in data.class_set:
            raise ConfigError(f"cannot balance unknown class {c!r}")
    extra = []
    existing = set(data.ids)
    for c, cfg in per_class.items():
        members = [data.instance(i) for i in np.flatnonzero(data.y == c)]
        if cfg.target_count <= len(members):
            continue
        prefix = "syn"
        while any(f"{prefix}-{c}-0" == i for i in existing):
            prefix += "_"
        extra.extend(smote(members, cfg, id_prefix=prefix))
    if not extra:
        return data
    synth = LabeledDataset.from_instances(extra, class_set=data.class_set, feature_names=data.feature_names)
    return concat([data, synth])


def full_balance(data: LabeledDataset, k_neighbors: int = 5, seed: int = 0, classes=None) -> dict:
    """Per-class configs that lift every (or every listed) class to the majority count.

    Classes with fewer than two instances cannot be oversampled and are left out.
    """
    counts = data.class_counts()
    top = max(counts.values())
    chosen = classes if classes is not None else data.class_set
    return {
        c: SmoteConfig(target_count=top, k_neighbors=k_neighbors, seed=seed + i)
        for i, c in enumerate(data.class_set)
        if c in chosen and 2 <= counts[c] < top
    }
