"""Instances and labeled datasets.

A ``LabeledDataset`` stores its rows column-wise (feature matrix, label
array, ids, domain tags, synthetic flags) so that density, scoring and
partitioning code can work on numpy arrays directly.  ``Instance`` is the
row view handed out when a single example is needed.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, DataError, DimensionError


@dataclass(frozen=True, eq=False)
class Instance:
    id: str
    features: np.ndarray
    label: str
    domain: str | None = None
    synthetic: bool = False

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=float)
        if feats.ndim != 1:
            raise DimensionError(f"instance {self.id}: features must be a 1-D vector")
        if not np.all(np.isfinite(feats)):
            raise DataError(f"instance {self.id}: non-finite feature value")
        object.__setattr__(self, "features", feats)


def rest_label(cls: str) -> str:
    """Label used for the complement side of a one-vs-rest problem."""
    return f"not-{cls}"


@dataclass(eq=False)
class LabeledDataset:
    X: np.ndarray
    y: np.ndarray
    class_set: tuple
    feature_names: tuple = ()
    ids: np.ndarray | None = None
    domains: np.ndarray | None = None
    synthetic: np.ndarray | None = None
    _class_index: dict = field(init=False, repr=False)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        if self.X.ndim == 1:
            self.X = self.X.reshape(-1, 1)
        if self.X.ndim != 2:
            raise DimensionError("feature matrix must be 2-D")
        n, m = self.X.shape
        self.y = np.asarray([str(v) for v in self.y], dtype=object)
        if self.y.shape != (n,):
            raise DimensionError(f"{n} feature rows but {len(self.y)} labels")
        self.class_set = tuple(str(c) for c in self.class_set)
        if not self.class_set:
            raise ConfigError("class_set must be nonempty")
        if len(set(self.class_set)) != len(self.class_set):
            raise ConfigError(f"class_set has duplicates: {self.class_set}")
        if not self.feature_names:
            self.feature_names = tuple(f"x{j}" for j in range(m))
        self.feature_names = tuple(self.feature_names)
        if len(self.feature_names) != m:
            raise DimensionError(
                f"{len(self.feature_names)} feature names for {m} feature columns"
            )
        if not np.all(np.isfinite(self.X)):
            raise DataError("non-finite feature value in dataset")
        self._class_index = {c: i for i, c in enumerate(self.class_set)}
        unknown = set(self.y) - set(self.class_set)
        if unknown:
            raise DataError(f"labels outside class_set: {sorted(unknown)}")
        if self.ids is None:
            self.ids = np.asarray([str(i) for i in range(n)], dtype=object)
        else:
            self.ids = np.asarray([str(i) for i in self.ids], dtype=object)
        if self.domains is None:
            self.domains = np.full(n, None, dtype=object)
        else:
            self.domains = np.asarray(list(self.domains), dtype=object)
        if self.synthetic is None:
            self.synthetic = np.zeros(n, dtype=bool)
        else:
            self.synthetic = np.asarray(self.synthetic, dtype=bool)
        if len(self.ids) != n or len(self.domains) != n or len(self.synthetic) != n:
            raise DimensionError("ids/domains/synthetic must have one entry per row")

    @classmethod
    def from_instances(cls, instances: Sequence[Instance], class_set=None, feature_names=()):
        instances = list(instances)
        if not instances and not feature_names:
            raise DataError("cannot infer dimensionality from an empty instance list")
        m = len(instances[0].features) if instances else len(feature_names)
        X = np.empty((len(instances), m))
        for i, inst in enumerate(instances):
            if len(inst.features) != m:
                raise DimensionError(f"instance {inst.id} has {len(inst.features)} features, expected {m}")
            X[i] = inst.features
        labels = [inst.label for inst in instances]
        if class_set is None:
            class_set = sorted(set(labels))
        return cls(
            X=X,
            y=labels,
            class_set=class_set,
            feature_names=feature_names,
            ids=[inst.id for inst in instances],
            domains=[inst.domain for inst in instances],
            synthetic=[inst.synthetic for inst in instances],
        )

    def __len__(self):
        return self.X.shape[0]

    @property
    def dimensionality(self) -> int:
        return self.X.shape[1]

    def instance(self, i: int) -> Instance:
        return Instance(
            id=self.ids[i],
            features=self.X[i],
            label=self.y[i],
            domain=self.domains[i],
            synthetic=bool(self.synthetic[i]),
        )

    @property
    def instances(self) -> list[Instance]:
        return [self.instance(i) for i in range(len(self))]

    def __iter__(self):
        return iter(self.instances)

    def class_index(self, label: str) -> int:
        return self._class_index[label]

    def label_codes(self) -> np.ndarray:
        return np.asarray([self._class_index[v] for v in self.y], dtype=int)

    def class_counts(self) -> dict:
        counts = Counter(self.y)
        return {c: counts.get(c, 0) for c in self.class_set}

    def feature_indices(self, names: Iterable[str]) -> list[int]:
        lookup = {name: j for j, name in enumerate(self.feature_names)}
        out = []
        for name in names:
            if name not in lookup:
                raise ConfigError(f"unknown feature name {name!r}")
            out.append(lookup[name])
        return out

    def subset(self, idx) -> "LabeledDataset":
        idx = np.asarray(idx)
        if idx.dtype == bool:
            idx = np.flatnonzero(idx)
        return LabeledDataset(
            X=self.X[idx],
            y=self.y[idx],
            class_set=self.class_set,
            feature_names=self.feature_names,
            ids=self.ids[idx],
            domains=self.domains[idx],
            synthetic=self.synthetic[idx],
        )

    def relabel(self, y, class_set) -> "LabeledDataset":
        return LabeledDataset(
            X=self.X,
            y=y,
            class_set=class_set,
            feature_names=self.feature_names,
            ids=self.ids,
            domains=self.domains,
            synthetic=self.synthetic,
        )

    def real_only(self) -> "LabeledDataset":
        return self.subset(~self.synthetic)

    def domain_tags(self) -> list:
        seen = []
        for d in self.domains:
            if d is not None and d not in seen:
                seen.append(d)
        return seen

    def split_by_domain(self) -> dict:
        return {d: self.subset(self.domains == d) for d in self.domain_tags()}


def concat(datasets: Sequence[LabeledDataset]) -> LabeledDataset:
    datasets = list(datasets)
    if not datasets:
        raise DataError("nothing to concatenate")
    first = datasets[0]
    class_set = list(first.class_set)
    for ds in datasets[1:]:
        if ds.feature_names != first.feature_names:
            raise DimensionError("cannot concatenate datasets with different features")
        for c in ds.class_set:
            if c not in class_set:
                class_set.append(c)
    return LabeledDataset(
        X=np.vstack([ds.X for ds in datasets]),
        y=np.concatenate([ds.y for ds in datasets]),
        class_set=class_set,
        feature_names=first.feature_names,
        ids=np.concatenate([ds.ids for ds in datasets]),
        domains=np.concatenate([ds.domains for ds in datasets]),
        synthetic=np.concatenate([ds.synthetic for ds in datasets]),
    )
