"""Train-time glue: balance, fit the pool, grow the cascade."""

from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np

from .cascade import (CascadeConfig, CascadeTree, PredictionTrace, Split, TraceStep, build_cascade,
                      fuse_weighted, score_candidates)
from .classifiers import ClassifierSpec, build_pool, class_space_scores
from .data import LabeledDataset
from .errors import DegenerateNode
from .resampling import SmoteConfig, balance_dataset, full_balance


class EksaiiModel:
    """A fitted pool plus the cascade grown over it."""

    def __init__(self, pool, tree: CascadeTree, root_scores=(), provenance=None):
        self.pool = list(pool)
        self.tree = tree
        self.root_scores = list(root_scores)
        self.provenance = dict(provenance or {})

    @property
    def cfg(self) -> CascadeConfig:
        return self.tree.cfg

    @property
    def class_set(self):
        return self.tree.class_set

    @property
    def feature_names(self):
        return self.tree.feature_names

    def _weights(self):
        by_id = {s.classifier_id: s.eig for s in self.root_scores}
        return [by_id.get(m.id, 0.0) for m in self.pool]

    def predict_batch(self, X) -> np.ndarray:
        if self.cfg.fusion_mode == "cascade":
            return self.tree.predict_batch(X)
        X = np.asarray(X, dtype=float)
        per_model = [class_space_scores(m, X, self.class_set) for m in self.pool]
        weights = self._weights()
        return np.asarray(
            [fuse_weighted([(S[i], w) for S, w in zip(per_model, weights)], self.class_set)
             for i in range(X.shape[0])],
            dtype=object,
        )

    def predict_with_trace(self, instance) -> PredictionTrace:
        if self.cfg.fusion_mode == "cascade":
            return self.tree.predict_with_trace(instance)
        x = getattr(instance, "features", instance)
        x = np.asarray(x, dtype=float)
        steps, knowledge = [], {}
        for m, w in zip(self.pool, self._weights()):
            s = m.predict_scores(x)
            steps.append(TraceStep("vote", m.id, m.branch, m.class_set[int(np.argmax(s))],
                                   tuple(float(v) for v in s)))
            if m.branch == "knowledge":
                for name in m.used_features:
                    knowledge[name] = float(x[self.feature_names.index(name)])
        label = str(self.predict_batch(x[None, :])[0])
        return PredictionTrace(steps, label, knowledge, False, "vote")

    def predict(self, instance) -> str:
        return self.predict_with_trace(instance).final_label


def resolve_smote(data: LabeledDataset, smote, seed: int = 0):
    """Turn a SMOTE setting into per-class configs.

    ``smote`` may be None (no balancing), ``"full"`` (every class up to the
    majority count), or a mapping class -> target count / config dict.
    """
    if smote is None or smote is False:
        return {}
    if smote == "full" or smote is True:
        return full_balance(data, seed=seed)
    out = {}
    for i, (c, v) in enumerate(smote.items()):
        if isinstance(v, SmoteConfig):
            out[c] = v
        elif isinstance(v, Mapping):
            out[c] = SmoteConfig(int(v["target_count"]), int(v.get("k_neighbors", 5)), int(v.get("seed", seed + i)))
        else:
            out[c] = SmoteConfig(int(v), seed=seed + i)
    return out


def train(data: LabeledDataset, specs: Sequence[ClassifierSpec], cfg: CascadeConfig = CascadeConfig(),
          smote=None, seed: int = 0, provenance=None) -> EksaiiModel:
    """Balance ``data`` (optional), fit the pool once, and grow the cascade on it."""
    balanced = balance_dataset(data, resolve_smote(data, smote, seed))
    pool = build_pool(specs, balanced, seed)
    tree = build_cascade(balanced, pool, cfg)
    if isinstance(tree.root, Split) and len(tree.root.scores) == len(pool) and not cfg.refit_per_node:
        root_scores = tree.root.scores
    else:
        try:
            root_scores = score_candidates(balanced, pool, cfg)
        except DegenerateNode:
            root_scores = []
    prov = {"seed": seed, "n_train": len(data), "n_balanced": len(balanced)}
    prov.update(provenance or {})
    return EksaiiModel(pool, tree, root_scores, prov)
