"""Decision tree of classifiers grown by entropy-imbalance-gain selection.

At each node the available pool members are scored by how much they reduce
the entropy imbalance of the node's instances (raw features vs the member's
score space).  The best member splits the node by its predicted label; a
child keeps growing while its Gini impurity exceeds the threshold and the
depth, size and pool limits allow.

    tree = build_cascade(train, pool, CascadeConfig(gini_threshold=0.2))
    trace = tree.predict_with_trace(x)
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import metrics
from .classifiers import TrainedClassifier, _fit_binary, fit, load_classifier
from .data import Instance, LabeledDataset
from .errors import ConfigError, ContractError, DegenerateNode, DimensionError
from .metrics import DensityConfig, EigScore

log = logging.getLogger(__name__)

FUSION_MODES = ("cascade", "weighted_vote")
REPRESENTATIONS = ("scores", "partition")
STOP_REASONS = ("max_depth", "min_node_size", "purity", "pool_exhausted")


@dataclass(frozen=True)
class CascadeConfig:
    gini_threshold: float = 0.2
    max_depth: int | None = None
    min_node_size: int = 5
    density: DensityConfig = DensityConfig()
    fusion_mode: str = "cascade"
    allow_reuse: bool = False
    representation: str = "scores"
    refit_per_node: bool = False
    force_root: str | None = None
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.gini_threshold < 1:
            raise ConfigError("gini_threshold must lie in [0, 1)")
        if self.max_depth is not None and self.max_depth < 1:
            raise ConfigError("max_depth must be >= 1")
        if self.min_node_size < 1:
            raise ConfigError("min_node_size must be >= 1")
        if self.fusion_mode not in FUSION_MODES:
            raise ConfigError(f"fusion_mode must be one of {FUSION_MODES}")
        if self.representation not in REPRESENTATIONS:
            raise ConfigError(f"representation must be one of {REPRESENTATIONS}")

    def to_config(self) -> dict:
        return {
            "gini_threshold": self.gini_threshold,
            "max_depth": self.max_depth,
            "min_node_size": self.min_node_size,
            "density": {
                "k_neighbors": self.density.k_neighbors,
                "metric": self.density.metric,
                "epsilon": self.density.epsilon,
            },
            "fusion_mode": self.fusion_mode,
            "allow_reuse": self.allow_reuse,
            "representation": self.representation,
            "refit_per_node": self.refit_per_node,
            "force_root": self.force_root,
            "seed": self.seed,
        }

    @classmethod
    def from_config(cls, d: Mapping | None) -> "CascadeConfig":
        d = dict(d or {})
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown cascade config keys {sorted(unknown)}")
        if "density" in d:
            try:
                d["density"] = DensityConfig(**(d["density"] or {}))
            except (TypeError, ContractError) as exc:
                raise ConfigError(f"bad density config: {exc}") from None
        return cls(**d)


@dataclass
class Leaf:
    node_id: str
    label: str
    counts: dict
    gini: float
    depth: int
    stop_reason: str
    members: tuple = ()


@dataclass
class Split:
    node_id: str
    classifier_id: str
    branch: str
    eig: float
    scores: list
    children: dict
    fallback: Leaf
    counts: dict
    gini: float
    depth: int
    members: tuple = ()
    model: TrainedClassifier | None = None  # set only when refit per node


@dataclass(frozen=True)
class TraceStep:
    node_id: str
    classifier_id: str
    branch: str
    partition: str
    scores: tuple
    rule: str | None = None


@dataclass
class PredictionTrace:
    steps: list
    final_label: str
    knowledge_values: dict = field(default_factory=dict)
    fallback: bool = False
    leaf_id: str = ""

    @property
    def path(self) -> list:
        return [s.classifier_id for s in self.steps]

    def to_dict(self) -> dict:
        return {
            "steps": [
                {
                    "node_id": s.node_id,
                    "classifier_id": s.classifier_id,
                    "branch": s.branch,
                    "partition": s.partition,
                    "scores": list(s.scores),
                    "rule": s.rule,
                }
                for s in self.steps
            ],
            "final_label": self.final_label,
            "knowledge_values": dict(self.knowledge_values),
            "fallback": self.fallback,
            "leaf_id": self.leaf_id,
        }


def majority_label(counts: Mapping[str, int], class_set: Sequence[str]) -> str:
    best = None
    for c in class_set:
        if best is None or counts.get(c, 0) > counts.get(best, 0):
            best = c
    return best


def _representation(model: TrainedClassifier, X, mode: str) -> np.ndarray:
    S = model.predict_scores_batch(X)
    if mode == "scores":
        return S
    onehot = np.zeros_like(S)
    onehot[np.arange(S.shape[0]), np.argmax(S, axis=1)] = 1.0
    return onehot


def score_candidates(node_data: LabeledDataset, pool: Sequence[TrainedClassifier],
                     cfg: CascadeConfig = CascadeConfig(), raw=None) -> list:
    """EIG of every candidate on ``node_data``, in pool order."""
    if len(node_data) < 2:
        raise DegenerateNode(f"node has {len(node_data)} instance(s)")
    if not pool:
        raise ContractError("score_candidates needs a nonempty pool")
    if raw is None:
        raw = metrics.imbalance_from_matrix(node_data.X, node_data.y, node_data.class_set, cfg.density, "raw")
    out = []
    for model in pool:
        Z = _representation(model, node_data.X, cfg.representation)
        rep = metrics.imbalance_from_matrix(Z, node_data.y, node_data.class_set, cfg.density, model.id)
        out.append(metrics.eig(raw, rep))
    return out


def select_classifier(scores: Sequence[EigScore]) -> str:
    """Id of the highest-EIG candidate; the earliest wins a tie."""
    if not scores:
        raise ContractError("select_classifier needs at least one score")
    best = scores[0]
    for s in scores[1:]:
        if s.eig > best.eig:
            best = s
    return best.classifier_id


def fuse_weighted(branch_scores: Sequence, class_set: Sequence[str]) -> str:
    """Argmax of the EIG-weighted sum of class-space score vectors.

    Negative weights count as zero; if every weight is zero the plain mean
    of the score vectors is used.
    """
    if not branch_scores:
        raise ContractError("fuse_weighted needs at least one branch")
    S = np.asarray([np.asarray(s, dtype=float) for s, _ in branch_scores])
    w = np.clip(np.asarray([float(w) for _, w in branch_scores]), 0.0, None)
    if S.shape[1] != len(class_set):
        raise DimensionError("score vectors must cover class_set")
    if not np.any(w > 0):
        w = np.ones_like(w)
    total = w @ S
    return class_set[int(np.argmax(total))]


class CascadeTree:
    def __init__(self, root, pool: Sequence[TrainedClassifier], class_set, feature_names,
                 cfg: CascadeConfig):
        self.root = root
        self.pool = {m.id: m for m in pool}
        self.pool_order = [m.id for m in pool]
        self.class_set = tuple(class_set)
        self.feature_names = tuple(feature_names)
        self.cfg = cfg

    def nodes(self):
        """All nodes in preorder (fallback leaves excluded)."""
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            if isinstance(node, Split):
                stack.extend(reversed(list(node.children.values())))

    def leaves(self):
        return [n for n in self.nodes() if isinstance(n, Leaf)]

    def depth(self) -> int:
        return max(n.depth for n in self.nodes())

    def model_at(self, node: Split) -> TrainedClassifier:
        return node.model if node.model is not None else self.pool[node.classifier_id]

    def predict_with_trace(self, instance) -> PredictionTrace:
        x = instance.features if isinstance(instance, Instance) else np.asarray(instance, dtype=float)
        if x.shape != (len(self.feature_names),):
            raise DimensionError(f"expected {len(self.feature_names)} features, got {x.shape}")
        node = self.root
        steps, knowledge = [], {}
        fell_back = False
        while isinstance(node, Split):
            model = self.model_at(node)
            scores = model.predict_scores(x)
            partition = model.class_set[int(np.argmax(scores))]
            rule = None
            if model.kind == "rule_based":
                fired = model.fired_rules(x[None, :])[0]
                rule = model.ruleset.rules[fired].as_text() if fired >= 0 else f"default -> {model.ruleset.default_class}"
            steps.append(TraceStep(node.node_id, node.classifier_id, node.branch, partition,
                                   tuple(float(v) for v in scores), rule))
            if node.branch == "knowledge":
                for name in model.used_features:
                    knowledge[name] = float(x[self.feature_names.index(name)])
            child = node.children.get(partition)
            if child is None:
                node = node.fallback
                fell_back = True
                break
            node = child
        return PredictionTrace(steps, node.label, knowledge, fell_back, node.node_id)

    def predict(self, instance) -> str:
        return self.predict_with_trace(instance).final_label

    def predict_batch(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != len(self.feature_names):
            raise DimensionError(f"expected (n, {len(self.feature_names)}) feature matrix")
        out = np.empty(X.shape[0], dtype=object)
        self._route(self.root, X, np.arange(X.shape[0]), out)
        return out

    def _route(self, node, X, idx, out):
        if isinstance(node, Leaf):
            out[idx] = node.label
            return
        if idx.size == 0:
            return
        preds = self.model_at(node).predict_batch(X[idx])
        routed = np.zeros(idx.size, dtype=bool)
        for label, child in node.children.items():
            sel = preds == label
            routed |= sel
            self._route(child, X, idx[sel], out)
        out[idx[~routed]] = node.fallback.label

    def replay(self, partitions: Sequence[str]):
        """Node reached by following recorded partition labels from the root."""
        node = self.root
        for p in partitions:
            if not isinstance(node, Split):
                raise ContractError("trace is longer than the tree path")
            node = node.children.get(p, node.fallback)
        return node

    def to_dict(self) -> dict:
        return {"root": _node_to_dict(self.root), "config": self.cfg.to_config(),
                "class_set": list(self.class_set), "feature_names": list(self.feature_names),
                "pool_order": list(self.pool_order)}

    @classmethod
    def from_dict(cls, d: Mapping, pool: Sequence[TrainedClassifier]) -> "CascadeTree":
        by_id = {m.id: m for m in pool}
        ordered = [by_id[i] for i in d["pool_order"]]
        return cls(_node_from_dict(d["root"]), ordered, d["class_set"], d["feature_names"],
                   CascadeConfig.from_config(d["config"]))

    def describe(self) -> str:
        lines = []

        def walk(node, indent, edge):
            pad = "  " * indent
            if isinstance(node, Leaf):
                lines.append(f"{pad}{edge}leaf {node.label} counts={node.counts} "
                             f"gini={node.gini:.3f} ({node.stop_reason})")
                return
            lines.append(f"{pad}{edge}{node.classifier_id} [{node.branch}] eig={node.eig:.4f} n={sum(node.counts.values())}")
            for label, child in node.children.items():
                walk(child, indent + 1, f"{label}: ")

        walk(self.root, 0, "")
        return "\n".join(lines)


def _leaf_to_dict(leaf: Leaf) -> dict:
    return {"type": "leaf", "node_id": leaf.node_id, "label": leaf.label, "counts": dict(leaf.counts),
            "gini": leaf.gini, "depth": leaf.depth, "stop_reason": leaf.stop_reason}


def _node_to_dict(node) -> dict:
    if isinstance(node, Leaf):
        return _leaf_to_dict(node)
    return {
        "type": "split",
        "node_id": node.node_id,
        "classifier_id": node.classifier_id,
        "branch": node.branch,
        "eig": node.eig,
        "scores": [[s.classifier_id, s.eig] for s in node.scores],
        "children": [[label, _node_to_dict(child)] for label, child in node.children.items()],
        "fallback": _leaf_to_dict(node.fallback),
        "counts": dict(node.counts),
        "gini": node.gini,
        "depth": node.depth,
        "model": node.model.dump() if node.model is not None else None,
    }


def _leaf_from_dict(d) -> Leaf:
    return Leaf(d["node_id"], d["label"], dict(d["counts"]), d["gini"], d["depth"], d["stop_reason"])


def _node_from_dict(d):
    if d["type"] == "leaf":
        return _leaf_from_dict(d)
    return Split(
        node_id=d["node_id"],
        classifier_id=d["classifier_id"],
        branch=d["branch"],
        eig=d["eig"],
        scores=[EigScore(i, e) for i, e in d["scores"]],
        children={label: _node_from_dict(c) for label, c in d["children"]},
        fallback=_leaf_from_dict(d["fallback"]),
        counts=dict(d["counts"]),
        gini=d["gini"],
        depth=d["depth"],
        model=load_classifier(d["model"]) if d.get("model") else None,
    )


def _refit(model: TrainedClassifier, node_data: LabeledDataset, seed: int) -> TrainedClassifier:
    pos = model.positive_class
    if pos is not None:
        return _fit_binary(model.spec, node_data, pos, seed)
    return fit(model.spec, node_data, seed)


def build_cascade(data: LabeledDataset, pool: Sequence[TrainedClassifier],
                  cfg: CascadeConfig = CascadeConfig()) -> CascadeTree:
    """Grow the classifier tree top-down.

    A node becomes a leaf labelled by its majority class when it reaches
    ``max_depth`` (default: pool size), holds fewer than ``min_node_size``
    instances, has Gini impurity ``<= gini_threshold``, or has no unused
    candidate left.  Otherwise the max-EIG candidate splits it by predicted
    label and is withdrawn from the candidates of its descendants (unless
    ``allow_reuse``).  Predicted labels with no build-time instances get no
    child; inference sends them to the node's majority fallback leaf.
    """
    if len(data) == 0:
        raise ContractError("cannot build a cascade on an empty dataset")
    pool = list(pool)
    if not pool:
        raise ContractError("cannot build a cascade from an empty pool")
    ids = [m.id for m in pool]
    if len(set(ids)) != len(ids):
        raise ConfigError("pool classifier ids must be unique")
    if cfg.force_root is not None and cfg.force_root not in ids:
        raise ConfigError(f"forced root {cfg.force_root!r} is not in the pool")
    max_depth = cfg.max_depth if cfg.max_depth is not None else len(pool)
    counter = [0]

    def next_id():
        nid = f"n{counter[0]}"
        counter[0] += 1
        return nid

    def grow(idx, available, depth):
        node_data = data.subset(idx)
        counts = node_data.class_counts()
        g = metrics.gini(counts)
        label = majority_label(counts, data.class_set)
        members = tuple(node_data.ids)
        node_id = next_id()

        stop = None
        if depth >= max_depth:
            stop = "max_depth"
        elif len(idx) < cfg.min_node_size:
            stop = "min_node_size"
        elif g <= cfg.gini_threshold:
            stop = "purity"
        elif not available:
            stop = "pool_exhausted"
        if stop is None:
            candidates = [pool[i] for i in available]
            if cfg.refit_per_node:
                candidates = [_refit(m, node_data, cfg.seed) for m in candidates]
            try:
                scores = score_candidates(node_data, candidates, cfg)
            except DegenerateNode:
                stop = "min_node_size"
        if stop is not None:
            return Leaf(node_id, label, counts, g, depth, stop, members)

        if depth == 0 and cfg.force_root is not None:
            chosen = cfg.force_root
        else:
            chosen = select_classifier(scores)
        pos = [m.id for m in candidates].index(chosen)
        model = candidates[pos]
        chosen_eig = scores[pos].eig
        log.debug("node %s depth %d n=%d gini=%.3f -> %s (eig %.4f)",
                  node_id, depth, len(idx), g, chosen, chosen_eig)

        remaining = available if cfg.allow_reuse else [i for i in available if pool[i].id != chosen]
        preds = model.predict_batch(node_data.X)
        children = {}
        for part in model.class_set:
            sel = preds == part
            if np.any(sel):
                children[part] = grow(idx[sel], remaining, depth + 1)
        fallback = Leaf(f"{node_id}.fallback", label, counts, g, depth, "fallback")
        return Split(node_id, chosen, model.branch, chosen_eig, scores, children, fallback,
                     counts, g, depth, members, model if cfg.refit_per_node else None)

    root = grow(np.arange(len(data)), list(range(len(pool))), 0)
    return CascadeTree(root, pool, data.class_set, data.feature_names, cfg)


def predict_with_trace(tree: CascadeTree, instance) -> PredictionTrace:
    return tree.predict_with_trace(instance)


def eig_table(tree: CascadeTree) -> list:
    """Rows ``(node_id, depth, n, classifier_id, eig, chosen)`` for every split."""
    rows = []
    for node in tree.nodes():
        if isinstance(node, Split):
            n = sum(node.counts.values())
            for s in node.scores:
                rows.append((node.node_id, node.depth, n, s.classifier_id, s.eig,
                             s.classifier_id == node.classifier_id))
    return rows
