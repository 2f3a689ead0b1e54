"""Classifier pool members.

Every member is fit through :func:`fit` from a :class:`ClassifierSpec` and
exposes the same prediction surface: ``predict_scores`` returns a vector over
the model's ordered ``class_set`` that sums to one, and ``predict`` is its
argmax with ties going to the earlier class.

Kinds
-----
knn            vote fractions among the k nearest training points (raw units)
logistic_ovr   one logistic regression per class on standardised features
gboost_stumps  one-vs-rest gradient boosting of depth-1 stumps, logistic loss
rule_based     ordered threshold rules, first match wins, one-hot scores
majority       empirical class prior

Each spec can restrict the model to a named subset of the dataset features
(``hyperparameters["features"]``), which is how the data branch and the
knowledge branch see different views of the same instance.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import expit

from .data import Instance, LabeledDataset, rest_label
from .errors import ConfigError, DimensionError

KINDS = ("knn", "logistic_ovr", "gboost_stumps", "rule_based", "majority")
BRANCHES = ("data", "knowledge")
COMPARATORS = ("<", "<=", ">", ">=")

DEFAULTS = {
    "knn": {"k": 5},
    "logistic_ovr": {"learning_rate": 0.1, "epochs": 300, "l2": 0.0},
    "gboost_stumps": {"rounds": 50, "shrinkage": 0.1, "reg_lambda": 1.0},
    "rule_based": {},
    "majority": {},
}

_ALLOWED = {
    "knn": {"k", "features", "per_class"},
    "logistic_ovr": {"learning_rate", "epochs", "l2", "features", "per_class"},
    "gboost_stumps": {"rounds", "shrinkage", "reg_lambda", "features", "per_class"},
    "rule_based": {"rules", "default_class", "features", "per_class"},
    "majority": {"features", "per_class"},
}


@dataclass(frozen=True)
class Rule:
    feature: str
    op: str
    threshold: float
    consequent: str

    def __post_init__(self):
        if self.op not in COMPARATORS:
            raise ConfigError(f"unknown comparator {self.op!r}")
        object.__setattr__(self, "threshold", float(self.threshold))
        object.__setattr__(self, "consequent", str(self.consequent))

    def matches(self, value):
        if self.op == "<":
            return value < self.threshold
        if self.op == "<=":
            return value <= self.threshold
        if self.op == ">":
            return value > self.threshold
        return value >= self.threshold

    def as_text(self) -> str:
        return f"{self.feature} {self.op} {self.threshold:g} -> {self.consequent}"


@dataclass(frozen=True)
class RuleSet:
    rules: tuple
    default_class: str

    @classmethod
    def from_config(cls, rules, default_class) -> "RuleSet":
        parsed = []
        for r in rules:
            if isinstance(r, Rule):
                parsed.append(r)
            elif isinstance(r, Mapping):
                parsed.append(Rule(r["feature"], r["op"], r["threshold"], r["consequent"]))
            else:
                parsed.append(Rule(*r))
        return cls(tuple(parsed), str(default_class))

    def to_config(self) -> dict:
        return {
            "rules": [
                {"feature": r.feature, "op": r.op, "threshold": r.threshold, "consequent": r.consequent}
                for r in self.rules
            ],
            "default_class": self.default_class,
        }

    def features(self) -> list:
        names = []
        for r in self.rules:
            if r.feature not in names:
                names.append(r.feature)
        return names

    def fired(self, values: Mapping[str, float]) -> Rule | None:
        for r in self.rules:
            if r.matches(values[r.feature]):
                return r
        return None


@dataclass
class ClassifierSpec:
    id: str
    kind: str
    branch: str = "data"
    hyperparameters: dict = field(default_factory=dict)
    one_vs_rest: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown classifier kind {self.kind!r}")
        if self.branch not in BRANCHES:
            raise ConfigError(f"unknown branch {self.branch!r}")
        extra = set(self.hyperparameters) - _ALLOWED[self.kind]
        if extra:
            raise ConfigError(f"{self.id}: unknown hyperparameters for {self.kind}: {sorted(extra)}")
        hp = dict(DEFAULTS[self.kind])
        hp.update(self.hyperparameters)
        self.hyperparameters = hp
        _validate_hyperparameters(self)

    def to_config(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "branch": self.branch,
            "hyperparameters": copy.deepcopy(self.hyperparameters),
            "one_vs_rest": self.one_vs_rest,
        }

    @classmethod
    def from_config(cls, d: Mapping) -> "ClassifierSpec":
        try:
            return cls(
                id=str(d["id"]),
                kind=d["kind"],
                branch=d.get("branch", "data"),
                hyperparameters=dict(d.get("hyperparameters") or {}),
                one_vs_rest=bool(d.get("one_vs_rest", False)),
            )
        except KeyError as exc:
            raise ConfigError(f"classifier spec missing field {exc}") from None


def _validate_hyperparameters(spec: ClassifierSpec) -> None:
    hp = spec.hyperparameters
    if spec.kind == "knn" and (int(hp["k"]) != hp["k"] or hp["k"] < 1):
        raise ConfigError(f"{spec.id}: knn k must be a positive integer")
    if spec.kind == "logistic_ovr":
        if hp["learning_rate"] <= 0 or int(hp["epochs"]) != hp["epochs"] or hp["epochs"] < 1:
            raise ConfigError(f"{spec.id}: logistic needs learning_rate > 0 and epochs >= 1")
        if hp["l2"] < 0:
            raise ConfigError(f"{spec.id}: l2 must be non-negative")
    if spec.kind == "gboost_stumps":
        if int(hp["rounds"]) != hp["rounds"] or hp["rounds"] < 1:
            raise ConfigError(f"{spec.id}: gboost rounds must be >= 1")
        if not 0 < hp["shrinkage"] <= 1:
            raise ConfigError(f"{spec.id}: gboost shrinkage must be in (0, 1]")
        if hp["reg_lambda"] < 0:
            raise ConfigError(f"{spec.id}: reg_lambda must be non-negative")
    if spec.kind == "rule_based":
        if "rules" not in hp or "default_class" not in hp:
            raise ConfigError(f"{spec.id}: rule_based needs rules and default_class")
        RuleSet.from_config(hp["rules"], hp["default_class"])


class TrainedClassifier:
    """Fitted pool member.  Immutable after construction."""

    kind = ""

    def __init__(self, spec, class_set, feature_names, feature_idx):
        self.spec = spec
        self.class_set = tuple(class_set)
        self.feature_names = tuple(feature_names)
        self.feature_idx = list(feature_idx)

    @property
    def id(self) -> str:
        return self.spec.id

    @property
    def branch(self) -> str:
        return self.spec.branch

    @property
    def used_features(self) -> list:
        return [self.feature_names[j] for j in self.feature_idx]

    @property
    def positive_class(self) -> str | None:
        """Target class of a one-vs-rest member, else None."""
        if len(self.class_set) == 2 and self.class_set[1] == rest_label(self.class_set[0]):
            return self.class_set[0]
        return None

    def _view(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != len(self.feature_names):
            raise DimensionError(
                f"{self.id}: expected {len(self.feature_names)} features, got {X.shape[1]}"
            )
        return X[:, self.feature_idx]

    def _scores(self, Xv: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def predict_scores_batch(self, X) -> np.ndarray:
        return self._scores(self._view(X))

    def predict_scores(self, instance) -> np.ndarray:
        x = instance.features if isinstance(instance, Instance) else instance
        return self.predict_scores_batch(np.asarray(x, dtype=float)[None, :])[0]

    def predict_batch(self, X) -> np.ndarray:
        S = self.predict_scores_batch(X)
        return np.asarray(self.class_set, dtype=object)[np.argmax(S, axis=1)]

    def predict(self, instance) -> str:
        return str(self.predict_batch(
            (instance.features if isinstance(instance, Instance) else np.asarray(instance, float))[None, :]
        )[0])

    def state(self) -> dict:
        raise NotImplementedError

    def dump(self) -> dict:
        return {
            "model_kind": self.kind,
            "spec": self.spec.to_config(),
            "class_set": list(self.class_set),
            "feature_names": list(self.feature_names),
            "feature_idx": list(self.feature_idx),
            "state": self.state(),
        }

    def __repr__(self):
        return f"<{type(self).__name__} {self.id} {self.branch} classes={list(self.class_set)}>"


def _normalize_rows(S: np.ndarray) -> np.ndarray:
    total = S.sum(axis=1, keepdims=True)
    flat = total[:, 0] <= 0
    if np.any(flat):
        S = S.copy()
        S[flat] = 1.0
        total = S.sum(axis=1, keepdims=True)
    return S / total


class _Standardizer:
    def __init__(self, mean, scale):
        self.mean = np.asarray(mean, dtype=float)
        self.scale = np.asarray(scale, dtype=float)

    @classmethod
    def fit(cls, X):
        mean = X.mean(axis=0)
        scale = X.std(axis=0)
        scale[scale == 0] = 1.0
        return cls(mean, scale)

    def __call__(self, X):
        return (X - self.mean) / self.scale


class MajorityClassifier(TrainedClassifier):
    kind = "majority"

    def __init__(self, spec, class_set, feature_names, feature_idx, prior):
        super().__init__(spec, class_set, feature_names, feature_idx)
        self.prior = np.asarray(prior, dtype=float)

    def _scores(self, Xv):
        return np.tile(self.prior, (Xv.shape[0], 1))

    def state(self):
        return {"prior": self.prior.tolist()}


class KNNClassifier(TrainedClassifier):
    kind = "knn"

    def __init__(self, spec, class_set, feature_names, feature_idx, X, codes, k):
        super().__init__(spec, class_set, feature_names, feature_idx)
        self.X = np.asarray(X, dtype=float)
        self.codes = np.asarray(codes, dtype=int)
        self.k = int(k)

    def _scores(self, Xv):
        k = min(self.k, self.X.shape[0])
        D = cdist(Xv, self.X)
        nearest = np.argsort(D, axis=1, kind="stable")[:, :k]
        votes = self.codes[nearest]
        S = np.zeros((Xv.shape[0], len(self.class_set)))
        for c in range(len(self.class_set)):
            S[:, c] = np.sum(votes == c, axis=1)
        return S / k

    def state(self):
        return {"X": self.X.tolist(), "codes": self.codes.tolist(), "k": self.k}


def logistic_loss_grad(W, b, X, Y, l2=0.0):
    """Mean binary log-loss summed over one-vs-rest columns, and its gradient.

    ``W`` is (m, C), ``b`` is (C,), ``Y`` is a (n, C) 0/1 matrix.
    Returns ``(loss, grad_W, grad_b)``.
    """
    n = X.shape[0]
    Z = X @ W + b
    # log(1 + exp(-z)) for y=1 and log(1 + exp(z)) for y=0, computed stably
    loss = np.sum(np.logaddexp(0.0, Z) - Y * Z) / n + 0.5 * l2 * np.sum(W * W)
    R = expit(Z) - Y
    grad_W = X.T @ R / n + l2 * W
    grad_b = R.sum(axis=0) / n
    return float(loss), grad_W, grad_b


class LogisticOVRClassifier(TrainedClassifier):
    kind = "logistic_ovr"

    def __init__(self, spec, class_set, feature_names, feature_idx, W, b, standardizer, loss_history=()):
        super().__init__(spec, class_set, feature_names, feature_idx)
        self.W = np.asarray(W, dtype=float).reshape(len(feature_idx), len(class_set))
        self.b = np.asarray(b, dtype=float)
        self.standardizer = standardizer
        self.loss_history = list(loss_history)

    def decision_function(self, Xv):
        return self.standardizer(Xv) @ self.W + self.b

    def _scores(self, Xv):
        return _normalize_rows(expit(self.decision_function(Xv)))

    def state(self):
        return {
            "W": self.W.tolist(),
            "b": self.b.tolist(),
            "mean": self.standardizer.mean.tolist(),
            "scale": self.standardizer.scale.tolist(),
        }


@dataclass(frozen=True)
class Stump:
    feature: int
    threshold: float
    left: float
    right: float

    def __call__(self, Xs):
        if self.feature < 0:
            return np.full(Xs.shape[0], self.left)
        return np.where(Xs[:, self.feature] <= self.threshold, self.left, self.right)


class GBoostClassifier(TrainedClassifier):
    kind = "gboost_stumps"

    def __init__(self, spec, class_set, feature_names, feature_idx, base, stumps, shrinkage,
                 standardizer, loss_history=()):
        super().__init__(spec, class_set, feature_names, feature_idx)
        self.base = np.asarray(base, dtype=float)
        self.stumps = [list(s) for s in stumps]
        self.shrinkage = float(shrinkage)
        self.standardizer = standardizer
        self.loss_history = list(loss_history)

    def decision_function(self, Xv):
        Xs = self.standardizer(Xv)
        F = np.tile(self.base, (Xs.shape[0], 1))
        for c, stumps in enumerate(self.stumps):
            for s in stumps:
                F[:, c] += s(Xs)
        return F

    def _scores(self, Xv):
        return _normalize_rows(expit(self.decision_function(Xv)))

    def state(self):
        return {
            "base": self.base.tolist(),
            "stumps": [[[s.feature, s.threshold, s.left, s.right] for s in col] for col in self.stumps],
            "shrinkage": self.shrinkage,
            "mean": self.standardizer.mean.tolist(),
            "scale": self.standardizer.scale.tolist(),
        }


class RuleBasedClassifier(TrainedClassifier):
    kind = "rule_based"

    def __init__(self, spec, class_set, feature_names, feature_idx, ruleset):
        super().__init__(spec, class_set, feature_names, feature_idx)
        self.ruleset = ruleset
        self._rule_cols = [self.feature_idx.index(feature_names.index(r.feature)) for r in ruleset.rules]
        self._rule_codes = [self.class_set.index(r.consequent) for r in ruleset.rules]
        self._default_code = self.class_set.index(ruleset.default_class)

    def fired_rules(self, X) -> np.ndarray:
        """Index of the first matching rule per row, -1 when the default fired."""
        Xv = self._view(X)
        out = np.full(Xv.shape[0], -1, dtype=int)
        for r_i, (rule, col) in enumerate(zip(self.ruleset.rules, self._rule_cols)):
            hit = (out == -1) & rule.matches(Xv[:, col])
            out[hit] = r_i
        return out

    def _scores(self, Xv):
        fired = np.full(Xv.shape[0], -1, dtype=int)
        for r_i, (rule, col) in enumerate(zip(self.ruleset.rules, self._rule_cols)):
            fired[(fired == -1) & rule.matches(Xv[:, col])] = r_i
        codes = np.where(fired >= 0, np.asarray(self._rule_codes + [0])[fired], self._default_code)
        S = np.zeros((Xv.shape[0], len(self.class_set)))
        S[np.arange(Xv.shape[0]), codes] = 1.0
        return S

    def state(self):
        return self.ruleset.to_config()


def _one_hot(codes, n_classes):
    Y = np.zeros((len(codes), n_classes))
    Y[np.arange(len(codes)), codes] = 1.0
    return Y


def _fit_logistic(Xs, Y, learning_rate, epochs, l2):
    m, C = Xs.shape[1], Y.shape[1]
    W = np.zeros((m, C))
    b = np.zeros(C)
    history = []
    for _ in range(int(epochs)):
        loss, gW, gb = logistic_loss_grad(W, b, Xs, Y, l2)
        history.append(loss)
        W -= learning_rate * gW
        b -= learning_rate * gb
    history.append(logistic_loss_grad(W, b, Xs, Y, l2)[0])
    return W, b, history


def _binary_logloss(F, y):
    return float(np.mean(np.logaddexp(0.0, F) - y * F))


def _best_stump(Xs, order, g, h, reg_lambda):
    """Stump maximising the second-order gain ``G_L^2/(H_L+l) + G_R^2/(H_R+l)``.

    ``g`` is the negative gradient (y - p), ``h`` the hessian p(1-p).
    Returns ``(feature, threshold, left_value, right_value)``; feature is -1
    when no feature has two distinct values.
    """
    G, H = g.sum(), h.sum()
    best = (-1, 0.0, G / (H + reg_lambda), G / (H + reg_lambda))
    best_gain = G * G / (H + reg_lambda) + 1e-12 * abs(G)
    for j in range(Xs.shape[1]):
        idx = order[:, j]
        xs = Xs[idx, j]
        gl = np.cumsum(g[idx])[:-1]
        hl = np.cumsum(h[idx])[:-1]
        valid = xs[1:] > xs[:-1]
        if not np.any(valid):
            continue
        gr, hr = G - gl, H - hl
        gain = gl * gl / (hl + reg_lambda) + gr * gr / (hr + reg_lambda)
        gain = np.where(valid, gain, -np.inf)
        i = int(np.argmax(gain))
        if gain[i] > best_gain:
            best_gain = gain[i]
            thr = 0.5 * (xs[i] + xs[i + 1])
            best = (j, float(thr), float(gl[i] / (hl[i] + reg_lambda)), float(gr[i] / (hr[i] + reg_lambda)))
    return best


def _fit_gboost(Xs, Y, rounds, shrinkage, reg_lambda):
    n, C = Y.shape
    order = np.argsort(Xs, axis=0, kind="stable")
    prior = np.clip(Y.mean(axis=0), 1e-6, 1 - 1e-6)
    base = np.log(prior / (1 - prior))
    F = np.tile(base, (n, 1))
    stumps = [[] for _ in range(C)]
    losses = [[_binary_logloss(F[:, c], Y[:, c])] for c in range(C)]
    for c in range(C):
        y = Y[:, c]
        if y.min() == y.max():
            continue  # single-class column: constant prior model
        for _ in range(int(rounds)):
            p = expit(F[:, c])
            g, h = y - p, p * (1 - p)
            feat, thr, left, right = _best_stump(Xs, order, g, h, reg_lambda)
            step = shrinkage
            current = losses[c][-1]
            # backtrack until the round does not increase the training loss
            for _halving in range(30):
                stump = Stump(feat, thr, step * left, step * right)
                F_new = F[:, c] + stump(Xs)
                new_loss = _binary_logloss(F_new, y)
                if new_loss <= current:
                    break
                step *= 0.5
            else:
                stump, F_new, new_loss = Stump(-1, 0.0, 0.0, 0.0), F[:, c], current
            F[:, c] = F_new
            stumps[c].append(stump)
            losses[c].append(new_loss)
    history = [float(sum(col[r] if r < len(col) else col[-1] for col in losses))
               for r in range(int(rounds) + 1)]
    return base, stumps, history


def fit(spec: ClassifierSpec, data: LabeledDataset, seed: int = 0) -> TrainedClassifier:
    """Fit ``spec`` on ``data``.

    Every trainer is deterministic; ``seed`` is accepted so callers can treat
    all kinds uniformly and is recorded by the pipeline for provenance.
    """
    if len(data) == 0:
        raise ConfigError(f"{spec.id}: cannot fit on an empty dataset")
    hp = spec.hyperparameters
    names = hp.get("features")
    if spec.kind == "rule_based" and names is None:
        names = RuleSet.from_config(hp["rules"], hp["default_class"]).features()
    feature_idx = data.feature_indices(names) if names is not None else list(range(data.dimensionality))
    X = data.X[:, feature_idx]
    class_set = data.class_set
    codes = data.label_codes()
    args = (spec, class_set, data.feature_names, feature_idx)

    if spec.kind == "majority":
        counts = np.bincount(codes, minlength=len(class_set)).astype(float)
        return MajorityClassifier(*args, prior=counts / counts.sum())
    if spec.kind == "knn":
        return KNNClassifier(*args, X=X, codes=codes, k=hp["k"])
    if spec.kind == "rule_based":
        ruleset = RuleSet.from_config(hp["rules"], hp["default_class"])
        used = [data.feature_names[j] for j in feature_idx]
        for r in ruleset.rules:
            if r.feature not in used:
                raise ConfigError(f"{spec.id}: rule references unknown feature {r.feature!r}")
        for c in [r.consequent for r in ruleset.rules] + [ruleset.default_class]:
            if c not in class_set:
                raise ConfigError(f"{spec.id}: rule consequent {c!r} is not a known class")
        return RuleBasedClassifier(*args, ruleset=ruleset)

    Y = _one_hot(codes, len(class_set))
    standardizer = _Standardizer.fit(X)
    Xs = standardizer(X)
    if spec.kind == "logistic_ovr":
        W, b, history = _fit_logistic(Xs, Y, hp["learning_rate"], hp["epochs"], hp["l2"])
        return LogisticOVRClassifier(*args, W=W, b=b, standardizer=standardizer, loss_history=history)
    base, stumps, history = _fit_gboost(Xs, Y, hp["rounds"], hp["shrinkage"], hp["reg_lambda"])
    return GBoostClassifier(*args, base=base, stumps=stumps, shrinkage=hp["shrinkage"],
                            standardizer=standardizer, loss_history=history)


def fit_gboost(data: LabeledDataset, rounds: int = 50, shrinkage: float = 0.1, seed: int = 0,
               id: str = "gboost", branch: str = "knowledge", features=None) -> GBoostClassifier:
    hp = {"rounds": rounds, "shrinkage": shrinkage}
    if features is not None:
        hp["features"] = list(features)
    return fit(ClassifierSpec(id, "gboost_stumps", branch, hp), data, seed)


def load_classifier(d: Mapping) -> TrainedClassifier:
    spec = ClassifierSpec.from_config(d["spec"])
    args = (spec, d["class_set"], d["feature_names"], d["feature_idx"])
    st = d["state"]
    kind = d["model_kind"]
    if kind == "majority":
        return MajorityClassifier(*args, prior=st["prior"])
    if kind == "knn":
        X = np.asarray(st["X"], dtype=float).reshape(-1, len(d["feature_idx"]))
        return KNNClassifier(*args, X=X, codes=st["codes"], k=st["k"])
    if kind == "rule_based":
        return RuleBasedClassifier(*args, ruleset=RuleSet.from_config(st["rules"], st["default_class"]))
    standardizer = _Standardizer(st["mean"], st["scale"])
    if kind == "logistic_ovr":
        return LogisticOVRClassifier(*args, W=st["W"], b=st["b"], standardizer=standardizer)
    if kind == "gboost_stumps":
        stumps = [[Stump(int(f), float(t), float(l), float(r)) for f, t, l, r in col] for col in st["stumps"]]
        return GBoostClassifier(*args, base=st["base"], stumps=stumps, shrinkage=st["shrinkage"],
                                standardizer=standardizer)
    raise ConfigError(f"unknown model kind {kind!r}")


def _fit_binary(spec: ClassifierSpec, data: LabeledDataset, cls: str, seed: int) -> TrainedClassifier:
    rest = rest_label(cls)
    if not np.any(data.y == cls):
        return MajorityClassifier(spec, [cls, rest], data.feature_names,
                                  list(range(data.dimensionality)), prior=[0.0, 1.0])
    binary = data.relabel(np.where(data.y == cls, cls, rest), [cls, rest])
    return fit(spec, binary, seed)


def one_vs_rest_pool(data: LabeledDataset, per_class_specs: Mapping, seed: int = 0) -> list:
    """Fit one binary ``c`` vs ``not-c`` member per (class, spec).

    ``per_class_specs`` maps every class of ``data.class_set`` to a spec or a
    list of specs.  The returned list follows ``class_set`` order and, within
    a class, the order the specs were given in.  A class without instances
    gets a constant member that always answers ``not-c``.  Member ids are
    taken from the specs as given and must be unique across the pool.
    """
    missing = [c for c in data.class_set if c not in per_class_specs]
    if missing:
        raise ConfigError(f"no one-vs-rest spec for classes {missing}")
    pool = []
    for c in data.class_set:
        specs = per_class_specs[c]
        if isinstance(specs, ClassifierSpec):
            specs = [specs]
        pool.extend(_fit_binary(spec, data, c, seed) for spec in specs)
    _check_unique_ids(pool)
    return pool


def concrete_ovr_spec(spec: ClassifierSpec, cls: str) -> ClassifierSpec:
    """Binary spec for ``cls`` derived from a ``one_vs_rest`` template."""
    hp = dict(spec.hyperparameters)
    overrides = hp.pop("per_class", None) or {}
    hp.update(overrides.get(cls, {}))
    return ClassifierSpec(f"{spec.id}_{cls}", spec.kind, spec.branch, _strip_defaults(hp, spec.kind))


def build_pool(specs: Sequence[ClassifierSpec], data: LabeledDataset, seed: int = 0) -> list:
    """Fit every spec; ``one_vs_rest`` templates expand to one member per class."""
    pool = []
    for spec in specs:
        if spec.one_vs_rest:
            pool.extend(_fit_binary(concrete_ovr_spec(spec, c), data, c, seed) for c in data.class_set)
        else:
            pool.append(fit(spec, data, seed))
    _check_unique_ids(pool)
    return pool


def _check_unique_ids(pool) -> None:
    ids = [m.id for m in pool]
    dupes = sorted({i for i in ids if ids.count(i) > 1})
    if dupes:
        raise ConfigError(f"duplicate classifier ids {dupes}")


def _strip_defaults(hp, kind):
    return {k: v for k, v in hp.items() if k in _ALLOWED[kind] and k != "per_class"}


def class_space_scores(model: TrainedClassifier, X, class_set: Sequence[str]) -> np.ndarray:
    """Scores of ``model`` re-expressed over the full ``class_set``.

    A one-vs-rest member puts its positive score on its class and spreads the
    complement evenly over the remaining classes.
    """
    S = model.predict_scores_batch(X)
    pos = model.positive_class
    class_set = list(class_set)
    if pos is None:
        out = np.zeros((S.shape[0], len(class_set)))
        for i, c in enumerate(model.class_set):
            out[:, class_set.index(c)] = S[:, i]
        return out
    C = len(class_set)
    if C == 1:
        return np.ones((S.shape[0], 1))
    out = np.repeat(S[:, 1:2] / (C - 1), C, axis=1)
    out[:, class_set.index(pos)] = S[:, 0]
    return out
