"""Seeded synthetic stand-ins for the two clinical tasks.

``gen_rare_class`` mimics component triage from resting-state fMRI: three
classes (noise, rsn, soz) with a rare soz class, described by four
expert-knowledge features.  ``gen_graded_domains`` mimics five-grade
retinopathy grading from lesion counts with rare severe grades.

Both can append ``n_data_features`` opaque features ``f1..fn`` standing in
for learned image embeddings.  Domains differ by per-feature mean offsets,
multiplicative scale factors and label priors, so acquisition shift can be
put on the data view, the knowledge view, or both.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.stats import truncnorm

from .data import LabeledDataset
from .errors import ConfigError

SOZ_CLASSES = ("noise", "rsn", "soz")
SOZ_FEATURES = ("K-NumC", "K-ThruV", "K-SparseA", "K-SparseF")
# per-class (mean, sd) of each knowledge feature, rows follow SOZ_CLASSES
SOZ_MEANS = np.array([
    [7.0, 0.55, 0.30, 0.35],
    [3.5, 0.10, 0.60, 0.45],
    [1.6, 0.15, 0.75, 0.75],
])
SOZ_SDS = np.array([
    [2.0, 0.15, 0.10, 0.10],
    [1.2, 0.06, 0.10, 0.10],
    [0.8, 0.08, 0.10, 0.10],
])
SOZ_NOISE_SHARE = 0.6

DR_CLASSES = ("grade0", "grade1", "grade2", "grade3", "grade4")
DR_FEATURES = ("exudates", "hard_hemorrhages", "soft_hemorrhages", "cotton_wool")
DR_MEANS = np.array([
    [0.5, 0.3, 0.2, 0.1],
    [2.0, 1.5, 1.0, 0.5],
    [5.0, 4.0, 3.0, 1.5],
    [9.0, 8.0, 6.0, 3.5],
    [14.0, 12.0, 10.0, 6.0],
])
DR_PRIORS = (0.45, 0.2, 0.2, 0.1, 0.05)

_PROTOTYPE_SEED = 20240611


@dataclass
class DomainShift:
    name: str
    mean_offset: dict = field(default_factory=dict)
    scale: dict = field(default_factory=dict)
    label_prior: dict | None = None

    @classmethod
    def from_config(cls, d) -> "DomainShift":
        if isinstance(d, str):
            return cls(d)
        return cls(str(d["name"]), dict(d.get("mean_offset") or {}), dict(d.get("scale") or {}),
                   dict(d["label_prior"]) if d.get("label_prior") else None)

    def to_config(self) -> dict:
        return {"name": self.name, "mean_offset": dict(self.mean_offset), "scale": dict(self.scale),
                "label_prior": dict(self.label_prior) if self.label_prior else None}


@dataclass
class GeneratorSpec:
    kind: str
    n_per_domain: int = 200
    domains: list = field(default_factory=lambda: [DomainShift("d0")])
    minority_fraction: float = 0.05
    n_data_features: int = 0
    data_signal: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("rare_class_soz", "graded_domains_dr"):
            raise ConfigError(f"unknown generator kind {self.kind!r}")
        if not 0 < self.minority_fraction < 0.5:
            raise ConfigError("minority_fraction must lie in (0, 0.5)")
        if not self.domains:
            raise ConfigError("at least one domain is required")
        self.domains = [d if isinstance(d, DomainShift) else DomainShift.from_config(d) for d in self.domains]
        names = [d.name for d in self.domains]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate domain names {names}")
        if self.n_per_domain < 1 or self.n_data_features < 0:
            raise ConfigError("n_per_domain must be >= 1 and n_data_features >= 0")

    @classmethod
    def from_config(cls, d: Mapping) -> "GeneratorSpec":
        d = dict(d)
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown generator keys {sorted(unknown)}")
        if "kind" not in d:
            raise ConfigError("generator spec needs a kind")
        return cls(**d)

    def to_config(self) -> dict:
        return {"kind": self.kind, "n_per_domain": self.n_per_domain,
                "domains": [dm.to_config() for dm in self.domains],
                "minority_fraction": self.minority_fraction, "n_data_features": self.n_data_features,
                "data_signal": self.data_signal, "seed": self.seed}


def _largest_remainder(n: int, prior: Sequence[float]) -> np.ndarray:
    p = np.asarray(prior, dtype=float)
    p = p / p.sum()
    raw = n * p
    counts = np.floor(raw).astype(int)
    for i in np.argsort(-(raw - counts), kind="stable")[: n - counts.sum()]:
        counts[i] += 1
    return counts


def _truncated(rng, mean, sd, size):
    a = (0.0 - mean) / sd
    return truncnorm.rvs(a, np.inf, loc=mean, scale=sd, size=size, random_state=rng)


def _prototypes(n_classes: int, n_data: int, ordinal: bool) -> np.ndarray:
    """Fixed class centres for the data view (independent of the run seed)."""
    rng = np.random.default_rng(_PROTOTYPE_SEED + n_classes)
    if n_data == 0:
        return np.zeros((n_classes, 0))
    if ordinal:
        direction = rng.normal(size=n_data)
        direction /= np.linalg.norm(direction)
        wobble = rng.normal(scale=0.3, size=(n_classes, n_data))
        return np.outer(np.arange(n_classes) - (n_classes - 1) / 2, direction) + wobble
    P = rng.normal(size=(n_classes, n_data))
    return P / np.linalg.norm(P, axis=1, keepdims=True)


def _draw(spec: GeneratorSpec, classes, knowledge_names, means, sds, counts_fn, ordinal) -> dict:
    rng = np.random.default_rng(spec.seed)
    data_names = tuple(f"f{j + 1}" for j in range(spec.n_data_features))
    names = tuple(knowledge_names) + data_names
    known = set(names)
    protos = _prototypes(len(classes), spec.n_data_features, ordinal)
    out = {}
    for dom in spec.domains:
        for key in list(dom.mean_offset) + list(dom.scale):
            if key not in known:
                raise ConfigError(f"domain {dom.name}: unknown feature {key!r}")
        counts = counts_fn(dom, rng)
        labels = np.repeat(np.arange(len(classes)), counts)
        n = len(labels)
        X = np.empty((n, len(names)))
        for j, fname in enumerate(knowledge_names):
            off = dom.mean_offset.get(fname, 0.0)
            for c in range(len(classes)):
                rows = labels == c
                if np.any(rows):
                    X[rows, j] = _truncated(rng, means[c, j] + off, sds[c, j], int(rows.sum()))
        for j, fname in enumerate(data_names):
            col = len(knowledge_names) + j
            X[:, col] = spec.data_signal * protos[labels, j] + dom.mean_offset.get(fname, 0.0) \
                + rng.normal(size=n)
        for j, fname in enumerate(names):
            X[:, j] *= dom.scale.get(fname, 1.0)
        perm = rng.permutation(n)
        out[dom.name] = LabeledDataset(
            X=X[perm],
            y=[classes[c] for c in labels[perm]],
            class_set=classes,
            feature_names=names,
            ids=[f"{dom.name}-{i}" for i in range(n)],
            domains=[dom.name] * n,
        )
    return out


def gen_rare_class(spec: GeneratorSpec) -> dict:
    """Domain -> dataset for the rare-class (noise / rsn / soz) task.

    The soz count is exactly ``round(n * minority_fraction)``; the remainder
    splits 60/40 between noise and rsn.  A domain ``label_prior`` replaces
    that split with a largest-remainder allocation.
    """
    if spec.kind != "rare_class_soz":
        raise ConfigError("gen_rare_class needs kind rare_class_soz")

    def counts(dom, rng):
        n = spec.n_per_domain
        if dom.label_prior:
            return _largest_remainder(n, [dom.label_prior.get(c, 0.0) for c in SOZ_CLASSES])
        n_soz = int(round(n * spec.minority_fraction))
        n_noise = int(round((n - n_soz) * SOZ_NOISE_SHARE))
        return np.array([n_noise, n - n_soz - n_noise, n_soz])

    return _draw(spec, SOZ_CLASSES, SOZ_FEATURES, SOZ_MEANS, SOZ_SDS, counts, ordinal=False)


def gen_graded_domains(spec: GeneratorSpec) -> dict:
    """Domain -> dataset for the five-grade task.

    Grade counts are a seeded multinomial draw from the grade priors
    (default 0.45/0.2/0.2/0.1/0.05, overridable per domain).  Lesion means
    rise with grade; spreads grow with the mean.
    """
    if spec.kind != "graded_domains_dr":
        raise ConfigError("gen_graded_domains needs kind graded_domains_dr")

    def counts(dom, rng):
        prior = np.asarray([dom.label_prior.get(c, 0.0) for c in DR_CLASSES] if dom.label_prior else DR_PRIORS)
        return rng.multinomial(spec.n_per_domain, prior / prior.sum())

    sds = 0.35 * DR_MEANS + 0.5
    return _draw(spec, DR_CLASSES, DR_FEATURES, DR_MEANS, sds, counts, ordinal=True)


def generate(spec: GeneratorSpec) -> dict:
    if spec.kind == "rare_class_soz":
        return gen_rare_class(spec)
    return gen_graded_domains(spec)
