"""Ready-made generator, pool and rule presets for the two synthetic tasks."""

from __future__ import annotations

import numpy as np

from .classifiers import ClassifierSpec, RuleSet
from .generators import DR_FEATURES, SOZ_FEATURES, DomainShift, GeneratorSpec

DR_DOMAINS = ("aptos", "eyepacs", "messidor", "messidor2")

SOZ_RULES = RuleSet.from_config(
    [
        {"feature": "K-ThruV", "op": ">", "threshold": 0.35, "consequent": "noise"},
        {"feature": "K-NumC", "op": "<=", "threshold": 2.5, "consequent": "soz"},
        {"feature": "K-SparseF", "op": ">=", "threshold": 0.62, "consequent": "soz"},
        {"feature": "K-NumC", "op": ">", "threshold": 5.5, "consequent": "noise"},
    ],
    default_class="rsn",
)

DR_RULES = RuleSet.from_config(
    [
        {"feature": "exudates", "op": ">=", "threshold": 11.0, "consequent": "grade4"},
        {"feature": "hard_hemorrhages", "op": ">=", "threshold": 6.0, "consequent": "grade3"},
        {"feature": "exudates", "op": ">=", "threshold": 3.5, "consequent": "grade2"},
        {"feature": "exudates", "op": ">=", "threshold": 1.2, "consequent": "grade1"},
    ],
    default_class="grade0",
)

SOZ_FACTS = [
    "Seizure-onset components usually show a single compact activation cluster.",
    "Activation through the ventricles points to a noise component.",
]

DR_FACTS = [
    "Hemorrhages in all four quadrants suggest severe non-proliferative retinopathy.",
    "Hard exudates near the macula raise the grade.",
]


def data_feature_names(n: int) -> list:
    return [f"f{j + 1}" for j in range(n)]


def soz_generator(seed: int = 0, n_per_domain: int = 300, domains=("train", "test"),
                  minority_fraction: float = 0.05, n_data_features: int = 4,
                  data_signal: float = 0.5) -> GeneratorSpec:
    return GeneratorSpec("rare_class_soz", n_per_domain=n_per_domain, domains=list(domains),
                         minority_fraction=minority_fraction, n_data_features=n_data_features,
                         data_signal=data_signal, seed=seed)


def soz_pool(n_data_features: int = 4) -> list:
    """Strong knowledge member (boosted stumps) and a weak data member (linear)."""
    return [
        ClassifierSpec("Mk", "gboost_stumps", "knowledge", {"features": list(SOZ_FEATURES)}),
        ClassifierSpec("Md", "logistic_ovr", "data", {"features": data_feature_names(n_data_features)}),
    ]


def dr_shifted_domains(seed: int, n_data_features: int = 8, data_shift: float = 1.0,
                       knowledge_log_scale: float = 0.1, names=DR_DOMAINS) -> list:
    """Per-domain shifts: random offsets on the data view, mild rescaling of lesion counts."""
    rng = np.random.default_rng(1000 + seed)
    out = []
    for name in names:
        offsets = {f: float(rng.normal(scale=data_shift)) for f in data_feature_names(n_data_features)}
        scale = {f: float(np.exp(rng.normal(scale=knowledge_log_scale))) for f in DR_FEATURES}
        out.append(DomainShift(name, offsets, scale))
    return out


def dr_generator(seed: int = 0, n_per_domain: int = 400, n_data_features: int = 8,
                 data_signal: float = 1.0, domains=None) -> GeneratorSpec:
    if domains is None:
        domains = dr_shifted_domains(seed, n_data_features)
    return GeneratorSpec("graded_domains_dr", n_per_domain=n_per_domain, domains=list(domains),
                         n_data_features=n_data_features, data_signal=data_signal, seed=seed)


def dr_pool(n_data_features: int = 8) -> list:
    """Five data-branch and five knowledge-branch one-vs-rest members."""
    return [
        ClassifierSpec("Md", "logistic_ovr", "data", {"features": data_feature_names(n_data_features)},
                       one_vs_rest=True),
        ClassifierSpec("Mk", "gboost_stumps", "knowledge", {"features": list(DR_FEATURES)},
                       one_vs_rest=True),
    ]
