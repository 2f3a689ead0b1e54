import numpy as np
import pytest
from scipy import stats

from eksaii.errors import ConfigError
from eksaii.generators import (
    DR_CLASSES,
    DR_FEATURES,
    SOZ_FEATURES,
    DomainShift,
    GeneratorSpec,
    gen_graded_domains,
    gen_rare_class,
)


def test_exact_minority_count():
    d = gen_rare_class(GeneratorSpec("rare_class_soz", n_per_domain=200, minority_fraction=0.05))["d0"]
    assert d.class_counts()["soz"] == 10
    assert len(d) == 200
    assert list(d.feature_names) == list(SOZ_FEATURES)


def test_same_seed_identical():
    spec = GeneratorSpec("rare_class_soz", n_per_domain=120, domains=["a", "b"], n_data_features=3, seed=7)
    a, b = gen_rare_class(spec), gen_rare_class(spec)
    for k in a:
        np.testing.assert_array_equal(a[k].X, b[k].X)
        assert list(a[k].y) == list(b[k].y)
        assert list(a[k].ids) == list(b[k].ids)


def test_unshifted_domains_share_a_distribution():
    doms = gen_rare_class(GeneratorSpec("rare_class_soz", n_per_domain=400, domains=["a", "b"], seed=3))
    a, b = doms["a"], doms["b"]
    assert a.class_counts() == b.class_counts()
    for j in range(a.dimensionality):
        for c in a.class_set:
            assert stats.ks_2samp(a.X[a.y == c, j], b.X[b.y == c, j]).pvalue > 1e-3


@pytest.mark.parametrize("fraction", [0.0, 0.5, 0.7, -0.1])
def test_invalid_minority_fraction(fraction):
    with pytest.raises(ConfigError):
        GeneratorSpec("rare_class_soz", minority_fraction=fraction)


def test_no_domains_rejected():
    with pytest.raises(ConfigError):
        GeneratorSpec("rare_class_soz", domains=[])


def test_grade_monotone_means():
    d = gen_graded_domains(GeneratorSpec("graded_domains_dr", n_per_domain=2000, seed=0))["d0"]
    for j, _ in enumerate(DR_FEATURES):
        means = [d.X[d.y == c, j].mean() for c in DR_CLASSES]
        assert means == sorted(means)


def test_grade4_count_frozen():
    # prior 0.05 of 400 expects 20; seed 0 realizes 29
    d = gen_graded_domains(GeneratorSpec("graded_domains_dr", n_per_domain=400, seed=0))["d0"]
    assert d.class_counts()["grade4"] == 29


def test_domain_shift_moves_means():
    spec = GeneratorSpec("graded_domains_dr", n_per_domain=1500, n_data_features=2, seed=1,
                         domains=[DomainShift("base"), DomainShift("moved", {"f1": 3.0}, {"exudates": 2.0})])
    doms = gen_graded_domains(spec)
    base, moved = doms["base"], doms["moved"]
    f1 = base.feature_names.index("f1")
    assert moved.X[:, f1].mean() - base.X[:, f1].mean() == pytest.approx(3.0, abs=0.3)
    assert moved.X[:, 0].mean() / base.X[:, 0].mean() == pytest.approx(2.0, rel=0.15)


def test_unknown_shift_feature():
    spec = GeneratorSpec("graded_domains_dr", domains=[DomainShift("x", {"nope": 1.0})])
    with pytest.raises(ConfigError):
        gen_graded_domains(spec)


def test_label_prior_override():
    spec = GeneratorSpec("rare_class_soz", n_per_domain=100,
                         domains=[DomainShift("x", label_prior={"noise": 0.5, "rsn": 0.3, "soz": 0.2})])
    assert gen_rare_class(spec)["x"].class_counts() == {"noise": 50, "rsn": 30, "soz": 20}
