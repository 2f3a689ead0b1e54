import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from conftest import make_blobs
from eksaii.classifiers import (
    ClassifierSpec,
    RuleSet,
    build_pool,
    fit,
    fit_gboost,
    load_classifier,
    logistic_loss_grad,
    one_vs_rest_pool,
)
from eksaii.data import LabeledDataset
from eksaii.errors import ConfigError, DimensionError
from eksaii.generators import GeneratorSpec, gen_graded_domains


def step_data(n=40):
    x = np.linspace(-1, 1, n)
    x = x[x != 0]
    return LabeledDataset(x[:, None], np.where(x < 0, "A", "B"), ["A", "B"], feature_names=["x"])


LESION_RULES = {"rules": [["lesion_count", ">", 4, "grade4"]], "default_class": "grade0"}


def lesion_data():
    X = np.array([[1.0, 0.3], [7.0, 0.1], [3.0, 0.9], [5.0, 0.5]])
    return LabeledDataset(X, ["grade0", "grade4", "grade0", "grade4"], ["grade0", "grade4"],
                          feature_names=["lesion_count", "other"])


class TestSpecs:
    def test_defaults_merged(self):
        spec = ClassifierSpec("g", "gboost_stumps")
        assert spec.hyperparameters["rounds"] == 50
        assert spec.hyperparameters["shrinkage"] == 0.1

    @pytest.mark.parametrize("kind, hp", [
        ("gboost_stumps", {"rounds": 0}),
        ("gboost_stumps", {"shrinkage": 1.5}),
        ("knn", {"k": 0}),
        ("logistic_ovr", {"epochs": 0}),
        ("knn", {"bogus": 1}),
        ("rule_based", {}),
    ])
    def test_invalid_hyperparameters(self, kind, hp):
        with pytest.raises(ConfigError):
            ClassifierSpec("m", kind, hyperparameters=hp)

    def test_unknown_kind_and_branch(self):
        with pytest.raises(ConfigError):
            ClassifierSpec("m", "svm")
        with pytest.raises(ConfigError):
            ClassifierSpec("m", "knn", branch="oracle")

    def test_config_round_trip(self):
        spec = ClassifierSpec("r", "rule_based", "knowledge", LESION_RULES)
        assert ClassifierSpec.from_config(spec.to_config()) == spec


class TestExamples:
    def test_majority(self):
        d = LabeledDataset(np.arange(10.0)[:, None], ["A"] * 9 + ["B"], ["A", "B"])
        m = fit(ClassifierSpec("maj", "majority"), d)
        assert set(m.predict_batch(np.random.default_rng(0).normal(size=(20, 1)))) == {"A"}
        np.testing.assert_allclose(m.predict_scores([100.0]), [0.9, 0.1])

    def test_knn_exact_training_point(self, blobs):
        m = fit(ClassifierSpec("knn", "knn", hyperparameters={"k": 1}), blobs)
        for i in range(len(blobs)):
            assert m.predict(blobs.X[i]) == blobs.y[i]

    def test_knn_vote_fractions(self):
        d = LabeledDataset(np.array([[0.0], [0.1], [0.2], [5.0], [6.0]]), ["A", "A", "B", "B", "B"], ["A", "B"])
        m = fit(ClassifierSpec("knn", "knn", hyperparameters={"k": 3}), d)
        np.testing.assert_allclose(m.predict_scores([0.05]), [2 / 3, 1 / 3])

    def test_logistic_separable(self):
        d = step_data(41)
        assert len(d) == 40
        m = fit(ClassifierSpec("lr", "logistic_ovr", hyperparameters={"epochs": 500}), d)
        acc = np.mean(m.predict_batch(d.X) == d.y)
        # brute-force threshold sweep: a perfect 1-D threshold exists
        xs = np.sort(d.X[:, 0])
        best = max(np.mean(np.where(d.X[:, 0] < t, "A", "B") == d.y) for t in (xs[:-1] + xs[1:]) / 2)
        assert best == 1.0
        assert acc == 1.0

    def test_tie_breaks_to_first_class(self):
        d = LabeledDataset(np.array([[0.0], [1.0]]), ["A", "B"], ["A", "B"])
        m = fit(ClassifierSpec("maj", "majority"), d)
        np.testing.assert_allclose(m.predict_scores([0.5]), [0.5, 0.5])
        assert m.predict([0.5]) == "A"

    def test_rule_based(self):
        m = fit(ClassifierSpec("r", "rule_based", "knowledge", LESION_RULES), lesion_data())
        assert m.predict([7.0, 0.0]) == "grade4"
        assert m.predict([2.0, 0.0]) == "grade0"
        np.testing.assert_array_equal(m.predict_scores([7.0, 0.0]), [0.0, 1.0])
        assert m.used_features == ["lesion_count"]

    def test_rule_unknown_feature(self):
        hp = {"rules": [["nope", ">", 4, "grade4"]], "default_class": "grade0"}
        with pytest.raises(ConfigError):
            fit(ClassifierSpec("r", "rule_based", "knowledge", hp), lesion_data())

    def test_first_matching_rule_wins(self):
        rs = RuleSet.from_config([["a", ">", 1, "X"], ["a", ">", 0, "Y"]], "Z")
        assert rs.fired({"a": 2}).consequent == "X"
        assert rs.fired({"a": 0.5}).consequent == "Y"
        assert rs.fired({"a": -1}) is None

    def test_dimension_mismatch(self, blobs):
        m = fit(ClassifierSpec("lr", "logistic_ovr"), blobs)
        with pytest.raises(DimensionError):
            m.predict([1.0, 2.0, 3.0])

    def test_empty_class_gets_zero_score(self):
        d = LabeledDataset(np.array([[0.0], [1.0], [2.0]]), ["A", "A", "B"], ["A", "B", "C"])
        for kind in ("majority", "knn", "logistic_ovr", "gboost_stumps"):
            m = fit(ClassifierSpec("m", kind), d)
            s = m.predict_scores([0.5])
            assert s.shape == (3,)
            assert s.sum() == pytest.approx(1.0)


class TestBoosting:
    def test_one_round_step(self):
        d = step_data()
        m = fit_gboost(d, rounds=1, shrinkage=1.0)
        assert np.mean(m.predict_batch(d.X) == d.y) == 1.0

    def test_rounds_zero_rejected(self):
        with pytest.raises(ConfigError):
            fit_gboost(step_data(), rounds=0)

    @pytest.mark.parametrize("shrinkage", [0.1, 0.5, 1.0])
    def test_loss_non_increasing(self, shrinkage):
        d = make_blobs(seed=4, n_per_class=(30, 20, 10), spread=2.0)
        m = fit_gboost(d, rounds=30, shrinkage=shrinkage)
        h = np.asarray(m.loss_history)
        assert len(h) == 31
        assert np.all(np.diff(h) <= 1e-12)

    def test_single_class_constant_model(self):
        d = LabeledDataset(np.arange(5.0)[:, None], ["A"] * 5, ["A"])
        m = fit_gboost(d, rounds=3)
        assert set(m.predict_batch(d.X)) == {"A"}
        assert m.loss_history[-1] == pytest.approx(m.loss_history[0])

    def test_boosting_beats_linear_on_lesion_task(self):
        spec = GeneratorSpec("graded_domains_dr", n_per_domain=400, seed=1)
        d = gen_graded_domains(spec)["d0"]
        g = fit(ClassifierSpec("g", "gboost_stumps"), d)
        lr = fit(ClassifierSpec("l", "logistic_ovr"), d)
        assert np.mean(g.predict_batch(d.X) == d.y) >= np.mean(lr.predict_batch(d.X) == d.y)


def test_logistic_gradient_matches_finite_differences():
    rng = np.random.default_rng(11)
    for _ in range(20):
        n, m, C = rng.integers(3, 15), rng.integers(1, 5), rng.integers(1, 4)
        X = rng.normal(size=(n, m))
        Y = (rng.random(size=(n, C)) < 0.5).astype(float)
        W, b = rng.normal(size=(m, C)), rng.normal(size=C)
        l2 = float(rng.choice([0.0, 0.1]))
        _, gW, gb = logistic_loss_grad(W, b, X, Y, l2)
        h = 1e-6
        for idx in np.ndindex(W.shape):
            Wp, Wm = W.copy(), W.copy()
            Wp[idx] += h
            Wm[idx] -= h
            num = (logistic_loss_grad(Wp, b, X, Y, l2)[0] - logistic_loss_grad(Wm, b, X, Y, l2)[0]) / (2 * h)
            assert abs(num - gW[idx]) <= 1e-5 * max(1.0, abs(num))
        for c in range(C):
            bp, bm = b.copy(), b.copy()
            bp[c] += h
            bm[c] -= h
            num = (logistic_loss_grad(W, bp, X, Y, l2)[0] - logistic_loss_grad(W, bm, X, Y, l2)[0]) / (2 * h)
            assert abs(num - gb[c]) <= 1e-5 * max(1.0, abs(num))


ALL_SPECS = [
    ClassifierSpec("maj", "majority"),
    ClassifierSpec("knn", "knn", hyperparameters={"k": 3}),
    ClassifierSpec("lr", "logistic_ovr", hyperparameters={"epochs": 50}),
    ClassifierSpec("gb", "gboost_stumps", hyperparameters={"rounds": 10}),
    ClassifierSpec("rb", "rule_based", "knowledge",
                   {"rules": [["x0", ">", 3.0, "c1"], ["x1", ">", 3.0, "c2"]], "default_class": "c0"}),
]


@pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: s.kind)
def test_determinism(spec):
    d = make_blobs(seed=2)
    a, b = fit(spec, d, seed=5), fit(spec, d, seed=5)
    assert a.dump() == b.dump()
    Q = np.random.default_rng(0).normal(scale=4, size=(30, 2))
    np.testing.assert_array_equal(a.predict_scores_batch(Q), b.predict_scores_batch(Q))


@pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: s.kind)
def test_dump_load_round_trip(spec):
    d = make_blobs(seed=2)
    m = fit(spec, d)
    again = load_classifier(m.dump())
    Q = np.random.default_rng(1).normal(scale=4, size=(30, 2))
    np.testing.assert_array_equal(m.predict_scores_batch(Q), again.predict_scores_batch(Q))


_fitted = {s.kind: fit(s, make_blobs(seed=3)) for s in ALL_SPECS}


@settings(max_examples=50)
@given(st.sampled_from(sorted(_fitted)), arrays(float, (5, 2), elements=st.floats(-1e3, 1e3)))
def test_score_normalization(kind, Q):
    S = _fitted[kind].predict_scores_batch(Q)
    assert np.all(S >= 0) and np.all(S <= 1)
    np.testing.assert_allclose(S.sum(axis=1), 1.0, atol=1e-9)
    for label in _fitted[kind].predict_batch(Q):
        assert label in _fitted[kind].class_set


@settings(max_examples=25)
@given(st.randoms(use_true_random=False))
def test_rule_based_ignores_labels(rnd):
    d = make_blobs(seed=3)
    shuffled = list(d.y)
    rnd.shuffle(shuffled)
    a = fit(ALL_SPECS[-1], d)
    b = fit(ALL_SPECS[-1], d.relabel(shuffled, d.class_set))
    Q = np.random.default_rng(0).normal(scale=4, size=(40, 2))
    np.testing.assert_array_equal(a.predict_batch(Q), b.predict_batch(Q))


@pytest.mark.parametrize("seed", range(5))
def test_knn_with_all_points_is_majority(seed):
    d = make_blobs(seed=seed, n_per_class=(7, 12, 5))
    knn = fit(ClassifierSpec("knn", "knn", hyperparameters={"k": len(d)}), d)
    maj = fit(ClassifierSpec("maj", "majority"), d)
    Q = np.random.default_rng(seed).normal(scale=5, size=(20, 2))
    np.testing.assert_array_equal(knn.predict_batch(Q), maj.predict_batch(Q))


class TestOneVsRest:
    def _five_class(self):
        return make_blobs(seed=0, n_per_class=(12, 10, 8, 6, 5), m=3)

    def test_pool_of_ten(self):
        d = self._five_class()
        specs = {c: [ClassifierSpec(f"Md_{c}", "logistic_ovr", "data", {"epochs": 50}),
                     ClassifierSpec(f"Mk_{c}", "gboost_stumps", "knowledge", {"rounds": 5})]
                 for c in d.class_set}
        pool = one_vs_rest_pool(d, specs)
        assert len(pool) == 10
        assert [m.positive_class for m in pool[:2]] == ["c0", "c0"]
        assert pool[0].class_set == ("c0", "not-c0")

    def test_duplicate_ids_rejected(self):
        d = self._five_class()
        spec = ClassifierSpec("same", "majority")
        with pytest.raises(ConfigError):
            one_vs_rest_pool(d, {c: spec for c in d.class_set})

    def test_missing_class_spec(self):
        d = self._five_class()
        with pytest.raises(ConfigError):
            one_vs_rest_pool(d, {"c0": ClassifierSpec("m", "majority")})

    def test_two_class_equals_direct_binary(self):
        d = make_blobs(seed=1, n_per_class=(15, 15))
        spec = ClassifierSpec("lr", "logistic_ovr", hyperparameters={"epochs": 100})
        member = one_vs_rest_pool(d, {"c0": spec, "c1": ClassifierSpec("lr1", "logistic_ovr")})[0]
        direct = fit(spec, d)
        Q = np.random.default_rng(2).normal(scale=4, size=(50, 2))
        pred_member = member.predict_batch(Q)
        pred_direct = direct.predict_batch(Q)
        np.testing.assert_array_equal(pred_member == "c0", pred_direct == "c0")

    def test_empty_positive_class(self):
        d = LabeledDataset(np.arange(6.0)[:, None], ["A"] * 3 + ["B"] * 3, ["A", "B", "C"])
        pool = one_vs_rest_pool(d, {c: ClassifierSpec(f"m_{c}", "logistic_ovr") for c in d.class_set})
        empty = pool[2]
        assert set(empty.predict_batch(d.X)) == {"not-C"}
        np.testing.assert_array_equal(empty.predict_scores([3.0]), [0.0, 1.0])

    def test_template_expansion(self):
        d = self._five_class()
        pool = build_pool([ClassifierSpec("Mk", "gboost_stumps", "knowledge", {"rounds": 3}, one_vs_rest=True),
                           ClassifierSpec("DL", "logistic_ovr", hyperparameters={"epochs": 20})], d)
        assert [m.id for m in pool] == [f"Mk_c{i}" for i in range(5)] + ["DL"]
