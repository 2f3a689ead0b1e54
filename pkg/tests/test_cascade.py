import numpy as np
import pytest

import oracles
from conftest import make_blobs
from eksaii.cascade import (
    CascadeConfig,
    Leaf,
    Split,
    build_cascade,
    fuse_weighted,
    score_candidates,
    select_classifier,
)
from eksaii.classifiers import ClassifierSpec, build_pool, fit
from eksaii.data import LabeledDataset
from eksaii.errors import ConfigError, DegenerateNode
from eksaii.generators import generate
from eksaii.metrics import EigScore
from eksaii.pipeline import train
from eksaii.scenarios import dr_generator, dr_pool


def line_data(n=20):
    x = np.linspace(-1, 1, n)
    return LabeledDataset(x[:, None], np.where(x < 0, "A", "B"), ["A", "B"], feature_names=["x"])


def perfect_rule():
    return ClassifierSpec("oracle", "rule_based", "knowledge",
                          {"rules": [["x", ">", 0.0, "B"]], "default_class": "A"})


def mixed_pool(d, seed=0):
    return build_pool([
        ClassifierSpec("knn", "knn", hyperparameters={"k": 3}),
        ClassifierSpec("lr", "logistic_ovr", hyperparameters={"epochs": 60}),
        ClassifierSpec("gb", "gboost_stumps", "knowledge", {"rounds": 8, "features": ["x0"]}),
        ClassifierSpec("maj", "majority"),
    ], d, seed)


def oracle_eig(node_data, model, k=5):
    pts, labels = node_data.X.tolist(), list(node_data.y)
    raw = oracles.imbalance(oracles.class_entropies(pts, labels, k))
    Z = model.predict_scores_batch(node_data.X).tolist()
    return raw - oracles.imbalance(oracles.class_entropies(Z, labels, k))


def walk(node, path=()):
    yield node, path
    if isinstance(node, Split):
        for child in node.children.values():
            yield from walk(child, path + (node.classifier_id,))


class TestSelection:
    def test_reported_root_choice(self):
        assert select_classifier([EigScore("EKIE", 0.22), EigScore("DL", 0.027)]) == "EKIE"

    def test_tie_goes_to_first(self):
        assert select_classifier([EigScore("a", 0.1), EigScore("b", 0.1)]) == "a"

    def test_all_negative(self):
        assert select_classifier([EigScore("a", -0.3), EigScore("b", -0.1)]) == "b"


class TestScoring:
    def test_tight_one_hot_candidate_non_negative(self):
        rng = np.random.default_rng(30)
        X = np.column_stack([np.concatenate([rng.uniform(lo, lo + 1, 10) for lo in (0, 3, 6)]),
                             rng.normal(scale=3, size=30)])
        d = LabeledDataset(X, ["c0"] * 10 + ["c1"] * 10 + ["c2"] * 10, ["c0", "c1", "c2"])
        rules = {"rules": [["x0", ">", 5.0, "c2"], ["x0", ">", 2.0, "c1"]], "default_class": "c0"}
        model = fit(ClassifierSpec("r", "rule_based", "knowledge", rules), d)
        assert np.all(model.predict_batch(d.X) == d.y)
        (score,) = score_candidates(d, [model])
        assert score.eig >= 0
        assert score.eig == pytest.approx(oracle_eig(d, model), abs=1e-9)

    def test_majority_candidate_on_epsilon_floor(self):
        d = make_blobs(seed=1, n_per_class=(12, 12))
        maj = fit(ClassifierSpec("maj", "majority"), d)
        (score,) = score_candidates(d, [maj])
        assert score.eig == pytest.approx(oracle_eig(d, maj), abs=1e-9)
        # constant scores with equal class sizes: both classes sit at log2(12), so gain is the raw imbalance
        raw = oracles.imbalance(oracles.class_entropies(d.X.tolist(), list(d.y), 5))
        assert score.eig == pytest.approx(raw, abs=1e-9)

    def test_identical_candidates_identical_scores(self):
        d = make_blobs(seed=2)
        a = fit(ClassifierSpec("a", "logistic_ovr"), d)
        b = fit(ClassifierSpec("b", "logistic_ovr"), d)
        sa, sb = score_candidates(d, [a, b])
        assert sa.eig == sb.eig
        assert [sa.classifier_id, sb.classifier_id] == ["a", "b"]

    def test_too_small(self):
        d = make_blobs(seed=0)
        with pytest.raises(DegenerateNode):
            score_candidates(d.subset([0]), [fit(ClassifierSpec("m", "majority"), d)])


class TestBuild:
    def test_perfect_classifier_depth_one(self):
        d = line_data()
        tree = build_cascade(d, build_pool([perfect_rule()], d), CascadeConfig(gini_threshold=0.0))
        assert isinstance(tree.root, Split) and tree.root.classifier_id == "oracle"
        assert tree.depth() == 1
        assert all(leaf.gini == 0 for leaf in tree.leaves())
        trace = tree.predict_with_trace([0.7])
        assert len(trace.steps) == 1 and trace.final_label == "B"
        assert np.all(tree.predict_batch(d.X) == d.y)

    def test_constant_and_perfect_members_tie_on_equal_classes(self):
        # both collapse every class onto the epsilon floor, so both gains equal the raw imbalance
        d = line_data()
        pool = build_pool([ClassifierSpec("maj", "majority"), perfect_rule()], d)
        a, b = score_candidates(d, pool)
        assert a.eig == b.eig
        tree = build_cascade(d, pool, CascadeConfig(gini_threshold=0.0))
        assert tree.root.classifier_id == "maj"
        assert np.all(tree.predict_batch(d.X) == d.y)

    def test_max_depth_one(self):
        d = make_blobs(seed=3)
        tree = build_cascade(d, mixed_pool(d), CascadeConfig(max_depth=1, gini_threshold=0.0, min_node_size=1))
        assert isinstance(tree.root, Split)
        for child in tree.root.children.values():
            assert isinstance(child, Leaf) and child.stop_reason == "max_depth"
            assert child.label == max(d.class_set, key=lambda c: (child.counts.get(c, 0), -d.class_set.index(c)))

    def test_unknown_forced_root(self):
        d = line_data()
        with pytest.raises(ConfigError):
            build_cascade(d, build_pool([perfect_rule()], d), CascadeConfig(force_root="nope"))

    def test_fallback_for_empty_partition(self):
        # the rule can emit C, but no build instance ever reaches it
        d = LabeledDataset(np.linspace(-1, 1, 20)[:, None], ["A"] * 10 + ["B"] * 10, ["A", "B", "C"],
                           feature_names=["x"])
        spec = ClassifierSpec("r", "rule_based", "knowledge",
                              {"rules": [["x", ">", 5.0, "C"], ["x", ">", 0.0, "B"]], "default_class": "A"})
        tree = build_cascade(d, build_pool([spec], d), CascadeConfig(gini_threshold=0.0))
        assert set(tree.root.children) == {"A", "B"}
        trace = tree.predict_with_trace([9.0])
        assert trace.fallback
        assert trace.steps[0].partition == "C"
        assert trace.final_label == tree.root.fallback.label
        assert tree.predict_batch([[9.0]])[0] == trace.final_label
        assert not tree.predict_with_trace([0.5]).fallback


def _seeded_build(seed):
    rng = np.random.default_rng(seed)
    n_classes = int(rng.integers(2, 5))
    d = make_blobs(seed=seed, n_per_class=tuple(int(v) for v in rng.integers(6, 25, size=n_classes)),
                   spread=float(rng.uniform(0.8, 3.0)))
    cfg = CascadeConfig(gini_threshold=float(rng.choice([0.0, 0.1, 0.2])), min_node_size=int(rng.integers(2, 6)))
    return d, mixed_pool(d, seed), cfg


@pytest.mark.parametrize("seed", range(12))
def test_construction_invariants(seed):
    d, pool, cfg = _seeded_build(seed)
    tree = build_cascade(d, pool, cfg)
    by_id = {m.id: m for m in pool}
    index = {i: n for n, i in enumerate(d.ids)}
    max_depth = len(pool)
    for node, path in walk(tree.root):
        members = sorted(index[i] for i in node.members)
        node_data = d.subset(np.asarray(members, dtype=int))
        assert node.gini == pytest.approx(oracles.gini(list(node_data.class_counts().values())), abs=1e-12)
        if isinstance(node, Split):
            available = [m for m in pool if m.id not in path]
            assert node.classifier_id not in path
            eigs = {m.id: oracle_eig(node_data, m) for m in available}
            assert node.eig == pytest.approx(max(eigs.values()), abs=1e-9)
            first_best = next(i for i, v in eigs.items() if v >= max(eigs.values()) - 1e-12)
            assert node.classifier_id == first_best
            child_members = [set(c.members) for c in node.children.values()]
            assert sum(len(c) for c in child_members) == len(node.members)
            assert set().union(*child_members) == set(node.members)
            preds = by_id[node.classifier_id].predict_batch(node_data.X)
            for label, child in node.children.items():
                assert set(child.members) == {node_data.ids[i] for i in np.flatnonzero(preds == label)}
        else:
            reasons = {
                "purity": node.gini <= cfg.gini_threshold,
                "max_depth": node.depth >= max_depth,
                "min_node_size": len(node.members) < max(cfg.min_node_size, 2),
                "pool_exhausted": len(path) == len(pool),
            }
            assert reasons[node.stop_reason], (node.stop_reason, node)


@pytest.mark.parametrize("seed", range(5))
def test_trace_replay_reaches_recorded_leaf(seed):
    d, pool, cfg = _seeded_build(seed)
    tree = build_cascade(d, pool, cfg)
    Q = np.vstack([d.X, np.random.default_rng(seed).normal(scale=6, size=(30, 2))])
    batch = tree.predict_batch(Q)
    for x, label in zip(Q, batch):
        trace = tree.predict_with_trace(x)
        node = tree.replay([s.partition for s in trace.steps])
        assert node.node_id == trace.leaf_id
        assert node.label == trace.final_label == label
        assert trace.path == [s.classifier_id for s in trace.steps]
        assert len(set(trace.path)) == len(trace.path)


@pytest.mark.parametrize("seed", range(6))
def test_raising_gini_threshold_never_deepens(seed):
    d, pool, _ = _seeded_build(seed)
    depths = [build_cascade(d, pool, CascadeConfig(gini_threshold=t, min_node_size=2)).depth()
              for t in (0.0, 0.1, 0.2, 0.4, 0.6, 0.9)]
    assert depths == sorted(depths, reverse=True)


def test_allow_reuse_lifts_path_restriction():
    d = make_blobs(seed=8, n_per_class=(20, 20, 20), spread=2.5)
    pool = mixed_pool(d)[:2]
    tree = build_cascade(d, pool, CascadeConfig(allow_reuse=True, max_depth=4, gini_threshold=0.0, min_node_size=2))
    assert tree.depth() >= 1


class TestFusion:
    def test_single_branch(self):
        assert fuse_weighted([([0.2, 0.7, 0.1], 0.5)], ["a", "b", "c"]) == "b"

    def test_equal_weights_tie(self):
        assert fuse_weighted([([1, 0], 0.3), ([0, 1], 0.3)], ["a", "b"]) == "a"

    def test_reported_weights(self):
        assert fuse_weighted([([0, 1], 0.22), ([1, 0], 0.027)], ["a", "b"]) == "b"

    def test_all_zero_weights(self):
        assert fuse_weighted([([0.2, 0.8], 0.0), ([0.6, 0.4], 0.0)], ["a", "b"]) == "b"


@pytest.mark.parametrize("seed", range(3))
def test_dr_grade0_triage_at_root(seed):
    d = generate(dr_generator(seed=seed, n_per_domain=400))["aptos"]
    model = train(d, dr_pool(), CascadeConfig(force_root="Mk_grade0"), smote="full", seed=seed)
    root = model.tree.root
    assert root.classifier_id == "Mk_grade0"
    assert set(root.children) == {"grade0", "not-grade0"}
    assert isinstance(root.children["grade0"], Leaf)
    g0 = d.X[d.y == "grade0"]
    traces = [model.predict_with_trace(x) for x in g0]
    exits = [t for t in traces if t.steps[0].partition == "grade0"]
    assert len(exits) > 0.8 * len(g0)
    assert all(len(t.steps) == 1 and t.final_label == "grade0" for t in exits)
    severe = [model.predict_with_trace(x) for x in d.X[d.y == "grade4"]]
    assert all(len(t.steps) > 1 for t in severe if t.steps[0].partition == "not-grade0")
    assert any(len(t.steps) > 1 for t in severe)
