import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from probekit.core import EmbeddingTable, Kind, LabelTable
from probekit.probes import (
    FitOptions,
    LinearProbe,
    SingleClassError,
    SingularSystemError,
    SplitPlan,
    fit_linear,
    fit_logistic,
    fit_poisson,
    logistic_objective,
    poisson_objective,
    predict,
    predict_proba,
    r2,
    roc_auc,
    run_linear_probing,
)


def col(*xs):
    return np.array(xs, dtype=float)[:, None]


class TestLogistic:
    def test_separable(self):
        p = fit_logistic(col(-2, -1, 1, 2), [0, 0, 1, 1], FitOptions(l2=0.1))
        assert p.converged
        assert roc_auc(predict_proba(p, col(-2, -1, 1, 2))[:, 1], [0, 0, 1, 1]) == 1.0

    def test_single_class(self):
        with pytest.raises(SingleClassError):
            fit_logistic(col(1, 2, 3), [0, 0, 0])

    @pytest.mark.parametrize("seed", range(3))
    def test_independent_chance(self, seed):
        rng = np.random.default_rng(seed)
        Z, y = rng.normal(size=(2000, 5)), rng.integers(0, 2, 2000)
        p = fit_logistic(Z[:1000], y[:1000], FitOptions(l2=1.0))
        assert 0.45 <= roc_auc(predict_proba(p, Z[1000:])[:, 1], y[1000:]) <= 0.55

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(1)
        X, y = rng.normal(size=(30, 3)), rng.integers(0, 3, 30).astype(float)
        for K, yy in ((2, (y > 0).astype(float)), (3, y)):
            n = (4 if K == 2 else 4 * K)
            th = rng.normal(size=n)
            f, g = logistic_objective(th, X, yy, 0.3, K)
            num = np.array([(logistic_objective(th + e, X, yy, 0.3, K)[0] - logistic_objective(th - e, X, yy, 0.3, K)[0]) / 2e-6
                            for e in np.eye(n) * 1e-6])
            np.testing.assert_allclose(g, num, atol=1e-6)

    def test_multinomial_predicts_all_columns(self):
        rng = np.random.default_rng(0)
        y = rng.choice([0, 2], 60)
        p = fit_logistic(rng.normal(size=(60, 2)) + y[:, None], y, n_classes=4)
        P = predict_proba(p, np.zeros((5, 2)))
        assert P.shape == (5, 4)
        np.testing.assert_allclose(P.sum(axis=1), 1.0)
        assert np.all(P[:, [1, 3]] == 0)

    def test_nonconvergence_flagged(self):
        p = fit_logistic(col(-2, -1, 1, 2), [0, 0, 1, 1], FitOptions(l2=0.0, max_iter=3))
        assert not p.converged

    def test_weight_norm_shrinks_with_l2(self):
        rng = np.random.default_rng(4)
        Z = rng.normal(size=(300, 4))
        y = (Z @ [1.0, -0.5, 0.2, 0.0] + 0.5 * rng.normal(size=300) > 0).astype(int)
        norms = [np.linalg.norm(fit_logistic(Z, y, FitOptions(l2=l)).weights) for l in (1e-3, 1e-2, 0.1, 1, 10)]
        assert all(a >= b for a, b in zip(norms, norms[1:]))


class TestLinear:
    def test_exact_recovery(self):
        z = np.linspace(-3, 3, 20)
        p = fit_linear(z[:, None], 2 * z + 3, l2=0.0)
        w, b = p.raw_coefficients()
        assert abs(w[0] - 2) < 1e-8 and abs(b - 3) < 1e-8

    def test_constant_target(self):
        p = fit_linear(np.random.default_rng(0).normal(size=(10, 2)), np.full(10, 4.0), l2=0.1)
        np.testing.assert_allclose(p.weights, 0, atol=1e-12)
        assert p.bias == pytest.approx(4.0)

    def test_rank_deficient(self):
        z = np.arange(10.0)
        Z = np.column_stack([z, 2 * z])
        with pytest.raises(SingularSystemError):
            fit_linear(Z, z, l2=0.0, standardize=False)
        assert np.all(np.isfinite(fit_linear(Z, z, l2=1e-3).weights))

    def test_negative_l2(self):
        with pytest.raises(ValueError):
            fit_linear(col(1, 2, 3), [1, 2, 3], l2=-1)


class TestPoisson:
    def test_constant(self):
        p = fit_poisson(np.random.default_rng(0).normal(size=(50, 2)), np.full(50, 5), FitOptions(l2=0.0))
        np.testing.assert_allclose(p.weights, 0, atol=1e-8)
        assert p.bias == pytest.approx(math.log(5), abs=1e-8)

    def test_weight_recovery(self):
        rng = np.random.default_rng(0)
        z = rng.normal(size=10_000)
        p = fit_poisson(z[:, None], rng.poisson(np.exp(z)), FitOptions(l2=0.0), standardize=False)
        assert abs(p.weights[0] - 1) < 0.05

    def test_negative_target(self):
        with pytest.raises(ValueError):
            fit_poisson(col(1, 2), [1, -1])

    def test_gradient(self):
        rng = np.random.default_rng(2)
        X, y = rng.normal(size=(25, 2)), rng.poisson(2.0, 25).astype(float)
        th = rng.normal(size=3) * 0.3
        _, g = poisson_objective(th, X, y, 0.5)
        num = np.array([(poisson_objective(th + e, X, y, 0.5)[0] - poisson_objective(th - e, X, y, 0.5)[0]) / 2e-6
                        for e in np.eye(3) * 1e-6])
        np.testing.assert_allclose(g, num, atol=1e-6)


class TestPredict:
    def test_zero_probes(self):
        Z = np.random.default_rng(0).normal(size=(4, 3))
        binary = LinearProbe(np.zeros(3), 0.0, "logit", 1.0, classes=np.array([0, 1]), n_classes=2)
        np.testing.assert_allclose(predict_proba(binary, Z), 0.5)
        cat = LinearProbe(np.zeros((3, 3)), np.zeros(3), "logit", 1.0, classes=np.arange(3), n_classes=3)
        np.testing.assert_allclose(predict_proba(cat, Z), 1 / 3)
        pois = LinearProbe(np.zeros(3), math.log(5), "log", 1.0)
        np.testing.assert_allclose(predict(pois, Z), 5.0)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            predict(LinearProbe(np.zeros(3), 0.0, "identity", 0.0), np.zeros((2, 2)))


class TestMetrics:
    def test_auc(self):
        s = [0.9, 0.8, 0.2, 0.1]
        assert roc_auc(s, [1, 1, 0, 0]) == 1.0
        assert roc_auc(s, [0, 0, 1, 1]) == 0.0
        assert roc_auc([0.3] * 4, [1, 0, 1, 0]) == 0.5
        with pytest.raises(SingleClassError):
            roc_auc(s, [1, 1, 1, 1])

    @given(st.lists(st.integers(0, 5), min_size=2, max_size=30), st.integers(0, 1000))
    @settings(max_examples=60, deadline=None)
    def test_auc_matches_pair_count(self, scores, seed):
        labels = np.random.default_rng(seed).integers(0, 2, len(scores))
        if labels.min() == labels.max():
            return
        s = np.array(scores, dtype=float)
        pos, neg = s[labels == 1], s[labels == 0]
        expected = np.mean([(a > b) + 0.5 * (a == b) for a in pos for b in neg])
        assert roc_auc(s, labels) == pytest.approx(expected, abs=1e-12)

    def test_r2(self):
        t = np.array([1.0, 2.0, 4.0])
        assert r2(t, t) == 1.0
        assert r2(np.full(3, t.mean()), t) == pytest.approx(0.0)
        with pytest.raises(ValueError):
            r2(t, np.ones(3))


class TestRunLinearProbing:
    def setup_method(self):
        rng = np.random.default_rng(0)
        n = 200
        Z = rng.normal(size=(n, 3))
        ids = tuple(f"m{i}" for i in range(n))
        self.emb = EmbeddingTable(ids, Z)
        counts = rng.poisson(np.exp(Z[:, 1] + 1))
        cat = np.argmax(Z, axis=1)
        self.labels = LabelTable(
            ids,
            {"bin": (Z[:, 0] > 0).astype(float), "cnt": counts.astype(float), "cont": Z[:, 2] * 2 + 1,
             "cat": cat.astype(float), "const": np.zeros(n), "missing": np.full(n, np.nan)},
            {"bin": Kind("binary"), "cnt": Kind("count"), "cont": Kind("continuous"),
             "cat": Kind("categorical", 3), "const": Kind("binary"), "missing": Kind("binary")},
        )

    def test_rows(self):
        rows = {r.property: r for r in run_linear_probing(self.emb, self.labels, split=SplitPlan(stratified=True))}
        assert rows["bin"].metric == "auc" and rows["bin"].value > 0.95
        assert rows["cat"].metric == "auc" and rows["cat"].value > 0.9
        assert rows["cnt"].metric == "r2" and rows["cnt"].value > 0.3
        assert rows["cont"].value > 0.99
        assert rows["const"].value is None and rows["const"].reason == "single-class"
        assert rows["missing"].value is None and rows["missing"].reason == "no-labels"
        assert rows["bin"].n_train == 160 and rows["bin"].n_test == 40

    def test_unknown_property(self):
        (row,) = run_linear_probing(self.emb, self.labels, ["nope"])
        assert row.reason == "unknown-property"

    def test_external_split(self):
        rows = run_linear_probing(self.emb, self.labels, ["bin"], SplitPlan(test_ids=frozenset({"m0", "m1", "m2", "m3"})))
        assert rows[0].n_test == 4

    def test_deterministic(self):
        a = run_linear_probing(self.emb, self.labels)
        b = run_linear_probing(self.emb, self.labels)
        assert a == b


def test_objective_history_non_increasing():
    rng = np.random.default_rng(5)
    Z = rng.normal(size=(200, 3))
    y = (Z[:, 0] + rng.normal(size=200) > 0).astype(int)
    for p in (fit_logistic(Z, y, FitOptions(l2=0.01)), fit_poisson(Z, rng.poisson(2.0, 200), FitOptions(l2=0.01))):
        h = np.array(p.history)
        assert len(h) >= 2 and np.all(np.diff(h) <= 1e-12)


def test_auc_monotone_transform_invariant():
    rng = np.random.default_rng(6)
    s, t = rng.normal(size=100), rng.integers(0, 2, 100)
    assert roc_auc(np.exp(3 * s) + 1, t) == roc_auc(s, t)


def test_ridge_normal_equations():
    rng = np.random.default_rng(7)
    Z, y = rng.normal(size=(50, 4)), rng.normal(size=50)
    lam = 0.3
    p = fit_linear(Z, y, l2=lam, standardize=False)
    Zc, yc = Z - Z.mean(axis=0), y - y.mean()
    lhs = (Zc.T @ Zc + 50 * lam * np.eye(4)) @ p.weights
    assert np.linalg.norm(lhs - Zc.T @ yc) <= 1e-8 * np.linalg.norm(Zc.T @ yc)
