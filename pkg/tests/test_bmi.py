import json
import math

import numpy as np
import pytest
from scipy.special import digamma

from probekit.bmi import DEFAULT_SIZES, bmi_curve, conditional_entropy, entropy_dirichlet
from probekit.core import Kind, ProbingDataset, Split, split_random
from probekit.probes import LinearProbe


def binary_probe(w, b=0.0):
    w = np.atleast_1d(np.asarray(w, dtype=float))
    return LinearProbe(w, float(b), "logit", 1.0, classes=np.array([0, 1]), n_classes=2)


def ds(Z, p, kind="binary"):
    Z = np.asarray(Z, dtype=float).reshape(len(p), -1)
    return ProbingDataset(Z, np.asarray(p, dtype=float), Kind.parse(kind), tuple(f"r{i}" for i in range(len(p))))


class TestEntropy:
    def test_digamma_identity(self):
        # posterior (2, 1): psi(4) - 2/3 psi(3) - 1/3 psi(2), which works out to exactly 1/2
        h = entropy_dirichlet([1, 0], [1, 1])
        assert h == pytest.approx(digamma(4) - 2 / 3 * digamma(3) - 1 / 3 * digamma(2), abs=1e-12)
        assert h == pytest.approx(0.5, abs=1e-12)

    def test_limits(self):
        assert entropy_dirichlet([10**5, 10**5]) == pytest.approx(math.log(2), abs=1e-3)
        assert entropy_dirichlet([10**5, 0]) == pytest.approx(0.0, abs=1e-2)

    def test_errors(self):
        with pytest.raises(ValueError):
            entropy_dirichlet([1, 1], [1, 0])
        with pytest.raises(ValueError):
            entropy_dirichlet([0, 0])
        with pytest.raises(ValueError):
            entropy_dirichlet([-1, 2])

    def test_label_permutation_invariant(self):
        assert entropy_dirichlet([3, 7, 1], [0.5, 1, 2]) == pytest.approx(entropy_dirichlet([7, 1, 3], [1, 2, 0.5]))


class TestConditionalEntropy:
    def test_uniform(self):
        d = ds(np.arange(10), [0, 1] * 5)
        assert conditional_entropy(binary_probe(0.0), d) == pytest.approx(math.log(2))

    def test_constant_confidence(self):
        b = math.log(9)  # sigmoid(b) = 0.9
        d = ds(np.zeros(6), [1] * 6)
        assert conditional_entropy(binary_probe(0.0, b), d) == pytest.approx(-math.log(0.9))

    def test_perfect_and_clamped(self):
        d = ds([-1, 1, -1, 1], [0, 1, 0, 1])
        assert conditional_entropy(binary_probe(100.0), d) == pytest.approx(0.0, abs=1e-12)
        wrong = ds([-1, 1], [1, 0])
        with pytest.warns(RuntimeWarning):
            h, n = conditional_entropy(binary_probe(100.0), wrong, return_clamped=True)
        assert n == 2 and h == pytest.approx(-math.log(1e-12))

    def test_rejects_continuous(self):
        with pytest.raises(ValueError):
            conditional_entropy(binary_probe(0.0), ds([1, 2], [0.5, 1.5], "continuous"))


def onehot_dataset(n, seed=0):
    p = np.random.default_rng(seed).integers(0, 2, n)
    return ds(np.eye(2)[p], p)


class TestCurve:
    def test_deterministic_relation(self):
        curve = bmi_curve(onehot_dataset(15000), sizes=[100, 1000, 10000], seed=0)
        assert [pt.n_train for pt in curve.points] == [100, 1000, 10000]
        assert abs(curve.points[-1].bmi - math.log(2)) < 0.05

    def test_independent(self):
        rng = np.random.default_rng(1)
        d = ds(rng.normal(size=(15000, 3)), rng.integers(0, 2, 15000))
        curve = bmi_curve(d, sizes=[100, 1000, 10000])
        assert abs(curve.points[-1].bmi) < 0.05

    def test_default_sizes_drop_large(self):
        curve = bmi_curve(onehot_dataset(500))
        assert [pt.n_train for pt in curve.points] == [100, 400]
        assert DEFAULT_SIZES[-1] == "all"

    def test_explicit_size_too_large(self):
        with pytest.raises(ValueError):
            bmi_curve(onehot_dataset(100), sizes=[1000])

    def test_bad_inputs(self):
        with pytest.raises(ValueError):
            bmi_curve(onehot_dataset(100), l2=0.0)
        with pytest.raises(ValueError):
            bmi_curve(ds(np.zeros(10), np.arange(10.0), "continuous"))

    def test_single_class_train_skipped(self):
        p = np.r_[np.zeros(100), np.ones(20)]
        d = ds(np.random.default_rng(0).normal(size=120), p)
        split = Split(np.arange(80), np.arange(80, 120))
        curve = bmi_curve(d, sizes=[10, 80], eval_split=split)
        assert curve.points == () and [m for m, _ in curve.skipped] == [10, 80]

    def test_fixed_eval_set_and_determinism(self, tmp_path):
        d = onehot_dataset(3000, seed=3)
        split = split_random(d.n, 0.25, 9)
        a = bmi_curve(d, sizes=[50, 500], eval_split=split)
        b = bmi_curve(d, sizes=[50, 500], eval_split=split, workers=2)
        assert a == b and a.n_eval == 750
        a.write_csv(tmp_path / "c.csv")
        assert (tmp_path / "c.csv").read_text().splitlines()[0] == "n_train,h_p,h_p_given_z,bmi"
        a.write_json(tmp_path / "c.json")
        assert len(json.loads((tmp_path / "c.json").read_text())["points"]) == 2

    def test_categorical(self):
        rng = np.random.default_rng(2)
        p = rng.integers(0, 3, 3000)
        curve = bmi_curve(ds(np.eye(3)[p], p, "categorical:3"), sizes=[2000])
        assert abs(curve.points[0].bmi - math.log(3)) < 0.1
        assert curve.alpha == (1.0, 1.0, 1.0)
