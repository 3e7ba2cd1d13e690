import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from probekit.core import (
    DuplicateIdError,
    EmbeddingTable,
    EmptyJoinError,
    HeaderError,
    Kind,
    LabelParseError,
    LabelTable,
    NonFiniteError,
    NonNumericError,
    ProbingDataset,
    RunMeta,
    apply_standardizer,
    fit_standardizer,
    join,
    load_embeddings,
    load_labels,
    save_embeddings,
    save_labels,
    sidecar_path,
    split_from_ids,
    split_random,
    split_stratified,
    subsample,
)


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


class TestLoadEmbeddings:
    def test_basic_csv(self, tmp_path):
        t = load_embeddings(write(tmp_path / "e.csv", "id,e0,e1\na,1.0,2.0\nb,3.0,4.0\n"))
        assert (t.n, t.d, t.ids) == (2, 2, ("a", "b"))
        np.testing.assert_array_equal(t.matrix, [[1, 2], [3, 4]])
        assert t.meta is None

    def test_duplicate_id(self, tmp_path):
        with pytest.raises(DuplicateIdError) as e:
            load_embeddings(write(tmp_path / "e.csv", "id,e0\na,1\na,2\n"))
        assert e.value.row == 2

    def test_header_only(self, tmp_path):
        t = load_embeddings(write(tmp_path / "e.csv", "id,e0,e1,e2\n"))
        assert (t.n, t.d) == (0, 3)

    @pytest.mark.parametrize(
        "text, err, row, col",
        [
            ("name,e0\na,1\n", HeaderError, 0, 0),
            ("id,e0,x\na,1,2\n", HeaderError, 0, 2),
            ("id,e0\na,1\nb,zz\n", NonNumericError, 2, 1),
            ("id,e0\na,nan\n", NonFiniteError, 1, 1),
            ("id,e0\na,inf\n", NonFiniteError, 1, 1),
            ("id,e0,e1\na,1\n", HeaderError, 1, None),
        ],
    )
    def test_parse_errors_name_location(self, tmp_path, text, err, row, col):
        with pytest.raises(err) as e:
            load_embeddings(write(tmp_path / "e.csv", text))
        assert e.value.row == row and e.value.column == col

    def test_error_kinds_are_distinct(self):
        kinds = {HeaderError, NonNumericError, DuplicateIdError, NonFiniteError}
        assert len(kinds) == 4 and not any(issubclass(a, b) for a in kinds for b in kinds if a is not b)

    def test_binary_roundtrip_with_meta(self, tmp_path):
        t = EmbeddingTable(("x", "y", "z"), np.arange(6.0).reshape(3, 2), RunMeta("gcn", 3, 2))
        save_embeddings(t, tmp_path / "e.f32")
        back = load_embeddings(tmp_path / "e.f32")
        assert back.ids == t.ids and back.meta == RunMeta("gcn", 3, 2)
        np.testing.assert_array_equal(back.matrix, t.matrix)

    def test_binary_needs_sidecar(self, tmp_path):
        np.zeros(4, dtype="<f4").tofile(tmp_path / "e.f32")
        with pytest.raises(HeaderError):
            load_embeddings(tmp_path / "e.f32")

    def test_binary_size_mismatch(self, tmp_path):
        np.zeros(5, dtype="<f4").tofile(tmp_path / "e.f32")
        sidecar_path(tmp_path / "e.f32").write_text(json.dumps({"n": 2, "d": 2, "ids": ["a", "b"]}))
        with pytest.raises(HeaderError):
            load_embeddings(tmp_path / "e.f32")

    def test_csv_sidecar_meta(self, tmp_path):
        p = write(tmp_path / "e.csv", "id,e0\na,1\nb,2\n")
        sidecar_path(p).write_text(json.dumps({"meta": {"model": "m", "epoch": 1, "layer": 4}}))
        assert load_embeddings(p).meta == RunMeta("m", 1, 4)

    def test_csv_roundtrip_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        t = EmbeddingTable(("a", "b"), rng.normal(size=(2, 3)))
        save_embeddings(t, tmp_path / "e.csv")
        np.testing.assert_array_equal(load_embeddings(tmp_path / "e.csv").matrix, t.matrix)


class TestLabels:
    def test_roundtrip_with_missing(self, tmp_path):
        t = LabelTable(("a", "b"), {"x": [1, math.nan], "y": [0.5, 2.0]}, {"x": Kind("binary"), "y": Kind("continuous")})
        schema = save_labels(t, tmp_path / "labels.csv")
        assert schema.name == "labels.schema.json"
        back = load_labels(tmp_path / "labels.csv")
        assert back.ids == ("a", "b") and back.kinds == t.kinds
        assert back.columns["x"][0] == 1 and math.isnan(back.columns["x"][1])

    def test_kind_violation(self):
        with pytest.raises(LabelParseError):
            LabelTable(("a",), {"x": [2]}, {"x": Kind("binary")})
        with pytest.raises(LabelParseError):
            LabelTable(("a",), {"x": [1.5]}, {"x": Kind("count")})
        with pytest.raises(LabelParseError):
            LabelTable(("a",), {"x": [3]}, {"x": Kind("categorical", 3)})

    def test_kind_parse(self):
        assert Kind.parse("categorical:4") == Kind("categorical", 4)
        assert str(Kind("categorical", 4)) == "categorical:4"
        with pytest.raises(ValueError):
            Kind.parse("categorical")
        with pytest.raises(ValueError):
            Kind.parse("ordinal")

    def test_schema_missing_property(self, tmp_path):
        write(tmp_path / "l.csv", "id,x\na,1\n")
        with pytest.raises(LabelParseError):
            load_labels(tmp_path / "l.csv", schema={})


def labels(ids, values, kind="binary"):
    return LabelTable(tuple(ids), {"p": values}, {"p": Kind(kind)})


class TestJoin:
    emb = EmbeddingTable(("a", "b", "c"), np.arange(6.0).reshape(3, 2))

    def test_intersection(self):
        ds = join(self.emb, labels("bcd", [1, 0, 1]), "p")
        assert ds.ids == ("b", "c") and list(ds.p) == [1, 0] and ds.dropped == 0
        np.testing.assert_array_equal(ds.Z, [[2, 3], [4, 5]])

    def test_disjoint(self):
        with pytest.raises(EmptyJoinError):
            join(self.emb, labels("xyz", [1, 0, 1]), "p")

    def test_missing_dropped(self):
        ds = join(self.emb, labels("bcd", [math.nan, 0, 1]), "p")
        assert ds.ids == ("c",) and ds.dropped == 1

    def test_unknown_property(self):
        with pytest.raises(KeyError):
            join(self.emb, labels("abc", [1, 0, 1]), "q")


class TestSplits:
    def test_random_sizes_and_determinism(self):
        s = split_random(10, 0.2, seed=0)
        assert len(s.test_idx) == 2 and len(s.train_idx) == 8
        assert not set(s.test_idx) & set(s.train_idx)
        s2 = split_random(10, 0.2, seed=0)
        assert np.array_equal(s.test_idx, s2.test_idx) and np.array_equal(s.train_idx, s2.train_idx)

    def test_random_too_small(self):
        with pytest.raises(ValueError):
            split_random(1, 0.5)

    @given(st.integers(2, 500), st.floats(0.01, 0.99), st.integers(0, 2**31))
    @settings(max_examples=60, deadline=None)
    def test_random_partition(self, n, frac, seed):
        s = split_random(n, frac, seed)
        assert sorted(np.r_[s.train_idx, s.test_idx].tolist()) == list(range(n))
        assert len(s.train_idx) >= 1 and len(s.test_idx) >= 1

    def test_stratified_exact(self):
        p = np.r_[np.zeros(50), np.ones(50)]
        s = split_stratified(p, 0.2, 0)
        assert (p[s.test_idx] == 0).sum() == 10 and (p[s.test_idx] == 1).sum() == 10

    def test_stratified_rounding(self):
        p = np.r_[np.ones(5), np.zeros(95)]
        s = split_stratified(p, 0.2, 0)
        assert (p[s.test_idx] == 1).sum() == 1 and (p[s.test_idx] == 0).sum() == 19

    def test_stratified_single_class_warns(self):
        with pytest.warns(UserWarning):
            s = split_stratified(np.zeros(10), 0.2, 0)
        assert len(s.test_idx) == 2

    def test_stratified_singleton_class(self):
        with pytest.raises(ValueError, match="class 2"):
            split_stratified(np.array([0, 0, 1, 1, 2]), 0.4, 0)

    def test_from_ids(self):
        s = split_from_ids(("a", "b", "c", "d"), {"b", "d", "zz"})
        assert list(s.test_idx) == [1, 3] and list(s.train_idx) == [0, 2]
        with pytest.raises(ValueError):
            split_from_ids(("a", "b"), {"x"})


class TestStandardizer:
    def test_population_std(self):
        S = fit_standardizer(np.array([[1.0], [2.0], [3.0]]))
        np.testing.assert_allclose(apply_standardizer(S, np.array([[1.0], [2.0], [3.0]])).ravel(),
                                   [-1.224744871391589, 0, 1.224744871391589], atol=1e-12)

    def test_constant_column(self):
        S = fit_standardizer(np.array([[5.0, 1.0], [5.0, 2.0], [5.0, 3.0]]))
        assert S.scale[0] == 1.0
        np.testing.assert_array_equal(apply_standardizer(S, np.array([[5.0, 2.0]]))[:, 0], [0.0])

    def test_uses_train_statistics(self):
        S = fit_standardizer(np.array([[0.0], [2.0]]))
        np.testing.assert_array_equal(apply_standardizer(S, np.array([[10.0]])), [[9.0]])

    def test_dimension_mismatch(self):
        S = fit_standardizer(np.zeros((3, 2)))
        with pytest.raises(ValueError):
            apply_standardizer(S, np.zeros((1, 3)))


def dataset(p, kind="binary"):
    p = np.asarray(p, dtype=float)
    return ProbingDataset(np.arange(len(p), dtype=float)[:, None], p, Kind(kind), tuple(str(i) for i in range(len(p))))


class TestSubsample:
    def test_distinct_rows(self):
        sub = subsample(dataset(np.zeros(1000), "continuous"), 100, seed=7)
        assert sub.n == 100 and len(set(sub.ids)) == 100

    def test_identity(self):
        ds = dataset(np.r_[np.zeros(5), np.ones(5)])
        assert subsample(ds, 10, 3).ids == ds.ids

    def test_stratified_proportions(self):
        sub = subsample(dataset(np.r_[np.zeros(900), np.ones(100)]), 100, seed=1)
        assert abs((sub.p == 1).sum() - 10) <= 1

    def test_too_large(self):
        with pytest.raises(ValueError):
            subsample(dataset(np.zeros(3)), 4)

    @given(st.integers(1, 60), st.integers(0, 1000))
    @settings(max_examples=50, deadline=None)
    def test_order_preserved(self, m, seed):
        ds = dataset(np.r_[np.zeros(40), np.ones(20)])
        sub = subsample(ds, m, seed)
        idx = [int(i) for i in sub.ids]
        assert idx == sorted(idx) and len(set(idx)) == m


def test_embedding_table_rejects_nan():
    with pytest.raises(NonFiniteError):
        EmbeddingTable(("a",), np.array([[np.nan]]))


def test_runmeta_rejects_negative():
    with pytest.raises(ValueError):
        RunMeta.from_json({"model": "m", "epoch": -1})
