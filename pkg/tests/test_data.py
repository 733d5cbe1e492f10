"""数据加载、划分与标准化测试"""

import numpy as np
import pytest

from ramkit.domain.data import (
    CATEGORICAL,
    NUMERIC,
    Dataset,
    FeatureMeta,
    apply_scaler,
    fit_scaler,
    invert_scaler,
    load_csv,
    train_test_split,
    write_csv,
)
from ramkit.errors import (
    ArityMismatch,
    ConstantColumn,
    ConstantTarget,
    EmptyDataset,
    InvalidFraction,
    TargetNotFound,
    UnknownColumn,
    UnparseableCell,
    UnreadableData,
)


def _write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestLoadCsv:
    """CSV 读取与列类型推断"""

    def test_infers_numeric_and_categorical(self, tmp_path):
        """整数取值且不超过 12 个的列、非数值列推断为类别"""
        rows = ["a,b,c,y"]
        for i in range(30):
            rows.append(f"{i * 0.37:.3f},{i % 3},{'red' if i % 2 else 'blue'},{i}")
        ds = load_csv(_write(tmp_path, "\n".join(rows)), "y")

        assert ds.N == 30
        assert ds.feature_names == ["a", "b", "c"]
        assert ds.features[0].kind == NUMERIC
        assert ds.features[1].kind == CATEGORICAL
        assert ds.features[1].categories == ("0", "1", "2")
        assert ds.features[2].categories == ("blue", "red")
        assert ds.X[1, 2] == ds.features[2].code_of("red")

    def test_explicit_categorical_overrides_inference(self, tmp_path):
        rows = ["a,y"] + [f"{i * 0.5},{i}" for i in range(20)]
        ds = load_csv(_write(tmp_path, "\n".join(rows)), "y", categorical=["a"])
        assert ds.features[0].is_categorical
        assert len(ds.features[0].categories) == 20

    def test_drops_rows_with_missing_cells(self, tmp_path):
        ds = load_csv(_write(tmp_path, "a,y\n1.5,1\n,2\n2.5,3\n"), "y")
        assert ds.N == 2
        np.testing.assert_allclose(ds.y, [1.0, 3.0])

    def test_missing_target(self, tmp_path):
        with pytest.raises(TargetNotFound):
            load_csv(_write(tmp_path, "a,b\n1,2\n"), "y")

    def test_unparseable_target(self, tmp_path):
        with pytest.raises(UnparseableCell) as exc_info:
            load_csv(_write(tmp_path, "a,y\n1.5,1\n2.5,abc\n"), "y")
        assert exc_info.value.column == "y"
        assert exc_info.value.row == 1

    def test_non_numeric_column_with_many_values(self, tmp_path):
        rows = ["a,y"] + [f"v{i},{i}" for i in range(20)]
        with pytest.raises(UnparseableCell):
            load_csv(_write(tmp_path, "\n".join(rows)), "y")

    def test_constant_target(self, tmp_path):
        with pytest.raises(ConstantTarget):
            load_csv(_write(tmp_path, "a,y\n1.5,1\n2.5,1\n"), "y")

    def test_single_row_is_allowed(self, tmp_path):
        ds = load_csv(_write(tmp_path, "a,y\n1.5,1\n"), "y")
        assert ds.N == 1

    def test_empty_file(self, tmp_path):
        with pytest.raises(EmptyDataset):
            load_csv(_write(tmp_path, ""), "y")

    def test_unknown_categorical_column(self, tmp_path):
        with pytest.raises(UnknownColumn) as exc_info:
            load_csv(_write(tmp_path, "a,y\n1.5,1\n2.5,2\n"), "y", categorical=["b"])
        assert exc_info.value.column == "b"
        assert "categorical" in str(exc_info.value)

    def test_target_is_not_a_categorical_feature(self, tmp_path):
        with pytest.raises(UnknownColumn):
            load_csv(_write(tmp_path, "a,y\n1.5,1\n2.5,2\n"), "y", categorical=["y"])

    def test_non_utf8_file(self, tmp_path):
        path = tmp_path / "latin.csv"
        path.write_bytes(b"a,y\n\xff\xfe,1\n")
        with pytest.raises(UnreadableData):
            load_csv(path, "y")

    def test_ragged_rows(self, tmp_path):
        with pytest.raises(UnreadableData):
            load_csv(_write(tmp_path, "a,y\n1.5,1\n2.5,2,3,4\n"), "y")

    def test_write_then_read_keeps_categories(self, tmp_path, toy):
        ds, _ = toy
        path = write_csv(ds.subset(range(200)), tmp_path / "toy.csv")
        back = load_csv(path, "y")
        assert back.feature_names == ["x1", "x2", "x3"]
        assert back.features[2].categories == ("0", "1")
        np.testing.assert_allclose(back.X[:, 2], ds.X[:200, 2])


class TestDataset:
    """数据集不变量"""

    def test_arity_mismatch(self):
        metas = (FeatureMeta("a", NUMERIC, 0, range=(0.0, 1.0)),)
        with pytest.raises(ArityMismatch):
            Dataset(metas, np.zeros((3, 2)), np.zeros(3))

    def test_arrays_are_read_only(self, toy):
        ds, _ = toy
        with pytest.raises(ValueError):
            ds.X[0, 0] = 1.0

    def test_subset_recomputes_ranges(self, toy):
        ds, _ = toy
        sub = ds.subset([0, 1, 2])
        assert sub.N == 3
        assert sub.features[0].range == (float(sub.X[:, 0].min()), float(sub.X[:, 0].max()))


class TestSplitAndScale:
    """划分与标准化"""

    def test_split_is_seeded_and_disjoint(self, toy):
        ds, _ = toy
        train_a, test_a = train_test_split(ds, 0.2, seed=11)
        train_b, test_b = train_test_split(ds, 0.2, seed=11)
        assert train_a.N == 8000 and test_a.N == 2000
        np.testing.assert_array_equal(train_a.X, train_b.X)
        np.testing.assert_array_equal(test_a.y, test_b.y)

    def test_two_rows_split_one_and_one(self, make_numeric):
        ds = make_numeric(np.array([[0.0], [1.0]]), np.array([0.0, 1.0]))
        train, test = train_test_split(ds, 0.5, seed=0)
        assert (train.N, test.N) == (1, 1)
        assert sorted([train.y[0], test.y[0]]) == [0.0, 1.0]

    @pytest.mark.parametrize("fraction", [0.0, 1.0, -0.1])
    def test_invalid_fraction(self, toy, fraction):
        ds, _ = toy
        with pytest.raises(InvalidFraction):
            train_test_split(ds, fraction, seed=0)

    def test_scaler_standardizes_numeric_only(self, toy):
        ds, _ = toy
        sc = fit_scaler(ds)
        std = apply_scaler(sc, ds)
        assert abs(std.X[:, 0].mean()) < 1e-12
        assert abs(std.X[:, 0].std() - 1.0) < 1e-12
        np.testing.assert_array_equal(std.X[:, 2], ds.X[:, 2])
        assert abs(std.y.std() - 1.0) < 1e-12
        back = invert_scaler(sc, std)
        np.testing.assert_allclose(back.X, ds.X, atol=1e-12)
        np.testing.assert_allclose(back.y, ds.y, atol=1e-12)

    def test_constant_numeric_column(self, make_numeric):
        X = np.column_stack([np.ones(10), np.arange(10.0)])
        with pytest.raises(ConstantColumn):
            fit_scaler(make_numeric(X, np.arange(10.0)))

    def test_value_to_original(self, toy):
        ds, _ = toy
        sc = fit_scaler(ds)
        z = sc.transform_features(ds.X[:5])
        assert sc.value_to_original(0, z[3, 0]) == pytest.approx(ds.X[3, 0])
        assert sc.value_to_original(2, 1.0) == 1.0
