"""Tests for dataset loading, Box-Cox and per-class quanta."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from noisegate import dataio
from noisegate.errors import (
    EmptyClass,
    EmptyDataset,
    MissingFile,
    MissingTargetColumn,
    NonNumericCell,
    NonPositiveInput,
)


class TestLoadCsv:

    def test_target_column_is_split_off(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("a,y,b\n1,10,2\n3,20,4\n5,30,6\n")
        dataset = dataio.load_csv(path, "y")
        assert dataset.feature_names == ("a", "b")
        assert_allclose(dataset.target, [10, 20, 30])
        assert_allclose(dataset.features[:, 1], [2, 4, 6])
        assert dataset.n == 3
        assert dataset.p == 2

    def test_missing_file(self, tmp_path):
        with pytest.raises(MissingFile):
            dataio.load_csv(tmp_path / "nope.csv", "y")

    def test_missing_target_column(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(MissingTargetColumn) as info:
            dataio.load_csv(path, "y")
        assert info.value.available == ["a", "b"]

    def test_non_numeric_cell_reports_position(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("a,y\n1,2\nfoo,3\n")
        with pytest.raises(NonNumericCell) as info:
            dataio.load_csv(path, "y")
        assert info.value.row == 2
        assert info.value.column == "a"

    def test_empty_cell_is_rejected(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("a,y\n1,2\n,3\n")
        with pytest.raises(NonNumericCell):
            dataio.load_csv(path, "y")

    def test_header_only(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("a,y\n")
        with pytest.raises(EmptyDataset):
            dataio.load_csv(path, "y")

    def test_no_feature_columns(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("y\n1\n2\n")
        with pytest.raises(EmptyDataset):
            dataio.load_csv(path, "y")

    def test_written_csv_loads_back(self, tmp_path, linear_dataset):
        path = dataio.write_csv(linear_dataset, tmp_path / "out" / "d.csv")
        loaded = dataio.load_csv(path, "y")
        assert loaded.feature_names == linear_dataset.feature_names
        assert_allclose(loaded.features, linear_dataset.features)
        assert_allclose(loaded.target, linear_dataset.target)


class TestDataset:

    def test_arrays_are_read_only(self, linear_dataset):
        with pytest.raises(ValueError):
            linear_dataset.target[0] = 1.0

    def test_subset_keeps_order(self, linear_dataset):
        sub = linear_dataset.subset([5, 2])
        assert_allclose(sub.target, linear_dataset.target[[5, 2]])

    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            dataio.Dataset(("a",), [[1.0], [np.nan]], [1.0, 2.0])

    def test_rejects_duplicate_names(self):
        with pytest.raises(ValueError):
            dataio.Dataset(("a", "a"), [[1.0, 2.0]], [1.0])


class TestBoxCox:

    def test_shift_only_when_needed(self):
        shifted, shift = dataio.shift_positive([-2.0, 0.0, 3.0])
        assert shift == 3.0
        assert_allclose(shifted, [1.0, 3.0, 6.0])
        _, shift = dataio.shift_positive([1.0, 2.0])
        assert shift == 0.0

    def test_fixed_lambda_zero_is_log(self):
        transformed, lam = dataio.box_cox([1.0, np.e], lmbda=0.0)
        assert lam == 0.0
        assert_allclose(transformed, [0.0, 1.0])

    def test_fixed_lambda_one_is_linear(self):
        transformed, _ = dataio.box_cox([2.0, 5.0], lmbda=1.0)
        assert_allclose(transformed, [1.0, 4.0])

    def test_fitted_lambda_on_grid(self):
        rng = np.random.default_rng(0)
        values = rng.lognormal(size=200)
        _, lam = dataio.box_cox(values)
        assert -2.0 <= lam <= 2.0
        # log-normal data is best normalised near lambda 0
        assert abs(lam) < 0.3

    def test_non_positive_rejected(self):
        with pytest.raises(NonPositiveInput):
            dataio.box_cox([0.0, 1.0])

    @pytest.mark.parametrize("lmbda", [-2.0, -0.5, 0.0, 0.5, 2.0, None])
    def test_order_is_preserved(self, lmbda):
        values = np.sort(np.random.default_rng(6).gamma(2.0, 2.0, size=100)) + 0.01
        transformed, _ = dataio.box_cox(values, lmbda=lmbda)
        assert np.all(np.diff(transformed) > 0)


class TestQuanta:

    def _dataset(self):
        target = np.arange(1.0, 41.0)
        features = np.column_stack([target, target ** 2])
        return dataio.Dataset(("a", "b"), features, target)

    def test_bins_count_towards_threshold(self):
        dataset = self._dataset()
        labels = np.where(dataset.target <= 20, dataio.CLASS1, dataio.CLASS2)
        quanta = dataio.bin_into_quanta(dataset, labels, n_bins=4, lmbda=1.0)
        # class1 sits below the threshold: its lowest value is farthest away
        assert quanta.bin_index[0] == 1
        assert quanta.bin_index[19] == 4
        # class2 sits above: its lowest value is adjacent
        assert quanta.bin_index[20] == 4
        assert quanta.bin_index[39] == 1

    def test_counts_cover_every_point(self):
        dataset = self._dataset()
        labels = np.where(dataset.target <= 20, dataio.CLASS1, dataio.CLASS2)
        quanta = dataio.bin_into_quanta(dataset, labels, n_bins=5)
        counts = quanta.counts(labels)
        assert len(counts) == 10
        assert sum(counts.values()) == 40
        assert sum(v for (b, cls), v in counts.items() if cls == "class1") == 20

    def test_empty_class(self):
        dataset = self._dataset()
        with pytest.raises(EmptyClass):
            dataio.bin_into_quanta(dataset, np.full(40, dataio.CLASS1))

    def test_too_few_bins(self):
        dataset = self._dataset()
        labels = np.where(dataset.target <= 20, dataio.CLASS1, dataio.CLASS2)
        with pytest.raises(ValueError):
            dataio.bin_into_quanta(dataset, labels, n_bins=1)
