"""Tests for performance measures, signed-rank and effect-size statistics,
Scott-Knott ESD ranking, the out-of-sample bootstrap and rank shifts."""

import itertools

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import stats

from noisegate import evalstats, learners, utils
from noisegate.dataio import CLASS1, CLASS2, Dataset
from noisegate.errors import DataError, LengthMismatch, UndefinedMetric


def _enumerated_p(diffs):
    """Two-sided exact p by flipping the sign of every non-zero difference."""
    diffs = np.asarray(diffs, dtype=float)
    diffs = diffs[diffs != 0]
    ranks = stats.rankdata(np.abs(diffs))
    observed = ranks[diffs > 0].sum()
    centre = ranks.sum() / 2
    hits = 0
    total = 0
    for signs in itertools.product((-1, 1), repeat=diffs.size):
        w = ranks[np.array(signs) > 0].sum()
        hits += abs(w - centre) >= abs(observed - centre) - 1e-9
        total += 1
    return hits / total


class TestPerfMeasures:

    def test_auc_fixture(self):
        truth = [CLASS1] * 4 + [CLASS2] * 4
        scores = [0.9, 0.8, 0.4, 0.7, 0.3, 0.5, 0.6, 0.2]
        assert evalstats.auc_score(truth, scores) == pytest.approx(0.875)

    def test_auc_ties_get_half_credit(self):
        assert evalstats.auc_score([CLASS1, CLASS2], [0.5, 0.5]) == pytest.approx(0.5)

    def test_auc_single_class(self):
        with pytest.raises(UndefinedMetric):
            evalstats.auc_score([CLASS1, CLASS1], [0.2, 0.9])

    def test_confusion_matrix_fixture(self):
        # TP=3, FN=2, FP=1, TN=4
        truth = [CLASS1] * 5 + [CLASS2] * 5
        probs = [0.9, 0.9, 0.9, 0.1, 0.1, 0.8, 0.2, 0.2, 0.2, 0.2]
        perf = evalstats.perf_measures(truth, probs)
        assert perf.accuracy == pytest.approx(0.7)
        assert perf.precision == pytest.approx(0.75)
        assert perf.recall == pytest.approx(0.6)
        assert perf.f_measure == pytest.approx(2 / 3)
        assert perf.mcc == pytest.approx(10 / np.sqrt(600))
        assert perf.brier == pytest.approx(0.245)
        assert perf.flags == ()

    def test_undefined_precision_is_flagged(self):
        truth = [CLASS1, CLASS1, CLASS2, CLASS2]
        perf = evalstats.perf_measures(truth, [0.1, 0.2, 0.3, 0.4])
        assert perf.precision == 0.0
        assert perf.mcc == 0.0
        assert {"precision_undefined", "f_measure_undefined", "mcc_undefined"} <= set(perf.flags)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            evalstats.perf_measures([CLASS1, CLASS2], [0.5])

    def test_auc_ignores_monotone_transforms(self):
        rng = np.random.default_rng(13)
        truth = rng.permutation(np.array([CLASS1] * 30 + [CLASS2] * 30))
        scores = rng.random(60)
        expected = evalstats.auc_score(truth, scores)
        assert evalstats.auc_score(truth, np.exp(3.0 * scores) + 1.0) == expected
        assert evalstats.auc_score(truth, scores ** 3) == expected

    def test_mcc_ignores_class_swap(self):
        rng = np.random.default_rng(14)
        truth = rng.permutation(np.array([CLASS1] * 25 + [CLASS2] * 15))
        probs = rng.random(40)
        swapped = np.where(truth == CLASS1, CLASS2, CLASS1)
        original = evalstats.perf_measures(truth, probs).mcc
        assert evalstats.perf_measures(swapped, 1.0 - probs).mcc == pytest.approx(original, abs=1e-12)

    def test_brier_of_a_coin(self):
        truth = [CLASS1, CLASS2, CLASS2, CLASS1, CLASS2]
        assert evalstats.perf_measures(truth, [0.5] * 5).brier == pytest.approx(0.25)

    def test_probability_range(self):
        with pytest.raises(DataError):
            evalstats.perf_measures([CLASS1, CLASS2], [1.2, 0.1])


class TestSignedRank:

    def test_r_reference(self):
        """wilcox.test(c(1.5, 2.2, 3.1, 4.0, 5.3), mu=3): V = 9, p = 0.8125."""
        result = evalstats.wilcoxon_signed_rank([1.5, 2.2, 3.1, 4.0, 5.3], [3.0] * 5)
        assert result.statistic == pytest.approx(9.0)
        assert result.p_value == pytest.approx(0.8125)

    def test_all_positive_five_pairs(self):
        result = evalstats.wilcoxon_signed_rank([2, 3, 4, 5, 6], [1, 1, 1, 1, 1])
        assert result.statistic == 15.0
        assert result.p_value == pytest.approx(0.0625)

    def test_exact_matches_enumeration_with_ties(self):
        a = np.array([1.0, 2.0, 2.0, 5.0, 3.0, 4.0, 0.5, 7.0])
        b = np.array([0.0, 3.0, 1.0, 5.0, 1.0, 2.0, 1.5, 4.0])
        result = evalstats.wilcoxon_signed_rank(a, b)
        assert result.p_value == pytest.approx(_enumerated_p(a - b))

    def test_zero_differences_dropped(self):
        result = evalstats.wilcoxon_signed_rank([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
        assert result.p_value == 1.0

    def test_normal_approximation_matches_scipy(self):
        rng = np.random.default_rng(0)
        a = rng.normal(0.3, 1.0, 40)
        b = rng.normal(0.0, 1.0, 40)
        ours = evalstats.wilcoxon_signed_rank(a, b)
        reference = stats.wilcoxon(a, b, correction=True, method="approx")
        assert ours.p_value == pytest.approx(reference.pvalue, rel=1e-9)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            evalstats.wilcoxon_signed_rank([1.0, 2.0], [1.0])


class TestCohensD:

    def test_unit_shift(self):
        assert evalstats.cohens_d([1, 2, 3], [2, 3, 4]) == pytest.approx(-1.0)

    def test_zero_spread(self):
        assert evalstats.cohens_d([1, 1], [1, 1]) == 0.0
        d, capped = evalstats.cohens_d_flagged([2, 2], [1, 1])
        assert d == evalstats.D_CAP
        assert capped

    def test_one_sample(self):
        assert evalstats.cohens_d_one_sample([1.0, 2.0, 3.0]) == pytest.approx(2.0)

    @pytest.mark.parametrize("d,label", [
        (0.1, "Negligible"), (-0.2, "Negligible"), (0.3, "Small"), (-0.6, "Medium"), (0.81, "Large"),
    ])
    def test_labels(self, d, label):
        assert evalstats.effect_label(d) == label

    def test_paired_comparison(self):
        result = evalstats.compare_paired([0.9, 0.91, 0.92, 0.93, 0.94], [0.8, 0.81, 0.82, 0.83, 0.84])
        assert result.cohens_d > 0
        assert result.effect_label == "Large"
        assert result.p_value == pytest.approx(0.0625)
        # five pairs cannot reach p <= 0.05
        assert not result.significant


class TestScottKnottEsd:

    def test_separated_groups(self):
        rng = np.random.default_rng(1)
        groups = {
            "low": rng.normal(0.0, 1.0, 20),
            "high": rng.normal(10.0, 1.0, 20),
            "mid": rng.normal(5.0, 1.0, 20),
        }
        assert evalstats.scott_knott_esd(groups) == {"low": 3, "high": 1, "mid": 2}

    def test_identical_groups_share_rank(self):
        values = [1.0, 2.0, 3.0, 4.0]
        assert evalstats.scott_knott_esd({"a": values, "b": list(values)}) == {"a": 1, "b": 1}

    def test_close_means_merge(self):
        rng = np.random.default_rng(2)
        base = rng.normal(0.0, 1.0, 30)
        groups = {"a": base + 10.0, "b": base + 9.9, "c": base}
        assert evalstats.scott_knott_esd(groups) == {"a": 1, "b": 1, "c": 2}

    def test_ranks_are_contiguous(self):
        rng = np.random.default_rng(3)
        groups = {f"g{i}": rng.normal(i % 3, 1.0, 15) for i in range(6)}
        ranks = sorted(set(evalstats.scott_knott_esd(groups).values()))
        assert ranks == list(range(1, len(ranks) + 1))

    def test_scaling_keeps_ranks(self):
        rng = np.random.default_rng(15)
        groups = {f"g{i}": rng.normal(i * 0.6, 1.0, 12) for i in range(5)}
        expected = evalstats.scott_knott_esd(groups)
        for factor in (0.01, 3.0, 250.0):
            assert evalstats.scott_knott_esd({name: values * factor for name, values in groups.items()}) == expected

    def test_ranks_follow_means(self):
        rng = np.random.default_rng(16)
        for _ in range(20):
            groups = {f"g{i}": rng.normal(rng.uniform(0, 3), 1.0, 8) for i in range(5)}
            ranks = evalstats.scott_knott_esd(groups)
            means = {name: values.mean() for name, values in groups.items()}
            for first, second in itertools.permutations(groups, 2):
                if means[first] >= means[second]:
                    assert ranks[first] <= ranks[second]

    def test_short_group_rejected(self):
        with pytest.raises(ValueError):
            evalstats.scott_knott_esd({"a": [1.0], "b": [1.0, 2.0]})


class TestBootstrap:

    def _labels(self, dataset):
        return np.where(dataset.target <= np.median(dataset.target), CLASS1, CLASS2)

    def test_result_shape(self, linear_dataset, fast_grid):
        labels = self._labels(linear_dataset)
        result = evalstats.bootstrap_validate("lr", linear_dataset, labels, n_boot=6, seed=0, grid=fast_grid)
        assert result.n_boot == 6
        assert result.importance.shape == (6, 3)
        assert result.iteration_ranks.shape == (6, 3)
        assert set(result.sk_ranks) == set(linear_dataset.feature_names)
        assert result.hyper_params == {"ridge": 1e-4}
        assert result.median("auc") > 0.8
        assert all(size > 0 for size in result.test_sizes)

    def test_strongest_feature_ranks_first(self, linear_dataset, fast_grid):
        labels = self._labels(linear_dataset)
        result = evalstats.bootstrap_validate("rf", linear_dataset, labels, n_boot=5, seed=2, grid=fast_grid)
        assert result.sk_ranks["x1"] == 1
        assert result.median_ranks()["x1"] == 1.0

    def test_seed_determinism_and_jobs(self, linear_dataset, fast_grid):
        labels = self._labels(linear_dataset)
        serial = evalstats.bootstrap_validate("cart", linear_dataset, labels, n_boot=4, seed=5, grid=fast_grid)
        threaded = evalstats.bootstrap_validate("cart", linear_dataset, labels, n_boot=4, seed=5, grid=fast_grid, jobs=3)
        assert_allclose(serial.measure("auc"), threaded.measure("auc"))
        assert_allclose(serial.importance, threaded.importance)

    def test_tuning_sees_only_training_rows(self, linear_dataset, fast_grid, monkeypatch):
        labels = self._labels(linear_dataset)
        calls = []

        def _recording_tune(kind, features, labels, grid, seed):
            calls.append(np.array(features, copy=True))
            return {"ridge": 1e-4}

        monkeypatch.setattr(learners, "tune", _recording_tune)
        evalstats.bootstrap_validate("lr", linear_dataset, labels, n_boot=5, seed=4, grid=fast_grid)
        assert len(calls) == 5
        for b, seen in enumerate(calls):
            rng = utils.substream(4, evalstats.BOOT_STREAM, b)
            train_idx, test_idx, _ = learners.out_of_sample_split(rng, labels)
            assert_allclose(seen, linear_dataset.features[train_idx])
            seen_rows = {tuple(row) for row in seen}
            assert not seen_rows & {tuple(row) for row in linear_dataset.features[test_idx]}

    def test_given_parameters_skip_tuning(self, linear_dataset, monkeypatch):
        labels = self._labels(linear_dataset)

        def _fail(*args, **kwargs):
            raise AssertionError("tune must not run")

        monkeypatch.setattr(learners, "tune", _fail)
        result = evalstats.bootstrap_validate("lr", linear_dataset, labels, n_boot=3, hyper_params={"ridge": 1.0})
        assert result.hyper_params == {"ridge": 1.0}
        assert result.iteration_params == ({"ridge": 1.0},) * 3

    def test_modal_parameters(self):
        params = [{"k": 3}, {"k": 9}, {"k": 9}, {"k": 3}, {"k": 1}]
        assert evalstats.modal_params(params) == {"k": 3}
        assert evalstats.modal_params([{"k": 1}, {"k": 9}, {"k": 9}]) == {"k": 9}
        assert evalstats.modal_params([]) == {}

    def test_out_of_bag_share_near_e_inverse(self):
        rng = np.random.default_rng(0)
        target = rng.normal(size=500)
        dataset = Dataset(("a", "b"), rng.normal(size=(500, 2)), target)
        labels = np.where(target <= np.median(target), CLASS1, CLASS2)
        grid = learners.TuningGrid(candidates={"lr": ({"ridge": 1.0},)}, inner_bootstraps=1)
        result = evalstats.bootstrap_validate("lr", dataset, labels, n_boot=20, seed=0, grid=grid)
        assert 0.33 <= np.mean(result.test_sizes) / 500 <= 0.41

    def test_importance_ranks(self):
        assert list(evalstats.importance_ranks([0.1, 0.5, 0.5, 0.2])) == [4, 1, 1, 3]

    def test_unknown_measure(self, linear_dataset, fast_grid):
        labels = self._labels(linear_dataset)
        result = evalstats.bootstrap_validate("knn", linear_dataset, labels, n_boot=1, grid=fast_grid)
        with pytest.raises(KeyError):
            result.measure("kappa")


class TestRankShift:

    def test_stable_ranks_never_shift(self):
        ranks = {"a": [1] * 10, "b": [2] * 10, "c": [3] * 10}
        likelihood = evalstats.rank_shift_likelihood([ranks, ranks], n_rep=20, top_k=3, seed=0)
        assert likelihood == {1: 0.0, 2: 0.0, 3: 0.0}

    def test_indistinct_feature_shifts(self):
        # b sits at median rank 2 but is indistinguishable from a
        ranks = {"a": [1] * 51 + [2] * 50, "b": [1] * 50 + [2] * 51}
        likelihood = evalstats.rank_shift_likelihood([ranks], n_rep=30, top_k=3, seed=1)
        assert likelihood[2] > 0.5
        assert likelihood[3] == 0.0

    def test_single_repetition(self):
        ranks = {"a": [1, 1, 2, 1], "b": [2, 2, 1, 2]}
        likelihood = evalstats.rank_shift_likelihood([ranks], n_rep=1, top_k=2, seed=0)
        assert likelihood[1] in (0.0, 1.0)
        assert likelihood[2] in (0.0, 1.0)

    def test_mismatched_features(self):
        with pytest.raises(ValueError):
            evalstats.rank_shift_likelihood([{"a": [1, 1]}, {"b": [1, 1]}])


class TestOracles:

    def test_auc_matches_pair_enumeration(self):
        rng = np.random.default_rng(10)
        for _ in range(50):
            n = int(rng.integers(4, 30))
            truth = rng.permutation(np.array([CLASS1, CLASS2] * n))[: n]
            if np.unique(truth).size < 2:
                continue
            scores = np.round(rng.random(n), 1)
            pos, neg = scores[truth == CLASS1], scores[truth == CLASS2]
            concordance = np.mean([1.0 if p > q else 0.5 if p == q else 0.0 for p in pos for q in neg])
            assert evalstats.auc_score(truth, scores) == pytest.approx(concordance, abs=1e-12)

    def test_scott_knott_matches_exhaustive_splitting(self):
        rng = np.random.default_rng(12)

        def between(blocks):
            pooled = np.concatenate(blocks)
            scores = []
            for k in range(1, len(blocks)):
                left, right = np.concatenate(blocks[:k]), np.concatenate(blocks[k:])
                scores.append(left.sum() ** 2 / left.size + right.sum() ** 2 / right.size - pooled.sum() ** 2 / pooled.size)
            return scores

        def partition(blocks):
            if len(blocks) < 2:
                return [len(blocks)]
            scores = between(blocks)
            k = 1 + scores.index(max(scores))
            if not evalstats.distinct_groups(np.concatenate(blocks[:k]), np.concatenate(blocks[k:])):
                return [len(blocks)]
            return partition(blocks[:k]) + partition(blocks[k:])

        for _ in range(50):
            groups = {f"g{i}": rng.normal(rng.uniform(0, 4), 1.0, int(rng.integers(2, 7))) for i in range(4)}
            order = sorted(groups, key=lambda name: -groups[name].mean())
            expected = {}
            start = 0
            for rank, size in enumerate(partition([groups[name] for name in order]), start=1):
                for name in order[start:start + size]:
                    expected[name] = rank
                start += size
            assert evalstats.scott_knott_esd(groups) == expected

    @pytest.mark.slow
    def test_exact_signed_rank_matches_enumeration(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            n = int(rng.integers(1, 13))
            a = np.round(rng.normal(size=n), 1)
            b = np.round(rng.normal(size=n), 1)
            if np.all(a == b):
                continue
            assert evalstats.wilcoxon_signed_rank(a, b).p_value == pytest.approx(_enumerated_p(a - b), abs=1e-12)
