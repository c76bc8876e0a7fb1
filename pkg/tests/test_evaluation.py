import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vascreen.evaluation import (
    FoldError,
    aggregate_report,
    classification_metrics,
    dumps_report,
    make_outer_folds,
    nested_cv,
    regression_metrics,
)
from vascreen.learners import CLASSIFY, REGRESS, Dataset


def balanced_groups_243():
    """243 sessions over 50 participants (43x5 + 7x4): packable into {24,25}."""
    groups = []
    labels = []
    for p in range(50):
        size = 5 if p < 43 else 4
        label = 1.0 if p % 2 == 0 else 0.0
        groups += [f"p{p:03d}"] * size
        labels += [label] * size
    return np.array(groups), np.array(labels)


class TestFoldConstruction:
    def test_paper_scale_sizes(self):
        groups, labels = balanced_groups_243()
        plan = make_outer_folds(groups, labels, k=10, round_index=0, seed=42)
        sizes = sorted(len(f) for f in plan.folds)
        assert sum(sizes) == 243
        assert set(sizes) <= {24, 25}
        plan.validate(groups)

    def test_leave_one_participant_out(self):
        groups = np.array(["a", "a", "b", "c", "c", "d"])
        plan = make_outer_folds(groups, None, k=4, round_index=0, seed=0)
        assert plan.k == 4
        plan.validate(groups)
        # k equal to the participant count puts exactly one participant per fold
        for fold in plan.folds:
            assert len({groups[i] for i in fold}) == 1

    def test_determinism(self):
        groups, labels = balanced_groups_243()
        a = make_outer_folds(groups, labels, k=10, round_index=3, seed=9)
        b = make_outer_folds(groups, labels, k=10, round_index=3, seed=9)
        assert a.folds == b.folds

    def test_rounds_differ(self):
        groups, labels = balanced_groups_243()
        a = make_outer_folds(groups, labels, k=10, round_index=0, seed=9)
        b = make_outer_folds(groups, labels, k=10, round_index=1, seed=9)
        assert a.folds != b.folds

    def test_fewer_groups_than_k(self):
        groups = np.array(["a", "a", "b"])
        with pytest.raises(FoldError, match="participants"):
            make_outer_folds(groups, None, k=3)

    def test_group_integrity_random_sizes(self, rng):
        sizes = rng.integers(1, 8, size=30)
        groups = np.concatenate(
            [np.full(s, f"p{i}") for i, s in enumerate(sizes)]
        )
        labels = (rng.random(groups.shape[0]) > 0.6).astype(float)
        plan = make_outer_folds(groups, labels, k=5, round_index=2, seed=1)
        plan.validate(groups)

    def test_stratification_quality(self):
        groups, labels = balanced_groups_243()
        plan = make_outer_folds(groups, labels, k=10, round_index=0, seed=7)
        global_ratio = labels.mean()
        for fold in plan.folds:
            ratio = labels[list(fold)].mean()
            assert abs(ratio - global_ratio) < 0.15


class TestClassificationMetrics:
    def test_hand_arithmetic(self):
        y_true = np.array([1, 1, 1, 1, 1, 0, 0, 0, 0, 0])
        y_pred = np.array([1, 1, 1, 0, 0, 1, 0, 0, 0, 0])
        m = classification_metrics(y_true, y_pred, positive=1)
        assert (m.tp, m.fp, m.fn, m.tn) == (3, 1, 2, 4)
        assert m.accuracy == pytest.approx(0.7)
        assert m.precision == pytest.approx(0.75)
        assert m.recall == pytest.approx(0.6)
        assert m.f1 == pytest.approx(2 * 0.75 * 0.6 / 1.35)

    def test_perfect_prediction(self):
        y = np.array([1, 0, 1, 1])
        m = classification_metrics(y, y)
        assert (m.accuracy, m.precision, m.recall, m.f1) == (1.0, 1.0, 1.0, 1.0)

    def test_no_predicted_positives(self):
        m = classification_metrics(np.array([1, 1, 0]), np.array([0, 0, 0]))
        assert m.precision == 0.0
        assert m.recall == 0.0
        assert m.f1 == 0.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            classification_metrics(np.array([1]), np.array([1, 0]))

    def test_empty(self):
        with pytest.raises(ValueError):
            classification_metrics(np.array([]), np.array([]))

    def test_positive_class_swap_transposes_confusion(self, rng):
        y_true = (rng.random(40) > 0.5).astype(int)
        y_pred = (rng.random(40) > 0.5).astype(int)
        pos = classification_metrics(y_true, y_pred, positive=1)
        neg = classification_metrics(y_true, y_pred, positive=0)
        assert pos.tp == neg.tn and pos.fp == neg.fn
        assert pos.accuracy == neg.accuracy


class TestRegressionMetrics:
    def test_hand_arithmetic(self):
        m = regression_metrics([10, 12, 14], [11, 11, 15])
        assert m.mae == pytest.approx(1.0)
        assert m.rmse == pytest.approx(1.0)
        assert m.rrmse == pytest.approx(100.0 / 12)

    def test_zero_error(self):
        m = regression_metrics([3.0, 4.0], [3.0, 4.0])
        assert (m.mae, m.rmse, m.rrmse) == (0.0, 0.0, 0.0)

    def test_single_pair(self):
        m = regression_metrics([5.0], [7.0])
        assert m.mae == 2.0
        assert m.rmse == 2.0
        assert m.rrmse == pytest.approx(40.0)

    def test_zero_mean_target(self):
        m = regression_metrics([1.0, -1.0], [0.0, 0.0])
        assert m.rrmse is None

    @settings(max_examples=100, deadline=None)
    @given(seed=st.integers(0, 2**20), n=st.integers(1, 30))
    def test_mae_at_most_rmse(self, seed, n):
        r = np.random.default_rng(seed)
        y_true = r.standard_normal(n) * 10
        y_pred = y_true + r.standard_normal(n) * 3
        m = regression_metrics(y_true, y_pred)
        assert m.mae <= m.rmse + 1e-12


class TestAggregation:
    def fake_trials(self, accuracies):
        from vascreen.evaluation import ClassificationMetrics, TrialResult

        return [
            TrialResult(
                round_index=0,
                fold_index=i,
                hp={},
                metrics=ClassificationMetrics(a, a, a, a, 1, 0, 0, 1),
                n_test=2,
            )
            for i, a in enumerate(accuracies)
        ]

    def test_mean_and_best(self):
        agg = aggregate_report(self.fake_trials([0.7, 0.9]))
        assert agg["mean"]["accuracy"] == pytest.approx(0.8)
        assert agg["best"]["accuracy"] == pytest.approx(0.9)

    def test_single_trial(self):
        agg = aggregate_report(self.fake_trials([0.6]))
        assert agg["mean"]["accuracy"] == agg["best"]["accuracy"] == 0.6

    def test_regression_best_is_min(self):
        from vascreen.evaluation import RegressionMetrics, TrialResult

        trials = [
            TrialResult(0, i, {}, RegressionMetrics(1.0, rmse, 10.0), 2)
            for i, rmse in enumerate([2.0, 1.5])
        ]
        agg = aggregate_report(trials)
        assert agg["mean"]["rmse"] == pytest.approx(1.75)
        assert agg["best"]["rmse"] == pytest.approx(1.5)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            aggregate_report([])

    def test_best_at_least_mean_for_maximized_metrics(self, rng):
        accs = rng.random(20).tolist()
        agg = aggregate_report(self.fake_trials(accs))
        assert agg["best"]["accuracy"] >= agg["mean"]["accuracy"]


def small_classification_dataset(seed=0, n_participants=30, per_group=2, signal=2.0):
    r = np.random.default_rng(seed)
    rows = []
    for p in range(n_participants):
        label = 1.0 if p % 2 == 0 else 0.0
        for s in range(per_group):
            x = r.standard_normal(4)
            x[0] += signal * label
            rows.append((f"p{p:02d}", label, x))
    groups = np.array([r0 for r0, _, _ in rows])
    y = np.array([r1 for _, r1, _ in rows])
    X = np.vstack([r2 for _, _, r2 in rows])
    return Dataset(X, y, groups, CLASSIFY)


class TestNestedCv:
    def test_trial_count(self):
        data = small_classification_dataset()
        trials = nested_cv(
            data, "dt", grid=[{"max_depth": 2}], rounds=2, k=5, inner_k=2, seed=0
        )
        assert len(trials) == 10
        assert {(t.round_index, t.fold_index) for t in trials} == {
            (r, f) for r in range(2) for f in range(5)
        }

    def test_single_grid_point_degenerate(self):
        # with one grid point the inner loop selects nothing: results equal
        # plain repeated k-fold CV with that hyperparameter
        from vascreen.learners import predict, train

        data = small_classification_dataset()
        trials = nested_cv(
            data, "dt", grid=[{"max_depth": 3}], rounds=1, k=5, inner_k=2, seed=1
        )
        assert all(t.hp == {"max_depth": 3} for t in trials)
        labels = data.y
        for t in trials:
            plan = make_outer_folds(
                data.groups, labels, k=5, round_index=t.round_index, seed=1
            )
            test_idx = np.asarray(plan.folds[t.fold_index], dtype=np.intp)
            train_idx = plan.train_indices(t.fold_index)
            model = train("dt", data.subset(train_idx), {"max_depth": 3})
            pred = predict(model, data.X[test_idx])
            plain = classification_metrics(data.y[test_idx], pred)
            assert plain.accuracy == t.metrics.accuracy
            assert plain.f1 == t.metrics.f1

    def test_leakage_guard(self):
        data = small_classification_dataset()
        trials = nested_cv(
            data,
            "dt",
            grid=[{"max_depth": 2}, {"max_depth": 3}],
            rounds=1,
            k=5,
            inner_k=3,
            seed=2,
            record_inner=True,
        )
        labels = data.y if data.task == CLASSIFY else None
        for t in trials:
            plan = make_outer_folds(
                data.groups, labels, k=5, round_index=t.round_index, seed=2
            )
            test_set = set(plan.folds[t.fold_index])
            train_set = set(range(data.n_samples)) - test_set
            inner_union = set()
            for fold in t.inner_global_indices:
                assert set(fold) <= train_set
                assert not (set(fold) & test_set)
                inner_union |= set(fold)
            assert inner_union == train_set

    def test_determinism_and_map_fn(self):
        data = small_classification_dataset()
        kwargs = dict(grid=[{"max_depth": 2}], rounds=1, k=5, inner_k=2, seed=5)
        a = nested_cv(data, "dt", **kwargs)
        b = nested_cv(data, "dt", **kwargs)
        assert [t.to_dict() for t in a] == [t.to_dict() for t in b]

    def test_signal_recovered(self):
        data = small_classification_dataset(signal=3.0)
        trials = nested_cv(
            data, "dt", grid=[{"max_depth": 3}], rounds=1, k=5, inner_k=2, seed=3
        )
        agg = aggregate_report(trials)
        assert agg["mean"]["accuracy"] > 0.8

    def test_permutation_null_near_chance(self):
        r = np.random.default_rng(99)
        data = small_classification_dataset(seed=4, n_participants=50, signal=3.0)
        permuted = Dataset(
            data.X, r.permutation(data.y), data.groups, CLASSIFY
        )
        trials = nested_cv(
            permuted, "dt", grid=[{"max_depth": 3}], rounds=3, k=5, inner_k=2, seed=6
        )
        agg = aggregate_report(trials)
        assert 0.42 <= agg["mean"]["accuracy"] <= 0.58

    def test_regression_path(self):
        r = np.random.default_rng(8)
        X = r.standard_normal((60, 3))
        y = X @ np.array([2.0, -1.0, 0.5]) + 10 + r.standard_normal(60) * 0.1
        groups = np.array([f"p{i // 2}" for i in range(60)])
        data = Dataset(X, y, groups, REGRESS)
        trials = nested_cv(
            data, "ridge", grid=[{"lam": 0.1}], rounds=1, k=5, inner_k=2, seed=0
        )
        agg = aggregate_report(trials)
        assert agg["mean"]["rmse"] < 0.5
        assert agg["mean"]["rrmse"] is not None

    def test_empty_grid_rejected(self):
        data = small_classification_dataset()
        with pytest.raises(ValueError, match="grid"):
            nested_cv(data, "dt", grid=[], rounds=1, k=5, seed=0)


class TestReportDeterminism:
    def test_byte_identical(self):
        data = small_classification_dataset()
        report = {
            "cells": {
                "a": aggregate_report(
                    nested_cv(data, "dt", grid=[{"max_depth": 2}], rounds=1, k=5, inner_k=2, seed=7)
                )
            }
        }
        report2 = {
            "cells": {
                "a": aggregate_report(
                    nested_cv(data, "dt", grid=[{"max_depth": 2}], rounds=1, k=5, inner_k=2, seed=7)
                )
            }
        }
        assert dumps_report(report) == dumps_report(report2)
