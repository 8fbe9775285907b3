"""Partition and sizing contracts for the k-fold splitter."""

import numpy as np
import pytest

from fairlens.splits import FoldSplit, kfold_splits, round_half_away


def test_round_half_away_from_zero():
    assert round_half_away(8.5) == 9
    assert round_half_away(9.4) == 9
    assert round_half_away(9.5) == 10
    assert round_half_away(0.04) == 0
    assert round_half_away(-8.5) == -9


def test_sizes_100_rows_10_folds():
    splits = kfold_splits(100, 10, seed=0, dataset="d")
    for s in splits:
        assert s.test.size == 10
        assert s.validation.size == 9   # 0.1 * 90 rounds to 9
        assert s.train.size == 81


def test_test_folds_partition_rows():
    n = 103
    splits = kfold_splits(n, 5, seed=1, dataset="d")
    sizes = sorted(s.test.size for s in splits)
    assert sizes == [20, 20, 21, 21, 21]
    all_test = np.concatenate([s.test for s in splits])
    assert sorted(all_test.tolist()) == list(range(n))


def test_within_fold_three_way_partition():
    for s in kfold_splits(57, 4, seed=2, dataset="d"):
        parts = np.concatenate([s.train, s.validation, s.test])
        assert sorted(parts.tolist()) == list(range(57))
        assert not set(s.train) & set(s.validation)
        assert not set(s.train) & set(s.test)
        assert not set(s.validation) & set(s.test)


def test_validation_floor_of_one():
    splits = kfold_splits(12, 4, seed=0, dataset="d", validation_fraction=0.01)
    for s in splits:
        assert s.validation.size == 1


def test_deterministic_per_key():
    a = kfold_splits(60, 5, seed=3, dataset="compas")
    b = kfold_splits(60, 5, seed=3, dataset="compas")
    for x, y in zip(a, b):
        assert np.array_equal(x.train, y.train)
        assert np.array_equal(x.validation, y.validation)
        assert np.array_equal(x.test, y.test)


def test_seed_and_dataset_change_splits():
    a = kfold_splits(60, 5, seed=3, dataset="compas")
    b = kfold_splits(60, 5, seed=4, dataset="compas")
    c = kfold_splits(60, 5, seed=3, dataset="credit")
    assert not all(np.array_equal(x.test, y.test) for x, y in zip(a, b))
    assert not all(np.array_equal(x.test, y.test) for x, y in zip(a, c))


def test_indices_sorted():
    for s in kfold_splits(40, 4, seed=7, dataset="d"):
        for arr in (s.train, s.validation, s.test):
            assert np.array_equal(arr, np.sort(arr))


def test_argument_validation():
    with pytest.raises(ValueError, match="at least 2 folds"):
        kfold_splits(10, 1, seed=0)
    with pytest.raises(ValueError, match="cannot split"):
        kfold_splits(3, 5, seed=0)
    with pytest.raises(ValueError, match="out of range"):
        kfold_splits(10, 2, seed=0, validation_fraction=1.0)
    with pytest.raises(ValueError, match="no training rows"):
        kfold_splits(4, 2, seed=0, validation_fraction=0.9)
