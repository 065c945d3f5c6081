import csv

import numpy as np
import pytest

from miai.metrics import UndefinedAUCError, roc_auc, trapezoid_area

from oracles import pairwise_auc, random_sets


def test_perfect_ranking():
    assert roc_auc([0.9, 0.1], [1, 0]).auc == 1.0


def test_all_ties():
    assert roc_auc([0.3] * 6, [0, 1, 0, 1, 1, 0]).auc == 0.5


def test_worked_example():
    assert roc_auc([0.8, 0.6, 0.4, 0.2], [1, 0, 1, 0]).auc == 0.75


def test_one_class_undefined():
    with pytest.raises(UndefinedAUCError):
        roc_auc([0.1, 0.2], [1, 1])


def test_length_mismatch():
    with pytest.raises(ValueError):
        roc_auc([0.1, 0.2], [1])


def test_oracle_1000_sets():
    for scores, labels in random_sets(1000):
        assert abs(roc_auc(scores, labels).auc - pairwise_auc(scores, labels)) <= 1e-10


def test_curve_shape_and_trapezoid():
    for scores, labels in random_sets(200, seed=1):
        r = roc_auc(scores, labels)
        assert r.points[0] == (0.0, 0.0) and r.points[-1] == (1.0, 1.0)
        assert np.all(np.diff(r.fpr) >= 0) and np.all(np.diff(r.tpr) >= 0)
        assert abs(trapezoid_area(r.fpr, r.tpr) - r.auc) <= 1e-12


def test_negation_complements():
    for scores, labels in random_sets(200, seed=2):
        assert abs(roc_auc(-scores, labels).auc - (1 - roc_auc(scores, labels).auc)) <= 1e-12


def test_monotone_transform_invariance():
    for scores, labels in random_sets(200, seed=3):
        assert roc_auc(np.exp(3 * scores) + 1, labels).auc == roc_auc(scores, labels).auc


def test_csv_export(tmp_path):
    r = roc_auc([0.8, 0.6, 0.4, 0.2], [1, 0, 1, 0])
    path = tmp_path / "roc.csv"
    r.to_csv(path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["fpr", "tpr"]
    assert [(float(a), float(b)) for a, b in rows[1:]] == r.points
