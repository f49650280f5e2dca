import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ahcr.clustering import reference_partition
from ahcr.dataset import Glyphs
from ahcr.evaluation import (cluster_table, comparison_table, confusion_csv, confusion_pairs,
                             evaluate, per_class_table, report_from_predictions)

labels_st = st.lists(st.tuples(st.integers(1, 28), st.integers(1, 28)), min_size=1, max_size=200)


@settings(max_examples=50, deadline=None)
@given(labels_st)
def test_rate_identities(pairs):
    y = np.array([p[0] for p in pairs])
    p = np.array([p[1] for p in pairs])
    r = report_from_predictions(y, p)
    assert r.crr + r.ecr == pytest.approx(100.0, abs=1e-9)
    assert 0 <= r.crr <= 100
    assert r.total == len(y)
    assert r.crr == pytest.approx(100.0 * np.mean(y == p))
    perm = np.random.default_rng(len(y)).permutation(len(y))
    assert report_from_predictions(y[perm], p[perm]).crr == r.crr


def test_three_of_four():
    r = report_from_predictions([1, 2, 3, 4], [1, 2, 3, 5])
    assert (r.crr, r.ecr) == (75.0, 25.0)
    assert np.trace(r.confusion) == 3 and r.confusion[3, 4] == 1
    assert r.summary_line() == "softmax,75.0000,25.0000"


def test_perfect_and_empty():
    y = np.arange(1, 29)
    assert report_from_predictions(y, y).crr == 100.0
    with pytest.raises(ValueError):
        report_from_predictions([], [])
    with pytest.raises(ValueError):
        report_from_predictions([1], [29])


def test_evaluate_calls_predictor():
    g = Glyphs(np.zeros((4, 64, 64), np.float32), [1, 2, 2, 3])
    r = evaluate(lambda x: np.full(len(x), 2), g, head="svm")
    assert r.head == "svm" and r.crr == 50.0


def test_per_class_table():
    r = report_from_predictions([1, 1, 2, 2], [1, 2, 2, 2])
    text = per_class_table(r)
    lines = text.splitlines()
    assert lines[0].split()[:1] == ["Character"] and len(lines) == 30
    assert "50.00" in lines[1] and "100.00" in lines[2]
    assert lines[3].split()[-2:] == ["-", "-"]
    assert lines[-1].split() == ["Average", "75.00", "25.00"]
    np.testing.assert_allclose(r.class_crr[:2], [50, 100])
    assert np.isnan(r.class_crr[2])


def test_cluster_table_groups_rows():
    y = np.arange(1, 29)
    r = report_from_predictions(y, y)
    text = cluster_table(r, reference_partition())
    assert len(text.splitlines()) == 1 + 13 + 1


def test_confusion_pairs_order():
    r = report_from_predictions([2, 2, 2, 3, 3, 1], [3, 3, 1, 2, 2, 1])
    assert confusion_pairs(r, top_k=3) == [(2, 3, 2), (3, 2, 2), (2, 1, 1)]
    with pytest.raises(ValueError):
        confusion_pairs(r, top_k=0)


def test_confusion_csv_and_comparison():
    r = report_from_predictions([1, 2], [1, 1])
    rows = confusion_csv(r).splitlines()
    assert len(rows) == 29 and rows[1].startswith("alef,1,0")
    table = comparison_table([r, report_from_predictions([1], [1], head="svm")])
    assert "94.90%" in table and "95.07%" in table
    assert "this run: svm head" in table
    assert "published" not in comparison_table([r], include_published=False)
