import numpy as np
import pytest
from hypothesis import given, strategies as st

from wsos.metrics import ConfusionMatrix, compute_metrics, confusion, mean_rank, rank_table


@pytest.mark.parametrize("t, p, expected", [
    ((1, 0), (1, 0), (1, 0, 0, 1)),
    ((1, 1), (0, 0), (0, 2, 0, 0)),
    ((1, 0, 1, 0), (1, 1, 0, 0), (1, 1, 1, 1)),
])
def test_confusion_counts(t, p, expected):
    assert confusion(t, p) == ConfusionMatrix(*expected)


def test_confusion_errors():
    with pytest.raises(ValueError, match="length"):
        confusion([1, 0], [1])
    with pytest.raises(ValueError, match="binary"):
        confusion([1, 2], [1, 0])


def test_metric_examples():
    m = compute_metrics(ConfusionMatrix(5, 5, 0, 90))
    # F = 10 / 15, G = sqrt(0.5 * 1)
    assert m.f_measure == pytest.approx(2 / 3, abs=1e-12)
    assert m.g_mean == pytest.approx(np.sqrt(0.5), abs=1e-12)
    assert compute_metrics(ConfusionMatrix(10, 0, 0, 90)) == compute_metrics(ConfusionMatrix(1, 0, 0, 1))
    perfect = compute_metrics(ConfusionMatrix(10, 0, 0, 90))
    assert (perfect.f_measure, perfect.g_mean) == (1.0, 1.0)
    miss = compute_metrics(ConfusionMatrix(0, 10, 0, 90))
    assert (miss.f_measure, miss.g_mean) == (0.0, 0.0)


def test_metric_requires_both_classes():
    with pytest.raises(ValueError):
        compute_metrics(ConfusionMatrix(0, 0, 1, 9))


counts = st.integers(0, 500)


@given(counts, counts, counts, counts, st.integers(1, 50))
def test_metrics_scale_free(tp, fn, fp, tn, s):
    if tp + fn == 0 or fp + tn == 0:
        return
    a = compute_metrics(ConfusionMatrix(tp, fn, fp, tn))
    b = compute_metrics(ConfusionMatrix(s * tp, s * fn, s * fp, s * tn))
    assert a.f_measure == pytest.approx(b.f_measure, abs=1e-12)
    assert a.g_mean == pytest.approx(b.g_mean, abs=1e-12)
    assert a.f_plus_g == a.f_measure + a.g_mean


@given(counts, counts, counts, counts)
def test_gmean_class_swap(tp, fn, fp, tn):
    if tp + fn == 0 or fp + tn == 0:
        return
    a = compute_metrics(ConfusionMatrix(tp, fn, fp, tn)).g_mean
    b = compute_metrics(ConfusionMatrix(tn, fp, fn, tp)).g_mean
    assert a == pytest.approx(b, abs=1e-12)


def test_mean_rank_examples():
    np.testing.assert_allclose(mean_rank([[0.9, 0.9], [0.8, 0.8]]), [1.0, 2.0])
    np.testing.assert_allclose(mean_rank([[0.5], [0.5]]), [1.5, 1.5])


def test_mean_rank_hand_table():
    scores = [[0.9, 0.5, 0.7],
              [0.8, 0.6, 0.7],
              [0.1, 0.4, 0.2]]
    # ranks per dataset: (1,2,3), (2,1,3), (1.5,1.5,3)
    np.testing.assert_allclose(mean_rank(scores), [4.5 / 3, 4.5 / 3, 3.0])


@given(st.lists(st.floats(0, 1), min_size=1, max_size=6), st.integers(1, 5))
def test_identical_rows_tie(col, m):
    table = np.tile(np.asarray(col), (m, 1))
    r = mean_rank(table)
    np.testing.assert_allclose(r, np.full(m, (m + 1) / 2))


def test_mean_rank_errors():
    with pytest.raises(ValueError):
        mean_rank(np.zeros((0, 0)))
    with pytest.raises(ValueError):
        mean_rank([[np.nan], [1.0]])


def test_rank_table_dict():
    t = rank_table(["a", "b"], {"g_mean": np.array([[0.2], [0.3]])})
    assert t.to_dict() == {"methods": ["a", "b"], "mean_rank": {"g_mean": [2.0, 1.0]}}
