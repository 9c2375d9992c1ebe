import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wsos.dataset import Dataset, DatasetError
from wsos.ensemble import (EnsembleModel, NetworkArch, TrainConfig, bootstrap_subsets, build_network,
                           ensemble_predict, head_outputs, head_probs, loss_and_grads, score_heads, train_head,
                           weights_from_scores)
from wsos.numerics import RandomStream
from wsos.oversample import SoftLabeledDataset

from conftest import blobs


def _pool(n_neg, n_pos):
    rng = np.random.default_rng(0)
    return Dataset(rng.normal(size=(n_neg + n_pos, 3)), np.r_[np.zeros(n_neg), np.ones(n_pos)])


def test_bootstrap_cardinality():
    ds = _pool(200, 10)
    subs = bootstrap_subsets(ds, 4, 3.0, RandomStream(0))
    assert [s.subset_id for s in subs] == [0, 1, 2, 3]
    for s in subs:
        assert (s.dataset.n_neg, s.dataset.n_pos) == (30, 10)
        np.testing.assert_array_equal(s.dataset.positives(), ds.positives())
        neg_rows = {tuple(r) for r in ds.negatives()}
        assert all(tuple(r) in neg_rows for r in s.dataset.negatives())


def test_bootstrap_balanced():
    s = bootstrap_subsets(_pool(50, 7), 1, 1.0, RandomStream(0))[0]
    assert s.dataset.n_neg == s.dataset.n_pos == 7


@pytest.mark.parametrize("seed", range(10))
def test_bootstrap_subsets_differ(seed):
    a, b = bootstrap_subsets(_pool(1000, 20), 2, 2.0, RandomStream(seed))
    assert not np.array_equal(a.dataset.negatives(), b.dataset.negatives())


def test_bootstrap_errors():
    with pytest.raises(DatasetError):
        bootstrap_subsets(_pool(10, 0), 2, 2.0, RandomStream(0))
    with pytest.raises(ValueError):
        bootstrap_subsets(_pool(10, 2), 0, 2.0, RandomStream(0))


def _params(model):
    return [a for W, b in model.trunk for a in (W, b)] + [a for h in model.heads for W, b in h for a in (W, b)]


def test_build_deterministic_and_softmax():
    arch = NetworkArch(3, K=1)
    a, b = build_network(arch, RandomStream(2)), build_network(arch, RandomStream(2))
    assert a.K == 1 and arch.trunk_widths == [16]
    for x, y in zip(_params(a), _params(b)):
        np.testing.assert_array_equal(x, y)
    X = np.random.default_rng(0).normal(size=(20, 3)) * 5
    np.testing.assert_allclose(head_probs(a, 0, X).sum(axis=1), 1.0, atol=1e-12)


def _soft(ds):
    return SoftLabeledDataset.from_hard(ds.features, ds.labels)


def test_zero_epochs_leaves_model():
    ds = blobs(20, 20, dim=3)
    m = build_network(NetworkArch(3, K=2), RandomStream(0))
    out, trace = train_head(m, 0, _soft(ds), TrainConfig(epochs=0), RandomStream(1))
    assert trace == []
    for x, y in zip(_params(m), _params(out)):
        np.testing.assert_array_equal(x, y)


def test_training_isolates_other_heads():
    ds = blobs(20, 20, dim=3)
    m = build_network(NetworkArch(3, K=3), RandomStream(0))
    out, _ = train_head(m, 1, _soft(ds), TrainConfig(epochs=5), RandomStream(1))
    for j in (0, 2):
        for (W0, b0), (W1, b1) in zip(m.heads[j], out.heads[j]):
            assert W0.tobytes() == W1.tobytes() and b0.tobytes() == b1.tobytes()
    assert not np.array_equal(m.heads[1][0][0], out.heads[1][0][0])
    assert not np.array_equal(m.trunk[0][0], out.trunk[0][0])


def test_train_head_bad_index():
    m = build_network(NetworkArch(2, K=1), RandomStream(0))
    with pytest.raises(IndexError):
        train_head(m, 1, _soft(blobs(5, 5)), TrainConfig(epochs=1), RandomStream(0))


def _loss(model, j, X, Y):
    return loss_and_grads(model, j, X, Y)[0]


@pytest.mark.parametrize("seed", range(3))
def test_backprop_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(5, 3))
    f = rng.uniform(size=5)
    Y = np.column_stack([1 - f, f])
    m = build_network(NetworkArch(3, trunk_widths=[6, 5], K=2, head_width=4), RandomStream(seed))
    # nonzero biases so no unit sits exactly at a kink
    for W, b in m.trunk + m.heads[1]:
        b += rng.normal(0, 0.1, b.shape)
    _, tg, hg = loss_and_grads(m, 1, X, Y)
    analytic = [g for pair in tg + hg for g in pair]
    params = [a for W, b in m.trunk for a in (W, b)] + [a for W, b in m.heads[1] for a in (W, b)]
    h = 1e-6
    for p, g in zip(params, analytic):
        fd = np.zeros_like(p)
        for idx in np.ndindex(p.shape):
            old = p[idx]
            p[idx] = old + h
            up = _loss(m, 1, X, Y)
            p[idx] = old - h
            down = _loss(m, 1, X, Y)
            p[idx] = old
            fd[idx] = (up - down) / (2 * h)
        denom = max(np.linalg.norm(fd), 1e-8)
        assert np.linalg.norm(g - fd) / denom <= 1e-4


def test_one_hot_soft_loss_is_standard_cross_entropy():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(8, 2))
    y = rng.integers(0, 2, 8)
    m = build_network(NetworkArch(2, K=1), RandomStream(0))
    probs = head_probs(m, 0, X)
    standard = -np.mean(np.log(probs[np.arange(8), y]))
    assert _loss(m, 0, X, np.column_stack([1 - y, y]).astype(float)) == pytest.approx(standard, abs=1e-12)


def test_loss_halves_on_separable_fixture(separable):
    m = build_network(NetworkArch(2, K=1), RandomStream(0))
    _, trace = train_head(m, 0, _soft(separable), TrainConfig(), RandomStream(1))
    assert len(trace) == 200
    assert trace[-1] <= 0.5 * trace[0]


def test_weights_from_scores_examples():
    np.testing.assert_allclose(weights_from_scores([0.6, 1.4]), [0.3, 0.7])
    np.testing.assert_allclose(weights_from_scores([1.0, 1.0, 1.0]), [1 / 3] * 3)
    np.testing.assert_allclose(weights_from_scores([0.0, 0.0]), [0.5, 0.5])


@given(st.lists(st.floats(0, 2), min_size=1, max_size=10))
def test_weights_sum_to_one(s):
    w = weights_from_scores(s)
    assert abs(w.sum() - 1) <= 1e-12 and np.all(w >= 0)


def _constant_heads(outputs):
    """Model whose head j outputs ``outputs[j]`` for every input."""
    K = len(outputs)
    m = build_network(NetworkArch(2, K=K), RandomStream(0))
    for j, o in enumerate(outputs):
        (W1, b1), (W2, b2) = m.heads[j]
        logit = np.array([0.0, np.log(o / (1 - o))]) if o < 1 else np.array([-1000.0, 0.0])
        m.heads[j][1] = (np.zeros_like(W2), logit)
    return m


def test_predict_hand_value():
    m = _constant_heads([0.5, 1.0])
    m.head_weights = np.array([0.3, 0.7])
    R, lab = ensemble_predict(m, np.zeros((3, 2)))
    np.testing.assert_allclose(R, 0.85, atol=1e-12)
    assert np.all(lab == 1)


def test_predict_single_head_and_all_ones():
    m = build_network(NetworkArch(2, K=1), RandomStream(3))
    X = np.random.default_rng(0).normal(size=(10, 2))
    np.testing.assert_array_equal(ensemble_predict(m, X)[0], head_outputs(m, X)[:, 0])
    ones = _constant_heads([1.0, 1.0, 1.0])
    np.testing.assert_allclose(ensemble_predict(ones, X)[0], 1.0)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10_000), K=st.integers(1, 6))
def test_prediction_is_convex_combination(seed, K):
    rng = np.random.default_rng(seed)
    m = build_network(NetworkArch(2, K=K), RandomStream(seed))
    m.head_weights = weights_from_scores(rng.uniform(0, 2, K))
    X = rng.normal(size=(20, 2)) * 3
    O = head_outputs(m, X)
    R, _ = ensemble_predict(m, X)
    assert np.all(R >= O.min(axis=1) - 1e-12) and np.all(R <= O.max(axis=1) + 1e-12)


def test_score_heads_on_trained_model(separable):
    m = build_network(NetworkArch(2, K=2), RandomStream(0))
    m, _ = train_head(m, 0, _soft(separable), TrainConfig(epochs=50), RandomStream(1))
    s, w = score_heads(m, separable.features, separable.labels)
    assert s.shape == (2,) and abs(w.sum() - 1) <= 1e-12
    assert s[0] > 1.5


def test_predict_dimension_mismatch():
    m = build_network(NetworkArch(2, K=1), RandomStream(0))
    with pytest.raises(ValueError):
        ensemble_predict(m, np.zeros((2, 3)))


def test_model_round_trip(tmp_path):
    m = build_network(NetworkArch(3, K=2), RandomStream(5))
    m.head_weights = np.array([0.25, 0.75])
    m.save(tmp_path / "m.json")
    back = EnsembleModel.load(tmp_path / "m.json")
    for x, y in zip(_params(m), _params(back)):
        np.testing.assert_array_equal(x, y)
    np.testing.assert_array_equal(back.head_weights, m.head_weights)
    with pytest.raises(ValueError):
        EnsembleModel.from_dict({"format": "other", "version": 1})
