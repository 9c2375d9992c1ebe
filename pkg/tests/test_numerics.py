import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wsos.numerics import RandomStream, SingularMatrixError, finite_diff_grad, solve_dd


def test_solve_small_system():
    x = solve_dd([[2.0, -1.0], [-1.0, 2.0]], [1.0, 1.0])
    np.testing.assert_allclose(x, [1.0, 1.0], atol=1e-12)


def test_singular_matrix_names_row():
    with pytest.raises(SingularMatrixError) as err:
        solve_dd([[1.0, 1.0], [1.0, 1.0]], [1.0, 2.0])
    assert err.value.row == 1
    assert "row 1" in str(err.value)


@pytest.mark.parametrize("A, b", [
    (np.ones((2, 3)), np.ones(2)),
    (np.eye(2), np.ones(3)),
    (np.array([[np.nan, 0.0], [0.0, 1.0]]), np.ones(2)),
])
def test_solve_rejects_bad_input(A, b):
    with pytest.raises(ValueError):
        solve_dd(A, b)


@st.composite
def dominant_systems(draw):
    n = draw(st.integers(1, 50))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    A = rng.uniform(-1, 1, (n, n))
    np.fill_diagonal(A, 0.0)
    np.fill_diagonal(A, np.abs(A).sum(axis=1) + rng.uniform(0.1, 2.0, n))
    return A, rng.normal(size=n)


@settings(max_examples=1000, deadline=None)
@given(dominant_systems())
def test_residual_small_on_dominant_systems(system):
    A, b = system
    x = solve_dd(A, b)
    assert np.abs(A @ x - b).max() <= 1e-10 * max(1.0, np.abs(b).max())


def test_finite_diff_quadratic():
    g = finite_diff_grad(lambda P: float(np.sum(P**2)), np.array([[1.0, -2.0], [0.5, 3.0]]))
    np.testing.assert_allclose(g, [[2.0, -4.0], [1.0, 6.0]], atol=1e-8)


def test_finite_diff_error_is_second_order():
    # cubic term: central difference error is h^2 * f''' / 6
    f = lambda P: float(P[0, 0] ** 3)
    errs = [abs(finite_diff_grad(f, np.array([[1.0]]), h)[0, 0] - 3.0) for h in (1e-2, 5e-3)]
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=1e-3)


def test_finite_diff_non_finite():
    with pytest.raises(FloatingPointError):
        finite_diff_grad(lambda P: float("nan"), np.zeros((1, 1)))


def test_stream_determinism_and_children():
    a, b = RandomStream(7), RandomStream(7)
    np.testing.assert_array_equal(a.uniform(size=10), b.uniform(size=10))
    assert a.position == 10
    c1, c2 = RandomStream(7).child(1), RandomStream(7).child(2)
    assert not np.array_equal(c1.uniform(size=5), c2.uniform(size=5))
    np.testing.assert_array_equal(RandomStream(7).child(3, 4).uniform(size=3), RandomStream(7, (3, 4)).uniform(size=3))


def test_uniform_mean():
    u = RandomStream(0).uniform(0.0, 1.0, 100_000)
    assert u.min() >= 0.0 and u.max() < 1.0
    assert abs(u.mean() - 0.5) <= 0.01


def test_normal_zero_sd_and_bad_args():
    s = RandomStream(0)
    assert np.all(s.normal(3.0, 0.0, 5) == 3.0)
    with pytest.raises(ValueError):
        s.normal(0.0, -1.0)
    with pytest.raises(ValueError):
        s.uniform(1.0, 1.0)
