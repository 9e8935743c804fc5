import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_stable_model
from modmor.freqresp import hinf_norm_estimate, make_log_grid
from modmor.lti import ModelError, StateSpaceModel, error_system, freq_response, freq_response_grid
from modmor.reduction import (ReductionError, balance, balanced_truncation, fw_balance,
                              fw_balanced_truncation, gramians, hankel_singular_values,
                              lyapunov_residual, parallel, reduce_to_requirement, solve_lyapunov,
                              stable_split, weighted_error_margins)


def kron_lyapunov(A, Q):
    """Dense vectorized solve of A P + P A^T + Q = 0 (reference for small n)."""
    n = A.shape[0]
    K = np.kron(np.eye(n), A) + np.kron(A, np.eye(n))
    return np.linalg.solve(K, -Q.reshape(-1, order="F")).reshape(n, n, order="F")


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), n=st.integers(1, 8))
def test_lyapunov_matches_kronecker_solve(seed, n):
    rng = np.random.default_rng(seed)
    g = random_stable_model(rng, n, 2, 1)
    Q = g.B @ g.B.T
    P = solve_lyapunov(g.A, Q)
    np.testing.assert_allclose(P, kron_lyapunov(g.A, Q), rtol=1e-8, atol=1e-10 * np.abs(P).max())
    assert lyapunov_residual(g.A, P, Q) < 1e-12


def test_lyapunov_rejects_unstable_or_asymmetric():
    with pytest.raises(ModelError):
        solve_lyapunov(np.eye(2), np.eye(2))
    with pytest.raises(ModelError):
        solve_lyapunov(-np.eye(2), np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_first_order_hankel_value():
    # b c / (s + a) has the single Hankel value |b c| / (2 a)
    g = StateSpaceModel([[-3.0]], [[2.0]], [[5.0]], [[0.0]])
    assert hankel_singular_values(g)[0] == pytest.approx(10.0 / 6.0, rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), n=st.integers(2, 10))
def test_hankel_values_are_similarity_invariant(seed, n):
    rng = np.random.default_rng(seed)
    g = random_stable_model(rng, n, 2, 2)
    T = rng.standard_normal((n, n)) + 3 * np.eye(n)
    Ti = np.linalg.inv(T)
    h = StateSpaceModel(Ti @ g.A @ T, Ti @ g.B, g.C @ T, g.D)
    ref = hankel_singular_values(g)
    np.testing.assert_allclose(hankel_singular_values(h), ref, rtol=1e-6, atol=1e-7 * ref[0])


def test_balanced_gramians_are_equal_and_diagonal(rng):
    g = random_stable_model(rng, 7, 2, 3)
    bal = balance(g)
    A, B, C = bal.balanced()
    P, Q = gramians(StateSpaceModel(A, B, C, g.D))
    np.testing.assert_allclose(P, np.diag(bal.hankel_values), atol=1e-8)
    np.testing.assert_allclose(Q, np.diag(bal.hankel_values), atol=1e-8)


@pytest.mark.parametrize("projection", ["truncate", "residualize"])
def test_tail_bound(rng, projection):
    for _ in range(5):
        g = random_stable_model(rng, 10, 2, 2)
        r = int(rng.integers(1, 9))
        res = balanced_truncation(g, r, projection)
        err = hinf_norm_estimate(error_system(g, res.reduced))
        assert err <= 2 * np.sum(res.hankel_values[r:]) + 1e-6
        assert res.reduced.n == r


def test_residualization_keeps_dc_gain(rng):
    g = random_stable_model(rng, 8, 1, 1)
    red = balanced_truncation(g, 3, "residualize").reduced
    np.testing.assert_allclose(freq_response(red, 0.0), freq_response(g, 0.0), rtol=1e-9)


def test_full_order_is_exact_and_bad_order_raises(rng):
    g = random_stable_model(rng, 4, 1, 1)
    assert balanced_truncation(g, 4).reduced is g
    with pytest.raises(ModelError):
        balanced_truncation(g, 5)
    with pytest.raises(ModelError):
        balanced_truncation(StateSpaceModel([[1.0]], [[1.0]], [[1.0]], [[0.0]]), 0)


def test_identity_weights_reduce_to_plain_balancing(rng):
    g = random_stable_model(rng, 6, 2, 2)
    eye = StateSpaceModel.static(np.eye(2))
    np.testing.assert_allclose(fw_balance(g, eye, eye).hankel_values,
                               balance(g).hankel_values, rtol=1e-8)
    a = fw_balanced_truncation(g, eye, eye, 3).reduced
    b = balanced_truncation(g, 3).reduced
    w = np.logspace(-2, 2, 20)
    np.testing.assert_allclose(freq_response_grid(a, w), freq_response_grid(b, w),
                               rtol=1e-6, atol=1e-9)


def test_weighting_moves_accuracy_to_the_weighted_band():
    # two well-separated resonances; a weight peaking at the low one keeps it
    def mode(wn, zeta, gain):
        return StateSpaceModel([[0.0, 1.0], [-wn ** 2, -2 * zeta * wn]], [[0.0], [gain]],
                               [[1.0, 0.0]], [[0.0]])
    lo, hi = mode(1.0, 0.02, 1.0), mode(100.0, 0.02, 2e4)
    g = parallel(lo, hi)
    low_pass = StateSpaceModel([[-0.5]], [[0.5]], [[1.0]], [[0.0]])
    fw = fw_balanced_truncation(g, low_pass, None, 2, "residualize").reduced
    bt = balanced_truncation(g, 2, "residualize").reduced
    np.testing.assert_allclose(np.abs(fw.poles()), 1.0, rtol=1e-2)
    np.testing.assert_allclose(np.abs(bt.poles()), 100.0, rtol=1e-2)
    e_fw = abs(freq_response(error_system(g, fw), 1.0)[0, 0])
    e_bt = abs(freq_response(error_system(g, bt), 1.0)[0, 0])
    assert e_fw < 1e-2 * e_bt


def test_stable_split_reconstructs(rng):
    stable = random_stable_model(rng, 5, 2, 2)
    rigid = StateSpaceModel([[0.0, 1.0], [0.0, 0.0]], rng.standard_normal((2, 2)),
                            rng.standard_normal((2, 2)), np.zeros((2, 2)))
    g = parallel(stable, rigid)
    gs, gu = stable_split(g)
    assert (gs.n, gu.n) == (5, 2)
    w = np.logspace(-1, 2, 15)
    np.testing.assert_allclose(freq_response_grid(parallel(gs, gu), w),
                               freq_response_grid(g, w), rtol=1e-8, atol=1e-10)


def test_requirement_driven_order(rng):
    g = random_stable_model(rng, 12, 1, 1)
    grid = make_log_grid(1e-2, 1e2, 60)
    mag = np.abs(freq_response_grid(g, grid.omegas)[:, 0, 0])
    # budget |E| <= v w with v w = 0.05 |G|
    v = np.sqrt(0.05 * mag)[:, None]
    w = np.sqrt(0.05 * mag)[:, None]
    res = reduce_to_requirement(g, v, w, grid, method="bt")
    assert res.reduced_order <= g.n
    assert np.all(res.margins >= 0)
    E = freq_response_grid(g, grid.omegas) - freq_response_grid(res.reduced, grid.omegas)
    np.testing.assert_allclose(res.margins, weighted_error_margins(E, v, w), atol=1e-12)
    # a looser budget never needs more states
    loose = reduce_to_requirement(g, 3 * v, 3 * w, grid, method="bt")
    assert loose.reduced_order <= res.reduced_order


@pytest.mark.parametrize("policy", ["ascending", "bisect", "descending"])
def test_order_policies_return_passing_models(rng, policy):
    g = random_stable_model(rng, 8, 2, 1)
    grid = make_log_grid(1e-2, 1e2, 40)
    v = np.full((40, 2), 0.3)
    w = np.full((40, 1), 0.3)
    res = reduce_to_requirement(g, v, w, grid, policy=policy, fit_order=2)
    assert np.all(res.margins >= 0)


def test_ascending_policy_finds_the_smallest_passing_order(rng):
    g = random_stable_model(rng, 8, 1, 1)
    grid = make_log_grid(1e-2, 1e2, 40)
    v = np.full((40, 1), 0.2)
    w = np.full((40, 1), 0.2)
    res = reduce_to_requirement(g, v, w, grid, method="bt")
    bal = balance(g)
    for r in range(res.reduced_order):
        red = bal.residualize(r)
        E = freq_response_grid(g, grid.omegas) - freq_response_grid(red, grid.omegas)
        assert np.any(weighted_error_margins(E, v, w) < 0)


def test_unstable_part_is_kept_exactly(rng):
    stable = random_stable_model(rng, 6, 1, 1)
    rigid = StateSpaceModel([[0.0, 1.0], [0.0, 0.0]], [[0.0], [1.0]], [[1.0, 0.0]], [[0.0]])
    g = parallel(stable, rigid)
    grid = make_log_grid(1e-1, 1e2, 30)
    v = np.full((30, 1), 1.0)
    w = np.full((30, 1), 1.0)
    res = reduce_to_requirement(g, v, w, grid)
    assert res.kept_unstable == 2
    assert np.sum(np.abs(res.reduced.poles()) < 1e-9) == 2


def test_invalid_budgets_and_options(rng):
    g = random_stable_model(rng, 4, 1, 1)
    grid = make_log_grid(1e-1, 1e1, 10)
    ok = np.ones((10, 1))
    with pytest.raises(ModelError):
        reduce_to_requirement(g, -ok, ok, grid)
    with pytest.raises(ModelError):
        reduce_to_requirement(g, ok, ok, grid, method="modal")
    with pytest.raises(ModelError):
        reduce_to_requirement(g, ok, ok, grid, policy="random")
    assert issubclass(ReductionError, ModelError)
