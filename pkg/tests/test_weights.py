import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from modmor.lti import ModelError, StateSpaceModel, freq_response_grid
from modmor.weights import diagonal_weight, fit_weight


def is_minimum_phase(g: StateSpaceModel) -> bool:
    # zeros of a SISO model with invertible D are the eigenvalues of A - B D^-1 C
    zeros = np.linalg.eigvals(g.A - g.B @ np.linalg.solve(g.D, g.C))
    return bool(np.all(zeros.real < 0))


def test_constant_samples_give_a_constant_gain():
    w = np.logspace(0, 3, 30)
    fit = fit_weight(np.full(30, 7.0), w, order=0)
    assert fit.order == 0 and fit.fit_error == pytest.approx(0.0, abs=1e-14)
    np.testing.assert_allclose(np.abs(freq_response_grid(fit.model, w)[:, 0, 0]), 7.0)


def test_recovers_a_lead_lag_shape():
    # |(s + 10) / (s + 100)| is exactly representable at order 1
    w = np.logspace(-1, 4, 80)
    target = np.abs((1j * w + 10.0) / (1j * w + 100.0))
    fit = fit_weight(target, w, order=1)
    assert fit.fit_error < 1e-3
    got = np.abs(freq_response_grid(fit.model, w)[:, 0, 0])
    np.testing.assert_allclose(got, target, rtol=1e-3)


def test_resonant_target_at_order_two():
    w = np.logspace(-1, 1, 120)
    s = 1j * w
    target = np.abs((s ** 2 + 0.2 * s + 1.0) / (s ** 2 + 0.02 * s + 1.0))
    fit = fit_weight(target, w, order=2)
    assert fit.fit_error < 5e-2


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), order=st.integers(1, 5))
def test_fits_are_stable_and_minimum_phase(seed, order):
    rng = np.random.default_rng(seed)
    w = np.logspace(2, 5, 60)
    samples = np.exp(np.cumsum(rng.normal(0.0, 0.3, 60)))
    fit = fit_weight(samples, w, order=order)
    assert fit.order == order
    assert np.all(np.linalg.eigvals(fit.model.A).real < 0)
    assert is_minimum_phase(fit.model)
    got = np.abs(freq_response_grid(fit.model, w)[:, 0, 0])
    assert np.max(np.abs(got / samples - 1.0)) == pytest.approx(fit.fit_error, rel=1e-9)


def test_diagonal_weight_stacks_channels():
    w = np.logspace(0, 2, 10)
    a = fit_weight(np.full(10, 2.0), w, order=0)
    b = fit_weight(np.full(10, 3.0), w, order=0)
    D = freq_response_grid(diagonal_weight([a, b]), w)
    np.testing.assert_allclose(D[0], np.diag([2.0, 3.0]))


def test_rejects_bad_samples():
    w = np.logspace(0, 1, 3)
    with pytest.raises(ModelError):
        fit_weight([1.0, 0.0, 1.0], w)
    with pytest.raises(ModelError):
        fit_weight([1.0, np.inf, 1.0], w)
    with pytest.raises(ModelError):
        fit_weight([1.0, 1.0], w)
    with pytest.raises(ModelError):
        fit_weight([1.0, 1.0, 1.0], w, order=-1)
