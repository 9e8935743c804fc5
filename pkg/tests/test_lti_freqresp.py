import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import signal

from conftest import random_interconnection, random_stable_model
from modmor.freqresp import (NominalMatrix, compute_N, hinf_norm_estimate, make_log_grid,
                             read_csv, sigma_max, write_csv, write_sigma_csv)
from modmor.lti import (IllPosedError, InterconnectedSystem, ModelError, PoleFrequencyError,
                        StateSpaceModel, block_diag, error_system, freq_response,
                        freq_response_grid, lft_close, lft_response, series, stability_check)


def test_first_order_response():
    g = StateSpaceModel([[-1.0]], [[1.0]], [[1.0]], [[0.0]])
    assert freq_response(g, 0.0) == pytest.approx(1.0)
    assert abs(freq_response(g, 1.0)[0, 0]) == pytest.approx(1 / np.sqrt(2), rel=1e-14)


def test_response_matches_scipy(rng):
    g = random_stable_model(rng, 6, 1, 1)
    w = np.logspace(-2, 2, 37)
    _, h = signal.freqresp((g.A, g.B, g.C, g.D), w)
    np.testing.assert_allclose(freq_response_grid(g, w)[:, 0, 0], h, rtol=1e-10)
    np.testing.assert_allclose(freq_response(g, w[5])[0, 0], h[5], rtol=1e-10)


def test_dimension_and_finiteness_errors():
    with pytest.raises(ModelError):
        StateSpaceModel(np.eye(2), np.ones((3, 1)), np.ones((1, 2)), [[0.0]])
    with pytest.raises(ModelError):
        StateSpaceModel([[np.nan]], [[1.0]], [[1.0]], [[0.0]])
    with pytest.raises(ModelError):
        StateSpaceModel([[-1.0]], [[1.0]], [[1.0]], [[0.0]], input_labels=("a", "b"))


def test_pole_on_axis_raises():
    g = StateSpaceModel([[0.0, 1.0], [-4.0, 0.0]], [[0.0], [1.0]], [[1.0, 0.0]], [[0.0]])
    with pytest.raises(PoleFrequencyError):
        freq_response(g, 2.0)


def test_static_model():
    g = StateSpaceModel.static([[2.0, 3.0]])
    assert g.n == 0 and (g.p, g.m) == (1, 2)
    np.testing.assert_array_equal(freq_response(g, 5.0), [[2.0, 3.0]])
    assert stability_check(g) == (True, -np.inf)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), w=st.floats(1e-3, 1e3))
def test_series_is_product(seed, w):
    rng = np.random.default_rng(seed)
    a = random_stable_model(rng, 3, 2, 2)
    b = random_stable_model(rng, 2, 2, 1)
    np.testing.assert_allclose(freq_response(series(a, b), w),
                               freq_response(b, w) @ freq_response(a, w), rtol=1e-9, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), w=st.floats(1e-3, 1e3))
def test_block_diag_and_error_system(seed, w):
    rng = np.random.default_rng(seed)
    a = random_stable_model(rng, 3, 1, 2)
    b = random_stable_model(rng, 2, 2, 1)
    G = freq_response(block_diag([a, b]), w)
    np.testing.assert_allclose(G[:2, :1], freq_response(a, w), rtol=1e-12)
    np.testing.assert_allclose(G[2:, 1:], freq_response(b, w), rtol=1e-12)
    assert np.all(G[:2, 1:] == 0) and np.all(G[2:, :1] == 0)
    c = random_stable_model(rng, 4, 1, 2)
    np.testing.assert_allclose(freq_response(error_system(a, c), w),
                               freq_response(c, w) - freq_response(a, w), rtol=1e-9, atol=1e-12)


def test_lft_close_matches_pointwise_formula(rng):
    sys = random_interconnection(rng, k=3)
    Gc = lft_close(sys)
    for w in rng.uniform(0.01, 100.0, 10):
        Gb = freq_response(sys.blocks, w)
        # independent evaluation of K21 Gb (I - K11 Gb)^{-1} K12 + K22
        ref = sys.K21 @ Gb @ np.linalg.inv(np.eye(sys.m_b) - sys.K11 @ Gb) @ sys.K12 + sys.K22
        np.testing.assert_allclose(freq_response(Gc, w), ref, rtol=1e-10, atol=1e-13)
        np.testing.assert_allclose(lft_response(sys, Gb), ref, rtol=1e-12, atol=1e-14)


def test_ill_posed_interconnection():
    g = StateSpaceModel.static([[1.0]])
    with pytest.raises(IllPosedError):
        InterconnectedSystem((g,), [[1.0]], [[1.0]], [[1.0]], [[0.0]])


def test_with_subsystems_checks_dimensions(rng):
    sys = random_interconnection(rng)
    with pytest.raises(ModelError):
        sys.with_subsystems([StateSpaceModel.static(np.ones((5, 5)))] * sys.k)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_nominal_matrix_closes_the_perturbed_loop(seed):
    # E_c = N21 Delta (I - N11 Delta)^{-1} N12 for any block perturbation
    rng = np.random.default_rng(seed)
    sys = random_interconnection(rng)
    w = float(rng.uniform(0.1, 10.0))
    N = compute_N(sys, w)
    assert N.full.shape == (sys.m_b + sys.p_c, sys.p_b + sys.m_c)
    Gb = freq_response(sys.blocks, w)
    Delta = np.zeros_like(Gb)
    r = c = 0
    for g in sys.subsystems:
        Delta[r:r + g.p, c:c + g.m] = 0.1 * (rng.standard_normal((g.p, g.m))
                                             + 1j * rng.standard_normal((g.p, g.m)))
        r, c = r + g.p, c + g.m
    Ec = lft_response(sys, Gb + Delta) - lft_response(sys, Gb)
    ref = N.N21 @ Delta @ np.linalg.solve(np.eye(sys.m_b) - N.N11 @ Delta, N.N12)
    np.testing.assert_allclose(Ec, ref, rtol=1e-8, atol=1e-12)


def test_nominal_matrix_from_blocks():
    N = NominalMatrix.from_blocks(np.ones((2, 2)), np.ones((2, 1)), np.ones((1, 2)))
    assert N.full.shape == (3, 3)
    assert (N.m_c, N.p_c) == (1, 1)


def test_log_grid():
    g = make_log_grid(10 ** 2.5, 1e5, 1000)
    assert len(g) == 1000
    assert g.omegas[0] == pytest.approx(10 ** 2.5, rel=1e-15)
    assert g.omegas[-1] == pytest.approx(1e5, rel=1e-15)
    assert np.all(np.diff(np.log10(g.omegas)) > 0)
    with pytest.raises(ModelError):
        make_log_grid(10.0, 1.0, 5)


def test_hinf_first_order_and_resonance():
    g = StateSpaceModel([[-1.0]], [[1.0]], [[1.0]], [[0.0]])
    assert hinf_norm_estimate(g) == pytest.approx(1.0, rel=1e-9)
    zeta = 0.05
    res = StateSpaceModel([[0.0, 1.0], [-1.0, -2 * zeta]], [[0.0], [1.0]], [[1.0, 0.0]], [[0.0]])
    peak = 1.0 / (2 * zeta * np.sqrt(1 - zeta ** 2))
    assert hinf_norm_estimate(res) == pytest.approx(peak, rel=1e-7)


def test_hinf_is_lower_bound_of_dense_sweep(rng):
    g = random_stable_model(rng, 8, 2, 2)
    est = hinf_norm_estimate(g)
    dense = max(sigma_max(freq_response(g, w)) for w in np.logspace(-3, 3, 4001))
    assert est >= dense * (1 - 1e-9)


def test_csv_full_precision_and_lf(tmp_path):
    path = tmp_path / "x.csv"
    vals = [0.1, 1 / 3, 1e-300, np.pi]
    write_csv(path, ["omega", "value"], [[v, v] for v in vals])
    raw = path.read_bytes()
    assert b"\r" not in raw and raw.endswith(b"\n")
    header, rows = read_csv(path)
    assert header == ["omega", "value"]
    assert [float(r[1]) for r in rows] == vals
    write_sigma_csv(tmp_path / "s.csv", [1.0, 2.0], np.ones((2, 3)))
    assert read_csv(tmp_path / "s.csv")[0] == ["omega", "s1", "s2", "s3"]
