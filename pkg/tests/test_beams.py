import numpy as np
import pytest

from modmor.beams import (BeamSpec, assemble_beam, beam_element_matrices, beam_statespace,
                          build_three_beam_system, dof_index, natural_frequencies, case_study_specs,
                          three_beam_iomaps)
from modmor.freqresp import compute_N
from modmor.lti import ModelError, freq_response, freq_response_grid, lft_close, stability_check


def beam_constant(spec):
    return np.sqrt(spec.youngs_modulus * spec.second_area_moment
                   / (spec.mass_density * spec.cross_section_area)) / spec.length ** 2


def test_case_study_orders():
    sys = build_three_beam_system()
    assert tuple(g.n for g in sys.subsystems) == (200, 84, 120)
    small = build_three_beam_system(case_study_specs((10, 4, 6)))
    assert tuple(g.n for g in small.subsystems) == (40, 20, 24)
    assert tuple(g.m for g in sys.subsystems) == (2, 5, 2)
    assert tuple(g.p for g in sys.subsystems) == (2, 4, 3)


def test_cantilever_frequencies_match_euler_bernoulli():
    spec = case_study_specs()[0]
    f = natural_frequencies(spec)
    c = beam_constant(spec)
    # clamped-free roots of cos(bL) cosh(bL) = -1
    for k, bl in enumerate([1.875104, 4.694091, 7.854757]):
        assert f[k] == pytest.approx(bl ** 2 * c, rel=1e-3)
    assert f[0] == pytest.approx(555.93, rel=1e-3)


def test_free_free_has_two_rigid_modes_and_correct_first_bending():
    spec = case_study_specs()[1]
    f = natural_frequencies(spec)
    assert np.all(f[:2] < 1e-3 * f[2])
    assert f[2] == pytest.approx(4.730041 ** 2 * beam_constant(spec), rel=1e-3)


def test_element_matrices_are_symmetric_and_rigid_motions_are_free():
    K, M = beam_element_matrices(2e11, 1e-9, 8e3, 1e-6, 0.1)
    np.testing.assert_allclose(M, M.T)
    np.testing.assert_allclose(K, K.T)
    assert np.all(np.linalg.eigvalsh(M) > 0)
    # translation and small rotation of a free element store no strain energy
    h = 0.1
    for q in (np.array([1.0, 0.0, 1.0, 0.0]), np.array([0.0, 1.0, h, 1.0])):
        np.testing.assert_allclose(K @ q, 0.0, atol=1e-6 * np.abs(K).max())


def test_total_mass_is_consistent():
    spec = case_study_specs()[1]
    M, _ = assemble_beam(spec)
    # unit translation of every node: q^T M q is the beam mass
    q = np.zeros(spec.num_dofs)
    q[[dof_index(spec, i, "translation") for i in range(spec.num_nodes)]] = 1.0
    mass = spec.mass_density * spec.cross_section_area * spec.length
    assert q @ M @ q == pytest.approx(mass, rel=1e-12)


def test_modal_and_physical_realizations_agree():
    spec = case_study_specs((8, 4, 6))[0]
    io = three_beam_iomaps(case_study_specs((8, 4, 6)))[0]
    a = beam_statespace(spec, io, "modal")
    b = beam_statespace(spec, io, "physical")
    w = np.logspace(2, 5, 25)
    np.testing.assert_allclose(freq_response_grid(a, w), freq_response_grid(b, w),
                               rtol=1e-7, atol=1e-16)


def test_interconnected_beams_are_stable():
    sys = build_three_beam_system(case_study_specs((10, 4, 6)))
    ok, abscissa = stability_check(lft_close(sys))
    assert ok and abscissa < 0


def test_closed_loop_matches_the_lft_formula(rng):
    sys = build_three_beam_system(case_study_specs((10, 4, 6)))
    Gc = lft_close(sys)
    for w in 10 ** rng.uniform(2.5, 5.0, 20):
        Gb = freq_response(sys.blocks, w)
        ref = sys.K21 @ Gb @ np.linalg.solve(np.eye(sys.m_b) - sys.K11 @ Gb, sys.K12) + sys.K22
        np.testing.assert_allclose(freq_response(Gc, w), ref, rtol=1e-10)


def test_nominal_matrix_has_no_direct_path():
    sys = build_three_beam_system(case_study_specs((10, 4, 6)))
    N = compute_N(sys, 1e3)
    np.testing.assert_array_equal(N.N22, 0.0)


def test_spec_validation():
    common = dict(cross_section_area=1.0, second_area_moment=1.0, youngs_modulus=1.0,
                  mass_density=1.0, length=1.0)
    with pytest.raises(ModelError):
        BeamSpec(modal_damping_ratio=1.5, num_elements=2, **common)
    with pytest.raises(ModelError):
        BeamSpec(modal_damping_ratio=0.01, num_elements=0, **common)
    with pytest.raises(ModelError):
        BeamSpec(modal_damping_ratio=0.01, num_elements=2, boundary="pinned", **common)
    with pytest.raises(ModelError):
        three_beam_iomaps(case_study_specs((10, 5, 6)))
