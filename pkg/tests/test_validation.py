import json

import numpy as np
import pytest

from conftest import random_interconnection
from modmor.freqresp import make_log_grid, read_csv
from modmor.lti import ModelError, StateSpaceModel, freq_response, lft_close
from modmor.reduction import reduce_to_requirement
from modmor.synthesis import build_interconnected_requirement, synthesize_requirements
from modmor.validation import bode_data, emit_bode_data, validate_pipeline


@pytest.fixture
def pipeline(rng):
    sys = random_interconnection(rng, k=2, max_states=4)
    grid = make_log_grid(0.1, 10.0, 12)
    req = build_interconnected_requirement(lft_close(sys), grid, 0.1, 1e-3)
    sol = synthesize_requirements(sys, grid, req)
    return sys, grid, req, sol


def test_full_order_models_pass_with_unit_margins(pipeline):
    sys, grid, req, sol = pipeline
    rep = validate_pipeline(sys, sys.subsystems, sol)
    np.testing.assert_allclose(rep.sub_margins, 1.0)
    np.testing.assert_allclose(rep.interconnected_margins, 1.0)
    assert rep.all_pass and rep.theorem1_ok.all()
    assert rep.totals["reduction_percent"] == 0.0


def test_reduced_models_pass_and_margins_match_direct_evaluation(pipeline):
    sys, grid, req, sol = pipeline
    reduced = [reduce_to_requirement(g, sol.v_samples(j), sol.w_samples(j), grid).reduced
               for j, g in enumerate(sys.subsystems)]
    rep = validate_pipeline(sys, reduced, sol)
    assert rep.all_pass and rep.implication_violations == 0
    sys_hat = sys.with_subsystems(reduced)
    for i, w in enumerate(grid.omegas):
        Ec = freq_response(lft_close(sys), w) - freq_response(lft_close(sys_hat), w)
        direct = 1.0 - np.linalg.norm(req.v_c[i][:, None] * Ec * req.w_c[i][None, :], 2)
        assert rep.interconnected_margins[i] == pytest.approx(direct, abs=1e-9)
    t = rep.totals
    assert t["sum_r"] == sum(g.n for g in reduced)
    assert t["interconnected_pass"] == len(grid)


def test_zeroth_order_models_fail_somewhere(pipeline):
    sys, grid, req, sol = pipeline
    crude = [StateSpaceModel.static(np.zeros((g.p, g.m))) for g in sys.subsystems]
    rep = validate_pipeline(sys, crude, sol)
    assert not rep.all_pass
    assert rep.implication_violations == 0


def test_report_json_round_trip(tmp_path, pipeline):
    sys, grid, req, sol = pipeline
    rep = validate_pipeline(sys, sys.subsystems, sol)
    rep.write_json(tmp_path / "r.json")
    data = json.loads((tmp_path / "r.json").read_text())
    assert len(data["per_omega"]) == len(grid)
    assert data["totals"]["all_pass"] is True


def test_bode_data_columns(tmp_path, pipeline):
    sys, grid, req, sol = pipeline
    data = emit_bode_data(sys, sys.subsystems, req, tmp_path / "b.csv")
    header, rows = read_csv(tmp_path / "b.csv")
    assert header == ["omega", "mag_Gc", "mag_Gc_hat", "bound_lo", "bound_hi"]
    assert len(rows) == len(grid)
    np.testing.assert_allclose(data[:, 1], data[:, 2])
    np.testing.assert_allclose(data[:, 4] - data[:, 1], 1.0 / req.v_c[:, 0])
    np.testing.assert_array_equal(bode_data(sys, sys.subsystems, req), data)


def test_dimension_errors(pipeline):
    sys, grid, req, sol = pipeline
    with pytest.raises(ModelError):
        validate_pipeline(sys, sys.subsystems[:1], sol)
    g = sys.subsystems[0]
    wrong = StateSpaceModel.static(np.zeros((g.p + 1, g.m)))
    with pytest.raises(ModelError):
        validate_pipeline(sys, [wrong, *sys.subsystems[1:]], sol)
