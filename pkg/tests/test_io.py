import json

import numpy as np
import pytest

from conftest import random_interconnection, random_stable_model
from modmor import io
from modmor.freqresp import make_log_grid, read_csv
from modmor.lti import StateSpaceModel, freq_response, lft_close
from modmor.reduction import balanced_truncation, reduce_to_requirement
from modmor.synthesis import build_interconnected_requirement, synthesize_requirements


def test_model_round_trip_is_exact(tmp_path, rng):
    g = random_stable_model(rng, 5, 2, 3)
    g = StateSpaceModel(g.A, g.B, g.C, g.D, ("u1", "u2"), ("y1", "y2", "y3"))
    io.save_model(tmp_path / "g.json", g)
    h = io.load_model(tmp_path / "g.json")
    for name in "ABCD":
        np.testing.assert_array_equal(getattr(h, name), getattr(g, name))
    assert h.input_labels == g.input_labels and h.output_labels == g.output_labels


def test_static_model_round_trip(tmp_path):
    g = StateSpaceModel.static([[1.0, 2.0]])
    io.save_model(tmp_path / "s.json", g)
    h = io.load_model(tmp_path / "s.json")
    assert h.n == 0 and (h.p, h.m) == (1, 2)


def test_interconnection_round_trip(tmp_path, rng):
    sys = random_interconnection(rng, k=3)
    paths = []
    for j, g in enumerate(sys.subsystems):
        paths.append(tmp_path / "models" / f"g{j}.json")
        paths[-1].parent.mkdir(exist_ok=True)
        io.save_model(paths[-1], g)
    io.save_interconnection(tmp_path / "sys.json", sys, paths)
    assert json.loads((tmp_path / "sys.json").read_text())["subsystems"][0] == "models/g0.json"
    back = io.load_interconnection(tmp_path / "sys.json")
    np.testing.assert_array_equal(back.K11, sys.K11)
    np.testing.assert_allclose(freq_response(lft_close(back), 1.7),
                               freq_response(lft_close(sys), 1.7), rtol=1e-14)


@pytest.mark.parametrize("payload, message", [
    ("{not json", "invalid JSON"),
    ("[1, 2]", "JSON object"),
    ('{"A": [[1]], "B": [[1]], "C": [[1]]}', "missing"),
    ('{"A": [[1, 2]], "B": [[1]], "C": [[1]], "D": [[0]]}', "model"),
    ('{"A": [["x"]], "B": [[1]], "C": [[1]], "D": [[0]]}', "numeric"),
])
def test_malformed_model_files(tmp_path, payload, message):
    path = tmp_path / "bad.json"
    path.write_text(payload)
    with pytest.raises(io.ArtifactIOError, match=message):
        io.load_model(path)


def test_missing_file_is_an_os_error(tmp_path):
    with pytest.raises(OSError):
        io.load_model(tmp_path / "absent.json")


def test_interconnection_shape_mismatch(tmp_path, rng):
    sys = random_interconnection(rng)
    paths = [tmp_path / f"g{j}.json" for j in range(sys.k)]
    for p, g in zip(paths, sys.subsystems):
        io.save_model(p, g)
    io.save_interconnection(tmp_path / "sys.json", sys, paths)
    data = json.loads((tmp_path / "sys.json").read_text())
    data["K12"] = [[1.0]]
    (tmp_path / "sys.json").write_text(json.dumps(data))
    with pytest.raises(io.ArtifactIOError, match="K12"):
        io.load_interconnection(tmp_path / "sys.json")


def test_requirement_and_scalings_round_trip(tmp_path, rng):
    sys = random_interconnection(rng)
    grid = make_log_grid(0.5, 5.0, 7)
    req = build_interconnected_requirement(lft_close(sys), grid, 0.1, 1e-3)
    io.write_requirement_csv(tmp_path / "requirement.csv", req)
    back = io.read_requirement_csv(tmp_path / "requirement.csv")
    np.testing.assert_array_equal(back.v_c, req.v_c)
    np.testing.assert_array_equal(back.omegas, req.omegas)
    sol = synthesize_requirements(sys, grid, req)
    io.write_scalings(tmp_path, sol)
    header, rows = read_csv(tmp_path / "d.csv")
    assert header == ["omega", "d_1", "d_2", "cost", "status"] and len(rows) == 7
    again = io.read_scalings(tmp_path, sys, back)
    for j in range(sys.k):
        np.testing.assert_array_equal(again.v_samples(j), sol.v_samples(j))
        np.testing.assert_array_equal(again.w_samples(j), sol.w_samples(j))
    for a, b in zip(again.items, sol.items):
        np.testing.assert_array_equal(a.d, b.d)


def test_scalings_with_infeasible_rows(tmp_path, rng):
    sys = random_interconnection(rng)
    grid = make_log_grid(0.5, 5.0, 3)
    req = build_interconnected_requirement(lft_close(sys), grid, 0.1, 1e-3)
    sol = synthesize_requirements(sys, grid, req)
    sol.items[1] = None
    io.write_scalings(tmp_path, sol)
    assert read_csv(tmp_path / "d.csv")[1][1][-1] == "infeasible"
    assert io.read_scalings(tmp_path, sys, req).infeasible == [float(grid.omegas[1])]


def test_reduction_outputs(tmp_path, rng):
    g = random_stable_model(rng, 6, 1, 1)
    grid = make_log_grid(0.1, 10.0, 9)
    res = reduce_to_requirement(g, np.full((9, 1), 0.5), np.full((9, 1), 0.5), grid)
    paths = io.write_reduction(tmp_path, 0, res)
    assert [p.name for p in paths] == ["reduced_1.json", "hsv_1.csv", "margin_1.csv"]
    header, rows = read_csv(tmp_path / "margin_1.csv")
    assert header == ["omega", "sigma_weighted", "pass"]
    assert all(r[2] == "1" for r in rows)
    assert io.load_reduced_models(tmp_path, 1)[0].n == res.reduced_order
    plain = balanced_truncation(g, 2)
    io.write_reduction(tmp_path, 1, plain)
    assert not (tmp_path / "margin_2.csv").exists()
