"""Reading and writing models, interconnections, scalings and reduction results.

Model files are JSON objects with ``"A", "B", "C", "D"`` as row-major
nested lists and optional ``"labels": {"inputs": [...], "outputs": [...]}``.
An interconnection file holds ``"K11", "K12", "K21", "K22", "mc", "pc"``
and ``"subsystems"``, a list of model paths relative to the file.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Sequence

import numpy as np

from .freqresp import read_csv, write_csv
from .lti import InterconnectedSystem, ModelError, StateSpaceModel
from .reduction import ReductionResult
from .synthesis import FrequencyScaling, RequirementSpec, ScalingSolution


class ArtifactIOError(OSError):
    """A file is missing, unreadable or malformed."""


def _matrix(data, name: str, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    try:
        arr = np.array(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ArtifactIOError(f"{name} is not a numeric matrix") from exc
    if arr.size == 0:
        arr = np.zeros((rows or 0, cols or 0))
    if arr.ndim != 2:
        raise ArtifactIOError(f"{name} must be a nested list of rows")
    if not np.all(np.isfinite(arr)):
        raise ArtifactIOError(f"{name} contains non-finite entries")
    return arr


def load_json(path: str | Path) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ArtifactIOError(f"{path}: invalid JSON ({exc})") from exc
    except OSError as exc:
        raise ArtifactIOError(f"{path}: {exc.strerror or exc}") from exc
    if not isinstance(data, dict):
        raise ArtifactIOError(f"{path}: expected a JSON object")
    return data


def dump_json(path: str | Path, data: dict) -> None:
    try:
        with open(path, "w", newline="\n") as fh:
            json.dump(data, fh, indent=1)
            fh.write("\n")
    except OSError as exc:
        raise ArtifactIOError(f"{path}: {exc.strerror or exc}") from exc


def model_to_dict(model: StateSpaceModel) -> dict:
    out = {"A": model.A.tolist(), "B": model.B.tolist(), "C": model.C.tolist(),
           "D": model.D.tolist()}
    if model.input_labels is not None or model.output_labels is not None:
        out["labels"] = {"inputs": list(model.input_labels or []),
                         "outputs": list(model.output_labels or [])}
    return out


def model_from_dict(data: dict, name: str = "model") -> StateSpaceModel:
    missing = [k for k in "ABCD" if k not in data]
    if missing:
        raise ArtifactIOError(f"{name}: missing keys {missing}")
    D = _matrix(data["D"], f"{name}.D")
    p, m = D.shape
    A = _matrix(data["A"], f"{name}.A")
    n = A.shape[0]
    B = _matrix(data["B"], f"{name}.B", n, m)
    C = _matrix(data["C"], f"{name}.C", p, n)
    labels = data.get("labels") or {}
    try:
        return StateSpaceModel(A, B, C, D, labels.get("inputs") or None,
                               labels.get("outputs") or None)
    except ModelError as exc:
        raise ArtifactIOError(f"{name}: {exc}") from exc


def save_model(path: str | Path, model: StateSpaceModel) -> None:
    dump_json(path, model_to_dict(model))


def load_model(path: str | Path) -> StateSpaceModel:
    return model_from_dict(load_json(path), str(path))


def save_interconnection(path: str | Path, sys: InterconnectedSystem,
                         model_paths: Sequence[str | Path]) -> None:
    """Write the coupling matrices; ``model_paths`` are stored relative to ``path``."""
    base = Path(path).resolve().parent
    rel = []
    for p in model_paths:
        p = Path(p).resolve()
        try:
            rel.append(str(p.relative_to(base)))
        except ValueError:
            rel.append(str(p))
    dump_json(path, {"K11": sys.K11.tolist(), "K12": sys.K12.tolist(),
                      "K21": sys.K21.tolist(), "K22": sys.K22.tolist(),
                      "mc": sys.m_c, "pc": sys.p_c, "subsystems": rel})


def load_interconnection(path: str | Path) -> InterconnectedSystem:
    data = load_json(path)
    missing = [k for k in ("K11", "K12", "K21", "K22", "mc", "pc", "subsystems") if k not in data]
    if missing:
        raise ArtifactIOError(f"{path}: missing keys {missing}")
    base = Path(path).parent
    subs = [load_model(base / p) for p in data["subsystems"]]
    mb, pb = sum(g.m for g in subs), sum(g.p for g in subs)
    mc, pc = int(data["mc"]), int(data["pc"])
    shapes = {"K11": (mb, pb), "K12": (mb, mc), "K21": (pc, pb), "K22": (pc, mc)}
    K = {}
    for key, (r, c) in shapes.items():
        arr = _matrix(data[key], f"{path}:{key}", r, c)
        if arr.shape != (r, c):
            raise ArtifactIOError(f"{path}: {key} has shape {arr.shape}, expected {(r, c)}")
        K[key] = arr
    try:
        return InterconnectedSystem(tuple(subs), K["K11"], K["K12"], K["K21"], K["K22"])
    except ModelError as exc:
        raise ArtifactIOError(f"{path}: {exc}") from exc


# --- requirement and scalings --------------------------------------------------

def write_requirement_csv(path: str | Path, req: RequirementSpec) -> None:
    """Columns ``omega,v_c_1..v_c_pc,w_c_1..w_c_mc``."""
    pc, mc = req.v_c.shape[1], req.w_c.shape[1]
    header = (["omega"] + [f"v_c_{i + 1}" for i in range(pc)]
              + [f"w_c_{i + 1}" for i in range(mc)])
    write_csv(path, header, (np.concatenate(([w], a, b))
                             for w, a, b in zip(req.omegas, req.v_c, req.w_c)))


def _read_table(path: str | Path) -> tuple[list[str], list[list[str]]]:
    try:
        header, rows = read_csv(path)
    except OSError as exc:
        raise ArtifactIOError(f"{path}: {exc.strerror or exc}") from exc
    except IndexError as exc:
        raise ArtifactIOError(f"{path}: empty file") from exc
    return header, rows


def _floats(path, rows, cols) -> np.ndarray:
    try:
        return np.array([[float(r[c]) for c in cols] for r in rows], dtype=float)
    except (ValueError, IndexError) as exc:
        raise ArtifactIOError(f"{path}: malformed numeric row") from exc


def read_requirement_csv(path: str | Path) -> RequirementSpec:
    header, rows = _read_table(path)
    vcols = [i for i, h in enumerate(header) if h.startswith("v_c_")]
    wcols = [i for i, h in enumerate(header) if h.startswith("w_c_")]
    if not header or header[0] != "omega" or not vcols or not wcols:
        raise ArtifactIOError(f"{path}: expected columns omega,v_c_*,w_c_*")
    omegas = _floats(path, rows, [0]).ravel()
    try:
        return RequirementSpec(omegas, _floats(path, rows, vcols), _floats(path, rows, wcols))
    except ModelError as exc:
        raise ArtifactIOError(f"{path}: {exc}") from exc


def scaling_path(directory: str | Path, j: int) -> Path:
    """File of subsystem ``j`` (zero-based) inside ``directory``."""
    return Path(directory) / f"scaling_{j + 1}.csv"


def write_scalings(directory: str | Path, sol: ScalingSolution) -> list[Path]:
    """Per-subsystem ``omega,v_1..,w_1..`` files and ``d.csv``.

    Infeasible frequencies are written as NaN rows with status ``infeasible``.
    """
    directory = Path(directory)
    k = len(sol.m_sizes)
    paths = []
    for j in range(k):
        m, p = sol.m_sizes[j], sol.p_sizes[j]
        header = ["omega"] + [f"v_{i + 1}" for i in range(m)] + [f"w_{i + 1}" for i in range(p)]
        data = np.column_stack([sol.omegas, sol.v_samples(j), sol.w_samples(j)])
        path = scaling_path(directory, j)
        write_csv(path, header, data)
        paths.append(path)
    rows = []
    for w, it in zip(sol.omegas, sol.items):
        if it is None:
            rows.append([w, *([math.nan] * k), math.nan, "infeasible"])
        else:
            rows.append([w, *it.d, it.cost, it.status])
    path = directory / "d.csv"
    write_csv(path, ["omega"] + [f"d_{j + 1}" for j in range(k)] + ["cost", "status"], rows)
    paths.append(path)
    return paths


def read_scalings(directory: str | Path, sys: InterconnectedSystem,
                  req: RequirementSpec) -> ScalingSolution:
    """Inverse of :func:`write_scalings`; ``req`` supplies ``v_c, w_c``."""
    directory = Path(directory)
    k = sys.k
    vs, ws = [], []
    omegas = None
    for j in range(k):
        path = scaling_path(directory, j)
        header, rows = _read_table(path)
        m, p = sys.m_sizes[j], sys.p_sizes[j]
        if len(header) != 1 + m + p:
            raise ArtifactIOError(f"{path}: expected {1 + m + p} columns, found {len(header)}")
        data = _floats(path, rows, range(1 + m + p))
        if omegas is None:
            omegas = data[:, 0]
        elif data.shape[0] != omegas.size or not np.array_equal(data[:, 0], omegas):
            raise ArtifactIOError(f"{path}: frequency column differs from subsystem 1")
        vs.append(data[:, 1:1 + m])
        ws.append(data[:, 1 + m:])
    path = directory / "d.csv"
    header, rows = _read_table(path)
    if len(header) != k + 3:
        raise ArtifactIOError(f"{path}: expected {k + 3} columns")
    dd = _floats(path, rows, range(k + 2))
    status = [r[k + 2] for r in rows]
    if dd.shape[0] != omegas.size or req.omegas.size != omegas.size:
        raise ArtifactIOError(f"{path}: row count does not match the scaling files")
    if not np.allclose(req.omegas, omegas, rtol=1e-12, atol=0.0):
        raise ArtifactIOError("requirement grid differs from the scaling grid")
    items: list[FrequencyScaling | None] = []
    for i, w in enumerate(omegas):
        if status[i] == "infeasible" or not np.all(np.isfinite(dd[i, 1:k + 1])):
            items.append(None)
            continue
        items.append(FrequencyScaling(float(w), [vs[j][i] for j in range(k)],
                                      [ws[j][i] for j in range(k)], req.v_c[i], req.w_c[i],
                                      dd[i, 1:k + 1], 1.0, float(dd[i, k + 1]), [], math.nan,
                                      status[i]))
    return ScalingSolution(omegas, items, sys.m_sizes, sys.p_sizes)


# --- reduction results ---------------------------------------------------------

def reduced_model_path(directory: str | Path, j: int) -> Path:
    return Path(directory) / f"reduced_{j + 1}.json"


def write_reduction(directory: str | Path, j: int, result: ReductionResult) -> list[Path]:
    """``reduced_j.json``, ``hsv_j.csv`` (``index,sigma``) and
    ``margin_j.csv`` (``omega,sigma_weighted,pass``) for subsystem ``j``."""
    directory = Path(directory)
    paths = [reduced_model_path(directory, j), directory / f"hsv_{j + 1}.csv"]
    save_model(paths[0], result.reduced)
    write_csv(paths[1], ["index", "sigma"],
              ([i + 1, s] for i, s in enumerate(result.hankel_values)))
    if result.margins is not None:
        paths.append(directory / f"margin_{j + 1}.csv")
        write_csv(paths[2], ["omega", "sigma_weighted", "pass"],
                  ([w, 1.0 - m, bool(m >= 0.0)] for w, m in zip(result.omegas, result.margins)))
    return paths


def load_reduced_models(directory: str | Path, k: int) -> list[StateSpaceModel]:
    return [load_model(reduced_model_path(directory, j)) for j in range(k)]
