"""End-to-end requirement checks, reduction summaries and plot data."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .freqresp import block_response_grid, compute_N_from_response, write_csv
from .lti import InterconnectedSystem, ModelError, StateSpaceModel, lft_response
from .synthesis import (RequirementSpec, ScalingSolution, check_interconnected_requirement,
                        check_subsystem_requirement, theorem1_check)


@dataclass(frozen=True, eq=False)
class RequirementReport:
    """Per-frequency margins (``1 - sigma_max``) and order totals.

    A subsystem check passes when its margin is ``>= 0``; the
    interconnected check is strict and passes when its margin is ``> 0``.
    """

    omegas: np.ndarray
    sub_margins: np.ndarray
    interconnected_margins: np.ndarray
    theorem1_ok: np.ndarray
    original_orders: tuple[int, ...]
    reduced_orders: tuple[int, ...]

    @property
    def sub_pass(self) -> np.ndarray:
        return self.sub_margins >= 0.0

    @property
    def interconnected_pass(self) -> np.ndarray:
        return self.interconnected_margins > 0.0

    @property
    def all_pass(self) -> bool:
        return bool(np.all(self.sub_pass) and np.all(self.interconnected_pass))

    @property
    def implication_violations(self) -> int:
        """Frequencies where the sufficient condition and all subsystem checks
        held but the interconnected check failed (must be zero)."""
        bad = self.theorem1_ok & np.all(self.sub_pass, axis=1) & ~self.interconnected_pass
        return int(np.count_nonzero(bad))

    @property
    def totals(self) -> dict:
        n, r = sum(self.original_orders), sum(self.reduced_orders)
        return {
            "n": list(self.original_orders),
            "r": list(self.reduced_orders),
            "sum_n": n,
            "sum_r": r,
            "reduction_percent": 100.0 * (1.0 - r / n) if n else 0.0,
            "subsystem_pass": [int(c) for c in np.count_nonzero(self.sub_pass, axis=0)],
            "interconnected_pass": int(np.count_nonzero(self.interconnected_pass)),
            "theorem1_feasible": int(np.count_nonzero(self.theorem1_ok)),
            "num_omega": int(self.omegas.size),
            "implication_violations": self.implication_violations,
            "all_pass": self.all_pass,
        }

    def to_dict(self) -> dict:
        per = [{"omega": float(w), "sub": [float(x) for x in sm], "interconnected": float(im)}
               for w, sm, im in zip(self.omegas, self.sub_margins, self.interconnected_margins)]
        return {"per_omega": per, "totals": self.totals}

    def write_json(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)
            fh.write("\n")


def validate_pipeline(sys: InterconnectedSystem, reduced: Sequence[StateSpaceModel],
                      scalings: ScalingSolution) -> RequirementReport:
    """Evaluate both requirement checks for a set of reduced subsystems.

    The subsystem errors ``E_j = G_j - G_j_hat`` are checked against the
    budgets ``(v_j, w_j)`` and the interconnected error
    ``E_c = G_c - G_c_hat`` against ``(v_c, w_c)`` at every scaling
    frequency. The sufficient block-matrix condition is re-evaluated from
    the nominal matrix of the full-order system.

    Raises
    ------
    ModelError
        If scalings are missing at some frequency or dimensions disagree.
    """
    reduced = list(reduced)
    if len(reduced) != sys.k:
        raise ModelError(f"expected {sys.k} reduced subsystems, got {len(reduced)}")
    for j, (g, gr) in enumerate(zip(sys.subsystems, reduced)):
        if (g.m, g.p) != (gr.m, gr.p):
            raise ModelError(f"reduced subsystem {j + 1} has wrong input/output size")
    missing = scalings.infeasible
    if missing:
        raise ModelError(f"scalings missing at {len(missing)} frequencies")
    omegas = np.asarray(scalings.omegas, dtype=float)
    Gb = block_response_grid(sys, omegas)
    Gb_hat = block_response_grid(sys, omegas, reduced)
    sub = np.zeros((omegas.size, sys.k))
    inter = np.zeros(omegas.size)
    t1 = np.zeros(omegas.size, dtype=bool)
    rows = np.cumsum((0,) + sys.p_sizes)
    cols = np.cumsum((0,) + sys.m_sizes)
    for i, (w, item) in enumerate(zip(omegas, scalings.items)):
        E = Gb[i] - Gb_hat[i]
        for j in range(sys.k):
            Ej = E[rows[j]:rows[j + 1], cols[j]:cols[j + 1]]
            sub[i, j] = check_subsystem_requirement(Ej, item.v[j], item.w[j])[1]
        Ec = lft_response(sys, Gb[i]) - lft_response(sys, Gb_hat[i])
        inter[i] = check_interconnected_requirement(Ec, item.v_c, item.w_c)[1]
        N = compute_N_from_response(sys, Gb[i], w)
        t1[i] = theorem1_check(N, item.v, item.w, item.v_c, item.w_c, item.d, item.d_c)[0]
    return RequirementReport(omegas, sub, inter, t1,
                             tuple(g.n for g in sys.subsystems), tuple(g.n for g in reduced))


def bode_data(sys: InterconnectedSystem, reduced: Sequence[StateSpaceModel],
              req: RequirementSpec) -> np.ndarray:
    """Rows ``omega, |G_c|, |G_c_hat|, |G_c| - 1/v_c, |G_c| + 1/v_c``.

    Magnitudes are largest singular values; the bounds use the smallest
    entry of ``v_c`` (the tightest channel) for multi-output systems.
    """
    omegas = req.omegas
    Gb = block_response_grid(sys, omegas)
    Gb_hat = block_response_grid(sys, omegas, reduced)
    out = np.zeros((omegas.size, 5))
    for i in range(omegas.size):
        g = np.linalg.norm(lft_response(sys, Gb[i]), 2)
        gh = np.linalg.norm(lft_response(sys, Gb_hat[i]), 2)
        half = 1.0 / np.min(req.v_c[i])
        out[i] = (omegas[i], g, gh, g - half, g + half)
    return out


def emit_bode_data(sys: InterconnectedSystem, reduced: Sequence[StateSpaceModel],
                   req: RequirementSpec, path: str | Path) -> np.ndarray:
    """Write :func:`bode_data` as ``omega,mag_Gc,mag_Gc_hat,bound_lo,bound_hi``."""
    data = bode_data(sys, reduced, req)
    write_csv(path, ["omega", "mag_Gc", "mag_Gc_hat", "bound_lo", "bound_hi"], data)
    return data
