"""Stable minimum-phase magnitude fits used as frequency weights."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import least_squares

from .lti import ModelError, StateSpaceModel, block_diag, series


@dataclass(frozen=True, eq=False)
class FittedWeight:
    """SISO weight with every pole and zero in the open left half-plane.

    ``fit_error`` is the largest relative magnitude deviation
    ``| |H(i w)| / target - 1 |`` over the fitting grid.
    """

    model: StateSpaceModel
    fit_error: float

    @property
    def order(self) -> int:
        return self.model.n


def _sections(order: int) -> tuple[int, int]:
    return order // 2, order % 2


def _log_mag(theta: np.ndarray, omegas: np.ndarray, order: int) -> np.ndarray:
    """``log|H(i w)|`` for the section parametrization (all entries are logs)."""
    nq, n1 = _sections(order)
    out = np.full(omegas.shape, theta[0])
    w2 = omegas ** 2
    for q in range(nq):
        wz, zz, wp, zp = np.exp(theta[1 + 4 * q:5 + 4 * q])
        num = (wz ** 2 - w2) ** 2 + (2 * zz * wz * omegas) ** 2
        den = (wp ** 2 - w2) ** 2 + (2 * zp * wp * omegas) ** 2
        out += 0.5 * (np.log(num) - np.log(den))
    if n1:
        a, b = np.exp(theta[1 + 4 * nq:3 + 4 * nq])
        out += 0.5 * (np.log(a ** 2 + w2) - np.log(b ** 2 + w2))
    return out


def _to_statespace(theta: np.ndarray, order: int) -> StateSpaceModel:
    nq, n1 = _sections(order)
    model = StateSpaceModel.static([[np.exp(theta[0])]])
    for q in range(nq):
        wz, zz, wp, zp = np.exp(theta[1 + 4 * q:5 + 4 * q])
        # (s^2 + 2 zz wz s + wz^2) / (s^2 + 2 zp wp s + wp^2), states scaled by wp
        A = np.array([[0.0, wp], [-wp, -2 * zp * wp]])
        B = np.array([[0.0], [1.0]])
        C = np.array([[(wz ** 2 - wp ** 2) / wp, 2 * zz * wz - 2 * zp * wp]])
        model = series(model, StateSpaceModel(A, B, C, [[1.0]]))
    if n1:
        a, b = np.exp(theta[1 + 4 * nq:3 + 4 * nq])
        model = series(model, StateSpaceModel([[-b]], [[1.0]], [[a - b]], [[1.0]]))
    return model


def _initial_guesses(omegas: np.ndarray, logs: np.ndarray, order: int) -> list[np.ndarray]:
    nq, n1 = _sections(order)
    lo, hi = np.log(omegas[0]), np.log(omegas[-1])
    guesses = []
    for zeta in (0.7, 0.1):
        centers = np.linspace(lo, hi, nq + n1 + 2)[1:-1]
        theta = [np.mean(logs)]
        for q in range(nq):
            theta += [centers[q], np.log(zeta), centers[q], np.log(zeta)]
        if n1:
            theta += [centers[-1], centers[-1]]
        guesses.append(np.array(theta))
    # slope-matched start: first-order sections placed where the samples bend
    if order:
        slope = np.polyfit(np.log(omegas), logs, 1)[0]
        base = guesses[0].copy()
        shift = np.clip(slope, -1.0, 1.0) * (hi - lo) / max(order, 1)
        for q in range(nq):
            base[1 + 4 * q] += 0.5 * shift
            base[3 + 4 * q] -= 0.5 * shift
        if n1:
            base[1 + 4 * nq] += 0.5 * shift
            base[2 + 4 * nq] -= 0.5 * shift
        guesses.append(base)
    return guesses


def _bounds(omegas: np.ndarray, logs: np.ndarray, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Corner frequencies within two decades of the grid, damping in [1e-3, 1e2]."""
    nq, n1 = _sections(order)
    wlo, whi = np.log(omegas[0] / 100.0), np.log(omegas[-1] * 100.0)
    zlo, zhi = np.log(1e-3), np.log(1e2)
    span = logs.max() - logs.min() + 50.0
    lo = [logs.min() - span] + [wlo, zlo, wlo, zlo] * nq + [wlo, wlo] * n1
    hi = [logs.max() + span] + [whi, zhi, whi, zhi] * nq + [whi, whi] * n1
    return np.array(lo), np.array(hi)


def fit_weight(samples: Sequence[float], omegas: Sequence[float], order: int = 4,
               fit_tol: float = 1e-3, max_nfev: int = 2000) -> FittedWeight:
    """Fit a stable minimum-phase SISO model to magnitude samples.

    The model is a gain times ``order // 2`` second-order sections and one
    first-order section for odd orders. Natural frequencies, damping ratios
    and corner frequencies are optimized in log coordinates within fixed
    bounds, so every candidate is stable and minimum phase. The objective is the
    least-squares log-magnitude error on the grid.

    Parameters
    ----------
    samples
        Strictly positive target magnitudes.
    omegas
        Frequencies of the samples (rad/s), increasing.
    order
        Model order; 0 returns the geometric-mean constant gain.
    fit_tol
        Relative tolerance on the residual passed to the optimizer.

    Raises
    ------
    ModelError
        For nonpositive or non-finite samples.
    """
    s = np.asarray(samples, dtype=float).ravel()
    w = np.asarray(omegas, dtype=float).ravel()
    if s.shape != w.shape or s.size == 0:
        raise ModelError("samples and omegas must be nonempty and of equal length")
    if not np.all(np.isfinite(s)) or np.any(s <= 0):
        raise ModelError("weight samples must be finite and strictly positive")
    if order < 0:
        raise ModelError("fit order must be nonnegative")
    logs = np.log(s)
    if order == 0 or s.size == 1:
        gain = float(np.exp(np.mean(logs)))
        err = float(np.max(np.abs(gain / s - 1.0)))
        return FittedWeight(StateSpaceModel.static([[gain]]), err)

    lo, hi = _bounds(w, logs, order)
    best = None
    for theta0 in _initial_guesses(w, logs, order):
        theta0 = np.clip(theta0, lo + 1e-9, hi - 1e-9)
        res = least_squares(lambda th: _log_mag(th, w, order) - logs, theta0, bounds=(lo, hi),
                            xtol=fit_tol * 1e-3, ftol=fit_tol * 1e-3, max_nfev=max_nfev)
        if best is None or res.cost < best.cost:
            best = res
    model = _to_statespace(best.x, order)
    err = float(np.max(np.abs(np.exp(_log_mag(best.x, w, order) - logs) - 1.0)))
    return FittedWeight(model, err)


def diagonal_weight(weights: Sequence[FittedWeight]) -> StateSpaceModel:
    """Block-diagonal MIMO weight from per-channel SISO fits."""
    return block_diag([wt.model for wt in weights])
