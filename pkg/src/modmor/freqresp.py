"""Frequency grids, the nominal interconnection matrix and norm utilities."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg as sla
from numpy.typing import ArrayLike

from .lti import (IllPosedError, InterconnectedSystem, ModelError, StateSpaceModel,
                  freq_response, freq_response_grid, lu_factor_quiet, stability_check)


@dataclass(frozen=True, eq=False)
class FrequencyGrid:
    """Strictly increasing, positive, finite frequencies in rad/s."""

    omegas: np.ndarray

    def __post_init__(self) -> None:
        w = np.array(self.omegas, dtype=float).ravel()
        if w.size == 0:
            raise ModelError("empty frequency grid")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise ModelError("grid frequencies must be finite and positive")
        if np.any(np.diff(w) <= 0):
            raise ModelError("grid frequencies must be strictly increasing")
        w.setflags(write=False)
        object.__setattr__(self, "omegas", w)

    def __len__(self) -> int:
        return self.omegas.size

    def __iter__(self):
        return iter(self.omegas)

    def __getitem__(self, i):
        return self.omegas[i]


def make_log_grid(lo: float, hi: float, n: int) -> FrequencyGrid:
    """``n`` log10-equispaced points from ``lo`` to ``hi`` inclusive."""
    if not (np.isfinite(lo) and np.isfinite(hi)) or lo <= 0 or hi <= lo or n < 2:
        raise ModelError(f"invalid grid bounds lo={lo}, hi={hi}, n={n}")
    w = np.logspace(np.log10(lo), np.log10(hi), int(n))
    w[0], w[-1] = lo, hi
    return FrequencyGrid(w)


@dataclass(frozen=True, eq=False)
class NominalMatrix:
    """The nominal matrix ``N = [[N11, N12], [N21, 0]]`` at one frequency.

    ``m_sizes``/``p_sizes`` record the subsystem input/output partition;
    they define the block structure used by the scaling sets.
    """

    N11: np.ndarray
    N12: np.ndarray
    N21: np.ndarray
    N22: np.ndarray
    omega: float
    m_sizes: tuple[int, ...]
    p_sizes: tuple[int, ...]

    @property
    def m_c(self) -> int:
        return self.N12.shape[1]

    @property
    def p_c(self) -> int:
        return self.N21.shape[0]

    @property
    def full(self) -> np.ndarray:
        return np.block([[self.N11, self.N12], [self.N21, self.N22]])

    @classmethod
    def from_blocks(cls, N11, N12, N21, omega=0.0, m_sizes=None, p_sizes=None) -> "NominalMatrix":
        N11 = np.atleast_2d(np.asarray(N11, dtype=complex))
        N12 = np.atleast_2d(np.asarray(N12, dtype=complex))
        N21 = np.atleast_2d(np.asarray(N21, dtype=complex))
        mb, pb = N11.shape
        if N12.shape[0] != mb or N21.shape[1] != pb:
            raise ModelError("inconsistent N block dimensions")
        m_sizes = tuple(m_sizes) if m_sizes is not None else (mb,)
        p_sizes = tuple(p_sizes) if p_sizes is not None else (pb,)
        if sum(m_sizes) != mb or sum(p_sizes) != pb or len(m_sizes) != len(p_sizes):
            raise ModelError("subsystem partition does not match N11")
        N22 = np.zeros((N21.shape[0], N12.shape[1]), dtype=complex)
        return cls(N11, N12, N21, N22, float(omega), m_sizes, p_sizes)


def compute_N_from_response(sys: InterconnectedSystem, Gb: np.ndarray, omega: float) -> NominalMatrix:
    """Nominal matrix from a given block-diagonal response ``Gb = G_b(i omega)``."""
    K11, K12, K21 = sys.K11, sys.K12, sys.K21
    X = np.eye(sys.p_b) - Gb @ K11
    lu, piv = lu_factor_quiet(X)
    udiag = np.abs(np.diag(lu))
    if udiag.min() <= X.shape[0] * np.finfo(float).eps * max(udiag.max(), 1.0):
        raise IllPosedError(f"ill-posed at frequency {omega!r}: I - G_b K11 is singular")
    # K (I - Gb K11)^{-1} via the transposed system
    N11 = sla.lu_solve((lu, piv), K11.T.astype(complex), trans=1, check_finite=False).T
    N21 = sla.lu_solve((lu, piv), K21.T.astype(complex), trans=1, check_finite=False).T
    # (I - K11 Gb)^{-1} = I + N11 Gb
    N12 = K12 + N11 @ (Gb @ K12)
    N22 = np.zeros((sys.p_c, sys.m_c), dtype=complex)
    return NominalMatrix(N11, N12, N21, N22, float(omega), sys.m_sizes, sys.p_sizes)


def compute_N(sys: InterconnectedSystem, omega: float) -> NominalMatrix:
    """Nominal matrix of ``sys`` at ``omega``."""
    return compute_N_from_response(sys, freq_response(sys.blocks, omega), omega)


def compute_N_grid(sys: InterconnectedSystem, grid: Iterable[float]) -> list[NominalMatrix]:
    omegas = np.asarray(list(grid), dtype=float)
    Gbs = block_response_grid(sys, omegas)
    return [compute_N_from_response(sys, Gb, w) for Gb, w in zip(Gbs, omegas)]


def block_response_grid(sys: InterconnectedSystem, omegas: ArrayLike,
                        subsystems: Sequence[StateSpaceModel] | None = None) -> np.ndarray:
    """``G_b(i omega)`` on a grid, evaluated subsystem by subsystem."""
    omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
    subs = sys.subsystems if subsystems is None else subsystems
    out = np.zeros((omegas.size, sys.p_b, sys.m_b), dtype=complex)
    r = c = 0
    for g in subs:
        out[:, r:r + g.p, c:c + g.m] = freq_response_grid(g, omegas)
        r += g.p
        c += g.m
    return out


def sigma_max(M: ArrayLike) -> float:
    """Largest singular value (0 for an empty matrix)."""
    M = np.atleast_2d(np.asarray(M))
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


def sigma_max_grid(stack: np.ndarray) -> np.ndarray:
    """Largest singular value of each matrix in a ``(n, p, m)`` stack."""
    if stack.shape[1] == 0 or stack.shape[2] == 0:
        return np.zeros(stack.shape[0])
    if stack.shape[1] == 1 or stack.shape[2] == 1:
        return np.sqrt(np.sum(np.abs(stack) ** 2, axis=(1, 2)))
    return np.linalg.svd(stack, compute_uv=False)[:, 0]


def _default_grid(model: StateSpaceModel) -> np.ndarray:
    poles = np.abs(model.poles())
    poles = poles[poles > 0]
    if poles.size == 0:
        return np.logspace(-3, 3, 400)
    lo, hi = poles.min() / 100, poles.max() * 100
    n = int(min(4000, max(400, 100 * np.log10(hi / lo))))
    return np.logspace(np.log10(lo), np.log10(hi), n)


def _golden_max(f, a: float, b: float, tol: float, max_iter: int = 200) -> tuple[float, float]:
    """Golden-section maximization of ``f`` on ``[a, b]`` (log-frequency axis)."""
    g = (np.sqrt(5.0) - 1) / 2
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    best_x, best = (c, fc) if fc >= fd else (d, fd)
    for _ in range(max_iter):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
        new_x, new = (c, fc) if fc >= fd else (d, fd)
        if new > best:
            improvement = (new - best) / max(abs(best), 1e-300)
            best_x, best = new_x, new
        else:
            improvement = 0.0
        if abs(b - a) < 1e-12 or (improvement < tol and abs(b - a) < 1e-7):
            break
    return best_x, best


def hinf_norm_estimate(model: StateSpaceModel, grid: FrequencyGrid | ArrayLike | None = None,
                       refine_tol: float = 1e-9, n_peaks: int = 8) -> float:
    """Lower-bound estimate of the H-infinity norm of a stable model.

    The largest singular value is sampled on ``grid`` (plus ``omega = 0``
    and the feedthrough limit at infinity); the highest local maxima are
    then refined by golden-section search between their grid neighbours
    until the relative change drops below ``refine_tol``. Because only
    finitely many frequencies are visited the result never exceeds the
    true norm.
    """
    stable, _ = stability_check(model)
    if not stable:
        raise ModelError("hinf_norm_estimate requires a stable model")
    if model.n == 0:
        return sigma_max(model.D)
    if grid is None:
        omegas = _default_grid(model)
    else:
        omegas = np.asarray(grid.omegas if isinstance(grid, FrequencyGrid) else grid, dtype=float)
    omegas = np.unique(np.concatenate([[0.0], omegas]))
    vals = sigma_max_grid(freq_response_grid(model, omegas))
    best = max(float(vals.max()), sigma_max(model.D))

    def f(logw: float) -> float:
        return sigma_max(freq_response(model, 10.0 ** logw))

    interior = np.flatnonzero(
        (vals >= np.roll(vals, 1)) & (vals >= np.roll(vals, -1)))
    cand = set(interior[(interior > 0) & (interior < vals.size - 1)].tolist())
    cand.add(int(np.argmax(vals)))
    cand = sorted(cand, key=lambda i: -vals[i])[:n_peaks]
    for i in cand:
        lo = omegas[max(i - 1, 1)] if i > 1 else omegas[1] / 10
        hi = omegas[min(i + 1, omegas.size - 1)]
        if i == omegas.size - 1:
            hi = omegas[-1] * 10
        if i == 0:
            continue
        _, val = _golden_max(f, np.log10(lo), np.log10(hi), refine_tol)
        best = max(best, val)
    return best


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence[float]]) -> None:
    """Write numeric rows with full double precision and LF line endings."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return repr(float(v))


def write_sigma_csv(path: str | Path, omegas: ArrayLike, values: np.ndarray) -> None:
    """``omega,value`` for a vector, ``omega,s1,s2,...`` for a 2-D array."""
    values = np.asarray(values, dtype=float)
    omegas = np.asarray(omegas, dtype=float)
    if values.ndim == 1:
        write_csv(path, ["omega", "value"], zip(omegas, values))
    else:
        header = ["omega"] + [f"s{i + 1}" for i in range(values.shape[1])]
        write_csv(path, header, ([w, *row] for w, row in zip(omegas, values)))


def read_csv(path: str | Path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]
