"""Top-down translation of an interconnected error budget into subsystem budgets.

For a frequency ``omega`` the interconnected requirement
``sigma_max(V_c E_c W_c) < 1`` is guaranteed by the subsystem requirements
``sigma_max(W_j^{-1} E_j V_j^{-1}) <= 1`` whenever the block matrix::

    [[W^{-2} D_r^{-1},  N^H          ],
     [N,                V^{-2} D_l   ]]  > 0

with ``V = diag(V_1..V_k, V_c)``, ``W = diag(W_1..W_k, W_c)`` and the
D-scalings ``D_r`` (acting on the ``p_b + m_c`` side, ``d_j`` repeated
``p_j`` times) and ``D_l`` (acting on the ``m_b + p_c`` side, ``d_j``
repeated ``m_j`` times). The subsystem scalings are found by alternating
between a linear SDP in ``V^{-2}, W^{-2}`` and a D-scaling SDP, in the
spirit of D-K iteration.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .freqresp import (FrequencyGrid, NominalMatrix, block_response_grid,
                       compute_N_from_response, sigma_max)
from .lmi import INFEASIBLE, OPTIMAL, LmiProblem, solve_sdp
from .lti import InterconnectedSystem, ModelError, StateSpaceModel, freq_response_grid

log = logging.getLogger(__name__)

PD_MARGIN = 1e-9
VAR_LOWER = 1e-12
D_BOUNDS = (1e-12, 1e12)


class SynthesisError(ModelError):
    """A requirement cannot be met at a frequency."""

    def __init__(self, message: str, omega: float | None = None):
        super().__init__(message)
        self.omega = omega


class SynthesisInfeasible(ModelError):
    """Raised after a sweep when some frequencies are infeasible.

    The partially filled :class:`ScalingSolution` is available as
    ``solution``.
    """

    def __init__(self, omegas: Sequence[float], solution: "ScalingSolution"):
        shown = ", ".join(f"{w:.6g}" for w in list(omegas)[:10])
        more = "" if len(omegas) <= 10 else f" (+{len(omegas) - 10} more)"
        super().__init__(f"requirement unachievable at {len(omegas)} frequencies: {shown}{more}")
        self.omegas = list(omegas)
        self.solution = solution


@dataclass(frozen=True, eq=False)
class RequirementSpec:
    """Interconnected requirement: diagonal ``v_c`` (``p_c``) and ``w_c`` (``m_c``) per frequency."""

    omegas: np.ndarray
    v_c: np.ndarray
    w_c: np.ndarray

    def __post_init__(self) -> None:
        w = np.asarray(self.omegas, dtype=float).ravel()
        v_c = np.asarray(self.v_c, dtype=float).reshape(w.size, -1)
        w_c = np.asarray(self.w_c, dtype=float).reshape(w.size, -1)
        if np.any(v_c <= 0) or np.any(w_c <= 0) or np.any(np.isnan(v_c)) or np.any(np.isnan(w_c)):
            raise ModelError("requirement scalings must be strictly positive")
        object.__setattr__(self, "omegas", w)
        object.__setattr__(self, "v_c", v_c)
        object.__setattr__(self, "w_c", w_c)

    def __len__(self) -> int:
        return self.omegas.size


def build_interconnected_requirement(Gc: StateSpaceModel, grid: FrequencyGrid,
                                     beta1: float, beta2: float) -> RequirementSpec:
    """Relative-with-floor requirement ``1/v_c = max(beta1 |G_c|, beta2)``, ``w_c = 1``.

    For several outputs the rule is applied per output channel using the
    largest magnitude in that row of ``G_c``. With ``beta1 = beta2 = 0`` no
    error is admitted at all and ``v_c`` is infinite, which synthesis
    reports as infeasible.
    """
    if not (beta1 >= 0 and beta2 >= 0):
        raise ModelError("beta1 and beta2 must be nonnegative")
    omegas = np.asarray(grid.omegas if isinstance(grid, FrequencyGrid) else grid, dtype=float)
    G = freq_response_grid(Gc, omegas)
    mag = np.max(np.abs(G), axis=2)
    with np.errstate(divide="ignore"):
        v_c = 1.0 / np.maximum(beta1 * mag, beta2)
    return RequirementSpec(omegas, v_c, np.ones((omegas.size, Gc.m)))


# --- block structure helpers -------------------------------------------------

def _partition(N: NominalMatrix):
    ms, ps = N.m_sizes, N.p_sizes
    k = len(ms)
    mb, pb = sum(ms), sum(ps)
    top_blk = np.concatenate([np.full(p, j) for j, p in enumerate(ps)] + [np.full(N.m_c, k)])
    bot_blk = np.concatenate([np.full(m, j) for j, m in enumerate(ms)] + [np.full(N.p_c, k)])
    return k, mb, pb, top_blk.astype(int), bot_blk.astype(int)


def _split(vec: np.ndarray, sizes: Sequence[int]) -> list[np.ndarray]:
    return np.split(np.asarray(vec, dtype=float), np.cumsum(sizes)[:-1]) if sizes else []


def theorem1_matrix(N: NominalMatrix, v_all: np.ndarray, w_all: np.ndarray,
                    d_all: np.ndarray) -> np.ndarray:
    """The Hermitian block matrix of the sufficient condition.

    ``v_all`` has length ``m_b + p_c``, ``w_all`` length ``p_b + m_c`` and
    ``d_all`` holds ``d_1..d_k, d_c``.
    """
    k, mb, pb, top_blk, bot_blk = _partition(N)
    Nf = N.full
    top = w_all ** -2.0 / d_all[top_blk]
    bot = v_all ** -2.0 * d_all[bot_blk]
    return np.block([[np.diag(top).astype(complex), Nf.conj().T], [Nf, np.diag(bot)]])


def _assemble(N: NominalMatrix, v, w, v_c, w_c, d, d_c):
    v_all = np.concatenate([np.atleast_1d(np.asarray(x, dtype=float)) for x in v] + [np.atleast_1d(v_c)])
    w_all = np.concatenate([np.atleast_1d(np.asarray(x, dtype=float)) for x in w] + [np.atleast_1d(w_c)])
    d_all = np.r_[np.atleast_1d(np.asarray(d, dtype=float)), float(d_c)]
    k, mb, pb, _, _ = _partition(N)
    if v_all.size != mb + N.p_c or w_all.size != pb + N.m_c or d_all.size != k + 1:
        raise ModelError("scaling dimensions do not match the nominal matrix")
    for name, arr in (("V", v_all), ("W", w_all), ("D", d_all)):
        if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
            raise ModelError(f"{name} scalings must be finite and strictly positive")
    return v_all, w_all, d_all


def normalized_margin(M: np.ndarray) -> float:
    """Smallest eigenvalue after symmetric unit-diagonal normalization."""
    dg = np.real(np.diag(M))
    if np.any(dg <= 0):
        return -np.inf
    s = 1.0 / np.sqrt(dg)
    Mn = M * s[:, None] * s[None, :]
    return float(np.linalg.eigvalsh(0.5 * (Mn + Mn.conj().T))[0])


def theorem1_check(N: NominalMatrix, v: Sequence, w: Sequence, v_c, w_c, d: Sequence,
                   d_c: float = 1.0, pd_margin: float = PD_MARGIN) -> tuple[bool, float]:
    """Check the sufficient LMI condition at one frequency.

    Positive definiteness is tested on the unit-diagonal normalization of
    the block matrix, so ``pd_margin`` is scale free: the returned margin
    equals ``1 - sigma_max(D_l^{1/2} V N W D_r^{1/2})``.

    Returns
    -------
    (bool, float)
        Whether the normalized matrix has all eigenvalues above
        ``pd_margin``, and its smallest eigenvalue.
    """
    v_all, w_all, d_all = _assemble(N, v, w, v_c, w_c, d, d_c)
    margin = normalized_margin(theorem1_matrix(N, v_all, w_all, d_all))
    return margin > pd_margin, margin


def check_subsystem_requirement(E: np.ndarray, v: np.ndarray, w: np.ndarray,
                                slack: float = 0.0) -> tuple[bool, float]:
    """``sigma_max(diag(w)^{-1} E diag(v)^{-1}) <= 1``; margin is ``1 - sigma_max``."""
    E = np.atleast_2d(np.asarray(E))
    s = sigma_max(E / np.asarray(w, dtype=float)[:, None] / np.asarray(v, dtype=float)[None, :])
    return s <= 1.0 + slack, 1.0 - s


def check_interconnected_requirement(E: np.ndarray, v_c: np.ndarray, w_c: np.ndarray,
                                     slack: float = 0.0) -> tuple[bool, float]:
    """Strict ``sigma_max(diag(v_c) E diag(w_c)) < 1``; margin is ``1 - sigma_max``."""
    E = np.atleast_2d(np.asarray(E))
    s = sigma_max(np.asarray(v_c, dtype=float)[:, None] * E * np.asarray(w_c, dtype=float)[None, :])
    return s < 1.0 + slack, 1.0 - s


# --- V/W step ------------------------------------------------------------------

@dataclass
class VWStep:
    v: list[np.ndarray]
    w: list[np.ndarray]
    cost: float
    status: str


def _scaled_sigma(Nf: np.ndarray, top: np.ndarray, bot: np.ndarray) -> float:
    return sigma_max(Nf / np.sqrt(bot)[:, None] / np.sqrt(top)[None, :])


def _initial_diagonal(Nf, top_fixed, bot_fixed, top_var, bot_var, target=0.5):
    """Strictly feasible diagonal: grow the free entries until ``sigma <= target``."""
    col = np.linalg.norm(Nf, axis=0)
    row = np.linalg.norm(Nf, axis=1)
    tiny = 1e-300
    rho = np.maximum(col[top_var], max(col.max(), 1.0) * 1e-8)
    vsig = np.maximum(row[bot_var], max(row.max(), 1.0) * 1e-8)

    def diag_for(lam):
        top, bot = top_fixed.copy(), bot_fixed.copy()
        top[top_var] = lam * rho
        bot[bot_var] = lam * vsig
        return top, bot

    lam = 1.0
    for _ in range(700):
        top, bot = diag_for(lam)
        if _scaled_sigma(Nf, top, bot) <= target:
            break
        lam *= 4.0
        if lam > 1e300:
            return None
    else:
        return None
    while lam > tiny:
        top, bot = diag_for(lam / 4.0)
        if _scaled_sigma(Nf, top, bot) > target:
            break
        lam /= 4.0
    return diag_for(lam)


def solve_vw_step(N: NominalMatrix, d: Sequence[float], v_c, w_c,
                  alpha: Sequence[float] | None = None, d_c: float = 1.0,
                  margin: float = PD_MARGIN, lower: float = VAR_LOWER,
                  feas_tol: float = 1e-8, max_iter: int = 200,
                  start: tuple[Sequence, Sequence] | None = None,
                  max_passes: int = 6) -> VWStep:
    """Minimize ``sum_j alpha_j (tr V_j^{-2} + tr W_j^{-2})`` for fixed D-scalings.

    The decision variables are the diagonals of ``V_j^{-2}`` and
    ``W_j^{-2}``; ``V_c, W_c`` are fixed by the requirement. Every variable
    is bounded below by ``lower`` so budgets stay finite on channels that
    do not influence the external error.

    Raises
    ------
    SynthesisError
        If no positive budget satisfies the condition at this frequency.
    """
    k, mb, pb, top_blk, bot_blk = _partition(N)
    alpha = np.ones(k) if alpha is None else np.asarray(alpha, dtype=float)
    d_all = np.r_[np.asarray(d, dtype=float), d_c]
    v_c = np.atleast_1d(np.asarray(v_c, dtype=float))
    w_c = np.atleast_1d(np.asarray(w_c, dtype=float))
    Nf = N.full
    nt, nb = Nf.shape[1], Nf.shape[0]
    with np.errstate(over="ignore", divide="ignore"):
        top_fixed = np.zeros(nt)
        bot_fixed = np.zeros(nb)
        top_fixed[pb:] = w_c ** -2.0 / d_c
        bot_fixed[mb:] = v_c ** -2.0 * d_c
    fixed_ok = np.all(np.isfinite(top_fixed[pb:])) and np.all(np.isfinite(bot_fixed[mb:]))
    if not fixed_ok or np.any(top_fixed[pb:] <= 0) or np.any(bot_fixed[mb:] <= 0):
        raise SynthesisError("requirement unachievable with current D: zero interconnected budget",
                             N.omega)
    top_var = np.arange(pb)
    bot_var = np.arange(mb)
    if start is not None:
        # warm start from budgets (v, w) known to satisfy the condition at this d
        sv, sw = start
        top0, bot0 = top_fixed.copy(), bot_fixed.copy()
        top0[top_var] = np.concatenate([np.asarray(x, dtype=float) ** -2.0 for x in sw]) / d_all[top_blk[top_var]]
        bot0[bot_var] = np.concatenate([np.asarray(x, dtype=float) ** -2.0 for x in sv]) * d_all[bot_blk[bot_var]]
        start = (top0, bot0)
    else:
        start = _initial_diagonal(Nf, top_fixed, bot_fixed, top_var, bot_var)
    if start is None:
        raise SynthesisError("requirement unachievable with current D", N.omega)
    top0, bot0 = start
    X = np.block([[np.diag(top_fixed).astype(complex), Nf.conj().T], [Nf, np.diag(bot_fixed)]])
    n = nt + nb
    var_pos = np.r_[top_var, nt + bot_var]
    kappa = np.r_[1.0 / d_all[top_blk[top_var]], d_all[bot_blk[bot_var]]]
    blk = np.r_[top_blk[top_var], bot_blk[bot_var]]
    coeffs = []
    for pos in var_pos:
        E = np.zeros((n, n), dtype=complex)
        E[pos, pos] = 1.0
        coeffs.append([E])
    y0 = np.r_[top0[top_var], bot0[bot_var]] / kappa
    diag0 = np.r_[top0, bot0]
    y, cost, status = None, np.inf, OPTIMAL
    # The interior-point gap test is relative to an O(1) objective, so when
    # the optimum is far below the starting point the problem is re-scaled
    # around the last solution and solved again.
    for _ in range(max_passes):
        # congruence scaling: unit diagonal at the current point,
        # raw variable y = (scaled entry u) * y0
        t = 1.0 / np.sqrt(diag0)
        F0 = X * t[:, None] * t[None, :]
        c = alpha[blk] * y0
        cscale = c.max()
        prob = LmiProblem(var_pos.size, [F0], coeffs, c / cscale,
                          lower=lower / y0, margin=margin)
        sol = solve_sdp(prob, feas_tol=feas_tol, max_iter=max_iter, x0=np.ones(var_pos.size))
        if sol.status == INFEASIBLE and y is None:
            raise SynthesisError("requirement unachievable at this frequency with current D", N.omega)
        if sol.status != OPTIMAL and sol.min_eig_margin < -feas_tol:
            if y is None:
                raise SynthesisError(f"V/W step failed ({sol.status})", N.omega)
            break
        with np.errstate(over="ignore", invalid="ignore"):
            y_new = np.maximum(sol.x * y0, lower)
            cost_new = float(np.sum(alpha[blk] * y_new))
        if not np.isfinite(cost_new) or cost_new >= cost:
            break
        improved = (cost - cost_new) / cost_new
        y, cost, status = y_new, cost_new, sol.status
        if improved < 1e-6:
            break
        y0 = y
        diag0 = diag0.copy()
        diag0[var_pos] = y * kappa
    if y is None:
        raise SynthesisError("V/W step returned no finite solution", N.omega)
    W2 = y[:pb]
    V2 = y[pb:]
    v = [V2[bot_blk[:mb] == j] ** -0.5 for j in range(k)]
    w = [W2[top_blk[:pb] == j] ** -0.5 for j in range(k)]
    return VWStep(v, w, cost, status)


# --- D step ------------------------------------------------------------------

def solve_d_step(N: NominalMatrix, v: Sequence, w: Sequence, v_c, w_c,
                 d0: Sequence[float] | None = None, bounds: tuple[float, float] = D_BOUNDS,
                 form: str = "scaled", feas_tol: float = 1e-9,
                 max_iter: int = 200) -> tuple[np.ndarray, float]:
    """Maximize ``gamma`` over the D-scalings for fixed budgets, with ``d_c = 1``.

    ``form="absolute"`` uses ``V^{-2} D_l - N W^2 D_r N^H >= gamma I``.
    ``form="scaled"`` applies the congruence with ``V`` first,
    ``D_l - M D_r M^H >= gamma I`` with ``M = V N W``, so ``gamma`` is
    relative to the requirement scaling and at most 1. The sign of
    ``gamma`` agrees with the block-matrix condition in both forms.

    Returns
    -------
    (ndarray, float)
        ``d_1..d_k`` and the achieved ``gamma`` in the chosen form.
    """
    if form not in ("scaled", "absolute"):
        raise ModelError(f"unknown D-step form {form!r}")
    k, mb, pb, top_blk, bot_blk = _partition(N)
    v_all, w_all, _ = _assemble(N, v, w, v_c, w_c, np.ones(k), 1.0)
    M = v_all[:, None] * N.full * w_all[None, :]
    nb = M.shape[0]
    # the absolute form is the scaled one under congruence with V^{-1}
    s = 1.0 / v_all if form == "absolute" else np.ones(nb)

    def term(j):
        El = np.diag((bot_blk == j).astype(float)).astype(complex)
        Er = (top_blk == j).astype(float)
        X = El - (M * Er[None, :]) @ M.conj().T
        return X * s[:, None] * s[None, :]

    F0 = term(k)
    scale = 1.0 / max(np.abs(np.diag(F0)).max(), np.finfo(float).tiny)
    F0 = F0 * scale
    coeffs = [[term(j) * scale] for j in range(k)] + [[-np.eye(nb, dtype=complex)]]
    d0 = np.ones(k) if d0 is None else np.clip(np.asarray(d0, dtype=float), *bounds)
    F_d0 = F0 + sum(dj * cj[0] for dj, cj in zip(d0, coeffs[:k]))
    gamma0 = float(np.linalg.eigvalsh(F_d0)[0]) - 1.0
    lo = np.r_[np.full(k, bounds[0]), -np.inf]
    hi = np.r_[np.full(k, bounds[1]), np.inf]
    prob = LmiProblem(k + 1, [F0], coeffs, np.r_[np.zeros(k), -1.0], lower=lo, upper=hi)
    sol = solve_sdp(prob, feas_tol=feas_tol, max_iter=max_iter, x0=np.r_[d0, gamma0])
    d = np.clip(sol.x[:k], *bounds)
    gamma = float(np.linalg.eigvalsh(F0 + sum(dj * cj[0] for dj, cj in zip(d, coeffs[:k])))[0])
    return d, gamma / scale


def balance_scalings(v: Sequence, w: Sequence, d: np.ndarray,
                     bounds: tuple[float, float] = D_BOUNDS):
    """Rescale each subsystem's budgets and ``d_j`` without changing the block matrix.

    Replacing ``d_j, W_j^{-2}, V_j^{-2}`` by ``s d_j, s W_j^{-2}, V_j^{-2}/s``
    leaves every entry of the condition matrix unchanged, so the check
    result is preserved exactly. ``s = sqrt(tr V_j^{-2} / tr W_j^{-2})``
    minimizes the subsystem's cost along this direction.
    """
    v2, w2, d2 = [], [], np.array(d, dtype=float)
    for j, (vj, wj) in enumerate(zip(v, w)):
        a = np.sum(wj ** -2.0)
        b = np.sum(vj ** -2.0)
        s = np.sqrt(b / a) if a > 0 and b > 0 else 1.0
        s = float(np.clip(s * d[j], *bounds) / d[j])
        v2.append(vj * np.sqrt(s))
        w2.append(wj / np.sqrt(s))
        d2[j] = d[j] * s
    return v2, w2, d2


# --- alternating optimization -------------------------------------------------

@dataclass
class FrequencyScaling:
    """Scalings at one frequency (``v[j]`` length ``m_j``, ``w[j]`` length ``p_j``)."""

    omega: float
    v: list[np.ndarray]
    w: list[np.ndarray]
    v_c: np.ndarray
    w_c: np.ndarray
    d: np.ndarray
    d_c: float
    cost: float
    cost_trace: list[float]
    margin: float
    status: str = OPTIMAL


def synthesize_frequency(N: NominalMatrix, v_c, w_c, alpha: Sequence[float] | None = None,
                         conv_tol: float = 1e-3, max_outer: int = 20,
                         pd_margin: float = PD_MARGIN, d_form: str = "scaled",
                         balance: bool = True, feas_tol: float = 1e-8) -> FrequencyScaling:
    """Alternate V/W and D steps at a single frequency.

    Starts from ``d_j = d_c = 1``. A new V/W iterate is accepted only if it
    passes the block-matrix check and does not increase the cost, so the
    recorded cost trace is nonincreasing by construction. Iteration stops
    when the relative decrease falls below ``conv_tol``.
    """
    k = len(N.m_sizes)
    alpha = np.ones(k) if alpha is None else np.asarray(alpha, dtype=float)
    v_c = np.atleast_1d(np.asarray(v_c, dtype=float))
    w_c = np.atleast_1d(np.asarray(w_c, dtype=float))
    if not (np.all(np.isfinite(v_c)) and np.all(np.isfinite(w_c))
            and np.all(v_c > 0) and np.all(w_c > 0)):
        raise SynthesisError("the interconnected requirement admits no error", N.omega)
    d = np.ones(k)
    best: FrequencyScaling | None = None
    trace: list[float] = []

    def cost_of(v, w):
        return float(sum(a * (np.sum(x ** -2.0) + np.sum(y ** -2.0)) for a, x, y in zip(alpha, v, w)))

    def accept(v, w, d, margin):
        nonlocal best
        cost = cost_of(v, w)
        if best is not None and cost > best.cost:
            return False
        trace.append(cost)
        best = FrequencyScaling(N.omega, v, w, v_c, w_c, d.copy(), 1.0, cost, list(trace), margin)
        return True

    start = None
    for it in range(max_outer):
        try:
            step = solve_vw_step(N, d, v_c, w_c, alpha, margin=pd_margin, feas_tol=feas_tol,
                                 start=start)
        except SynthesisError:
            if best is None:
                raise
            break
        v, w = step.v, step.w
        ok, margin = theorem1_check(N, v, w, v_c, w_c, d, 1.0, pd_margin)
        eps = 1e-10
        while not ok and eps < 1e-2:
            # shrink the budgets slightly; the margin is monotone in them
            eps *= 10.0
            v = [x / np.sqrt(1.0 + eps) for x in step.v]
            w = [x / np.sqrt(1.0 + eps) for x in step.w]
            ok, margin = theorem1_check(N, v, w, v_c, w_c, d, 1.0, pd_margin)
        if not ok:
            if best is None:
                raise SynthesisError("V/W step produced no certified point", N.omega)
            break
        prev = best.cost if best is not None else None
        if not accept(v, w, d, margin):
            break
        if prev is not None and (prev - best.cost) <= conv_tol * abs(prev):
            break
        d_new, gamma = solve_d_step(N, v, w, v_c, w_c, d0=d, form=d_form)
        if gamma <= 0:
            d_new = d
        vb, wb, db = balance_scalings(v, w, d_new) if balance else (v, w, d_new)
        ok, margin = theorem1_check(N, vb, wb, v_c, w_c, db, 1.0, pd_margin)
        if ok and cost_of(vb, wb) < best.cost:
            accept(vb, wb, db, margin)
            d, start = db, (vb, wb)
        elif gamma > 0:
            # the previous budgets keep a positive margin at the new scalings
            d, start = d_new, (v, w)
        else:
            break
    best.cost_trace = list(trace)
    return best


@dataclass
class ScalingSolution:
    """Per-frequency scalings over a grid; ``None`` marks infeasible frequencies."""

    omegas: np.ndarray
    items: list[FrequencyScaling | None]
    m_sizes: tuple[int, ...]
    p_sizes: tuple[int, ...]
    errors: dict = field(default_factory=dict)

    @property
    def infeasible(self) -> list[float]:
        return [float(w) for w, it in zip(self.omegas, self.items) if it is None]

    @property
    def feasible_count(self) -> int:
        return sum(it is not None for it in self.items)

    def v_samples(self, j: int) -> np.ndarray:
        """``(n_omega, m_j)`` array of ``v_j``; NaN rows where infeasible."""
        return np.array([it.v[j] if it is not None else np.full(self.m_sizes[j], np.nan)
                         for it in self.items])

    def w_samples(self, j: int) -> np.ndarray:
        return np.array([it.w[j] if it is not None else np.full(self.p_sizes[j], np.nan)
                         for it in self.items])


def _synth_chunk(args):
    Ns, vcs, wcs, alpha, conv_tol, max_outer, feas_tol = args
    out = []
    for N, v_c, w_c in zip(Ns, vcs, wcs):
        try:
            out.append((synthesize_frequency(N, v_c, w_c, alpha, conv_tol, max_outer,
                                             feas_tol=feas_tol), None))
        except (SynthesisError, np.linalg.LinAlgError) as exc:
            out.append((None, str(exc)))
    return out


def synthesize_requirements(sys: InterconnectedSystem, grid: FrequencyGrid | Sequence[float],
                            req: RequirementSpec, alpha: Sequence[float] | None = None,
                            conv_tol: float = 1e-3, max_outer: int = 20, workers: int = 1,
                            raise_on_infeasible: bool = True,
                            feas_tol: float = 1e-8) -> ScalingSolution:
    """Subsystem scalings at every grid frequency.

    Frequencies are independent; with ``workers > 1`` they are distributed
    over a process pool and merged back in grid order. All frequencies are
    attempted before infeasibility is reported.

    Raises
    ------
    SynthesisInfeasible
        If some frequencies fail and ``raise_on_infeasible`` is set; the
        partial solution is attached.
    """
    omegas = np.asarray(grid.omegas if isinstance(grid, FrequencyGrid) else grid, dtype=float)
    if req.omegas.size != omegas.size or not np.allclose(req.omegas, omegas, rtol=1e-12):
        raise ModelError("requirement is not defined on the synthesis grid")
    if alpha is not None and len(alpha) != sys.k:
        raise ModelError(f"alpha needs {sys.k} entries")
    Gbs = block_response_grid(sys, omegas)
    Ns = [compute_N_from_response(sys, Gb, w) for Gb, w in zip(Gbs, omegas)]
    n = len(Ns)
    workers = max(1, int(workers))
    nchunks = min(n, workers * 8) if workers > 1 else 1
    bounds = np.linspace(0, n, nchunks + 1).astype(int)
    tasks = [(Ns[a:b], req.v_c[a:b], req.w_c[a:b], alpha, conv_tol, max_outer, feas_tol)
             for a, b in zip(bounds[:-1], bounds[1:])]
    if workers == 1:
        results = [_synth_chunk(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_synth_chunk, tasks))
    items, errors = [], {}
    for chunk in results:
        for item, err in chunk:
            items.append(item)
            if err is not None:
                errors[len(items) - 1] = err
    sol = ScalingSolution(omegas, items, sys.m_sizes, sys.p_sizes,
                          {float(omegas[i]): e for i, e in errors.items()})
    if sol.infeasible:
        log.warning("synthesis infeasible at %d of %d frequencies", len(sol.infeasible), n)
        if raise_on_infeasible:
            raise SynthesisInfeasible(sol.infeasible, sol)
    return sol
