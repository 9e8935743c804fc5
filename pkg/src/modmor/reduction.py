"""Lyapunov equations, balanced truncation and requirement-driven order selection."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from .freqresp import FrequencyGrid
from .lti import ModelError, StateSpaceModel, freq_response_grid, series, stability_check
from .weights import FittedWeight, diagonal_weight, fit_weight

log = logging.getLogger(__name__)

GRAMIAN_FLOOR = 1e-14


class ReductionError(ModelError):
    """No admissible reduced model was found."""


@dataclass(frozen=True, eq=False)
class ReductionResult:
    """A reduced model together with the data that produced it.

    ``hankel_values`` are the (weighted) Hankel singular values of the
    reduced stable part. ``margins`` holds ``1 - sigma_max`` of the
    normalized error per grid frequency when the result came from
    :func:`reduce_to_requirement`.
    """

    reduced: StateSpaceModel
    original_order: int
    reduced_order: int
    hankel_values: np.ndarray
    method: str = "bt"
    omegas: np.ndarray | None = None
    margins: np.ndarray | None = None
    kept_unstable: int = 0
    fit_errors: dict = field(default_factory=dict)

    @property
    def passed(self) -> np.ndarray | None:
        return None if self.margins is None else self.margins >= 0.0


# --- Lyapunov and Gramians ---------------------------------------------------

def lyapunov_residual(A: np.ndarray, P: np.ndarray, Q: np.ndarray) -> float:
    """Relative residual ``||A P + P A^T + Q|| / ||Q||`` (Frobenius)."""
    R = A @ P + P @ A.T + Q
    qn = np.linalg.norm(Q)
    return float(np.linalg.norm(R) / qn) if qn > 0 else float(np.linalg.norm(R))


def solve_lyapunov(A: np.ndarray, Q: np.ndarray, refine: int = 2) -> np.ndarray:
    """Solve ``A P + P A^T + Q = 0`` for stable ``A`` and symmetric ``Q``.

    Bartels-Stewart (via scipy) followed by up to ``refine`` steps of
    iterative refinement on the residual.

    Raises
    ------
    ModelError
        If ``A`` is not Hurwitz or ``Q`` is not symmetric.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    n = A.shape[0]
    if A.shape != (n, n) or Q.shape != (n, n):
        raise ModelError("A and Q must be square and of equal size")
    if n == 0:
        return np.zeros((0, 0))
    if not np.allclose(Q, Q.T, rtol=1e-10, atol=1e-12 * max(np.abs(Q).max(), 1e-300)):
        raise ModelError("Q must be symmetric")
    alpha = float(np.max(np.linalg.eigvals(A).real))
    if alpha >= 0:
        raise ModelError(f"Lyapunov solve needs a stable A (spectral abscissa {alpha:.3e})")
    P = sla.solve_continuous_lyapunov(A, -Q)
    P = 0.5 * (P + P.T)
    for _ in range(refine):
        R = A @ P + P @ A.T + Q
        if np.linalg.norm(R) <= 1e-14 * max(np.linalg.norm(Q), 1e-300):
            break
        dP = sla.solve_continuous_lyapunov(A, -R)
        P = P + 0.5 * (dP + dP.T)
    return P


def gramians(model: StateSpaceModel) -> tuple[np.ndarray, np.ndarray]:
    """Controllability and observability Gramians of a stable model."""
    if model.n == 0:
        return np.zeros((0, 0)), np.zeros((0, 0))
    P = solve_lyapunov(model.A, model.B @ model.B.T)
    Q = solve_lyapunov(model.A.T, model.C.T @ model.C)
    return P, Q


def hankel_singular_values(model: StateSpaceModel) -> np.ndarray:
    P, Q = gramians(model)
    return _balancing(P, Q)[0]


def _psd_factor(P: np.ndarray, floor: float = GRAMIAN_FLOOR) -> np.ndarray:
    """``L`` with ``L L^T`` equal to ``P`` after flooring its eigenvalues."""
    P = 0.5 * (P + P.T)
    lam, U = np.linalg.eigh(P)
    top = max(lam.max(), 0.0)
    if lam.min() < -1e-8 * max(top, 1e-300):
        raise ModelError("Gramian is indefinite beyond tolerance (numerical rank problem)")
    lam = np.maximum(lam, floor * top if top > 0 else floor)
    return U * np.sqrt(lam)


def _balancing(P: np.ndarray, Q: np.ndarray):
    """Square-root balancing: Hankel values and full balancing projections."""
    Lp = _psd_factor(P)
    Lq = _psd_factor(Q)
    U, s, Vt = np.linalg.svd(Lq.T @ Lp)
    s_safe = np.maximum(s, s[0] * 1e-300 if s.size and s[0] > 0 else 1e-300)
    T = Lp @ Vt.T / np.sqrt(s_safe)          # x = T z
    Ti = (U / np.sqrt(s_safe)).T @ Lq.T      # z = Ti x
    return s, T, Ti


# --- stable / unstable split ---------------------------------------------------

def stable_split(model: StateSpaceModel, tol: float | None = None
                 ) -> tuple[StateSpaceModel, StateSpaceModel]:
    """Additive split ``G = G_s + G_u`` into stable and non-stable parts.

    Eigenvalues with real part below ``-tol`` count as stable; the default
    ``tol`` is ``1e-7 * max(1, ||A||)``, which keeps double poles at the
    origin (rigid-body modes) together in the non-stable part. The
    feedthrough goes to the stable part.
    """
    n = model.n
    if n == 0:
        return model, StateSpaceModel.static(np.zeros_like(model.D))
    A = np.asarray(model.A)
    if tol is None:
        tol = 1e-7 * max(1.0, np.linalg.norm(A, 1))
    T, Z, ns = sla.schur(A, output="real", sort=lambda re, im: re < -tol)
    B = Z.T @ model.B
    C = model.C @ Z
    if ns == n:
        return model, StateSpaceModel.static(np.zeros_like(model.D))
    A11, A12, A22 = T[:ns, :ns], T[:ns, ns:], T[ns:, ns:]
    # A11 X - X A22 + A12 = 0 decouples the two diagonal blocks
    X = sla.solve_sylvester(A11, -A22, -A12)
    Bs = B[:ns] - X @ B[ns:]
    Bu = B[ns:]
    Cs = C[:, :ns]
    Cu = C[:, :ns] @ X + C[:, ns:]
    Gs = StateSpaceModel(A11, Bs, Cs, model.D)
    Gu = StateSpaceModel(A22, Bu, Cu, np.zeros_like(model.D))
    return Gs, Gu


def parallel(a: StateSpaceModel, b: StateSpaceModel) -> StateSpaceModel:
    """``a + b`` as a block-diagonal realization."""
    if (a.p, a.m) != (b.p, b.m):
        raise ModelError("parallel: dimension mismatch")
    n = a.n + b.n
    A = sla.block_diag(a.A, b.A) if n else np.zeros((0, 0))
    return StateSpaceModel(A, np.vstack([a.B, b.B]), np.hstack([a.C, b.C]), a.D + b.D,
                           a.input_labels, a.output_labels)


# --- balanced truncation --------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BalancedRealization:
    """A stable model in (possibly frequency-weighted) balanced coordinates.

    ``A, B, C`` are the balanced matrices ``Ti A T``, ``Ti B``, ``C T``;
    reduced models are obtained by truncating or residualizing the
    trailing states.
    """

    model: StateSpaceModel
    hankel_values: np.ndarray
    T: np.ndarray
    Ti: np.ndarray

    @property
    def n(self) -> int:
        return self.model.n

    def balanced(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        g = self.model
        return self.Ti @ g.A @ self.T, self.Ti @ g.B, g.C @ self.T

    def _labels(self, A, B, C, D) -> StateSpaceModel:
        g = self.model
        return StateSpaceModel(A, B, C, D, g.input_labels, g.output_labels)

    def truncate(self, r: int) -> StateSpaceModel:
        """Keep the leading ``r`` balanced states."""
        n = self.n
        if not 0 <= r <= n:
            raise ModelError(f"target order {r} outside [0, {n}]")
        if r == n:
            return self.model
        if r == 0:
            return StateSpaceModel.static(self.model.D)
        T, Ti = self.T[:, :r], self.Ti[:r]
        g = self.model
        return self._labels(Ti @ g.A @ T, Ti @ g.B, g.C @ T, g.D)

    def residualize(self, r: int) -> StateSpaceModel:
        """Singular perturbation of the trailing states (matches the DC gain)."""
        n = self.n
        if not 0 <= r <= n:
            raise ModelError(f"target order {r} outside [0, {n}]")
        if r == n:
            return self.model
        A, B, C = self.balanced()
        A12, A21, A22 = A[:r, r:], A[r:, :r], A[r:, r:]
        try:
            X = np.linalg.solve(A22, np.hstack([A21, B[r:]]))
        except np.linalg.LinAlgError as exc:
            raise ModelError("residualized block is singular") from exc
        Xa, Xb = X[:, :r], X[:, r:]
        return self._labels(A[:r, :r] - A12 @ Xa, B[:r] - A12 @ Xb,
                            C[:, :r] - C[:, r:] @ Xa, self.model.D - C[:, r:] @ Xb)

    def reduce(self, r: int, projection: str = "truncate") -> StateSpaceModel:
        if projection == "truncate":
            return self.truncate(r)
        if projection == "residualize":
            return self.residualize(r)
        raise ModelError(f"unknown projection {projection!r}")


def _require_stable(model: StateSpaceModel, what: str) -> None:
    ok, alpha = stability_check(model)
    if not ok:
        raise ModelError(f"{what} must be stable (spectral abscissa {alpha:.3e})")


def balance(model: StateSpaceModel) -> BalancedRealization:
    _require_stable(model, "model")
    P, Q = gramians(model)
    s, T, Ti = _balancing(P, Q)
    return BalancedRealization(model, s, T, Ti)


def fw_balance(model: StateSpaceModel, w_out: StateSpaceModel | None = None,
               v_in: StateSpaceModel | None = None) -> BalancedRealization:
    """Enns frequency-weighted balancing.

    The controllability Gramian is the plant block of the Gramian of
    ``G V`` and the observability Gramian the plant block of that of
    ``W G``. With static identity weights this is ordinary balancing.
    """
    _require_stable(model, "model")
    n = model.n
    if v_in is not None:
        _require_stable(v_in, "input weight")
        if v_in.p != model.m:
            raise ModelError("input weight size does not match model inputs")
        Pc, _ = gramians(series(v_in, model))
        # series(v_in, model) orders states as [weight, plant]
        P = Pc[v_in.n:, v_in.n:]
    else:
        P = solve_lyapunov(model.A, model.B @ model.B.T)
    if w_out is not None:
        _require_stable(w_out, "output weight")
        if w_out.m != model.p:
            raise ModelError("output weight size does not match model outputs")
        cas = series(model, w_out)
        Qo = solve_lyapunov(cas.A.T, cas.C.T @ cas.C)
        Q = Qo[:n, :n]
    else:
        Q = solve_lyapunov(model.A.T, model.C.T @ model.C)
    s, T, Ti = _balancing(P, Q)
    return BalancedRealization(model, s, T, Ti)


def balanced_truncation(model: StateSpaceModel, r: int,
                        projection: str = "truncate") -> ReductionResult:
    """Square-root balanced truncation of a stable model to ``r`` states.

    The error satisfies ``||G - G_r||_inf <= 2 * sum(hankel_values[r:])``
    for both projections (``"truncate"`` or ``"residualize"``).
    """
    if not 0 <= r <= model.n:
        raise ModelError(f"target order {r} outside [0, {model.n}]")
    bal = balance(model)
    return ReductionResult(bal.reduce(r, projection), model.n, r, bal.hankel_values, "bt")


def fw_balanced_truncation(model: StateSpaceModel, w_out: Sequence[FittedWeight] | StateSpaceModel | None,
                           v_in: Sequence[FittedWeight] | StateSpaceModel | None,
                           r: int, projection: str = "truncate") -> ReductionResult:
    """Frequency-weighted balanced truncation (Enns) to ``r`` states.

    ``w_out`` weights the outputs and ``v_in`` the inputs; either may be a
    list of per-channel :class:`FittedWeight` or a MIMO model. No a-priori
    error bound holds, so results must be checked afterwards.
    """
    if not 0 <= r <= model.n:
        raise ModelError(f"target order {r} outside [0, {model.n}]")
    bal = fw_balance(model, _as_weight(w_out), _as_weight(v_in))
    return ReductionResult(bal.reduce(r, projection), model.n, r, bal.hankel_values, "fwbt")


def _as_weight(w) -> StateSpaceModel | None:
    if w is None or isinstance(w, StateSpaceModel):
        return w
    return diagonal_weight(w)


# --- requirement-driven order selection -------------------------------------------

def weighted_error_margins(E: np.ndarray, v: np.ndarray, w: np.ndarray) -> np.ndarray:
    """``1 - sigma_max(diag(w)^{-1} E diag(v)^{-1})`` for each frequency in a stack."""
    Y = E / w[:, :, None] / v[:, None, :]
    if Y.shape[1] == 1 or Y.shape[2] == 1:
        s = np.sqrt(np.sum(np.abs(Y) ** 2, axis=(1, 2)))
    else:
        s = np.linalg.svd(Y, compute_uv=False)[:, 0]
    return 1.0 - s


def fit_scaling_weights(v: np.ndarray, w: np.ndarray, omegas: np.ndarray,
                        order: int = 4) -> tuple[list[FittedWeight], list[FittedWeight]]:
    """Per-channel fits of ``v^{-1}`` (input side) and ``w^{-1}`` (output side)."""
    v_in = [fit_weight(1.0 / v[:, i], omegas, order) for i in range(v.shape[1])]
    w_out = [fit_weight(1.0 / w[:, i], omegas, order) for i in range(w.shape[1])]
    return v_in, w_out


def reduce_to_requirement(model: StateSpaceModel, v: np.ndarray, w: np.ndarray,
                          grid: FrequencyGrid | Sequence[float], fit_order: int = 4,
                          method: str = "fwbt", policy: str = "ascending",
                          projection: str = "residualize") -> ReductionResult:
    """Smallest-order reduction whose error meets the subsystem budget on the grid.

    The error ``E = G - G_r`` must satisfy
    ``sigma_max(diag(w)^{-1} E diag(v)^{-1}) <= 1`` at every grid point,
    with ``v`` of shape ``(n_omega, m)`` and ``w`` of shape ``(n_omega, p)``.
    The non-stable part of ``model`` (for example rigid-body modes) is kept
    exactly and only the stable part is truncated. Candidates with an
    unstable reduced part are rejected.

    Parameters
    ----------
    method
        ``"fwbt"`` weights the balancing by fits of ``v^{-1}`` and
        ``w^{-1}``; ``"bt"`` is unweighted.
    projection
        ``"residualize"`` (singular perturbation, keeps the DC gain) or
        ``"truncate"`` for the discarded balanced states.
    policy
        ``"ascending"`` (first passing order from 0, the smallest passing
        order), ``"bisect"`` (bisection, then a downward linear sweep; fewer
        evaluations but the pass set need not be contiguous) or
        ``"descending"`` (lowest order reached stepping down from ``n``
        while passing).

    Raises
    ------
    ReductionError
        If no order passes, which can only happen through numerical
        trouble since the full model has zero error.
    """
    omegas = np.asarray(grid.omegas if isinstance(grid, FrequencyGrid) else grid, dtype=float)
    v = np.asarray(v, dtype=float).reshape(omegas.size, model.m)
    w = np.asarray(w, dtype=float).reshape(omegas.size, model.p)
    if np.any(~np.isfinite(v)) or np.any(~np.isfinite(w)) or np.any(v <= 0) or np.any(w <= 0):
        raise ModelError("scalings must be finite and positive at every grid point")
    if method not in ("fwbt", "bt"):
        raise ModelError(f"unknown reduction method {method!r}")
    if projection not in ("truncate", "residualize"):
        raise ModelError(f"unknown projection {projection!r}")
    if policy not in ("bisect", "ascending", "descending"):
        raise ModelError(f"unknown order policy {policy!r}")

    Gs, Gu = stable_split(model)
    fit_errors = {}
    if method == "fwbt" and Gs.n:
        v_fit, w_fit = fit_scaling_weights(v, w, omegas, fit_order)
        fit_errors = {"input": [f.fit_error for f in v_fit], "output": [f.fit_error for f in w_fit]}
        bal = fw_balance(Gs, diagonal_weight(w_fit), diagonal_weight(v_fit))
    elif Gs.n:
        bal = balance(Gs)
    else:
        bal = BalancedRealization(Gs, np.zeros(0), np.zeros((0, 0)), np.zeros((0, 0)))

    G_ref = freq_response_grid(Gs, omegas)
    cache: dict[int, np.ndarray | None] = {}

    def margins_at(r: int) -> np.ndarray | None:
        if r not in cache:
            try:
                red = bal.reduce(r, projection)
            except ModelError:
                cache[r] = None
                return None
            if red.n and not stability_check(red)[0]:
                cache[r] = None
            else:
                cache[r] = weighted_error_margins(G_ref - freq_response_grid(red, omegas), v, w)
        return cache[r]

    def passes(r: int) -> bool:
        m = margins_at(r)
        return m is not None and bool(np.all(m >= 0.0))

    ns = Gs.n
    if policy == "ascending":
        r = next((q for q in range(ns + 1) if passes(q)), None)
    elif policy == "descending":
        r = None
        for q in range(ns, -1, -1):
            if not passes(q):
                break
            r = q
    else:
        lo, hi = 0, ns
        if not passes(hi):
            r = None
        else:
            while lo < hi:
                mid = (lo + hi) // 2
                if passes(mid):
                    hi = mid
                else:
                    lo = mid + 1
            r = hi
            while r > 0 and passes(r - 1):
                r -= 1
    if r is None:
        raise ReductionError("requirement unattainable by FWBT" if method == "fwbt"
                             else "requirement unattainable by BT")
    red_s = bal.reduce(r, projection)
    reduced = parallel(red_s, Gu) if Gu.n else red_s
    reduced = StateSpaceModel(reduced.A, reduced.B, reduced.C, reduced.D,
                              model.input_labels, model.output_labels)
    log.info("reduced %d -> %d states (%d kept unstable)", model.n, reduced.n, Gu.n)
    return ReductionResult(reduced, model.n, reduced.n, bal.hankel_values,
                           method, omegas, margins_at(r), Gu.n, fit_errors)
