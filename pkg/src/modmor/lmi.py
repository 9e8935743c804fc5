"""Dense semidefinite programming for small LMI problems.

Problems have the form::

    minimize    c @ x
    subject to  F0_b + sum_i x_i F_ib  >=  margin * I     for every block b
                lower <= x <= upper

Complex Hermitian blocks are mapped to real symmetric ones through the
embedding ``[[Re, -Im], [Im, Re]]``, which preserves semidefiniteness
(every eigenvalue appears twice). The solver is an infeasible-start
primal-dual path-following method with the HKM search direction and
Mehrotra predictor-corrector steps.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

log = logging.getLogger(__name__)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
MAX_ITER = "max_iter"
UNBOUNDED = "unbounded"


class LmiError(ValueError):
    """Malformed LMI problem data."""


def hermitian_to_real(M: np.ndarray) -> np.ndarray:
    """Real symmetric embedding ``[[Re M, -Im M], [Im M, Re M]]``."""
    M = np.asarray(M)
    if not np.iscomplexobj(M):
        return np.asarray(M, dtype=float)
    re, im = M.real, M.imag
    return np.block([[re, -im], [im, re]])


def _check_hermitian(M: np.ndarray, tol: float = 1e-12) -> None:
    scale = max(1.0, float(np.max(np.abs(M))) if M.size else 1.0)
    if M.size and np.max(np.abs(M - M.conj().T)) > tol * scale:
        raise LmiError("matrix is not Hermitian")


def check_pd(M: np.ndarray, margin: float = 0.0) -> bool:
    """True iff the smallest eigenvalue of Hermitian ``M`` exceeds ``margin``."""
    M = np.atleast_2d(np.asarray(M))
    if M.shape[0] != M.shape[1]:
        raise LmiError("check_pd needs a square matrix")
    _check_hermitian(M)
    if M.size == 0:
        return True
    return bool(np.linalg.eigvalsh(M)[0] > margin)


def min_eig(M: np.ndarray) -> float:
    M = np.atleast_2d(np.asarray(M))
    return float(np.linalg.eigvalsh(M)[0]) if M.size else np.inf


@dataclass
class LmiProblem:
    """Container for the LMI data.

    ``coefficient_blocks[i][b]`` is the coefficient of variable ``i`` in
    block ``b``. Bounds may contain infinities.
    """

    num_vars: int
    constant_blocks: Sequence[np.ndarray]
    coefficient_blocks: Sequence[Sequence[np.ndarray]]
    objective: np.ndarray
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    margin: float = 0.0

    def __post_init__(self) -> None:
        nb = len(self.constant_blocks)
        if len(self.coefficient_blocks) != self.num_vars:
            raise LmiError("one coefficient list per variable is required")
        self.objective = np.asarray(self.objective, dtype=float).reshape(-1)
        if self.objective.size != self.num_vars:
            raise LmiError("objective length differs from num_vars")
        for b, F0 in enumerate(self.constant_blocks):
            F0 = np.atleast_2d(np.asarray(F0))
            if F0.shape[0] != F0.shape[1]:
                raise LmiError(f"block {b} is not square")
            _check_hermitian(F0)
        for i, coeffs in enumerate(self.coefficient_blocks):
            if len(coeffs) != nb:
                raise LmiError(f"variable {i} has {len(coeffs)} blocks, expected {nb}")
            for b, Fi in enumerate(coeffs):
                Fi = np.atleast_2d(np.asarray(Fi))
                if Fi.shape != np.atleast_2d(np.asarray(self.constant_blocks[b])).shape:
                    raise LmiError(f"variable {i}, block {b}: inconsistent dimensions")
                _check_hermitian(Fi)
        for name in ("lower", "upper"):
            v = getattr(self, name)
            if v is not None:
                v = np.asarray(v, dtype=float).reshape(-1)
                if v.size != self.num_vars:
                    raise LmiError(f"{name} bounds have wrong length")
                setattr(self, name, v)

    def real_blocks(self) -> list[tuple[np.ndarray, np.ndarray]]:
        """Per block: real constant term (margin folded in) and stacked coefficients."""
        out = []
        for b, F0 in enumerate(self.constant_blocks):
            is_complex = np.iscomplexobj(F0) or any(
                np.iscomplexobj(coeffs[b]) for coeffs in self.coefficient_blocks)
            dtype = complex if is_complex else float
            F0r = hermitian_to_real(np.atleast_2d(np.asarray(F0, dtype=dtype)))
            n = F0r.shape[0]
            F = np.empty((self.num_vars, n, n))
            for i, coeffs in enumerate(self.coefficient_blocks):
                F[i] = hermitian_to_real(np.atleast_2d(np.asarray(coeffs[b], dtype=dtype)))
            F0r = 0.5 * (F0r + F0r.T) - self.margin * np.eye(n)
            out.append((F0r, 0.5 * (F + F.transpose(0, 2, 1))))
        return out

    def evaluate(self, x: np.ndarray) -> list[np.ndarray]:
        """Constraint matrices ``F0_b + sum_i x_i F_ib`` (margin not subtracted)."""
        mats = []
        for b, F0 in enumerate(self.constant_blocks):
            M = np.array(F0, dtype=complex if np.iscomplexobj(F0) else float)
            for i, coeffs in enumerate(self.coefficient_blocks):
                M = M + x[i] * np.asarray(coeffs[b])
            mats.append(M)
        return mats


@dataclass
class LmiSolution:
    status: str
    x: np.ndarray
    objective_value: float
    min_eig_margin: float
    iterations: int = 0
    info: dict = field(default_factory=dict)


def _lp_rows(problem: LmiProblem) -> tuple[np.ndarray, np.ndarray]:
    rows, const = [], []
    nv = problem.num_vars
    if problem.lower is not None:
        for i, lb in enumerate(problem.lower):
            if np.isfinite(lb):
                r = np.zeros(nv)
                r[i] = 1.0
                rows.append(r)
                const.append(-lb)
    if problem.upper is not None:
        for i, ub in enumerate(problem.upper):
            if np.isfinite(ub):
                r = np.zeros(nv)
                r[i] = -1.0
                rows.append(r)
                const.append(ub)
    if not rows:
        return np.zeros((0, nv)), np.zeros(0)
    return np.array(rows), np.array(const)


def constraint_margin(problem: LmiProblem, x: np.ndarray) -> float:
    """Smallest eigenvalue over all blocks minus ``margin``, and bound slacks."""
    vals = [min_eig(M) - problem.margin for M in problem.evaluate(x)]
    A, a0 = _lp_rows(problem)
    if a0.size:
        vals.append(float(np.min(a0 + A @ x)))
    return min(vals) if vals else np.inf


def _adjoint(blocks, mats) -> np.ndarray:
    """``[sum_b tr(F_ib M_b)]_i`` for symmetric coefficient stacks."""
    return sum(F.reshape(F.shape[0], -1) @ np.ravel(M) for (_, F), M in zip(blocks, mats))


def _max_step(S: np.ndarray, dS: np.ndarray) -> float:
    L = np.linalg.cholesky(S)
    Li = np.linalg.inv(L)
    lam = np.linalg.eigvalsh(Li @ dS @ Li.T)[0]
    return np.inf if lam >= 0 else -1.0 / lam


def _max_step_lp(s: np.ndarray, ds: np.ndarray) -> float:
    neg = ds < 0
    return float(np.min(-s[neg] / ds[neg])) if np.any(neg) else np.inf


def solve_sdp(problem: LmiProblem, feas_tol: float = 1e-8, gap_tol: float = 1e-8,
              max_iter: int = 200, x0: np.ndarray | None = None) -> LmiSolution:
    """Solve an :class:`LmiProblem`.

    Parameters
    ----------
    problem
        The LMI data.
    feas_tol, gap_tol
        Relative tolerances on primal/dual residuals and duality gap.
    max_iter
        Iteration cap; on exhaustion the best iterate is returned with
        status ``"max_iter"``.
    x0
        Optional starting point. When it is strictly feasible the primal
        iterates stay feasible throughout.

    Returns
    -------
    LmiSolution
        ``status`` is one of ``"optimal"``, ``"infeasible"``,
        ``"unbounded"`` or ``"max_iter"``.
    """
    # overflow on diverging iterates is detected explicitly below
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        return _solve_sdp(problem, feas_tol, gap_tol, max_iter, x0)


def _solve_sdp(problem: LmiProblem, feas_tol: float, gap_tol: float, max_iter: int,
               x0: np.ndarray | None) -> LmiSolution:
    nv = problem.num_vars
    c = problem.objective
    blocks = problem.real_blocks()
    A_lp, a0 = _lp_rows(problem)

    if nv == 0:
        x = np.zeros(0)
        margin = constraint_margin(problem, x)
        status = OPTIMAL if margin >= -feas_tol else INFEASIBLE
        return LmiSolution(status, x, 0.0, margin)

    x = np.zeros(nv) if x0 is None else np.array(x0, dtype=float)
    Fx = [F0 + np.tensordot(x, F, 1) for F0, F in blocks]
    slack_lp = a0 + A_lp @ x
    strict = all(min_eig(M) > 0 for M in Fx) and np.all(slack_lp > 0)
    cnorm = max(1.0, np.linalg.norm(c))
    fnorm = max([1.0] + [np.linalg.norm(F0) for F0, _ in blocks] + [np.linalg.norm(a0)])
    ntot = sum(F0.shape[0] for F0, _ in blocks) + a0.size

    if strict:
        S = [M.copy() for M in Fx]
        s = slack_lp.copy()
        Sinv = [np.linalg.inv(M) for M in S]
        AS = _adjoint(blocks, Sinv) + A_lp.T @ (1.0 / s if s.size else np.zeros(0))
        mu0 = cnorm / max(np.linalg.norm(AS), 1e-300)
        Z = [mu0 * Si for Si in Sinv]
        z = mu0 / s if s.size else np.zeros(0)
    else:
        xi = max(10.0, fnorm, max((np.max(np.abs(M)) for M in Fx), default=1.0))
        eta = max(10.0, cnorm)
        S = [xi * np.eye(F0.shape[0]) for F0, _ in blocks]
        s = xi * np.ones(a0.size)
        Z = [eta * np.eye(F0.shape[0]) for F0, _ in blocks]
        z = eta * np.ones(a0.size)

    status = MAX_ITER
    it = 0
    best = None
    for it in range(1, max_iter + 1):
        Fx = [F0 + np.tensordot(x, F, 1) for F0, F in blocks]
        R = [M - Sb for M, Sb in zip(Fx, S)]
        r_lp = a0 + A_lp @ x - s
        AZ = _adjoint(blocks, Z) + A_lp.T @ z
        rd = c - AZ
        gap = sum(float(np.sum(Sb * Zb)) for Sb, Zb in zip(S, Z)) + float(s @ z)
        mu = gap / ntot
        pobj = float(c @ x)
        dobj = -(sum(float(np.sum(F0 * Zb)) for (F0, _), Zb in zip(blocks, Z)) + float(a0 @ z))
        pres = max([np.linalg.norm(Rb) for Rb in R] + [np.linalg.norm(r_lp) if r_lp.size else 0.0])
        pres /= fnorm
        dres = np.linalg.norm(rd) / cnorm
        relgap = gap / (1.0 + abs(pobj) + abs(dobj))
        if pres <= feas_tol:
            score = (dres, relgap)
            if best is None or max(score) < max(best[1]):
                best = (x.copy(), score)
        if pres <= feas_tol and dres <= feas_tol and relgap <= gap_tol:
            status = OPTIMAL
            break
        if pres <= feas_tol and pobj < -1e12 * cnorm * fnorm:
            status = UNBOUNDED
            break
        # dual ray certifying that no x satisfies the constraints
        zsum = sum(np.trace(Zb) for Zb in Z) + float(np.sum(z))
        if dobj > 0 and zsum > 0:
            cert = -dobj / zsum
            ray_res = np.linalg.norm(AZ) / zsum
            if cert < -feas_tol and ray_res < 1e-3 * abs(cert) and (
                    zsum > 1e6 * max(1.0, cnorm) or ray_res < feas_tol * 1e-2):
                status = INFEASIBLE
                break

        try:
            Sinv = [np.linalg.inv(Sb) for Sb in S]
        except np.linalg.LinAlgError:
            break
        H = np.zeros((nv, nv))
        for (F0, F), Si, Zb in zip(blocks, Sinv, Z):
            # H_kl = tr(F_k S^-1 F_l Z)
            G = np.matmul(np.matmul(Si, F), Zb)
            H += F.reshape(nv, -1) @ G.transpose(0, 2, 1).reshape(nv, -1).T
        if a0.size:
            H += A_lp.T @ (A_lp * (z / s)[:, None])
        H = 0.5 * (H + H.T)
        try:
            cho = np.linalg.cholesky(H + 1e-14 * np.trace(H) / nv * np.eye(nv))
            solve_H = lambda rhs: np.linalg.solve(cho.T, np.linalg.solve(cho, rhs))
        except np.linalg.LinAlgError:
            Hp = np.linalg.pinv(H)
            solve_H = lambda rhs: Hp @ rhs

        def direction(sigma_mu, corr_S=None, corr_s=None):
            Gs = []
            for b, ((F0, F), Si, Zb, Rb) in enumerate(zip(blocks, Sinv, Z, R)):
                G = sigma_mu * Si - Zb - Si @ Rb @ Zb
                if corr_S is not None:
                    G = G - Si @ corr_S[b]
                Gs.append(G)
            rhs = _adjoint(blocks, [G.T for G in Gs]) - rd
            if a0.size:
                g_lp = sigma_mu / s - z - (z / s) * r_lp
                if corr_s is not None:
                    g_lp = g_lp - corr_s / s
                rhs = rhs + A_lp.T @ g_lp
            dx = solve_H(rhs)
            dS = [np.tensordot(dx, F, 1) + Rb for (F0, F), Rb in zip(blocks, R)]
            dZ = []
            for b, (Si, Zb, dSb) in enumerate(zip(Sinv, Z, dS)):
                D = sigma_mu * Si - Zb - Si @ dSb @ Zb
                if corr_S is not None:
                    D = D - Si @ corr_S[b]
                dZ.append(0.5 * (D + D.T))
            ds = A_lp @ dx + r_lp
            dz = sigma_mu / s - z - (z / s) * ds if a0.size else np.zeros(0)
            if a0.size and corr_s is not None:
                dz = dz - corr_s / s
            return dx, dS, dZ, ds, dz

        def steps(dS, dZ, ds, dz):
            ap = min([_max_step(Sb, d) for Sb, d in zip(S, dS)] + [_max_step_lp(s, ds)])
            ad = min([_max_step(Zb, d) for Zb, d in zip(Z, dZ)] + [_max_step_lp(z, dz)])
            return ap, ad

        try:
            dx, dS, dZ, ds, dz = direction(0.0)
            ap, ad = steps(dS, dZ, ds, dz)
            ap, ad = min(1.0, ap), min(1.0, ad)
            gap_aff = sum(float(np.sum((Sb + ap * a) * (Zb + ad * b)))
                          for Sb, a, Zb, b in zip(S, dS, Z, dZ))
            gap_aff += float((s + ap * ds) @ (z + ad * dz))
            sigma = min(1.0, max(0.0, (gap_aff / gap) ** 3)) if gap > 0 else 0.0
            corr_S = [a @ b for a, b in zip(dS, dZ)]
            corr_s = ds * dz
            dx, dS, dZ, ds, dz = direction(sigma * mu, corr_S, corr_s)
            ap, ad = steps(dS, dZ, ds, dz)
        except np.linalg.LinAlgError:
            break
        tau = 0.98 if it > 5 else 0.95
        ap, ad = min(1.0, tau * ap), min(1.0, tau * ad)
        if not (np.all(np.isfinite(dx)) and np.isfinite(ap) and np.isfinite(ad)):
            break
        x = x + ap * dx
        S = [Sb + ap * d for Sb, d in zip(S, dS)]
        s = s + ap * ds
        Z = [Zb + ad * d for Zb, d in zip(Z, dZ)]
        z = z + ad * dz
        S = [0.5 * (Sb + Sb.T) for Sb in S]

    if status == MAX_ITER and best is not None:
        x = best[0]
    margin = constraint_margin(problem, x)
    if status == OPTIMAL and margin < -feas_tol * fnorm:
        log.debug("SDP converged but re-check margin %.3e is below tolerance", margin)
        status = MAX_ITER
    if status == MAX_ITER and (best is None or margin < -feas_tol * fnorm):
        status = _classify_failure(problem, blocks, A_lp, a0, feas_tol)
    return LmiSolution(status, x, float(c @ x), margin, it)


def _classify_failure(problem: LmiProblem, blocks, A_lp, a0, feas_tol) -> str:
    """Phase-one check: maximize ``t`` subject to ``F(x) >= t I``, ``t <= 1``.

    Bounds on ``x`` are kept as they are. A negative optimum certifies
    infeasibility; anything else leaves the verdict at ``max_iter``.
    """
    if getattr(problem, "_phase_one", False):
        return MAX_ITER
    nv = problem.num_vars
    consts = [F0 for F0, _ in blocks] + [np.array([[1.0]])]
    coeffs = [[F[i] for _, F in blocks] + [np.zeros((1, 1))] for i in range(nv)]
    coeffs.append([-np.eye(F0.shape[0]) for F0, _ in blocks] + [np.array([[-1.0]])])
    lower = None if problem.lower is None else np.r_[problem.lower, -np.inf]
    upper = None if problem.upper is None else np.r_[problem.upper, np.inf]
    phase = LmiProblem(nv + 1, consts, coeffs, np.r_[np.zeros(nv), -1.0], lower, upper)
    phase._phase_one = True
    sol = solve_sdp(phase, feas_tol=feas_tol, max_iter=200)
    if sol.status == OPTIMAL and sol.x[nv] < -feas_tol:
        return INFEASIBLE
    return MAX_ITER
