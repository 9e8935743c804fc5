"""State-space models, frequency evaluation and LFT interconnection."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as sla
from numpy.typing import ArrayLike, NDArray


class ModelError(ValueError):
    """Raised for inconsistent or invalid model data."""


class PoleFrequencyError(ModelError):
    """Raised when an evaluation frequency coincides with a pole."""


class IllPosedError(ModelError):
    """Raised when an interconnection has a singular algebraic loop."""


def _frozen(a: ArrayLike, dtype=np.float64) -> NDArray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def _as_2d(a: ArrayLike, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    arr = np.asarray(a, dtype=np.float64)
    if arr.size == 0:
        return np.zeros((rows or 0, cols or 0))
    return np.atleast_2d(arr)


@dataclass(frozen=True, eq=False)
class StateSpaceModel:
    """Continuous-time LTI system ``x' = Ax + Bu``, ``y = Cx + Du``.

    Arrays are copied and made read-only on construction. Empty ``A``
    (zero states) is allowed for static gains.
    """

    A: NDArray[np.float64]
    B: NDArray[np.float64]
    C: NDArray[np.float64]
    D: NDArray[np.float64]
    input_labels: tuple[str, ...] | None = None
    output_labels: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        D = _as_2d(self.D)
        p, m = D.shape
        A = _as_2d(self.A)
        n = A.shape[0] if A.size else 0
        if A.size and A.size != n * n:
            raise ModelError(f"A must be square, got shape {A.shape}")
        A = A.reshape(n, n) if n else np.zeros((0, 0))
        B = _as_2d(self.B, n, m) if n else np.zeros((0, m))
        C = _as_2d(self.C, p, n) if n else np.zeros((p, 0))
        # a single row or column may arrive flattened
        if B.size == n * m and B.shape != (n, m) and 1 in B.shape:
            B = B.reshape(n, m)
        if C.size == p * n and C.shape != (p, n) and 1 in C.shape:
            C = C.reshape(p, n)
        if A.shape != (n, n) or B.shape != (n, m) or C.shape != (p, n):
            raise ModelError(
                f"inconsistent dimensions A{A.shape} B{B.shape} C{C.shape} D{D.shape}")
        for name, arr in (("A", A), ("B", B), ("C", C), ("D", D)):
            if not np.all(np.isfinite(arr)):
                raise ModelError(f"{name} contains non-finite entries")
        object.__setattr__(self, "A", _frozen(A))
        object.__setattr__(self, "B", _frozen(B))
        object.__setattr__(self, "C", _frozen(C))
        object.__setattr__(self, "D", _frozen(D))
        for attr, size in (("input_labels", m), ("output_labels", p)):
            labels = getattr(self, attr)
            if labels is not None:
                labels = tuple(str(s) for s in labels)
                if len(labels) != size:
                    raise ModelError(f"{attr} has {len(labels)} entries, expected {size}")
                object.__setattr__(self, attr, labels)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.D.shape[1]

    @property
    def p(self) -> int:
        return self.D.shape[0]

    @classmethod
    def static(cls, D: ArrayLike) -> "StateSpaceModel":
        D = np.atleast_2d(np.asarray(D, dtype=float))
        return cls(np.zeros((0, 0)), np.zeros((0, D.shape[1])), np.zeros((D.shape[0], 0)), D)

    def poles(self) -> np.ndarray:
        return np.linalg.eigvals(self.A) if self.n else np.zeros(0, dtype=complex)

    def freq_response(self, omega: float) -> np.ndarray:
        return freq_response(self, omega)

    def __repr__(self) -> str:
        return f"StateSpaceModel(n={self.n}, m={self.m}, p={self.p})"


def lu_factor_quiet(M: np.ndarray):
    """LU factorization; singularity is judged by the caller from the pivots."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        return sla.lu_factor(M, check_finite=False)


def freq_response(model: StateSpaceModel, omega: float) -> np.ndarray:
    """Evaluate ``C (i omega I - A)^{-1} B + D``.

    Raises
    ------
    PoleFrequencyError
        If ``i omega`` is (numerically) an eigenvalue of ``A``.
    """
    if model.n == 0:
        return model.D.astype(complex)
    M = 1j * omega * np.eye(model.n) - model.A
    lu, piv = lu_factor_quiet(M)
    udiag = np.abs(np.diag(lu))
    if udiag.min() <= model.n * np.finfo(float).eps * max(udiag.max(), 1.0):
        raise PoleFrequencyError(f"frequency {omega!r} rad/s coincides with a pole")
    X = sla.lu_solve((lu, piv), model.B.astype(complex), check_finite=False)
    return model.C @ X + model.D


def freq_response_grid(model: StateSpaceModel, omegas: ArrayLike, chunk: int = 64) -> np.ndarray:
    """Stacked responses, shape ``(len(omegas), p, m)``.

    Uses batched dense solves; a singular shifted matrix raises
    :class:`PoleFrequencyError`.
    """
    omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
    out = np.empty((omegas.size, model.p, model.m), dtype=complex)
    if model.n == 0:
        out[:] = model.D
        return out
    eye = np.eye(model.n)
    B = model.B.astype(complex)
    for start in range(0, omegas.size, chunk):
        w = omegas[start:start + chunk]
        M = 1j * w[:, None, None] * eye - model.A
        try:
            X = np.linalg.solve(M, np.broadcast_to(B, (w.size,) + B.shape))
        except np.linalg.LinAlgError as exc:
            raise PoleFrequencyError("grid frequency coincides with a pole") from exc
        out[start:start + chunk] = model.C @ X + model.D
    return out


def block_diag(models: Sequence[StateSpaceModel]) -> StateSpaceModel:
    """Block-diagonal (parallel, decoupled) stacking of ``models``."""
    models = list(models)
    if not models:
        raise ModelError("block_diag needs at least one model")
    if len(models) == 1:
        return models[0]
    return StateSpaceModel(
        sla.block_diag(*[g.A for g in models]) if sum(g.n for g in models) else np.zeros((0, 0)),
        sla.block_diag(*[g.B for g in models]),
        sla.block_diag(*[g.C for g in models]),
        sla.block_diag(*[g.D for g in models]),
    )


@dataclass(frozen=True, eq=False)
class InterconnectedSystem:
    """Subsystems coupled through a static matrix ``K``.

    ``[u_b; y_c] = [[K11, K12], [K21, K22]] [y_b; u_c]`` where ``u_b, y_b``
    stack the subsystem inputs and outputs in subsystem order.
    """

    subsystems: tuple[StateSpaceModel, ...]
    K11: NDArray[np.float64]
    K12: NDArray[np.float64]
    K21: NDArray[np.float64]
    K22: NDArray[np.float64]
    _blocks: StateSpaceModel = field(init=False, repr=False)

    def __post_init__(self) -> None:
        subs = tuple(self.subsystems)
        if not subs:
            raise ModelError("at least one subsystem is required")
        object.__setattr__(self, "subsystems", subs)
        mb = sum(g.m for g in subs)
        pb = sum(g.p for g in subs)
        K11 = np.asarray(self.K11, dtype=float).reshape(mb, pb)
        K12 = np.asarray(self.K12, dtype=float)
        K21 = np.asarray(self.K21, dtype=float)
        mc = K12.shape[1] if K12.ndim == 2 else 0
        K12 = K12.reshape(mb, mc)
        pc = K21.shape[0] if K21.ndim == 2 else 0
        K21 = K21.reshape(pc, pb)
        K22 = np.asarray(self.K22, dtype=float).reshape(pc, mc)
        for name, arr in (("K11", K11), ("K12", K12), ("K21", K21), ("K22", K22)):
            object.__setattr__(self, name, _frozen(arr))
        blocks = block_diag(subs)
        object.__setattr__(self, "_blocks", blocks)
        loop = np.eye(mb) - K11 @ blocks.D
        if np.linalg.matrix_rank(loop) < mb:
            raise IllPosedError("ill-posed interconnection: I - K11 D_b is singular")

    @property
    def k(self) -> int:
        return len(self.subsystems)

    @property
    def m_sizes(self) -> tuple[int, ...]:
        return tuple(g.m for g in self.subsystems)

    @property
    def p_sizes(self) -> tuple[int, ...]:
        return tuple(g.p for g in self.subsystems)

    @property
    def m_b(self) -> int:
        return sum(self.m_sizes)

    @property
    def p_b(self) -> int:
        return sum(self.p_sizes)

    @property
    def m_c(self) -> int:
        return self.K12.shape[1]

    @property
    def p_c(self) -> int:
        return self.K21.shape[0]

    @property
    def blocks(self) -> StateSpaceModel:
        """The block-diagonal stack of the subsystems."""
        return self._blocks

    def with_subsystems(self, subsystems: Sequence[StateSpaceModel]) -> "InterconnectedSystem":
        """Same interconnection with the subsystems replaced (e.g. by reduced models)."""
        subsystems = tuple(subsystems)
        if len(subsystems) != self.k:
            raise ModelError(f"expected {self.k} subsystems, got {len(subsystems)}")
        for old, new in zip(self.subsystems, subsystems):
            if (old.m, old.p) != (new.m, new.p):
                raise ModelError("replacement subsystem has different input/output dimensions")
        return InterconnectedSystem(subsystems, self.K11, self.K12, self.K21, self.K22)


def lft_close(sys: InterconnectedSystem,
              subsystems: Sequence[StateSpaceModel] | None = None) -> StateSpaceModel:
    """State-space realization of ``K21 G_b (I - K11 G_b)^{-1} K12 + K22``.

    Parameters
    ----------
    sys
        The interconnection.
    subsystems
        Optional replacement subsystem models (e.g. reduced-order ones);
        defaults to the models stored in ``sys``.

    Returns
    -------
    StateSpaceModel
        Closed interconnection with ``sum(n_j)`` states.
    """
    if subsystems is not None:
        sys = sys.with_subsystems(subsystems)
    G = sys.blocks
    loop = np.eye(sys.p_b) - G.D @ sys.K11
    try:
        Phi = np.linalg.solve(loop, np.eye(sys.p_b))
    except np.linalg.LinAlgError as exc:
        raise IllPosedError("ill-posed interconnection: I - K11 D_b is singular") from exc
    # y_b = Phi C x + Phi D K12 u_c,  u_b = K11 y_b + K12 u_c
    PhiC = Phi @ G.C
    PhiDK12 = Phi @ G.D @ sys.K12
    A = G.A + G.B @ sys.K11 @ PhiC
    B = G.B @ (sys.K11 @ PhiDK12 + sys.K12)
    C = sys.K21 @ PhiC
    D = sys.K21 @ PhiDK12 + sys.K22
    return StateSpaceModel(A, B, C, D)


def lft_response(sys: InterconnectedSystem, Gb: np.ndarray) -> np.ndarray:
    """Pointwise interconnected response from a block-diagonal response ``Gb``."""
    X = np.linalg.solve(np.eye(sys.m_b) - sys.K11 @ Gb, sys.K12)
    return sys.K21 @ Gb @ X + sys.K22


def error_system(G: StateSpaceModel, G_hat: StateSpaceModel) -> StateSpaceModel:
    """Parallel realization of ``G_hat - G``."""
    if (G.m, G.p) != (G_hat.m, G_hat.p):
        raise ModelError(
            f"dimension mismatch: {G.p}x{G.m} vs {G_hat.p}x{G_hat.m}")
    n = G.n + G_hat.n
    A = sla.block_diag(G.A, G_hat.A) if n else np.zeros((0, 0))
    return StateSpaceModel(
        A,
        np.vstack([G.B, G_hat.B]),
        np.hstack([-G.C, G_hat.C]),
        G_hat.D - G.D,
    )


def series(first: StateSpaceModel, second: StateSpaceModel) -> StateSpaceModel:
    """Cascade ``second * first`` (signal passes through ``first`` then ``second``)."""
    if first.p != second.m:
        raise ModelError("series: output count of first must equal input count of second")
    n1, n2 = first.n, second.n
    A = np.zeros((n1 + n2, n1 + n2))
    A[:n1, :n1] = first.A
    A[n1:, :n1] = second.B @ first.C
    A[n1:, n1:] = second.A
    B = np.vstack([first.B, second.B @ first.D])
    C = np.hstack([second.D @ first.C, second.C])
    return StateSpaceModel(A, B, C, second.D @ first.D)


def stability_check(model: StateSpaceModel) -> tuple[bool, float]:
    """Return ``(stable, spectral abscissa)``; a static model has abscissa ``-inf``."""
    if model.n == 0:
        return True, -np.inf
    alpha = float(np.max(np.linalg.eigvals(model.A).real))
    return alpha < 0.0, alpha
