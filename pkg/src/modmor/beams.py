"""Three interconnected Euler-Bernoulli beams.

Two cantilevers are attached through translational and rotational springs
to the ends of a free-free beam. An external transverse force acts at the
middle of the free-free beam and the external output is the transverse
displacement at the middle of the second cantilever.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np
import scipy.linalg as sla

from .freqresp import FrequencyGrid, make_log_grid
from .lti import InterconnectedSystem, ModelError, StateSpaceModel, lft_close

Boundary = Literal["clamped-free", "free-free"]
TRANSLATION, ROTATION = "translation", "rotation"


@dataclass(frozen=True)
class BeamSpec:
    cross_section_area: float
    second_area_moment: float
    youngs_modulus: float
    mass_density: float
    modal_damping_ratio: float
    length: float
    num_elements: int
    boundary: Boundary = "clamped-free"

    def __post_init__(self) -> None:
        for name in ("cross_section_area", "second_area_moment", "youngs_modulus",
                     "mass_density", "length"):
            if not getattr(self, name) > 0:
                raise ModelError(f"{name} must be positive")
        if not 0 < self.modal_damping_ratio < 1:
            raise ModelError("modal damping ratio must lie in (0, 1)")
        if int(self.num_elements) != self.num_elements or self.num_elements < 1:
            raise ModelError("num_elements must be a positive integer")
        if self.boundary not in ("clamped-free", "free-free"):
            raise ModelError(f"unknown boundary condition {self.boundary!r}")

    @property
    def num_nodes(self) -> int:
        return self.num_elements + 1

    @property
    def num_dofs(self) -> int:
        n = 2 * self.num_nodes
        return n - 2 if self.boundary == "clamped-free" else n


def case_study_specs(elements: Sequence[int] = (50, 20, 30)) -> tuple[BeamSpec, BeamSpec, BeamSpec]:
    """Beam data of the case study; element counts may be overridden."""
    common = dict(cross_section_area=1e-6, second_area_moment=1e-9, youngs_modulus=2e11,
                  mass_density=8e3, modal_damping_ratio=0.01)
    e1, e2, e3 = elements
    return (BeamSpec(length=1.0, num_elements=e1, boundary="clamped-free", **common),
            BeamSpec(length=0.4, num_elements=e2, boundary="free-free", **common),
            BeamSpec(length=0.6, num_elements=e3, boundary="clamped-free", **common))


@dataclass(frozen=True)
class IoChannel:
    node: int
    dof: Literal["translation", "rotation"]
    role: Literal["coupling", "external"] = "coupling"


@dataclass(frozen=True)
class IoMap:
    inputs: tuple[IoChannel, ...]
    outputs: tuple[IoChannel, ...]

    def validate(self, spec: BeamSpec) -> None:
        for ch in self.inputs + self.outputs:
            if not 0 <= ch.node < spec.num_nodes:
                raise ModelError(f"node {ch.node} outside mesh with {spec.num_nodes} nodes")
            if spec.boundary == "clamped-free" and ch.node == 0:
                raise ModelError("clamped node 0 has no free dofs")
            if ch.dof not in (TRANSLATION, ROTATION):
                raise ModelError(f"unknown dof kind {ch.dof!r}")


def beam_element_matrices(E: float, I: float, rho: float, A_cs: float,
                          L_e: float) -> tuple[np.ndarray, np.ndarray]:
    """Stiffness and consistent mass of a two-node bending element.

    Dof order is ``(w1, theta1, w2, theta2)``.
    """
    for name, val in (("E", E), ("I", I), ("rho", rho), ("A_cs", A_cs), ("L_e", L_e)):
        if not val > 0:
            raise ModelError(f"{name} must be positive")
    L = L_e
    Ke = E * I / L**3 * np.array([
        [12, 6 * L, -12, 6 * L],
        [6 * L, 4 * L**2, -6 * L, 2 * L**2],
        [-12, -6 * L, 12, -6 * L],
        [6 * L, 2 * L**2, -6 * L, 4 * L**2],
    ])
    Me = rho * A_cs * L / 420 * np.array([
        [156, 22 * L, 54, -13 * L],
        [22 * L, 4 * L**2, 13 * L, -3 * L**2],
        [54, 13 * L, 156, -22 * L],
        [-13 * L, -3 * L**2, -22 * L, 4 * L**2],
    ])
    return Ke, Me


def assemble_beam(spec: BeamSpec) -> tuple[np.ndarray, np.ndarray]:
    """Global ``(M, K)`` after removing constrained dofs."""
    ne = spec.num_elements
    ndof = 2 * (ne + 1)
    K = np.zeros((ndof, ndof))
    M = np.zeros((ndof, ndof))
    Ke, Me = beam_element_matrices(spec.youngs_modulus, spec.second_area_moment,
                                   spec.mass_density, spec.cross_section_area,
                                   spec.length / ne)
    for e in range(ne):
        sl = slice(2 * e, 2 * e + 4)
        K[sl, sl] += Ke
        M[sl, sl] += Me
    if spec.boundary == "clamped-free":
        K, M = K[2:, 2:], M[2:, 2:]
    return M, K


def dof_index(spec: BeamSpec, node: int, dof: str) -> int:
    """Position of a nodal dof in the assembled (constrained) vectors."""
    offset = 1 if dof == ROTATION else 0
    base = 2 * node + offset
    if spec.boundary == "clamped-free":
        base -= 2
    if not 0 <= base < spec.num_dofs:
        raise ModelError(f"node {node} dof {dof} is constrained or outside the mesh")
    return base


def modal_damped_statespace(M: np.ndarray, K: np.ndarray, zeta: float,
                            input_dofs: Sequence[int], output_dofs: Sequence[int],
                            coordinates: Literal["physical", "modal"] = "physical",
                            rigid_tol: float = 1e-12) -> StateSpaceModel:
    """First-order model of ``M q'' + C_d q' + K q = F u`` with modal damping.

    ``C_d = M Phi diag(2 zeta omega_i) Phi^T M`` with mass-normalized modes.
    Modes with ``omega_i^2 < rigid_tol * max(omega^2)`` are treated as rigid
    body modes (frequency and damping set to zero).

    ``coordinates="physical"`` gives the state ``(q, q')``;
    ``coordinates="modal"`` gives ``(omega_i eta_i, eta_i')`` per elastic
    mode and ``(eta_i, eta_i')`` per rigid mode, which is far better scaled
    for Gramian computations. Both realize the same transfer matrix.
    """
    M = np.asarray(M, dtype=float)
    K = np.asarray(K, dtype=float)
    if not 0 < zeta < 1:
        raise ModelError("damping ratio must lie in (0, 1)")
    try:
        np.linalg.cholesky(M)
    except np.linalg.LinAlgError as exc:
        raise ModelError("mass matrix is not positive definite") from exc
    lam, Phi = sla.eigh(K, M)
    lam_max = max(lam.max(), 0.0)
    rigid = lam < rigid_tol * lam_max
    lam = np.where(rigid, 0.0, lam)
    om = np.sqrt(lam)
    nd = M.shape[0]
    Fin = np.zeros((nd, len(input_dofs)))
    for j, d in enumerate(input_dofs):
        Fin[d, j] = 1.0
    Sout = np.zeros((len(output_dofs), nd))
    for i, d in enumerate(output_dofs):
        Sout[i, d] = 1.0
    if coordinates == "physical":
        Cd = M @ Phi @ np.diag(2 * zeta * om) @ Phi.T @ M
        Minv = np.linalg.inv(M)
        A = np.block([[np.zeros((nd, nd)), np.eye(nd)], [-Minv @ K, -Minv @ Cd]])
        B = np.vstack([np.zeros((nd, Fin.shape[1])), Minv @ Fin])
        C = np.hstack([Sout, np.zeros((Sout.shape[0], nd))])
    elif coordinates == "modal":
        scale = np.where(rigid, 1.0, om)
        A = np.block([[np.zeros((nd, nd)), np.diag(np.where(rigid, 1.0, om))],
                      [-np.diag(om), -np.diag(2 * zeta * om)]])
        B = np.vstack([np.zeros((nd, Fin.shape[1])), Phi.T @ Fin])
        C = np.hstack([Sout @ Phi / scale, np.zeros((Sout.shape[0], nd))])
    else:
        raise ModelError(f"unknown coordinates {coordinates!r}")
    D = np.zeros((len(output_dofs), len(input_dofs)))
    return StateSpaceModel(A, B, C, D)


def natural_frequencies(spec: BeamSpec) -> np.ndarray:
    """Undamped natural frequencies in rad/s, ascending."""
    M, K = assemble_beam(spec)
    lam = sla.eigh(K, M, eigvals_only=True)
    return np.sqrt(np.clip(lam, 0.0, None))


def three_beam_iomaps(specs: Sequence[BeamSpec]) -> tuple[IoMap, IoMap, IoMap]:
    s1, s2, s3 = specs
    if s2.num_elements % 2 or s3.num_elements % 2:
        raise ModelError("middle node requires an even number of elements")
    tip1, tip3 = s1.num_elements, s3.num_elements
    left, right, mid2 = 0, s2.num_elements, s2.num_elements // 2
    mid3 = s3.num_elements // 2
    T, R = TRANSLATION, ROTATION
    io1 = IoMap((IoChannel(tip1, T), IoChannel(tip1, R)),
                (IoChannel(tip1, T), IoChannel(tip1, R)))
    io2 = IoMap((IoChannel(left, T), IoChannel(left, R), IoChannel(right, T),
                 IoChannel(right, R), IoChannel(mid2, T, "external")),
                (IoChannel(left, T), IoChannel(left, R), IoChannel(right, T),
                 IoChannel(right, R)))
    io3 = IoMap((IoChannel(tip3, T), IoChannel(tip3, R)),
                (IoChannel(tip3, T), IoChannel(tip3, R), IoChannel(mid3, T, "external")))
    for spec, io in zip(specs, (io1, io2, io3)):
        io.validate(spec)
    return io1, io2, io3


def beam_statespace(spec: BeamSpec, io: IoMap,
                    coordinates: Literal["physical", "modal"] = "modal") -> StateSpaceModel:
    M, K = assemble_beam(spec)
    ins = [dof_index(spec, ch.node, ch.dof) for ch in io.inputs]
    outs = [dof_index(spec, ch.node, ch.dof) for ch in io.outputs]
    g = modal_damped_statespace(M, K, spec.modal_damping_ratio, ins, outs, coordinates)
    labels_in = tuple(f"{'F' if ch.dof == TRANSLATION else 'M'}@{ch.node}" for ch in io.inputs)
    labels_out = tuple(f"{'w' if ch.dof == TRANSLATION else 'theta'}@{ch.node}" for ch in io.outputs)
    return StateSpaceModel(g.A, g.B, g.C, g.D, labels_in, labels_out)


def _spring(K11: np.ndarray, k: float, a_in: int, a_out: int, sa: float,
            b_in: int, b_out: int, sb: float) -> None:
    """Spring between two output dofs; ``sa``/``sb`` map local to global sign."""
    # global generalized force on a: k (x_b - x_a), x = s * y_local
    K11[a_in, a_out] -= k * sa * sa
    K11[a_in, b_out] += k * sa * sb
    K11[b_in, b_out] -= k * sb * sb
    K11[b_in, a_out] += k * sb * sa


def build_three_beam_system(specs: Sequence[BeamSpec] | None = None, k_t: float = 1e5,
                            k_r: float = 1e3,
                            coordinates: Literal["physical", "modal"] = "modal"
                            ) -> InterconnectedSystem:
    """Interconnected three-beam model.

    Subsystem 3 is mirrored (clamped on the far side), so its rotations
    enter the rotational spring with a negative sign.
    """
    specs = tuple(specs) if specs is not None else case_study_specs()
    if len(specs) != 3:
        raise ModelError("three beam specs are required")
    ios = three_beam_iomaps(specs)
    subs = tuple(beam_statespace(s, io, coordinates) for s, io in zip(specs, ios))
    # u_b: [F1, M1 | F2L, M2L, F2R, M2R, F2mid | F3, M3]
    # y_b: [w1, th1 | w2L, th2L, w2R, th2R | w3, th3, w3mid]
    K11 = np.zeros((9, 9))
    _spring(K11, k_t, 0, 0, 1.0, 2, 2, 1.0)
    _spring(K11, k_r, 1, 1, 1.0, 3, 3, 1.0)
    _spring(K11, k_t, 4, 4, 1.0, 7, 6, 1.0)
    _spring(K11, k_r, 5, 5, 1.0, 8, 7, -1.0)
    K12 = np.zeros((9, 1))
    K12[6, 0] = 1.0
    K21 = np.zeros((1, 9))
    K21[0, 8] = 1.0
    K22 = np.zeros((1, 1))
    return InterconnectedSystem(subs, K11, K12, K21, K22)


CASE_GRID = (10 ** 2.5, 1e5, 1000)
CASE_BETA1 = 0.1
CASE_BETA2 = 5e-7


def case_study_requirement(sys: InterconnectedSystem | None = None, grid: FrequencyGrid | None = None,
                      beta1: float = CASE_BETA1, beta2: float = CASE_BETA2):
    """Case-study grid and magnitude-relative interconnected requirement."""
    from .synthesis import build_interconnected_requirement

    sys = sys if sys is not None else build_three_beam_system()
    grid = grid if grid is not None else make_log_grid(*CASE_GRID)
    return grid, build_interconnected_requirement(lft_close(sys), grid, beta1, beta2)
