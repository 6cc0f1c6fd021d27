"""
Exact simulation of the quadratic stages on mean vectors and covariance matrices.

Conventions: quadratures r = (x_1..x_N, p_1..p_N) with x = (a + a^dagger)/sqrt(2),
[x, p] = i, vacuum covariance 1/2 * identity. A state U|psi> has mean S <r> + d and
covariance S cov S^T, where (S, d) is the SymplecticOp of U.
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from cvqed.common.constants import UNCERTAINTY_TOL
from cvqed.common.errors import DimensionMismatch
from cvqed.common.logging import get_logger
from cvqed.lattice import FieldKind, LatticeConfig, ModeLayout
from cvqed.modes import SymplecticOp, groundstate_unitary, sympmat

L = get_logger(__name__)


@dataclass(frozen=True, eq=False)
class GaussianState:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        if mean.ndim != 1 or mean.shape[0] % 2 or cov.shape != (mean.shape[0], mean.shape[0]):
            raise DimensionMismatch(f"Mean {mean.shape} and covariance {cov.shape} do not fit")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def n_modes(self) -> int:
        return self.mean.shape[0] // 2


def vacuum(n_modes: int) -> GaussianState:
    if n_modes < 1:
        raise DimensionMismatch(f"A state needs at least one mode, got {n_modes}")
    return GaussianState(np.zeros(2 * n_modes), 0.5 * np.identity(2 * n_modes))


def symplectic_eigenvalues(state: GaussianState) -> np.ndarray:
    """Williamson spectrum of the covariance, one value per mode (1/2 for pure states)."""
    values = np.abs(np.linalg.eigvals(1j * sympmat(state.n_modes) @ state.cov))
    return np.sort(values)[::2]


def uncertainty_ok(state: GaussianState, tol: float = UNCERTAINTY_TOL) -> bool:
    """cov + (i/2) Omega must be positive semidefinite."""
    if np.linalg.norm(state.cov - state.cov.T) > tol:
        return False
    matrix = state.cov + 0.5j * sympmat(state.n_modes)
    return bool(np.linalg.eigvalsh(matrix).min() >= -tol)


def apply(state: GaussianState, op: SymplecticOp) -> GaussianState:
    """Applies the Gaussian unitary op to the state.

    Raises:
        DimensionMismatch: If op and state have different mode counts.
    """
    if op.n_modes != state.n_modes:
        raise DimensionMismatch(f"Operation on {op.n_modes} modes applied to {state.n_modes} modes")
    S = op.matrix
    result = GaussianState(S @ state.mean + op.displacement, S @ state.cov @ S.T)
    if L.isEnabledFor(logging.DEBUG) and not uncertainty_ok(result):
        L.debug(f"Uncertainty relation violated after applying a {op.n_modes}-mode operation")
    return result


def displace(state: GaussianState, mode: int, alpha: complex) -> GaussianState:
    """Coherent displacement a_mode -> a_mode + alpha."""
    n = state.n_modes
    if not 0 <= mode < n:
        raise DimensionMismatch(f"Mode {mode} outside [0, {n})")
    mean = state.mean.copy()
    mean[mode] += np.sqrt(2.0) * np.real(alpha)
    mean[mode + n] += np.sqrt(2.0) * np.imag(alpha)
    return GaussianState(mean, state.cov.copy())


def number_mean(state: GaussianState, mode: int) -> float:
    """Normal-ordered occupation <a^dagger a> of one mode."""
    n = state.n_modes
    if not 0 <= mode < n:
        raise DimensionMismatch(f"Mode {mode} outside [0, {n})")
    idx = [mode, mode + n]
    block_trace = state.cov[idx[0], idx[0]] + state.cov[idx[1], idx[1]]
    first_moments = state.mean[idx[0]] ** 2 + state.mean[idx[1]] ** 2
    return float(0.5 * block_trace + 0.5 * first_moments - 0.5)


def number_means(state: GaussianState) -> np.ndarray:
    return np.array([number_mean(state, j) for j in range(state.n_modes)])


def _particle_rotation(cfg: LatticeConfig, t: float) -> SymplecticOp:
    phases = np.exp(-1j * ModeLayout(cfg).frequencies() * t)
    return SymplecticOp.from_mode_map(np.diag(phases))


def free_evolution(cfg: LatticeConfig, t: float) -> SymplecticOp:
    """exp(-i H0 t) on the position-space modes.

    A rotation by omega(k) t of every particle mode, conjugated by the ground-state unitary.
    """
    U = groundstate_unitary(cfg)
    return U.inverse() @ _particle_rotation(cfg, t) @ U


def free_hamiltonian_matrix(cfg: LatticeConfig) -> np.ndarray:
    """M0 with H0 = 1/2 r^T M0 r + const on the position-space quadratures."""
    S = groundstate_unitary(cfg).matrix
    omegas = ModeLayout(cfg).frequencies()
    return S.T @ np.diag(np.concatenate([omegas, omegas])) @ S


def counterterm_hamiltonian_matrix(cfg: LatticeConfig, delta_m: float) -> np.ndarray:
    """M_ct with (delta_m/2) sum_x phi^dagger phi = 1/2 r^T M_ct r.

    With phi_1 = (x_B + x_C)/sqrt(2) and phi_2 = (p_B - p_C)/sqrt(2) every site
    contributes (delta_m/8) [(x_B + x_C)^2 + (p_B - p_C)^2].
    """
    layout = ModeLayout(cfg)
    n = cfg.n_modes
    M = np.zeros((2 * n, 2 * n))
    quarter = 0.25 * delta_m
    for site in range(cfg.n_sites):
        b = layout.index(FieldKind.SCALAR_B, site)
        c = layout.index(FieldKind.SCALAR_C, site)
        for i in (b, c):
            for j in (b, c):
                M[i, j] += quarter
                M[n + i, n + j] += quarter if i == j else -quarter
    return M


def quadratic_evolution(M: np.ndarray, t: float) -> SymplecticOp:
    """exp(-i H t) for H = 1/2 r^T M r, i.e. r -> expm(Omega M t) r."""
    omega = sympmat(M.shape[0] // 2)
    return SymplecticOp(expm(omega @ M * t))


def counterterm_evolution(cfg: LatticeConfig, delta_m: float, dt: float) -> SymplecticOp:
    """exp(-i dt H_ct) with H_ct = (delta_m/2) sum_x phi^dagger phi."""
    if delta_m == 0 or dt == 0:
        return SymplecticOp.identity(cfg.n_modes)
    return quadratic_evolution(counterterm_hamiltonian_matrix(cfg, delta_m), dt)


@dataclass(frozen=True)
class MassBookkeeping:
    """Squared masses implied by a counterterm, in both conventions.

    literal: m^2 + delta_m/2, what the Hamiltonians as written produce.
    stated: m^2 + delta_m, the bare mass relation quoted alongside the counterterm.
    """

    literal: float
    stated: float

    def as_dict(self):
        return {"m_eff_squared_literal": self.literal, "m0_squared_stated": self.stated}


def effective_mass(m: float, delta_m: float) -> MassBookkeeping:
    return MassBookkeeping(m**2 + 0.5 * delta_m, m**2 + delta_m)


def groundstate(cfg: LatticeConfig) -> GaussianState:
    """|Omega> = U^dagger |0>."""
    return apply(vacuum(cfg.n_modes), groundstate_unitary(cfg).inverse())


def to_particle_frame(cfg: LatticeConfig, state: GaussianState) -> GaussianState:
    """Re-expresses the state in the quadratures of the particle modes b, c, a_i."""
    return apply(state, groundstate_unitary(cfg))


def particle_amplitudes(cfg: LatticeConfig, state: GaussianState) -> np.ndarray:
    """<b(k)>, <c(k)>, <a_i(k)> in layout order."""
    particle = to_particle_frame(cfg, state)
    n = particle.n_modes
    return (particle.mean[:n] + 1j * particle.mean[n:]) / np.sqrt(2.0)
