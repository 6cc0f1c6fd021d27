from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.stats import unitary_group

from cvqed.common.constants import SYMPLECTIC_TOL
from cvqed.common.errors import ConfigError, DimensionMismatch, NonSymplectic
from cvqed.common.logging import get_logger
from cvqed.lattice import (
    FieldKind,
    LatticeConfig,
    ModeLayout,
    all_coords,
    dispersion,
    momentum_vector,
    negate_momentum,
)

L = get_logger(__name__)


def sympmat(n: int) -> np.ndarray:
    """Symplectic form [[0, I], [-I, 0]] in xxpp ordering."""
    identity = np.identity(n)
    zeros = np.zeros((n, n))
    return np.block([[zeros, identity], [-identity, zeros]])


def mode_map_to_symplectic(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Real xxpp matrix of the Heisenberg map a -> A a + B a^dagger."""
    plus = A + B
    minus = A - B
    return np.block([[plus.real, -minus.imag], [plus.imag, minus.real]])


def symplectic_to_mode_map(S: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    n = S.shape[0] // 2
    xx, xp = S[:n, :n], S[:n, n:]
    px, pp = S[n:, :n], S[n:, n:]
    A = 0.5 * ((xx + pp) + 1j * (px - xp))
    B = 0.5 * ((xx - pp) + 1j * (px + xp))
    return A, B


@dataclass(frozen=True, eq=False)
class SymplecticOp:
    """Gaussian unitary as a real 2N x 2N symplectic matrix plus displacement.

    The operator U acts on quadratures as U^dagger r U = S r + d, with
    r = (x_1..x_N, p_1..p_N) and x = (a + a^dagger) / sqrt(2).
    """

    matrix: np.ndarray
    displacement: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        matrix = np.asarray(self.matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] % 2:
            raise DimensionMismatch(f"Symplectic matrix must be 2N x 2N, got {matrix.shape}")
        object.__setattr__(self, "matrix", matrix)
        if self.displacement is None:
            object.__setattr__(self, "displacement", np.zeros(matrix.shape[0]))
        else:
            disp = np.asarray(self.displacement, dtype=float)
            if disp.shape != (matrix.shape[0],):
                raise DimensionMismatch(
                    f"Displacement of shape {disp.shape} does not match {matrix.shape}"
                )
            object.__setattr__(self, "displacement", disp)

    @property
    def n_modes(self) -> int:
        return self.matrix.shape[0] // 2

    @classmethod
    def identity(cls, n_modes: int) -> "SymplecticOp":
        return cls(np.identity(2 * n_modes))

    @classmethod
    def from_mode_map(cls, A, B=None, displacement=None) -> "SymplecticOp":
        A = np.asarray(A, dtype=complex)
        B = np.zeros_like(A) if B is None else np.asarray(B, dtype=complex)
        return cls(mode_map_to_symplectic(A, B), displacement)

    def mode_map(self) -> Tuple[np.ndarray, np.ndarray]:
        """Returns (A, B) with U^dagger a U = A a + B a^dagger."""
        return symplectic_to_mode_map(self.matrix)

    def symplectic_error(self) -> float:
        omega = sympmat(self.n_modes)
        return float(np.linalg.norm(self.matrix @ omega @ self.matrix.T - omega))

    def check(self, tol: float = SYMPLECTIC_TOL) -> "SymplecticOp":
        error = self.symplectic_error()
        if error > tol:
            raise NonSymplectic(f"||S Omega S^T - Omega|| = {error:.3e} exceeds {tol:.1e}")
        return self

    def inverse(self) -> "SymplecticOp":
        omega = sympmat(self.n_modes)
        inv = -omega @ self.matrix.T @ omega
        return SymplecticOp(inv, -inv @ self.displacement)

    def compose(self, inner: "SymplecticOp") -> "SymplecticOp":
        """The operation `self` applied after `inner`."""
        if inner.n_modes != self.n_modes:
            raise DimensionMismatch(f"Cannot compose {self.n_modes} and {inner.n_modes} modes")
        return SymplecticOp(
            self.matrix @ inner.matrix,
            self.matrix @ inner.displacement + self.displacement,
        )

    def __matmul__(self, inner: "SymplecticOp") -> "SymplecticOp":
        return self.compose(inner)

    def distance(self, other: "SymplecticOp") -> float:
        """Frobenius distance between the two matrices."""
        return float(np.linalg.norm(self.matrix - other.matrix))

    def is_passive(self, tol: float = SYMPLECTIC_TOL) -> bool:
        _, B = self.mode_map()
        return float(np.linalg.norm(B)) <= tol


def fourier_matrix(cfg: LatticeConfig) -> np.ndarray:
    """U_FT(k, x) = L^{-d/2} exp(-i k.x) over the dual lattice and the sites."""
    coords = np.array(all_coords(cfg.dim, cfg.extent), dtype=float).reshape(cfg.n_sites, cfg.dim)
    momenta = momentum_vector(coords, cfg.extent)
    phase = momenta @ coords.T
    return np.exp(-1j * phase) / np.sqrt(cfg.n_sites)


def _block_fourier(cfg: LatticeConfig, layout: ModeLayout, kind: FieldKind, component: int):
    transform = fourier_matrix(cfg)
    # The antiscalar block uses the conjugate kernel so that B(k) pairs with C(k).
    if kind is FieldKind.SCALAR_C:
        transform = transform.conj()
    return layout.block(kind, component), transform


def fourier_symplectic(
    cfg: LatticeConfig, block: FieldKind, component: Optional[int] = None
) -> SymplecticOp:
    """Discrete Fourier transform on one field block, identity elsewhere.

    Args:
        cfg: Lattice configuration.
        block: Field block to transform.
        component: Photon component; all components when None.

    Returns:
        The passive SymplecticOp with B~(k) = sum_x U_FT(k, x) B(x) on the block.
    """
    layout = ModeLayout(cfg)
    A = np.identity(cfg.n_modes, dtype=complex)
    components = [0]
    if block is FieldKind.PHOTON:
        components = range(cfg.dim) if component is None else [component]
    for comp in components:
        modes, transform = _block_fourier(cfg, layout, block, comp)
        A[np.ix_(modes, modes)] = transform
    return SymplecticOp.from_mode_map(A)


def full_fourier_symplectic(cfg: LatticeConfig) -> SymplecticOp:
    op = SymplecticOp.identity(cfg.n_modes)
    for kind in FieldKind:
        op = fourier_symplectic(cfg, kind) @ op
    return op


@dataclass(frozen=True)
class SqueezeParameter:
    """Squeezing of one momentum mode: e^xi = omega, squeeze amount r = xi / 2."""

    kind: FieldKind
    component: int
    index: int
    partner: int
    omega: float
    xi: float

    @property
    def r(self) -> float:
        return 0.5 * self.xi


def squeeze_parameters(cfg: LatticeConfig) -> List[SqueezeParameter]:
    """xi(k) = ln omega(k) per scalar pair and per photon component mode.

    Raises:
        ConfigError: If a frequency vanishes (massless scalar at k = 0).
    """
    params = []
    coords = all_coords(cfg.dim, cfg.extent)
    for n, k in enumerate(coords):
        omega = dispersion(cfg, k, cfg.scalar_mass)
        if omega <= 0:
            raise ConfigError(
                f"Scalar frequency vanishes at k={k}; the ground state needs scalar_mass > 0"
            )
        params.append(SqueezeParameter(FieldKind.SCALAR_B, 0, n, n, omega, float(np.log(omega))))
    for component in range(cfg.dim):
        for n, k in enumerate(coords):
            omega = dispersion(cfg, k, cfg.photon_mass)
            partner = negate_momentum(n, cfg.dim, cfg.extent)
            params.append(
                SqueezeParameter(FieldKind.PHOTON, component, n, partner, omega, float(np.log(omega)))
            )
    return params


def squeeze_layer(cfg: LatticeConfig) -> SymplecticOp:
    """Two-mode down-converters per momentum acting on the Fourier-transformed modes."""
    layout = ModeLayout(cfg)
    A = np.zeros((cfg.n_modes, cfg.n_modes), dtype=complex)
    B = np.zeros_like(A)
    for p in squeeze_parameters(cfg):
        c, s = np.cosh(p.r), np.sinh(p.r)
        if p.kind is FieldKind.SCALAR_B:
            b = layout.index(FieldKind.SCALAR_B, p.index)
            cc = layout.index(FieldKind.SCALAR_C, p.index)
            A[b, b] = A[cc, cc] = c
            B[b, cc] = B[cc, b] = s
        else:
            mode = layout.index(FieldKind.PHOTON, p.index, p.component)
            partner = layout.index(FieldKind.PHOTON, p.partner, p.component)
            A[mode, mode] = c
            B[mode, partner] = s
    return SymplecticOp.from_mode_map(A, B)


def groundstate_unitary(cfg: LatticeConfig) -> SymplecticOp:
    """The Gaussian unitary U with b = U^dagger B U, c = U^dagger C U, a_i = U^dagger A_i U.

    Fourier transform on every block first, then the squeezers.
    """
    op = squeeze_layer(cfg) @ full_fourier_symplectic(cfg)
    L.debug(f"Ground-state unitary on {cfg.n_modes} modes, symplectic error {op.symplectic_error():.2e}")
    return op


@dataclass(frozen=True)
class ModeMapCoefficients:
    """Bogoliubov coefficients of one momentum: p = u X~(k) + v Y~^dagger(k').

    u = (sqrt(omega) + 1/sqrt(omega)) / 2 and v = (sqrt(omega) - 1/sqrt(omega)) / 2,
    the combination of the field factors sqrt(omega/2) and 1/sqrt(2 omega).
    """

    kind: FieldKind
    index: int
    omega: float
    field_factor: float
    momentum_factor: float

    @property
    def u(self) -> float:
        return 0.5 * (np.sqrt(self.omega) + 1.0 / np.sqrt(self.omega))

    @property
    def v(self) -> float:
        return 0.5 * (np.sqrt(self.omega) - 1.0 / np.sqrt(self.omega))


def mode_map_coefficients(cfg: LatticeConfig) -> List[ModeMapCoefficients]:
    coefficients = []
    for p in squeeze_parameters(cfg):
        if p.kind is FieldKind.PHOTON and p.component > 0:
            continue
        coefficients.append(
            ModeMapCoefficients(
                p.kind,
                p.index,
                p.omega,
                float(np.sqrt(p.omega / 2.0)),
                float(1.0 / np.sqrt(2.0 * p.omega)),
            )
        )
    return coefficients


def random_symplectic(n_modes: int, seed: int, max_squeeze: float = 0.8) -> SymplecticOp:
    """Seeded random symplectic built as passive * squeeze * passive."""
    rng = np.random.default_rng(seed)
    left = unitary_group.rvs(n_modes, random_state=rng) if n_modes > 1 else np.exp(1j * rng.uniform(0, 2 * np.pi, (1, 1)))
    right = unitary_group.rvs(n_modes, random_state=rng) if n_modes > 1 else np.exp(1j * rng.uniform(0, 2 * np.pi, (1, 1)))
    r = rng.uniform(0.0, max_squeeze, n_modes)
    A = left @ np.diag(np.cosh(r)) @ right
    B = left @ np.diag(np.sinh(r)) @ right.conj()
    return SymplecticOp.from_mode_map(A, B)
