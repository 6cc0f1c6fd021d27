"""
Truncated occupation-number space over a subset of the layout modes.

Basis states are occupation tuples (n_0, ..., n_{K-1}) of the active modes with
0 <= n_j <= cutoff, enumerated in itertools.product order: the first active mode
is the most significant digit, the all-zero tuple has index 0.

The native ladders are either the particle modes b(k), c(k), a_i(k) (particle
frame) or the position-space modes B(x), C(x), A_i(x) (position frame). Every
other linear operator is a LinearForm over the native ladders, obtained from
the exact Bogoliubov map of the ground-state unitary before truncation.
"""
import enum
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Optional

import numpy as np
from scipy import sparse

from cvqed.common.constants import ORACLE_LIMIT
from cvqed.common.errors import CutoffTooSmall, DimensionMismatch, OracleTooLarge
from cvqed.common.logging import get_logger
from cvqed.lattice import ModeLayout
from cvqed.modes import groundstate_unitary

L = get_logger(__name__)


class Frame(enum.Enum):
    PARTICLE = "particle"
    POSITION = "position"


@dataclass(frozen=True, eq=False)
class LinearForm:
    """sum_j alpha_j a_j + beta_j a_j^dagger over the native ladders of all layout modes."""

    alpha: np.ndarray
    beta: np.ndarray

    @classmethod
    def zeros(cls, n_modes: int) -> "LinearForm":
        return cls(np.zeros(n_modes, dtype=complex), np.zeros(n_modes, dtype=complex))

    def dagger(self) -> "LinearForm":
        return LinearForm(self.beta.conj(), self.alpha.conj())

    def __add__(self, other: "LinearForm") -> "LinearForm":
        return LinearForm(self.alpha + other.alpha, self.beta + other.beta)

    def __sub__(self, other: "LinearForm") -> "LinearForm":
        return LinearForm(self.alpha - other.alpha, self.beta - other.beta)

    def __mul__(self, scalar) -> "LinearForm":
        return LinearForm(scalar * self.alpha, scalar * self.beta)

    __rmul__ = __mul__

    def __truediv__(self, scalar) -> "LinearForm":
        return LinearForm(self.alpha / scalar, self.beta / scalar)

    def support(self, tol: float = 1e-14) -> np.ndarray:
        return np.flatnonzero((np.abs(self.alpha) > tol) | (np.abs(self.beta) > tol))

    def is_zero(self, tol: float = 1e-14) -> bool:
        return self.support(tol).size == 0


class FockSpace:
    """Truncated Fock space of the active modes of a layout.

    Args:
        layout: Mode layout of the lattice.
        cutoff: Maximum occupation per mode, n_max >= 1.
        frame: Which modes the native ladders are.
        modes: Active layout modes; all modes when None.
        oracle_limit: Largest admissible dimension.

    Raises:
        CutoffTooSmall: If cutoff < 1.
        OracleTooLarge: If (cutoff + 1)^K exceeds oracle_limit.
    """

    def __init__(
        self,
        layout: ModeLayout,
        cutoff: int,
        frame: Frame = Frame.PARTICLE,
        modes: Optional[Iterable[int]] = None,
        oracle_limit: int = ORACLE_LIMIT,
    ):
        if cutoff < 1:
            raise CutoffTooSmall(f"cutoff must be >= 1, got {cutoff}")
        self.layout = layout
        self.cfg = layout.cfg
        self.cutoff = int(cutoff)
        self.frame = Frame(frame)
        self.modes = sorted(set(range(layout.n_modes) if modes is None else modes))
        for mode in self.modes:
            layout.locate(mode)
        self._slot = {mode: slot for slot, mode in enumerate(self.modes)}
        self.dim = (self.cutoff + 1) ** len(self.modes)
        if self.dim > oracle_limit:
            raise OracleTooLarge(
                f"Fock dimension {self.dim} = {self.cutoff + 1}^{len(self.modes)} exceeds {oracle_limit}"
            )
        self._ladders = {}
        L.info(
            f"Fock space: {len(self.modes)} modes, cutoff {self.cutoff}, "
            f"dimension {self.dim}, {self.frame.value} frame"
        )

    @property
    def n_layout_modes(self) -> int:
        return self.layout.n_modes

    def slot(self, mode: int) -> int:
        if mode not in self._slot:
            raise DimensionMismatch(f"Mode {mode} ({self.layout.locate(mode)}) is not active")
        return self._slot[mode]

    @cached_property
    def occupations(self) -> np.ndarray:
        """(dim, K) array of the occupation tuple of every basis state."""
        shape = (self.cutoff + 1,) * len(self.modes)
        return np.stack(np.unravel_index(np.arange(self.dim), shape), axis=1)

    def basis_index(self, occupation) -> int:
        occupation = tuple(int(n) for n in occupation)
        if len(occupation) != len(self.modes) or any(not 0 <= n <= self.cutoff for n in occupation):
            raise DimensionMismatch(f"Occupation {occupation} is not a basis state")
        return int(np.ravel_multi_index(occupation, (self.cutoff + 1,) * len(self.modes)))

    def basis_state(self, occupation) -> np.ndarray:
        psi = np.zeros(self.dim, dtype=complex)
        psi[self.basis_index(occupation)] = 1.0
        return psi

    def vacuum(self) -> np.ndarray:
        """The native vacuum, basis index 0."""
        psi = np.zeros(self.dim, dtype=complex)
        psi[0] = 1.0
        return psi

    def identity(self):
        return sparse.identity(self.dim, dtype=complex, format="csr")

    def ladder(self, mode: int):
        """Truncated native annihilator of a layout mode."""
        if mode not in self._ladders:
            slot = self.slot(mode)
            local = sparse.diags(np.sqrt(np.arange(1, self.cutoff + 1)), 1, dtype=complex)
            before = (self.cutoff + 1) ** slot
            after = (self.cutoff + 1) ** (len(self.modes) - slot - 1)
            op = sparse.kron(sparse.identity(before), sparse.kron(local, sparse.identity(after)))
            self._ladders[mode] = op.tocsr()
        return self._ladders[mode]

    def number(self, mode: int):
        return sparse.diags(self.occupations[:, self.slot(mode)].astype(float), format="csr")

    def materialize(self, form: LinearForm):
        """Truncated matrix of a linear form.

        Raises:
            DimensionMismatch: If the form has weight on an inactive mode.
        """
        op = sparse.csr_matrix((self.dim, self.dim), dtype=complex)
        for mode in form.support():
            a = self.ladder(int(mode))
            if form.alpha[mode] != 0:
                op = op + form.alpha[mode] * a
            if form.beta[mode] != 0:
                op = op + form.beta[mode] * a.conj().T
        return op.tocsr()

    @cached_property
    def _bogoliubov(self):
        """(A, B) with particle = A hardware + B hardware^dagger."""
        return groundstate_unitary(self.cfg).mode_map()

    def _native(self, mode: int) -> LinearForm:
        form = LinearForm.zeros(self.n_layout_modes)
        form.alpha[mode] = 1.0
        return form

    def particle_form(self, mode: int) -> LinearForm:
        """Particle annihilator b(k), c(k) or a_i(k) of a layout mode."""
        if self.frame is Frame.PARTICLE:
            return self._native(mode)
        A, B = self._bogoliubov
        return LinearForm(A[mode].astype(complex), B[mode].astype(complex))

    def hardware_form(self, mode: int) -> LinearForm:
        """Position-space annihilator B(x), C(x) or A_i(x) of a layout mode."""
        if self.frame is Frame.POSITION:
            return self._native(mode)
        A, B = self._bogoliubov
        return LinearForm(A.conj().T[mode].astype(complex), -B.T[mode].astype(complex))

    def hardware_ladder(self, mode: int):
        return self.materialize(self.hardware_form(mode))

    def particle_ladder(self, mode: int):
        return self.materialize(self.particle_form(mode))
