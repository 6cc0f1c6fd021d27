from dataclasses import dataclass, field
from typing import Callable, Iterator, List, Union

import numpy as np

from cvqed.common.errors import DimensionMismatch
from cvqed.modes import SymplecticOp

# Every element is a Gaussian unitary U = exp(-i G). Its mode map gives
# U^dagger a U = A a + B a^dagger restricted to the modes it touches.


@dataclass(frozen=True)
class BeamSplitter:
    """a_i -> cos(theta) a_i - e^{-i phi} sin(theta) a_j,
    a_j -> e^{i phi} sin(theta) a_i + cos(theta) a_j."""

    i: int
    j: int
    theta: float
    phi: float

    TAG = "BS"

    @property
    def modes(self):
        return (self.i, self.j)

    def inverse(self):
        return BeamSplitter(self.i, self.j, -self.theta, self.phi)

    def fill_mode_map(self, A, B):
        c, s = np.cos(self.theta), np.sin(self.theta)
        A[self.i, self.i] = c
        A[self.i, self.j] = -np.exp(-1j * self.phi) * s
        A[self.j, self.i] = np.exp(1j * self.phi) * s
        A[self.j, self.j] = c

    def generator(self, lower: Callable):
        a, b = lower(self.i), lower(self.j)
        term = np.exp(1j * self.phi) * (a @ b.conj().T)
        return 1j * self.theta * (term - term.conj().T)


@dataclass(frozen=True)
class PhaseShifter:
    """a_i -> e^{i theta} a_i."""

    i: int
    theta: float

    TAG = "PS"

    @property
    def modes(self):
        return (self.i,)

    def inverse(self):
        return PhaseShifter(self.i, -self.theta)

    def fill_mode_map(self, A, B):
        A[self.i, self.i] = np.exp(1j * self.theta)

    def generator(self, lower: Callable):
        a = lower(self.i)
        return -self.theta * (a.conj().T @ a)


@dataclass(frozen=True)
class TwoModeSqueezer:
    """Down-converter exp[(xi/2)(a_i^dagger a_j^dagger - a_i a_j)]."""

    i: int
    j: int
    xi: float

    TAG = "TMS"

    @property
    def modes(self):
        return (self.i, self.j)

    def inverse(self):
        return TwoModeSqueezer(self.i, self.j, -self.xi)

    def fill_mode_map(self, A, B):
        r = 0.5 * self.xi
        A[self.i, self.i] = A[self.j, self.j] = np.cosh(r)
        B[self.i, self.j] = B[self.j, self.i] = np.sinh(r)

    def generator(self, lower: Callable):
        a, b = lower(self.i), lower(self.j)
        pair = a @ b
        return 0.5j * self.xi * (pair.conj().T - pair)


@dataclass(frozen=True)
class SingleModeSqueezer:
    """exp[(z* a^2 - z a^dagger^2) / 2] with z = r e^{i phi}:
    a -> cosh(r) a - e^{i phi} sinh(r) a^dagger."""

    i: int
    r: float
    phi: float

    TAG = "SMS"

    @property
    def modes(self):
        return (self.i,)

    def inverse(self):
        return SingleModeSqueezer(self.i, -self.r, self.phi)

    def fill_mode_map(self, A, B):
        A[self.i, self.i] = np.cosh(self.r)
        B[self.i, self.i] = -np.exp(1j * self.phi) * np.sinh(self.r)

    def generator(self, lower: Callable):
        a = lower(self.i)
        z = self.r * np.exp(1j * self.phi)
        square = a @ a
        return 0.5j * (np.conj(z) * square - z * square.conj().T)


Element = Union[BeamSplitter, PhaseShifter, TwoModeSqueezer, SingleModeSqueezer]

ELEMENT_TYPES = {
    cls.TAG: cls for cls in (BeamSplitter, PhaseShifter, TwoModeSqueezer, SingleModeSqueezer)
}


def element_symplectic(element: Element, n_modes: int) -> SymplecticOp:
    A = np.identity(n_modes, dtype=complex)
    B = np.zeros((n_modes, n_modes), dtype=complex)
    for mode in element.modes:
        if not 0 <= mode < n_modes:
            raise DimensionMismatch(f"{element.TAG} touches mode {mode} outside [0, {n_modes})")
        A[mode, mode] = 0.0
    element.fill_mode_map(A, B)
    return SymplecticOp.from_mode_map(A, B)


@dataclass
class OpticalCircuit:
    """Ordered list of optical elements, applied to the state in list order."""

    n_modes: int
    elements: List[Element] = field(default_factory=list)

    def __len__(self):
        return len(self.elements)

    def __iter__(self) -> Iterator[Element]:
        return iter(self.elements)

    def append(self, element: Element):
        for mode in element.modes:
            if not 0 <= mode < self.n_modes:
                raise DimensionMismatch(
                    f"{element.TAG} touches mode {mode} outside [0, {self.n_modes})"
                )
        self.elements.append(element)

    def extend(self, elements):
        for element in elements:
            self.append(element)

    def inverse(self) -> "OpticalCircuit":
        return OpticalCircuit(self.n_modes, [e.inverse() for e in reversed(self.elements)])

    def to_symplectic(self) -> SymplecticOp:
        """Recomposes the elements into one SymplecticOp."""
        total = np.identity(2 * self.n_modes)
        for element in self.elements:
            total = element_symplectic(element, self.n_modes).matrix @ total
        return SymplecticOp(total)

    def count(self, tag: str) -> int:
        return sum(1 for e in self.elements if e.TAG == tag)
