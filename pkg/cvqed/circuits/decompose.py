"""
Lowering of Gaussian unitaries to optical circuits.

A passive unitary is nulled column by column with nearest-neighbour beam
splitters and finished with phase shifters. A general symplectic goes through
a Bloch-Messiah factorization passive * squeezers * passive. Pure squeeze
layers are recognised directly so that they keep their two-mode structure.
"""
from typing import List, Tuple

import numpy as np
from scipy.linalg import eigh, sqrtm

from cvqed.circuits.circuit import (
    BeamSplitter,
    OpticalCircuit,
    PhaseShifter,
    SingleModeSqueezer,
    TwoModeSqueezer,
)
from cvqed.common.constants import CIRCUIT_TOL, SYMPLECTIC_TOL
from cvqed.common.errors import DimensionMismatch, NonSymplectic
from cvqed.common.logging import get_logger
from cvqed.lattice import FieldKind, LatticeConfig, ModeLayout
from cvqed.modes import SymplecticOp, fourier_matrix, squeeze_parameters

L = get_logger(__name__)

ANGLE_TOL = 1e-13
ZERO_TOL = 1e-12
SQUEEZE_TOL = 1e-9
DEGENERACY_TOL = 1e-7


def _wrapped(angle: float) -> float:
    return float(np.angle(np.exp(1j * angle)))


def _phase(circuit: OpticalCircuit, mode: int, angle: float):
    angle = _wrapped(angle)
    if abs(angle) > ANGLE_TOL:
        circuit.append(PhaseShifter(mode, angle))


def passive_elements(unitary: np.ndarray, modes: List[int] = None) -> List:
    """Beam splitters and phase shifters realising the passive map a -> W a.

    Args:
        unitary: Unitary mode map W on the listed modes.
        modes: Global mode numbers of the rows of W. Defaults to 0..n-1.

    Returns:
        Elements in application order.
    """
    W = np.array(unitary, dtype=complex)
    n = W.shape[0]
    modes = list(range(n)) if modes is None else list(modes)
    rotations: List[Tuple[int, int, float, float]] = []

    for col in range(n - 1):
        for row in range(n - 1, col, -1):
            p, q = row - 1, row
            xp, xq = W[p, col], W[q, col]
            if abs(xq) <= ZERO_TOL:
                continue
            if abs(xp) <= ZERO_TOL:
                theta, phi = 0.5 * np.pi, 0.0
            else:
                ratio = -xq / xp
                theta, phi = float(np.arctan(abs(ratio))), float(np.angle(ratio))
            c, s = np.cos(theta), np.sin(theta)
            row_p, row_q = W[p].copy(), W[q].copy()
            W[p] = c * row_p - np.exp(-1j * phi) * s * row_q
            W[q] = np.exp(1j * phi) * s * row_p + c * row_q
            rotations.append((p, q, theta, phi))

    # W is now diagonal: G_K ... G_1 U = D, hence U = G_1^-1 ... G_K^-1 D.
    elements = []
    for i in range(n):
        angle = _wrapped(float(np.angle(W[i, i])))
        if abs(angle) > ANGLE_TOL:
            elements.append(PhaseShifter(modes[i], angle))
    for p, q, theta, phi in reversed(rotations):
        elements.append(BeamSplitter(modes[p], modes[q], -theta, phi))
    return elements


def _squeeze_partners(A: np.ndarray, B: np.ndarray):
    """Partner of every mode if (A, B) is a pure pairwise squeeze layer, else None."""
    n = A.shape[0]
    if np.linalg.norm(A - np.diag(np.diag(A))) > SYMPLECTIC_TOL:
        return None
    partners = []
    for i in range(n):
        row = np.abs(B[i])
        j = int(np.argmax(row))
        if row[j] <= ZERO_TOL:
            partners.append(None)
            continue
        rest = row.copy()
        rest[j] = 0.0
        if rest.max(initial=0.0) > SYMPLECTIC_TOL:
            return None
        partners.append(j)
    for i, j in enumerate(partners):
        if j is not None and partners[j] != i:
            return None
    return partners


def _squeeze_layer_circuit(A, B, partners) -> OpticalCircuit:
    circuit = OpticalCircuit(A.shape[0])
    done = set()
    for i, j in enumerate(partners):
        if i in done:
            continue
        alpha_i = float(np.angle(A[i, i]))
        if j is None:
            _phase(circuit, i, alpha_i)
            done.add(i)
        elif j == i:
            r = float(np.arcsinh(abs(B[i, i])))
            circuit.append(SingleModeSqueezer(i, r, _wrapped(float(np.angle(B[i, i])) - alpha_i + np.pi)))
            _phase(circuit, i, alpha_i)
            done.add(i)
        else:
            alpha_j = float(np.angle(A[j, j]))
            beta = float(np.angle(B[i, j]))
            theta_j = alpha_i - beta
            _phase(circuit, j, theta_j)
            circuit.append(TwoModeSqueezer(i, j, 2.0 * float(np.arcsinh(abs(B[i, j])))))
            _phase(circuit, i, alpha_i)
            _phase(circuit, j, alpha_j - theta_j)
            done.update((i, j))
    return circuit


def bloch_messiah(A: np.ndarray, B: np.ndarray):
    """Factorizes a -> A a + B a^dagger as u1 . squeeze(r) . u2.

    Returns:
        (u1, r, u2) with A = u1 diag(cosh r) u2 and B = u1 diag(sinh r) conj(u2).
    """
    n = A.shape[0]
    s2, W = eigh(B @ B.conj().T)
    s = np.sqrt(np.clip(s2, 0.0, None))
    M = A @ B.T
    u1 = np.zeros((n, n), dtype=complex)

    start = 0
    while start < n:
        stop = start + 1
        while stop < n and abs(s[stop] - s[start]) <= DEGENERACY_TOL * max(1.0, s[start]):
            stop += 1
        group = slice(start, stop)
        Wg = W[:, group]
        level = float(np.mean(s[group]))
        if level <= SQUEEZE_TOL:
            u1[:, group] = Wg
        else:
            Q = Wg.conj().T @ M @ Wg.conj() / (level * np.sqrt(1.0 + level**2))
            u1[:, group] = Wg @ sqrtm(Q)
        start = stop

    r = np.arcsinh(s)
    u2 = np.diag(1.0 / np.cosh(r)) @ u1.conj().T @ A
    return u1, r, u2


def decompose_to_circuit(op: SymplecticOp) -> OpticalCircuit:
    """Lowers a symplectic operation to beam splitters, phase shifters and squeezers.

    Raises:
        NonSymplectic: If op violates the symplectic invariant.
    """
    op.check()
    if np.linalg.norm(op.displacement) > SYMPLECTIC_TOL:
        raise DimensionMismatch("Displacements have no optical element; lower the linear part only")
    n = op.n_modes
    A, B = op.mode_map()

    partners = _squeeze_partners(A, B)
    if partners is not None:
        circuit = _squeeze_layer_circuit(A, B, partners)
    else:
        u1, r, u2 = bloch_messiah(A, B)
        circuit = OpticalCircuit(n)
        circuit.extend(passive_elements(u2))
        for i, ri in enumerate(r):
            if ri > SQUEEZE_TOL:
                circuit.append(SingleModeSqueezer(i, float(ri), np.pi))
        circuit.extend(passive_elements(u1))

    error = circuit.to_symplectic().distance(op)
    L.debug(f"Lowered {n}-mode symplectic to {len(circuit)} elements, recomposition error {error:.2e}")
    if error > CIRCUIT_TOL:
        raise NonSymplectic(f"Circuit recomposition error {error:.3e} exceeds {CIRCUIT_TOL:.1e}")
    return circuit


def groundstate_circuit(cfg: LatticeConfig) -> OpticalCircuit:
    """Circuit for the ground-state unitary in its two-step form.

    A beam-splitter network per field block performs the Fourier transform,
    followed by one down-converter per scalar momentum and per photon k/-k
    pair (a single-mode squeezer when k = -k).
    """
    layout = ModeLayout(cfg)
    circuit = OpticalCircuit(cfg.n_modes)
    transform = fourier_matrix(cfg)
    circuit.extend(passive_elements(transform, layout.block(FieldKind.SCALAR_B)))
    circuit.extend(passive_elements(transform.conj(), layout.block(FieldKind.SCALAR_C)))
    for component in range(cfg.dim):
        circuit.extend(passive_elements(transform, layout.block(FieldKind.PHOTON, component)))

    for p in squeeze_parameters(cfg):
        if abs(p.xi) <= ANGLE_TOL:
            continue
        if p.kind is FieldKind.SCALAR_B:
            circuit.append(
                TwoModeSqueezer(
                    layout.index(FieldKind.SCALAR_B, p.index),
                    layout.index(FieldKind.SCALAR_C, p.index),
                    p.xi,
                )
            )
        elif p.partner == p.index:
            circuit.append(
                SingleModeSqueezer(layout.index(FieldKind.PHOTON, p.index, p.component), p.r, np.pi)
            )
        elif p.index < p.partner:
            circuit.append(
                TwoModeSqueezer(
                    layout.index(FieldKind.PHOTON, p.index, p.component),
                    layout.index(FieldKind.PHOTON, p.partner, p.component),
                    p.xi,
                )
            )
    L.info(f"Ground-state circuit: {len(circuit)} elements on {cfg.n_modes} modes")
    return circuit
