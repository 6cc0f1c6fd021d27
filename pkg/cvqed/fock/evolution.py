import enum

import numpy as np
from scipy import sparse
from scipy.linalg import expm
from scipy.sparse.linalg import expm_multiply
from scipy.sparse.linalg import norm as sparse_norm

from cvqed.common.constants import DENSE_LIMIT, NORM_TOL, ORACLE_LIMIT
from cvqed.common.errors import OracleTooLarge
from cvqed.common.logging import get_logger
from cvqed.fock.hamiltonians import HamiltonianSet

L = get_logger(__name__)


class TrotterSign(enum.Enum):
    """Sign s of the step exponentials exp(i s dt H).

    LITERAL keeps the written product exp(+i dt H); PHYSICAL uses exp(-i dt H).
    """

    LITERAL = 1
    PHYSICAL = -1


def expectation(op, psi: np.ndarray) -> complex:
    return complex(np.vdot(psi, op @ psi))


def exact_evolve(H, t: float, psi: np.ndarray, dense_limit=DENSE_LIMIT, oracle_limit=ORACLE_LIMIT):
    """exp(-i H t) psi.

    Dense matrix exponential up to dense_limit, Krylov action up to oracle_limit.

    Raises:
        OracleTooLarge: If the dimension exceeds oracle_limit.
    """
    dim = H.shape[0]
    if dim > oracle_limit:
        raise OracleTooLarge(f"Exact evolution of dimension {dim} exceeds the oracle limit {oracle_limit}")
    if t == 0:
        return np.array(psi, dtype=complex, copy=True)
    if dim <= dense_limit:
        dense = H.toarray() if sparse.issparse(H) else np.asarray(H)
        result = expm(-1j * t * dense) @ psi
    else:
        result = expm_multiply(-1j * t * sparse.csr_matrix(H), psi)
    drift = abs(np.linalg.norm(result) - np.linalg.norm(psi))
    if drift > NORM_TOL:
        L.warning(f"Norm drift {drift:.2e} in exact evolution over t={t}")
    return result


def _exp_apply(H, coefficient: complex, psi: np.ndarray) -> np.ndarray:
    """exp(coefficient * H) psi."""
    if coefficient == 0 or H.nnz == 0:
        return psi
    return expm_multiply(coefficient * H, psi)


def trotter_step(
    hamiltonians: HamiltonianSet,
    e: float,
    delta_m: float,
    dt: float,
    psi: np.ndarray,
    sign: TrotterSign = TrotterSign.LITERAL,
) -> np.ndarray:
    """One step exp(i s dt H0) exp(i s dt H_I(e)) exp(i s dt H_ct(delta_m)) psi.

    The counterterm acts first, the free Hamiltonian last.
    """
    phase = 1j * sign.value * dt
    psi = _exp_apply(hamiltonians.counterterm(delta_m), phase, psi)
    psi = _exp_apply(hamiltonians.interaction(e), phase, psi)
    diagonal = hamiltonians.h0_diagonal
    if diagonal is not None:
        return np.exp(phase * diagonal) * psi
    return _exp_apply(hamiltonians.h0, phase, psi)


def trotter_evolve(
    hamiltonians: HamiltonianSet,
    e: float,
    delta_m: float,
    duration: float,
    n_steps: int,
    psi: np.ndarray,
    sign: TrotterSign = TrotterSign.LITERAL,
) -> np.ndarray:
    """n_steps Trotter steps at fixed couplings covering the given duration."""
    dt = duration / n_steps
    for _ in range(n_steps):
        psi = trotter_step(hamiltonians, e, delta_m, dt, psi, sign)
    return psi


def commutator_norm(a, b) -> float:
    """Induced 1-norm of [a, b], an upper bound on its spectral norm."""
    comm = (a @ b - b @ a).tocsr()
    if comm.nnz == 0:
        return 0.0
    return float(sparse_norm(comm, 1))


def trotter_error_bound(hamiltonians: HamiltonianSet, e: float, delta_m: float, dt: float, n_steps: int) -> float:
    """First-order bound n_steps * dt^2 / 2 * sum of pairwise commutator norms.

    Evaluated at the largest couplings of the run, so it bounds every step.
    """
    terms = [hamiltonians.h0, hamiltonians.interaction(e), hamiltonians.counterterm(delta_m)]
    total = 0.0
    for i in range(len(terms)):
        for j in range(i + 1, len(terms)):
            total += commutator_norm(terms[i], terms[j])
    return float(n_steps * 0.5 * dt**2 * total)
