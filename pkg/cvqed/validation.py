"""
Executable invariant suite behind the `validate` subcommand.

Every check yields a status from CheckStatus. Checks whose outcome depends on
the occupation cutoff carry a minimum cutoff; when such a check fails below
its minimum it is reported as "insufficient cutoff" instead of "failed".
A check that cannot run within the oracle budget is "unknown".

The dynamics checks always run on d=1, L=2, n_max=4, dt=0.02, whatever
lattice the rest of the suite uses.
"""
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy.sparse.linalg import eigsh

from cvqed.circuits.decompose import decompose_to_circuit, groundstate_circuit
from cvqed.common.constants import (
    CIRCUIT_TOL,
    CONSTRAINT_EPS,
    HERMITIAN_TOL,
    IDENTITY_TOL,
    NORM_TOL,
    REFERENCE_DELTA_M,
    SYMPLECTIC_TOL,
)
from cvqed.common.errors import BudgetExceeded, CvqedError
from cvqed.common.logging import get_logger
from cvqed.common.trend import CheckStatus
from cvqed.fock.evolution import commutator_norm, exact_evolve
from cvqed.fock.hamiltonians import (
    build_H0,
    build_hamiltonians,
    charge_op,
    counterterm_unit,
    gauss_constraint_op,
    hermiticity_error,
)
from cvqed.fock.space import FockSpace, Frame
from cvqed.fock.states import (
    WavepacketSpec,
    measure_numbers,
    prepare_ground_state,
    single_photon,
)
from cvqed.gaussian_sim import (
    apply,
    counterterm_hamiltonian_matrix,
    free_hamiltonian_matrix,
    groundstate,
    number_means,
    quadratic_evolution,
    to_particle_frame,
    uncertainty_ok,
)
from cvqed.lattice import FieldKind, LatticeConfig, mode_layout, momentum_vector, site_coords, site_index
from cvqed.modes import SymplecticOp, groundstate_unitary, random_symplectic
from cvqed.renorm.integrals import (
    INTERCEPT_TOL,
    delta_m,
    fit_log_coefficient,
    monte_carlo_crosscheck,
    pi1,
    pi2,
)
from cvqed.scattering import build_schedule, run_scattering, trotter_order

L = get_logger(__name__)

# Lowest cutoff at which the truncation-sensitive checks are expected to pass.
TRUNCATION_CUTOFF = 6
FIDELITY_MIN = 0.999
AGREEMENT_TOL = 1e-3
CHARGE_TOL = 1e-10
COMMUTATOR_TOL = 1e-10
CONSTRAINT_FLOOR = 1e-12
GAP_TOL = 1e-6
ROUNDTRIP_MODES = 10
QUADRATIC_DELTA_M = -0.2
QUADRATIC_TIME = 1.0

DYNAMICS_LATTICE = LatticeConfig(1, 2, 1.0)
DYNAMICS_CUTOFF = 4
DYNAMICS_DT = 0.02
DYNAMICS_WINDOW = (2.0, 1.0)
DYNAMICS_COUPLING = 0.3
INTERACTION_LATTICE = LatticeConfig(1, 3, 1.0)

TROTTER_CUTOFF = 2
TROTTER_WINDOW = (0.4, 0.2)
TROTTER_DTS = (0.04, 0.02, 0.01)
TROTTER_COUPLING = 0.5
TROTTER_SLOPE_TOL = 0.1

POLARIZATION_MASS = 0.1
LOG_SLOPE_TOL = 0.05


@dataclass
class Check:
    name: str
    status: CheckStatus
    value: Optional[float] = None
    threshold: Optional[float] = None
    detail: str = ""

    def as_dict(self):
        return {
            "name": self.name,
            "status": self.status.value,
            "value": self.value,
            "threshold": self.threshold,
            "detail": self.detail,
        }


@dataclass
class ValidationReport:
    checks: List[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.status is not CheckStatus.FAILED for c in self.checks)

    def by_name(self, name: str) -> Check:
        for check in self.checks:
            if check.name == name:
                return check
        raise KeyError(name)

    def summary(self) -> dict:
        counts = {status.value: 0 for status in CheckStatus}
        for check in self.checks:
            counts[check.status.value] += 1
        return counts

    def as_rows(self):
        return [c.as_dict() for c in self.checks]


def _bounded(name, value, threshold, cutoff=None, min_cutoff=None, detail="") -> Check:
    if value <= threshold:
        status = CheckStatus.PASSED
    elif min_cutoff is not None and cutoff < min_cutoff:
        status = CheckStatus.INSUFFICIENT_CUTOFF
    else:
        status = CheckStatus.FAILED
    return Check(name, status, float(value), float(threshold), detail)


def perturb(op: SymplecticOp, eps: float) -> SymplecticOp:
    """Adds eps to one off-diagonal entry; the result violates S Omega S^T = Omega at order eps."""
    if eps == 0:
        return op
    matrix = op.matrix.copy()
    matrix[0, 1] += eps
    return SymplecticOp(matrix, op.displacement)


def check_symplectic(cfg: LatticeConfig, inject: float = 0.0) -> List[Check]:
    checks = []
    for name, op in (
        ("symplectic_groundstate", groundstate_unitary(cfg)),
        ("symplectic_random", random_symplectic(cfg.n_modes, seed=7)),
    ):
        checks.append(_bounded(name, perturb(op, inject).symplectic_error(), SYMPLECTIC_TOL))
    return checks


def check_circuits(cfg: LatticeConfig) -> List[Check]:
    op = random_symplectic(ROUNDTRIP_MODES, seed=11)
    random_error = decompose_to_circuit(op).to_symplectic().distance(op)
    ground_error = groundstate_circuit(cfg).to_symplectic().distance(groundstate_unitary(cfg))
    return [
        _bounded("circuit_roundtrip", random_error, CIRCUIT_TOL, detail=f"{ROUNDTRIP_MODES} modes"),
        _bounded("groundstate_circuit_roundtrip", ground_error, CIRCUIT_TOL),
    ]


def check_gaussian(cfg: LatticeConfig) -> List[Check]:
    state = groundstate(cfg)
    means = number_means(to_particle_frame(cfg, state))
    return [
        _bounded("gaussian_vacuum_numbers", float(np.max(np.abs(means))), IDENTITY_TOL),
        Check("gaussian_uncertainty", CheckStatus.PASSED if uncertainty_ok(state) else CheckStatus.FAILED),
    ]


def check_spectrum(cfg: LatticeConfig, cutoff: int) -> List[Check]:
    layout = mode_layout(cfg)
    scalars = layout.scalar_modes
    space = FockSpace(layout, cutoff, Frame.PARTICLE, modes=scalars)
    levels = np.unique(np.round(build_H0(space, cfg).diagonal().real, 12))
    gap = float(levels[1] - levels[0]) if len(levels) > 1 else float("inf")
    lowest = float(np.min(layout.frequencies()[scalars]))
    return [
        _bounded("h0_ground_energy", abs(float(levels[0])), IDENTITY_TOL),
        _bounded("h0_first_gap", abs(gap - lowest), GAP_TOL),
    ]


def check_groundstate_fidelity(cfg: LatticeConfig, cutoff: int) -> Check:
    """Circuit-prepared scalar ground state against the lowest eigenvector of the truncated H0."""
    layout = mode_layout(cfg)
    space = FockSpace(layout, cutoff, Frame.POSITION, modes=layout.scalar_modes)
    prepared = prepare_ground_state(space, cfg)
    h0 = build_H0(space, cfg)
    if space.dim <= 2:
        _, vectors = np.linalg.eigh(h0.toarray())
        lowest = vectors[:, 0]
    else:
        _, vectors = eigsh(h0, k=1, which="SA")
        lowest = vectors[:, 0]
    fidelity = abs(np.vdot(lowest, prepared)) ** 2
    return _bounded(
        "groundstate_fidelity", 1.0 - fidelity, 1.0 - FIDELITY_MIN, cutoff, TRUNCATION_CUTOFF,
        detail=f"fidelity {fidelity:.6f}",
    )


def check_gauss_condition() -> Check:
    """C(k) annihilates |Omega> and a transverse photon, not a longitudinal one, at d=3, L=2."""
    cfg = LatticeConfig(3, 2, 1.0)
    layout = mode_layout(cfg)
    k_index = site_index((1, 0, 0), cfg.extent)
    k = momentum_vector(site_coords(k_index, cfg.dim, cfg.extent), cfg.extent)
    modes = [layout.index(FieldKind.PHOTON, k_index, i) for i in range(cfg.dim)]
    space = FockSpace(layout, 1, Frame.PARTICLE, modes=modes)
    constraint = gauss_constraint_op(space, cfg, k_index)
    vacuum_norm = float(np.linalg.norm(constraint @ prepare_ground_state(space, cfg)))
    transverse_norm = float(np.linalg.norm(constraint @ single_photon(space, k_index, [0, 1, 0])))
    longitudinal_norm = float(np.linalg.norm(constraint @ single_photon(space, k_index, k)))
    annihilated = max(vacuum_norm, transverse_norm)
    ok = annihilated <= IDENTITY_TOL and longitudinal_norm >= 0.1 * np.linalg.norm(k)
    return Check(
        "gauss_condition",
        CheckStatus.PASSED if ok else CheckStatus.FAILED,
        annihilated,
        IDENTITY_TOL,
        f"longitudinal {longitudinal_norm:.4f}",
    )


def check_gaussian_fock_agreement(cfg: LatticeConfig, cutoff: int) -> Check:
    """Occupations after exp(-i t (H0 + H_ct)) from the covariance and the Fock backend."""
    M = free_hamiltonian_matrix(cfg) + counterterm_hamiltonian_matrix(cfg, QUADRATIC_DELTA_M)
    state = apply(groundstate(cfg), quadratic_evolution(M, QUADRATIC_TIME))
    gaussian = number_means(to_particle_frame(cfg, state))

    layout = mode_layout(cfg)
    scalars = layout.scalar_modes
    space = FockSpace(layout, cutoff, Frame.PARTICLE, modes=scalars)
    H = (build_H0(space, cfg) + QUADRATIC_DELTA_M * counterterm_unit(space, cfg)).tocsr()
    psi = exact_evolve(H, QUADRATIC_TIME, space.vacuum())
    fock = measure_numbers(psi / np.linalg.norm(psi), space).means
    deviation = float(np.max(np.abs(fock - gaussian[scalars])))
    return _bounded("gaussian_fock_agreement", deviation, AGREEMENT_TOL, cutoff, TRUNCATION_CUTOFF)


def check_dynamics(
    cfg: LatticeConfig = DYNAMICS_LATTICE,
    cutoff: int = DYNAMICS_CUTOFF,
    dt: float = DYNAMICS_DT,
    window: Tuple[float, float] = DYNAMICS_WINDOW,
    e_target: float = DYNAMICS_COUPLING,
) -> List[Check]:
    """Single-scalar runs on the full schedule: charge, norm, free identity and the constraint trace.

    The constraint trace must stay under CONSTRAINT_EPS and must not grow when dt is halved.
    """
    spec = WavepacketSpec.from_config(cfg, [{"kind": "b", "shape": "sharp"}])
    T, T1 = window
    report = run_scattering(cfg, build_schedule(T, T1, dt, e_target), spec, cutoff=cutoff, n_samples=0)
    halved = run_scattering(cfg, build_schedule(T, T1, dt / 2, e_target), spec, cutoff=cutoff, n_samples=0)
    free = run_scattering(cfg, build_schedule(T, T1, dt, 0.0), spec, cutoff=cutoff, n_samples=0)
    identity = float(np.max(np.abs(free.out_measurement.marginals - free.in_measurement.marginals)))
    norm_drift = max(abs(row["norm"] - 1.0) for row in report.trace)
    detail = f"d={cfg.dim}, L={cfg.extent}, n_max={cutoff}, dt={dt}"
    return [
        _bounded("charge_conservation", report.charge_drift, CHARGE_TOL, detail=detail),
        _bounded("norm_preservation", norm_drift, NORM_TOL, detail=detail),
        _bounded("free_theory_identity", identity, IDENTITY_TOL, detail=detail),
        _bounded("constraint_trace", report.constraint_max, CONSTRAINT_EPS, detail=detail),
        _bounded(
            "constraint_convergence",
            halved.constraint_max,
            max(report.constraint_max, CONSTRAINT_FLOOR),
            detail=f"dt={dt / 2}: {halved.constraint_max:.3e}, dt={dt}: {report.constraint_max:.3e}",
        ),
    ]


def check_interaction(cfg: LatticeConfig = INTERACTION_LATTICE, e: float = DYNAMICS_COUPLING) -> List[Check]:
    """H_I is hermitian and commutes with Q and with every C(k) on a three-site chain."""
    space = FockSpace(mode_layout(cfg), 1, Frame.PARTICLE)
    hamiltonians = build_hamiltonians(space, cfg)
    interaction = hamiltonians.interaction(e)
    hermiticity = max(hermiticity_error(hamiltonians.cubic), hermiticity_error(hamiltonians.quartic))
    charge = commutator_norm(charge_op(space), interaction)
    constraint = max(
        (commutator_norm(gauss_constraint_op(space, cfg, k), interaction) for k in range(1, cfg.n_sites)),
        default=0.0,
    )
    return [
        _bounded("interaction_hermitian", hermiticity, HERMITIAN_TOL),
        _bounded("interaction_charge_commutator", charge, COMMUTATOR_TOL),
        _bounded("interaction_constraint_commutator", constraint, COMMUTATOR_TOL, detail=hamiltonians.coupling.value),
    ]


def check_trotter_order(cutoff: int = TROTTER_CUTOFF) -> Check:
    """Log-log slope of the global splitting error against dt, first order by construction."""
    cfg = DYNAMICS_LATTICE
    spec = WavepacketSpec.from_config(cfg, [{"kind": "b", "shape": "sharp"}])
    schedule = build_schedule(*TROTTER_WINDOW, TROTTER_DTS[0], TROTTER_COUPLING)
    fit = trotter_order(cfg, schedule, spec, TROTTER_DTS, cutoff=cutoff)
    return _bounded("trotter_order", abs(fit.slope - 1.0), TROTTER_SLOPE_TOL, detail=f"slope {fit.slope:.4f}")


def check_renorm() -> List[Check]:
    dm = delta_m(1.0, 0.0)
    p0 = pi2(0.0)
    identity = abs(abs(dm.value) - 3.0 * abs(p0.value))
    return [
        _bounded("delta_m_reference", abs(dm.value - REFERENCE_DELTA_M), 0.01, detail=f"delta_m/e^2 = {dm.value:.6f}"),
        _bounded("tadpole_identity", identity, dm.abs_error_estimate + 3.0 * p0.abs_error_estimate),
    ]


def check_polarization() -> List[Check]:
    """Pi_1 = -Pi_2 at m = 0.1 and the log(1/m^2) fit of Pi_1 over three decades."""
    expansion = pi1(m=POLARIZATION_MASS)
    fit = fit_log_coefficient()
    return [
        _bounded(
            "pi1_pi2_opposite",
            abs(expansion.remainder),
            expansion.remainder_error,
            detail=f"{expansion.variant}: Pi_1={expansion.pi1.value:.6f}, Pi_2={expansion.pi2.value:.6f}",
        ),
        _bounded("pi1_log_slope", abs(fit.slope_deviation), LOG_SLOPE_TOL, detail=f"slope {fit.slope:.6f}"),
        _bounded("pi1_log_intercept", abs(fit.intercept_deviation), INTERCEPT_TOL, detail=f"intercept {fit.intercept:.5f}"),
    ]


def check_monte_carlo() -> List[Check]:
    """Scrambled-Sobol estimates of delta_m and Pi_1 against their cubature values."""
    checks = []
    for name, m in (("delta_m", 0.0), ("pi1", POLARIZATION_MASS)):
        result = monte_carlo_crosscheck(name, m=m)
        combined = float(np.hypot(result.standard_error, result.cubature_error))
        checks.append(
            Check(
                f"monte_carlo_{name}",
                CheckStatus.PASSED if result.agrees else CheckStatus.FAILED,
                abs(result.value - result.cubature_value),
                3.0 * combined,
                f"{result.value:.6f} vs cubature {result.cubature_value:.6f}",
            )
        )
    return checks


def _guarded(name: str, run: Callable[[], object]) -> List[Check]:
    try:
        result = run()
    except BudgetExceeded as e:
        L.warning(f"Check {name} skipped: {e}")
        return [Check(name, CheckStatus.UNKNOWN, detail=f"skipped: {e}")]
    except CvqedError as e:
        L.error(f"Check {name} raised {type(e).__name__}: {e}")
        return [Check(name, CheckStatus.FAILED, detail=f"{type(e).__name__}: {e}")]
    return result if isinstance(result, list) else [result]


def run_suite(
    cfg: LatticeConfig,
    cutoff: int,
    inject_symplectic_error: float = 0.0,
    include_renorm: bool = True,
    include_dynamics: bool = True,
) -> ValidationReport:
    """Runs every invariant check on the given lattice and cutoff."""
    report = ValidationReport()
    groups = [
        ("symplectic", lambda: check_symplectic(cfg, inject_symplectic_error)),
        ("circuits", lambda: check_circuits(cfg)),
        ("gaussian", lambda: check_gaussian(cfg)),
        ("spectrum", lambda: check_spectrum(cfg, cutoff)),
        ("groundstate_fidelity", lambda: check_groundstate_fidelity(cfg, cutoff)),
        ("gauss_condition", check_gauss_condition),
        ("gaussian_fock_agreement", lambda: check_gaussian_fock_agreement(cfg, cutoff)),
    ]
    if include_dynamics:
        groups.append(("interaction", check_interaction))
        groups.append(("dynamics", check_dynamics))
        groups.append(("trotter_order", check_trotter_order))
    if include_renorm:
        groups.append(("renorm", check_renorm))
        groups.append(("polarization", check_polarization))
        groups.append(("monte_carlo", check_monte_carlo))
    for name, run in groups:
        for check in _guarded(name, run):
            log = L.info if check.status is not CheckStatus.FAILED else L.error
            log(f"Check {check.name}: {check.status.value} (value {check.value}, threshold {check.threshold})")
            report.checks.append(check)
    L.info(f"Validation summary: {report.summary()}")
    return report
