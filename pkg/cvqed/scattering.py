"""
Scattering pipeline: in-state preparation, adiabatic coupling schedule,
time-ordered Trotter evolution, uncompute and number measurement.

The schedule has three segments. On [-T, -T1] the squared coupling rises
linearly from 0 to e_target^2, on [-T1, T1] it is constant, and on [T1, T]
it falls back to 0 along the mirrored ramp. The mass counterterm follows in
tandem, delta_m(t) = c * e^2(t). Every Trotter step samples both at its
midpoint.

The uncompute is applied at the end of the third segment (t = +T). In the
particle frame it is a relabelling: the native coefficients of the evolved
state already are its hardware coefficients after U.
"""
import asyncio
import enum
import math
import os
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from cvqed.circuits.decompose import groundstate_circuit
from cvqed.common.constants import (
    CONSTRAINT_EPS,
    ENV_THREADS,
    ORACLE_LIMIT,
    REFERENCE_DELTA_M,
    VERSION,
)
from cvqed.common.errors import ConstraintViolation, InvalidWindow, OracleTooLarge
from cvqed.common.logging import get_logger
from cvqed.common.trend import TrendEstimator
from cvqed.fock.evolution import (
    TrotterSign,
    exact_evolve,
    expectation,
    trotter_error_bound,
    trotter_step,
)
from cvqed.fock.hamiltonians import (
    HamiltonianSet,
    PhotonCoupling,
    build_hamiltonians,
    charge_op,
    gauss_constraint_form,
    gauss_law_op,
)
from cvqed.fock.space import FockSpace, Frame
from cvqed.fock.states import (
    MeasurementResult,
    WavepacketSpec,
    apply_circuit,
    measure_numbers,
    prepare_excited,
    prepare_ground_state,
)
from cvqed.gaussian_sim import effective_mass
from cvqed.lattice import LatticeConfig, mode_layout
from cvqed.renorm.integrals import delta_m

L = get_logger(__name__)

# Relative slack when checking that dt divides a segment.
STEP_SLACK = 1e-6

UNCOMPUTE_NOTE = "uncompute applied at t=+T, after the closing ramp"
PHOTON_CAVEAT_1D = (
    "d=1 has no transverse photon polarization: every k != 0 photon mode is longitudinal, "
    "so only the k = 0 photon couples to the current"
)
FULL_COUPLING_NOTE = (
    "full photon coupling: longitudinal photons are emitted at order e^2 and "
    "the Gauss constraint trace grows with t at every step size"
)


class DeltaMSource(enum.Enum):
    """Origin of the counterterm coefficient c."""

    REFERENCE = "reference"
    COMPUTED = "computed"
    OVERRIDE = "override"


@dataclass(frozen=True)
class Segment:
    start: float
    stop: float
    n_steps: int

    @property
    def dt(self) -> float:
        return (self.stop - self.start) / self.n_steps


@dataclass(frozen=True)
class CouplingSchedule:
    """Three-segment adiabatic coupling schedule.

    Attributes:
        T: Total half-window.
        T1: Plateau half-window, 0 < T1 < T.
        dt: Requested Trotter step.
        e_target: Plateau coupling.
        dm_coefficient: c in delta_m(t) = c * e^2(t).
        dm_source: Where c came from.
    """

    T: float
    T1: float
    dt: float
    e_target: float
    dm_coefficient: float = REFERENCE_DELTA_M
    dm_source: DeltaMSource = DeltaMSource.REFERENCE

    def e_squared(self, t: float) -> float:
        ramp = self.T - self.T1
        if t <= -self.T or t >= self.T:
            return 0.0
        if t < -self.T1:
            return (self.T + t) / ramp * self.e_target**2
        if t > self.T1:
            return (self.T - t) / ramp * self.e_target**2
        return self.e_target**2

    def e(self, t: float) -> float:
        return math.copysign(math.sqrt(self.e_squared(t)), self.e_target)

    def delta_m(self, t: float) -> float:
        return self.dm_coefficient * self.e_squared(t)

    @cached_property
    def segments(self) -> List[Segment]:
        segments = []
        for start, stop in ((-self.T, -self.T1), (-self.T1, self.T1), (self.T1, self.T)):
            ratio = (stop - start) / self.dt
            n_steps = max(1, round(ratio))
            if abs(ratio - n_steps) > STEP_SLACK * max(ratio, 1.0):
                L.warning(
                    f"Step {self.dt} does not divide segment [{start}, {stop}]; "
                    f"using {n_steps} steps of {(stop - start) / n_steps:.6g}"
                )
            segments.append(Segment(start, stop, n_steps))
        return segments

    @property
    def n_steps(self) -> int:
        return sum(s.n_steps for s in self.segments)

    @property
    def max_dt(self) -> float:
        return max(s.dt for s in self.segments)

    def steps(self):
        """Yields (t_start, dt, e, delta_m) per step, couplings at the step midpoint."""
        for segment in self.segments:
            dt = segment.dt
            for j in range(segment.n_steps):
                start = segment.start + j * dt
                mid = start + 0.5 * dt
                yield start, dt, self.e(mid), self.delta_m(mid)

    def with_dt(self, dt: float) -> "CouplingSchedule":
        if not 0 < dt <= self.T - self.T1:
            raise InvalidWindow(f"Need 0 < dt <= T - T1 = {self.T - self.T1}, got dt={dt}")
        return replace(self, dt=float(dt))

    def as_dict(self):
        return {
            "T": self.T,
            "T1": self.T1,
            "dt": self.dt,
            "e_target": self.e_target,
            "dm_coefficient": self.dm_coefficient,
            "dm_source": self.dm_source.value,
            "n_steps": self.n_steps,
            "segments": [[s.start, s.stop, s.n_steps] for s in self.segments],
        }


def build_schedule(
    T: float,
    T1: float,
    dt: float,
    e_target: float,
    dm_coefficient: Optional[float] = None,
    dm_source=DeltaMSource.REFERENCE,
    m: float = 0.0,
) -> CouplingSchedule:
    """Builds the three-segment schedule.

    Args:
        T: Total half-window.
        T1: Plateau half-window.
        dt: Trotter step.
        e_target: Plateau coupling.
        dm_coefficient: Counterterm coefficient; required for the override source.
        dm_source: "reference" uses the quoted weak-coupling value, "computed"
            evaluates delta_m/e^2 at mass m, "override" takes dm_coefficient.
        m: Scalar mass used by the computed source.

    Raises:
        InvalidWindow: Unless T > T1 > 0 and 0 < dt <= T - T1.
    """
    if not T > T1 > 0:
        raise InvalidWindow(f"Need T > T1 > 0, got T={T}, T1={T1}")
    if not 0 < dt <= T - T1:
        raise InvalidWindow(f"Need 0 < dt <= T - T1 = {T - T1}, got dt={dt}")
    try:
        dm_source = DeltaMSource(dm_source)
    except ValueError:
        raise InvalidWindow(f"Unknown delta_m source '{dm_source}'") from None
    if dm_source is DeltaMSource.OVERRIDE:
        if dm_coefficient is None:
            raise InvalidWindow("An overridden delta_m path needs a coefficient")
        coefficient = float(dm_coefficient)
    elif dm_source is DeltaMSource.COMPUTED:
        coefficient = delta_m(1.0, m).value
    else:
        coefficient = REFERENCE_DELTA_M if dm_coefficient is None else float(dm_coefficient)
    schedule = CouplingSchedule(float(T), float(T1), float(dt), float(e_target), coefficient, dm_source)
    L.info(
        f"Schedule: T={T}, T1={T1}, dt={dt}, e_target={e_target}, "
        f"delta_m = {coefficient:.6g} e^2 ({dm_source.value}), {schedule.n_steps} steps"
    )
    return schedule


@dataclass
class ScatteringReport:
    """Result of one scattering run."""

    config: dict
    schedule: CouplingSchedule
    seed: int
    cutoff: int
    frame: str
    sign: str
    in_measurement: MeasurementResult
    out_measurement: MeasurementResult
    constraint_max: float
    gauss_max: float
    charge_in: float
    charge_out: float
    survival: float
    trotter_bound: float
    truncation_delta: Optional[float]
    samples: np.ndarray
    scalar_mass: float = 0.0
    trace: List[dict] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)
    constraint_violated: bool = False
    coupling: str = PhotonCoupling.TRANSVERSE.value

    @property
    def charge_drift(self) -> float:
        return abs(self.charge_out - self.charge_in)

    def distributions(self, measurement: MeasurementResult) -> Dict[str, List[float]]:
        layout = measurement.space.layout
        return {
            str(layout.locate(mode)): measurement.marginals[slot].tolist()
            for slot, mode in enumerate(measurement.space.modes)
        }

    def as_dict(self):
        return {
            "version": VERSION,
            "config": self.config,
            "seed": self.seed,
            "cutoff": self.cutoff,
            "frame": self.frame,
            "sign": self.sign,
            "coupling": self.coupling,
            "schedule": self.schedule.as_dict(),
            "in_state": {
                "classified": self.in_measurement.classify(),
                "distributions": self.distributions(self.in_measurement),
            },
            "out_state": {
                "classified": self.out_measurement.classify(),
                "occupied": self.out_measurement.occupied(),
                "distributions": self.distributions(self.out_measurement),
            },
            "constraint_max": self.constraint_max,
            "gauss_law_max": self.gauss_max,
            "constraint_violated": self.constraint_violated,
            "charge": {"in": self.charge_in, "out": self.charge_out, "drift": self.charge_drift},
            "survival": self.survival,
            "trotter_bound": self.trotter_bound,
            "truncation_delta": self.truncation_delta,
            "mass": effective_mass(self.scalar_mass, self.schedule.delta_m(0.0)).as_dict(),
            "samples": self.samples.tolist(),
            "notes": list(self.notes),
            "warnings": list(self.warnings),
        }


class _Observables:
    """Operators traced along a run."""

    def __init__(self, space: FockSpace, cfg: LatticeConfig):
        self.charge = charge_op(space)
        self.constraints = []
        for k_index in range(cfg.n_sites):
            form = gauss_constraint_form(space, cfg, k_index)
            if not form.is_zero():
                self.constraints.append(space.materialize(form))
        self.divergence = []
        self.rho_unit = []
        for site in range(cfg.n_sites):
            free = gauss_law_op(space, cfg, site, 0.0)
            self.divergence.append(free)
            self.rho_unit.append((free - gauss_law_op(space, cfg, site, 1.0)).tocsr())

    def constraint_norm(self, psi: np.ndarray) -> float:
        if not self.constraints:
            return 0.0
        return max(float(np.linalg.norm(c @ psi)) for c in self.constraints)

    def gauss_max(self, psi: np.ndarray, e: float) -> float:
        return max(
            abs(expectation(div - e * rho, psi))
            for div, rho in zip(self.divergence, self.rho_unit)
        )


def _energy(hamiltonians: HamiltonianSet, psi: np.ndarray, e: float, delta_m: float) -> float:
    value = (
        expectation(hamiltonians.h0, psi)
        + e * expectation(hamiltonians.cubic, psi)
        + e**2 * expectation(hamiltonians.quartic, psi)
        + delta_m * expectation(hamiltonians.ct_unit, psi)
    )
    return float(value.real)


def _trace_row(t, e, delta_m, psi, hamiltonians, observables: _Observables) -> dict:
    return {
        "t": t,
        "e": e,
        "delta_m": delta_m,
        "norm": float(np.linalg.norm(psi)),
        "energy": _energy(hamiltonians, psi, e, delta_m),
        "constraint": observables.constraint_norm(psi),
        "gauss_law": observables.gauss_max(psi, e),
        "charge": float(expectation(observables.charge, psi).real),
    }


def evolve(
    hamiltonians: HamiltonianSet,
    schedule: CouplingSchedule,
    psi: np.ndarray,
    sign: TrotterSign = TrotterSign.LITERAL,
    exact: bool = False,
    observer: Optional[Callable] = None,
) -> np.ndarray:
    """Steps psi through the whole schedule in increasing t.

    With exact=True every step exponentiates the full H(e, delta_m) at the
    step midpoint instead of splitting it.
    """
    for start, dt, e, dm in schedule.steps():
        if exact:
            psi = exact_evolve(hamiltonians.total(e, dm), -sign.value * dt, psi)
        else:
            psi = trotter_step(hamiltonians, e, dm, dt, psi, sign)
        if observer is not None:
            observer(start + dt, schedule.e(start + dt), schedule.delta_m(start + dt), psi)
    return psi


def uncompute(space: FockSpace, cfg: LatticeConfig, psi: np.ndarray) -> np.ndarray:
    """Applies U so that native number measurements count particles."""
    if space.frame is Frame.PARTICLE:
        return psi
    psi = apply_circuit(space, groundstate_circuit(cfg), psi)
    return psi / np.linalg.norm(psi)


def free_state(space: FockSpace, spec: WavepacketSpec) -> np.ndarray:
    """prod_n (sum_k f_n(k) native^dagger(k)) |0>, the free-basis out-state after uncompute."""
    psi = space.vacuum()
    for profile in spec.profiles:
        weights = profile.weights / np.linalg.norm(profile.weights)
        op = None
        for k, weight in enumerate(weights):
            if weight == 0:
                continue
            term = weight * space.ladder(space.layout.index(profile.field_kind, k)).conj().T
            op = term if op is None else op + term
        psi = op @ psi
    norm = float(np.linalg.norm(psi))
    return psi / norm if norm > 0 else psi


@dataclass
class _Pipeline:
    space: FockSpace
    hamiltonians: HamiltonianSet
    psi_in: np.ndarray
    warnings: List[str]


def _prepare(cfg, in_spec, cutoff, frame, oracle_limit, coupling=PhotonCoupling.TRANSVERSE) -> _Pipeline:
    space = FockSpace(mode_layout(cfg), cutoff, frame=frame, oracle_limit=oracle_limit)
    hamiltonians = build_hamiltonians(space, cfg, coupling)
    warnings = in_spec.validate(cfg)
    psi_in = prepare_excited(space, prepare_ground_state(space, cfg), in_spec)
    return _Pipeline(space, hamiltonians, psi_in, warnings)


def _final_means(cfg, schedule, in_spec, cutoff, frame, sign, oracle_limit, coupling) -> np.ndarray:
    pipeline = _prepare(cfg, in_spec, cutoff, frame, oracle_limit, coupling)
    psi = evolve(pipeline.hamiltonians, schedule, pipeline.psi_in, sign)
    return measure_numbers(uncompute(pipeline.space, cfg, psi), pipeline.space).means


def run_scattering(
    cfg: LatticeConfig,
    schedule: CouplingSchedule,
    in_spec: WavepacketSpec,
    cutoff: int = 4,
    seed: int = 0,
    n_samples: int = 100,
    frame: Frame = Frame.PARTICLE,
    sign: TrotterSign = TrotterSign.LITERAL,
    constraint_eps: float = CONSTRAINT_EPS,
    strict: bool = False,
    truncation_check: bool = False,
    oracle_limit: int = ORACLE_LIMIT,
    config: Optional[dict] = None,
    coupling: PhotonCoupling = PhotonCoupling.TRANSVERSE,
) -> ScatteringReport:
    """Runs the full pipeline and reports the out-state number statistics.

    Args:
        cfg: Lattice.
        schedule: Coupling schedule.
        in_spec: Scalar and antiscalar creation profiles.
        cutoff: Occupation cutoff n_max.
        seed: Seed of the joint-outcome samples.
        n_samples: Number of samples.
        frame: Native frame of the Fock backend.
        sign: Sign convention of the step exponentials.
        constraint_eps: Bound on max_k ||C(k) psi(t)||.
        strict: Raise instead of warning on a constraint excursion.
        truncation_check: Re-run at cutoff + 1 and report the change of the mean occupations.
        oracle_limit: Largest admissible Fock dimension.
        config: Resolved run configuration embedded in the report.
        coupling: Photon field seen by the charged current.

    Raises:
        OracleTooLarge: If the Fock space exceeds the oracle limit.
        ConstraintViolation: In strict mode, if the constraint trace exceeds constraint_eps.
    """
    pipeline = _prepare(cfg, in_spec, cutoff, frame, oracle_limit, coupling)
    space, hamiltonians = pipeline.space, pipeline.hamiltonians
    observables = _Observables(space, cfg)
    trace = [_trace_row(-schedule.T, 0.0, 0.0, pipeline.psi_in, hamiltonians, observables)]

    def observe(t, e, dm, psi):
        row = _trace_row(t, e, dm, psi, hamiltonians, observables)
        L.debug(f"t={t:.4f} e={e:.4f} constraint={row['constraint']:.3e} charge={row['charge']:.9f}")
        trace.append(row)

    psi = evolve(hamiltonians, schedule, pipeline.psi_in, sign, observer=observe)
    in_measurement = measure_numbers(uncompute(space, cfg, pipeline.psi_in), space)
    out_measurement = measure_numbers(uncompute(space, cfg, psi), space)

    constraint_max = max(row["constraint"] for row in trace)
    gauss_max = max(row["gauss_law"] for row in trace)
    warnings = list(pipeline.warnings)
    violated = constraint_max > constraint_eps
    if violated:
        message = f"constraint trace {constraint_max:.3e} exceeds {constraint_eps:.1e}"
        if strict:
            raise ConstraintViolation(message)
        L.warning(f"Scattering {message}")
        warnings.append(message)

    survival = float(out_measurement.probabilities[int(np.argmax(in_measurement.probabilities))])
    bound = trotter_error_bound(
        hamiltonians, schedule.e_target, schedule.delta_m(0.0), schedule.max_dt, schedule.n_steps
    )

    truncation_delta = None
    if truncation_check:
        try:
            larger = _final_means(cfg, schedule, in_spec, cutoff + 1, frame, sign, oracle_limit, coupling)
            truncation_delta = float(np.max(np.abs(larger - out_measurement.means)))
        except OracleTooLarge as e:
            warnings.append(f"truncation check skipped: {e}")

    notes = [UNCOMPUTE_NOTE]
    if coupling is PhotonCoupling.FULL:
        notes.append(FULL_COUPLING_NOTE)
    elif cfg.dim == 1:
        notes.append(PHOTON_CAVEAT_1D)
    charge_in, charge_out = trace[0]["charge"], trace[-1]["charge"]
    L.info(
        f"Scattering done: survival {survival:.6f}, constraint max {constraint_max:.3e}, "
        f"charge drift {abs(charge_out - charge_in):.2e}"
    )
    return ScatteringReport(
        config=config or {},
        schedule=schedule,
        seed=seed,
        cutoff=cutoff,
        frame=Frame(frame).value,
        sign=sign.name.lower(),
        in_measurement=in_measurement,
        out_measurement=out_measurement,
        constraint_max=constraint_max,
        gauss_max=gauss_max,
        charge_in=charge_in,
        charge_out=charge_out,
        survival=survival,
        trotter_bound=bound,
        truncation_delta=truncation_delta,
        samples=out_measurement.sample(n_samples, seed),
        scalar_mass=cfg.scalar_mass,
        trace=trace,
        notes=notes,
        warnings=warnings,
        constraint_violated=violated,
        coupling=coupling.value,
    )


def amplitude_overlap(
    cfg: LatticeConfig,
    schedule: CouplingSchedule,
    in_spec: WavepacketSpec,
    out_spec: WavepacketSpec,
    cutoff: int = 4,
    frame: Frame = Frame.PARTICLE,
    sign: TrotterSign = TrotterSign.LITERAL,
    exact: bool = False,
    oracle_limit: int = ORACLE_LIMIT,
) -> complex:
    """<out| U U_total |in> in the truncated space, out-states in the free basis.

    Raises:
        OracleTooLarge: If the Fock space exceeds the oracle limit.
    """
    pipeline = _prepare(cfg, in_spec, cutoff, frame, oracle_limit)
    psi = evolve(pipeline.hamiltonians, schedule, pipeline.psi_in, sign, exact=exact)
    psi = uncompute(pipeline.space, cfg, psi)
    return complex(np.vdot(free_state(pipeline.space, out_spec), psi))


@dataclass(frozen=True)
class TrotterOrderFit:
    dts: List[float]
    errors: List[float]
    slope: float

    def as_rows(self):
        return [{"dt": dt, "error": err} for dt, err in zip(self.dts, self.errors)]

    def as_dict(self):
        return {"rows": self.as_rows(), "slope": self.slope}


def trotter_order(
    cfg: LatticeConfig,
    schedule: CouplingSchedule,
    in_spec: WavepacketSpec,
    dts: Sequence[float],
    cutoff: int = 4,
    sign: TrotterSign = TrotterSign.LITERAL,
    oracle_limit: int = ORACLE_LIMIT,
) -> TrotterOrderFit:
    """Global Trotter error ||psi_trotter - psi_exact|| per step size and its log-log slope.

    The oracle exponentiates the full Hamiltonian stepwise on the same schedule,
    so only the splitting error is measured.
    """
    pipeline = _prepare(cfg, in_spec, cutoff, Frame.PARTICLE, oracle_limit)
    estimator = TrendEstimator(log_x=True, log_y=True)
    errors = []
    for dt in dts:
        stepped = schedule.with_dt(dt)
        split = evolve(pipeline.hamiltonians, stepped, pipeline.psi_in, sign)
        oracle = evolve(pipeline.hamiltonians, stepped, pipeline.psi_in, sign, exact=True)
        error = float(np.linalg.norm(split - oracle))
        L.info(f"Trotter error at dt={dt}: {error:.3e}")
        errors.append(error)
        estimator.add(dt, max(error, 1e-300))
    slope = estimator.slope if len(dts) > 1 else float("nan")
    return TrotterOrderFit(list(dts), errors, float(slope))


def thread_count() -> int:
    value = os.environ.get(ENV_THREADS)
    if value:
        try:
            return max(1, int(value))
        except ValueError:
            L.warning(f"Ignoring {ENV_THREADS}={value!r}; expected an integer")
    return os.cpu_count() or 1


async def sweep(runs: Sequence[dict], threads: Optional[int] = None) -> List[ScatteringReport]:
    """Runs independent run_scattering keyword sets concurrently; results keep input order."""
    semaphore = asyncio.Semaphore(threads or thread_count())

    async def one(kwargs):
        async with semaphore:
            return await asyncio.to_thread(run_scattering, **kwargs)

    L.info(f"Sweeping {len(runs)} runs")
    return list(await asyncio.gather(*(one(kwargs) for kwargs in runs)))
