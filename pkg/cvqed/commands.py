"""
Pipelines behind the command-line subcommands and the HTTP API.

Every command takes a resolved RunConfig and returns a CommandResult: a
nested document (always carrying version, config hash, seed and the resolved
config), an optional flat table, side artifacts such as circuit files, and
the exit code the command line should report.
"""
import asyncio
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from cvqed.circuits.decompose import groundstate_circuit
from cvqed.codecs.circuit_coder import CircuitCoder
from cvqed.codecs.report_writers import CsvWriter, get_writer
from cvqed.codecs.state_coder import StateCoder
from cvqed.common.constants import CIRCUIT_TOL, EXIT_OK, EXIT_VALIDATION, IDENTITY_TOL
from cvqed.common.logging import get_logger
from cvqed.common.trend import CheckStatus
from cvqed.config import RunConfig
from cvqed.fock.hamiltonians import gauss_constraint_form
from cvqed.fock.space import FockSpace
from cvqed.fock.states import prepare_ground_state
from cvqed.gaussian_sim import groundstate, number_means, to_particle_frame, uncertainty_ok
from cvqed.lattice import dispersion_table, mode_layout
from cvqed.modes import groundstate_unitary
from cvqed.renorm.report import constants_table
from cvqed.scattering import run_scattering, sweep, trotter_order
from cvqed.validation import TRUNCATION_CUTOFF, check_groundstate_fidelity, run_suite

L = get_logger(__name__)


@dataclass
class CommandResult:
    document: dict
    rows: List[dict] = field(default_factory=list)
    artifacts: Dict[str, str] = field(default_factory=dict)
    exit_code: int = EXIT_OK

    def render(self, fmt: str) -> str:
        """JSON renders the whole document; text and CSV render the table."""
        writer = get_writer(fmt)
        if fmt == "json" or not self.rows:
            return writer.format_document(self.document)
        return writer.format_rows(self.rows)

    def save(self, out_dir: str, stem: str, formats: Sequence[str]) -> List[str]:
        os.makedirs(out_dir, exist_ok=True)
        paths = []
        for fmt in formats:
            path = os.path.join(out_dir, f"{stem}.{get_writer(fmt).extension}")
            with open(path, "w") as f:
                f.write(self.render(fmt))
            paths.append(path)
        for name, text in self.artifacts.items():
            path = os.path.join(out_dir, name)
            with open(path, "w") as f:
                f.write(text)
            paths.append(path)
        L.info(f"Wrote {', '.join(paths)}")
        return paths


def cmd_renorm(config: RunConfig) -> CommandResult:
    rows = [row.as_dict() for row in constants_table(**config.renorm_kwargs())]
    return CommandResult({**config.provenance(), "constants": rows}, rows)


def cmd_dispersion(config: RunConfig) -> CommandResult:
    cfg = config.lattice()
    rows = dispersion_table(cfg)
    return CommandResult({**config.provenance(), "dispersion": rows}, rows)


def _circuit_artifact(cfg, result: CommandResult, checks: dict):
    text = CircuitCoder.encode_circuit(groundstate_circuit(cfg))
    error = CircuitCoder.decode_circuit(text).to_symplectic().distance(groundstate_unitary(cfg))
    checks["circuit_roundtrip"] = {"value": error, "passed": error <= CIRCUIT_TOL}
    result.artifacts["groundstate_circuit.txt"] = text


def cmd_groundstate(config: RunConfig, emit_circuit: bool = False, emit_state: bool = False) -> CommandResult:
    """Prepares |Omega> = U^dagger |0> on the configured backend and checks it."""
    cfg = config.lattice()
    layout = mode_layout(cfg)
    backend = config["backend"]
    checks = {}
    result = CommandResult({})

    if backend["kind"] == "gaussian":
        state = groundstate(cfg)
        means = number_means(to_particle_frame(cfg, state))
        modes = list(range(cfg.n_modes))
        checks["particle_numbers"] = {
            "value": float(np.max(np.abs(means))),
            "passed": bool(np.max(np.abs(means)) <= IDENTITY_TOL),
        }
        checks["uncertainty"] = {"passed": uncertainty_ok(state)}
        checks["symplectic_error"] = {"value": groundstate_unitary(cfg).symplectic_error()}
        if emit_state:
            result.artifacts["groundstate_state.txt"] = StateCoder.encode_state(state)
    else:
        cutoff = backend["n_max"]
        space = FockSpace(layout, cutoff, config.frame, oracle_limit=backend["oracle_limit"])
        psi = prepare_ground_state(space, cfg)
        modes = space.modes
        means = np.array([float(np.linalg.norm(space.particle_ladder(m) @ psi)) ** 2 for m in modes])
        constraints = [
            float(np.linalg.norm(space.materialize(form) @ psi))
            for form in (gauss_constraint_form(space, cfg, k) for k in range(cfg.n_sites))
            if not form.is_zero()
        ]
        fidelity = check_groundstate_fidelity(cfg, cutoff)
        checks["particle_numbers"] = {"value": float(np.max(means)), "passed": bool(np.max(means) <= IDENTITY_TOL)}
        checks["constraint"] = {"value": max(constraints, default=0.0)}
        checks["fidelity"] = {
            "value": 1.0 - fidelity.value,
            "status": fidelity.status.value,
            "passed": fidelity.status is not CheckStatus.FAILED,
        }
        if cutoff < TRUNCATION_CUTOFF:
            L.warning(f"Cutoff {cutoff} is below {TRUNCATION_CUTOFF}; truncation-sensitive results are indicative")

    if emit_circuit:
        _circuit_artifact(cfg, result, checks)

    result.rows = [
        {"mode": str(layout.locate(mode)), "number": float(means[slot])}
        for slot, mode in enumerate(modes)
    ]
    result.document = {**config.provenance(), "backend": backend["kind"], "checks": checks, "numbers": result.rows}
    if not all(c.get("passed", True) for c in checks.values()):
        result.exit_code = EXIT_VALIDATION
    return result


async def cmd_scatter(
    config: RunConfig,
    dts: Optional[Sequence[float]] = None,
    es: Optional[Sequence[float]] = None,
) -> CommandResult:
    """A single run, a Trotter-order table over several dt, or a sweep over several e_target."""
    if dts and len(dts) > 1:
        kwargs = config.scatter_kwargs()
        fit = await asyncio.to_thread(
            trotter_order, kwargs["cfg"], kwargs["schedule"], kwargs["in_spec"], dts,
            cutoff=kwargs["cutoff"], sign=kwargs["sign"], oracle_limit=kwargs["oracle_limit"],
        )
        return CommandResult({**config.provenance(), "trotter_order": fit.as_dict()}, fit.as_rows())

    if es and len(es) > 1:
        reports = await sweep([config.with_overrides(e=e).scatter_kwargs() for e in es])
        rows = [
            {
                "e_target": r.schedule.e_target,
                "survival": r.survival,
                "constraint_max": r.constraint_max,
                "charge_drift": r.charge_drift,
                "trotter_bound": r.trotter_bound,
            }
            for r in reports
        ]
        violated = any(r.constraint_violated for r in reports)
        document = {**config.provenance(), "runs": [r.as_dict() for r in reports]}
        return CommandResult(document, rows, exit_code=EXIT_VALIDATION if violated else EXIT_OK)

    report = await asyncio.to_thread(run_scattering, **config.scatter_kwargs())
    result = CommandResult({**config.provenance(), "report": report.as_dict()}, report.trace)
    result.artifacts["scatter_trace.csv"] = CsvWriter().format_rows(report.trace)
    if report.constraint_violated:
        result.exit_code = EXIT_VALIDATION
    return result


def cmd_validate(
    config: RunConfig,
    inject_symplectic_error: float = 0.0,
    include_renorm: bool = True,
    include_dynamics: bool = True,
) -> CommandResult:
    report = run_suite(
        config.lattice(),
        config["backend"]["n_max"],
        inject_symplectic_error=inject_symplectic_error,
        include_renorm=include_renorm,
        include_dynamics=include_dynamics,
    )
    rows = report.as_rows()
    document = {**config.provenance(), "passed": report.passed, "summary": report.summary(), "checks": rows}
    return CommandResult(document, rows, exit_code=EXIT_OK if report.passed else EXIT_VALIDATION)
