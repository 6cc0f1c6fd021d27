from dataclasses import dataclass, field
from typing import List, Optional, Sequence

from cvqed.common.constants import (
    HEADLINE_TOL,
    REFERENCE_DELTA_M,
    REFERENCE_LOG_COEFFICIENT,
    REFERENCE_PI0,
    REFERENCE_PI1_INTERCEPT,
)
from cvqed.common.errors import ConfigError
from cvqed.common.logging import get_logger
from cvqed.renorm.integrals import (
    Kernel,
    closed_form_pi1,
    delta_e,
    delta_m,
    fit_log_coefficient,
    monte_carlo_crosscheck,
    pi1,
    pi2,
)

L = get_logger(__name__)

CONSTANTS = ("delta_m", "pi0", "identity", "pi1", "pi2", "delta_e", "log_slope", "log_intercept")
DEFAULT_CONSTANTS = ("delta_m", "pi0", "identity")
DEFAULT_EXPANSION_MASS = 0.01

# Allowed deviation for the matches-reference flag.
_MATCH = {"delta_m": 0.01, "pi0": 0.003, "log_intercept": 0.002}
# Constants carrying mass dimension 2, rescaled by 1/a^2 when a spacing is given.
_DIMENSIONFUL = ("delta_m", "pi0")


@dataclass
class ConstantRow:
    name: str
    value: float
    error: float
    reference: Optional[float] = None
    flags: List[str] = field(default_factory=list)
    physical: Optional[float] = None

    @property
    def deviation(self) -> Optional[float]:
        if self.reference is None:
            return None
        return self.value - self.reference

    def as_dict(self):
        return {
            "name": self.name,
            "value": self.value,
            "error": self.error,
            "reference": self.reference,
            "deviation": self.deviation,
            "flags": ",".join(self.flags),
            "physical": self.physical,
        }


def _flag_match(row: ConstantRow):
    allowed = _MATCH.get(row.name)
    if allowed is not None and row.deviation is not None and abs(row.deviation) <= allowed:
        row.flags.append("matches-reference")
    if row.name == "log_slope" and abs(row.value / REFERENCE_LOG_COEFFICIENT - 1.0) <= 0.05:
        row.flags.append("matches-reference")


def constants_table(
    names: Sequence[str] = DEFAULT_CONSTANTS,
    m: float = 0.0,
    e: float = 0.3,
    kernel: Kernel = Kernel.CONTINUUM,
    literal: bool = False,
    spacing: Optional[float] = None,
    monte_carlo: bool = False,
    seed: int = 12345,
    tol: float = HEADLINE_TOL,
) -> List[ConstantRow]:
    """Evaluates the requested one-loop constants.

    Tadpole constants use m as given; the log-divergent Pi_1 family needs
    m > 0 and falls back to m = 0.01 when m is zero.

    Args:
        names: Constants from CONSTANTS, or ["all"].
        m: Scalar mass in lattice units.
        e: Coupling for delta_e.
        kernel: Dispersion inside the Pi^(1) loop.
        literal: Use the literal Feynman-parameter denominator.
        spacing: Lattice spacing a; adds restored-unit values.
        monte_carlo: Append quasi-Monte-Carlo cross-check rows.
        seed: Seed of the cross-check.
        tol: Cubature tolerance of the tadpoles.
    """
    names = list(CONSTANTS) if list(names) == ["all"] else list(names)
    unknown = [n for n in names if n not in CONSTANTS]
    if unknown:
        raise ConfigError(f"Unknown constants {unknown}; choose from {CONSTANTS}")
    expansion_mass = m if m > 0 else DEFAULT_EXPANSION_MASS
    rows = []
    expansion = None
    log_fit = None

    def get_expansion():
        nonlocal expansion
        if expansion is None:
            expansion = pi1(m=expansion_mass, kernel=kernel, literal=literal)
        return expansion

    def get_log_fit():
        nonlocal log_fit
        if log_fit is None:
            log_fit = fit_log_coefficient(kernel=kernel, literal=literal)
        return log_fit

    for name in names:
        if name == "delta_m":
            result = delta_m(1.0, m, tol=tol)
            row = ConstantRow(name, result.value, result.abs_error_estimate, REFERENCE_DELTA_M)
        elif name == "pi0":
            result = pi2(m, tol=tol)
            row = ConstantRow(name, abs(result.value), result.abs_error_estimate, REFERENCE_PI0)
        elif name == "identity":
            dm, p0 = delta_m(1.0, m, tol=tol), pi2(m, tol=tol)
            row = ConstantRow(
                name,
                abs(dm.value) - 3.0 * abs(p0.value),
                dm.abs_error_estimate + 3.0 * p0.abs_error_estimate,
                0.0,
            )
            if abs(row.value) <= row.error:
                row.flags.append("matches-reference")
        elif name == "pi1":
            result = get_expansion().pi1
            row = ConstantRow(name, result.value, result.abs_error_estimate, closed_form_pi1(expansion_mass), ["log-divergent"])
        elif name == "pi2":
            result = get_expansion().pi2
            row = ConstantRow(name, result.value, result.abs_error_estimate, -closed_form_pi1(expansion_mass), ["log-divergent"])
        elif name == "delta_e":
            shift = delta_e(e, expansion_mass, kernel=kernel)
            error = shift.pi1.abs_error_estimate * e**4 if shift.pi1 else 0.0
            row = ConstantRow(name, shift.delta_e, error, shift.closed_form, ["log-divergent"])
        else:
            fit = get_log_fit()
            if name == "log_slope":
                row = ConstantRow(name, fit.slope, 0.0, REFERENCE_LOG_COEFFICIENT)
            else:
                row = ConstantRow(name, fit.intercept, 0.0, REFERENCE_PI1_INTERCEPT)
        if name in ("pi1", "pi2") and not get_expansion().conforming:
            row.flags.append("non-conforming")
        if name in ("pi1", "pi2", "delta_e") and m <= 0:
            row.flags.append(f"m={expansion_mass}")
        if name in ("pi1", "pi2", "log_slope", "log_intercept", "delta_e"):
            row.flags.append(f"kernel={kernel.value}")
        _flag_match(row)
        if spacing is not None:
            row.physical = row.value / spacing**2 if name in _DIMENSIONFUL else row.value
        rows.append(row)

    if monte_carlo:
        for name in ("delta_m", "pi0", "pi1"):
            check = monte_carlo_crosscheck(name, m=expansion_mass if name == "pi1" else m, seed=seed)
            row = ConstantRow(f"mc_{name}", check.value, check.standard_error, check.cubature_value)
            row.flags.append("agrees" if check.agrees else "disagrees")
            rows.append(row)

    L.info(f"Constants table with {len(rows)} rows")
    return rows
