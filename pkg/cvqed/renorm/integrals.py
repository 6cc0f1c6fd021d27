"""
One-loop integrals of the lattice theory.

Every Minkowski l0 integral is done analytically first. With the reduction
i int dl0/(2 pi) of the propagator products:

    1 / (l0^2 - a^2)                       -> 1 / (2a)
    1 / ((l0^2 - a^2)((l0 - k0)^2 - b^2))  -> I2(a, b, k0) = -(a + b) / (2ab((a + b)^2 - k0^2))

what remains is a smooth momentum integral over the Brillouin zone, done by
adaptive cubature in lattice units (a = 1).
"""
import enum
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import qmc_quad
from scipy.stats import qmc

from cvqed.common.constants import (
    CUBATURE_BUDGET,
    EXPANSION_TOL,
    HEADLINE_TOL,
    REFERENCE_LOG_COEFFICIENT,
    REFERENCE_PI1_INTERCEPT,
)
from cvqed.common.errors import ConfigError, ExpansionUnstable, PoleProximity
from cvqed.common.logging import get_logger
from cvqed.common.trend import TrendEstimator
from cvqed.lattice import continuum_frequency, lattice_frequency
from cvqed.renorm.cubature import integrate_brillouin_zone

L = get_logger(__name__)

FEYNMAN_NODES = 8
POLE_TOL = 1e-6
K0_STEP = 1e-3
K_STEP = 1e-2
EXPANSION_SPREAD = 0.05
INTERCEPT_TOL = 0.002


class Kernel(enum.Enum):
    LATTICE = "lattice"
    CONTINUUM = "continuum"


def frequency(l: np.ndarray, mass: float, kernel: Kernel = Kernel.LATTICE) -> np.ndarray:
    if kernel is Kernel.LATTICE:
        return lattice_frequency(l, mass)
    return continuum_frequency(l, mass)


@dataclass(frozen=True)
class LoopIntegralResult:
    value: float
    abs_error_estimate: float
    evaluations: int
    parameters: dict = field(default_factory=dict)

    def as_dict(self):
        return {
            "value": self.value,
            "abs_error_estimate": self.abs_error_estimate,
            "evaluations": self.evaluations,
            "parameters": dict(self.parameters),
        }


@lru_cache(maxsize=64)
def tadpole(m: float, dim: int = 3, tol: float = HEADLINE_TOL, budget: int = CUBATURE_BUDGET):
    """I0(m) = int d^d l/(2 pi)^d 1/omega(l) with the lattice dispersion."""
    if m < 0:
        raise ConfigError(f"mass must be >= 0, got {m}")
    result = integrate_brillouin_zone(lambda l: 1.0 / lattice_frequency(l, m), dim=dim, tol=tol, budget=budget)
    L.info(f"Tadpole I0(m={m}) = {result.scalar:.6f} +- {result.error:.1e} ({result.evaluations} evaluations)")
    return result


def delta_m(e: float, m: float, dim: int = 3, tol: float = HEADLINE_TOL) -> LoopIntegralResult:
    """Mass counterterm delta_m = -6 e^2 int 1/(2 omega) = -3 e^2 I0(m)."""
    params = {"e": e, "m": m, "dim": dim}
    if e == 0:
        return LoopIntegralResult(0.0, 0.0, 0, params)
    result = tadpole(m, dim, tol)
    scale = 3.0 * e**2
    return LoopIntegralResult(-scale * result.scalar, scale * result.error, result.evaluations, params)


def pi2(m: float, dim: int = 3, tol: float = HEADLINE_TOL) -> LoopIntegralResult:
    """Tadpole polarization coefficient: Pi^(2) = 2 e^2 zeta1.zeta2 int 1/(2 omega) reported as -I0,
    so that Pi^(2) = -e^2 zeta1.zeta2 Pi_0 with Pi_0 = I0."""
    result = tadpole(m, dim, tol)
    return LoopIntegralResult(-result.scalar, result.error, result.evaluations, {"m": m, "dim": dim})


def _feynman_nodes(n_nodes: int = FEYNMAN_NODES):
    x, w = leggauss(n_nodes)
    return 0.5 * (x + 1.0), 0.5 * w


def polarization_density(
    l: np.ndarray,
    k0_squared: float,
    kvec: Sequence[float],
    m: float,
    literal: bool = False,
    kernel: Kernel = Kernel.CONTINUUM,
) -> np.ndarray:
    """Feynman-parameter integrand of Pi^(1) at every momentum l, x integrated by Gauss-Legendre.

    The loop momentum is routed as l - (1 - x) k and l + x k through the two
    propagators, so the continuum denominator depends on k only through
    x (1 - x) k^2 and the cube boundary never sees the external momentum.

    Squared-frequency reading: int dx l_1^2 D^{-3/2},
        D = x omega^2(l - (1 - x) k) + (1 - x) omega^2(l + x k) - x (1 - x) k0^2.
    Literal reading: 2 int dx l_1^2 [x omega(l - (1 - x) k) + (1 - x) omega(l + x k) - x (1 - x) k0^2]^{-1/2}.
    """
    x, w = _feynman_nodes()
    kvec = np.asarray(kvec, dtype=float)
    power = 1 if literal else 2
    columns = []
    for xj in x:
        first = frequency(l - (1 - xj) * kvec, m, kernel) ** power
        second = frequency(l + xj * kvec, m, kernel) ** power
        columns.append(xj * first + (1 - xj) * second - xj * (1 - xj) * k0_squared)
    base = np.stack(columns, axis=1)
    numerator = l[:, 0] ** 2
    if literal:
        values = 2.0 * base**-0.5
    else:
        values = base**-1.5
    return numerator * (values @ w)


def _check_threshold(k0: float, min_sum: float, what: str):
    if abs(k0) > POLE_TOL and abs(k0) >= min_sum - POLE_TOL:
        raise PoleProximity(f"|k0| = {abs(k0):.6g} reaches the {what} threshold {min_sum:.6g}")


def _coarse_grid(dim: int, n: int = 24) -> np.ndarray:
    axis = np.linspace(-np.pi, np.pi, n)
    return np.stack([g.ravel() for g in np.meshgrid(*([axis] * dim), indexing="ij")], axis=1)


def closed_form_pi1(m: float) -> float:
    """1/(48 pi^2) log(1/m^2) + 0.003."""
    return float(REFERENCE_LOG_COEFFICIENT * np.log(1.0 / m**2) + REFERENCE_PI1_INTERCEPT)


@dataclass(frozen=True)
class PolarizationExpansion:
    """Pi^(1) at the requested kinematics and its coefficients Pi_0 + k0^2 Pi_1 + k^2 Pi_2."""

    polarization: LoopIntegralResult
    pi0: LoopIntegralResult
    pi1: LoopIntegralResult
    pi2: LoopIntegralResult
    literal: bool
    kernel: Kernel
    m: float

    @property
    def variant(self) -> str:
        return f"{self.kernel.value}/{'literal' if self.literal else 'squared'}"

    @property
    def remainder(self) -> float:
        """Pi_1 + Pi_2, zero when the two coefficients are exactly opposite."""
        return self.pi1.value + self.pi2.value

    @property
    def remainder_error(self) -> float:
        return self.pi1.abs_error_estimate + self.pi2.abs_error_estimate

    @property
    def conforming(self) -> bool:
        """Pi_1 = -Pi_2 within the combined error estimates."""
        return abs(self.remainder) <= self.remainder_error

    @property
    def reference_pi1(self) -> float:
        return closed_form_pi1(self.m)

    @property
    def matches_reference(self) -> bool:
        """Whether this variant reproduces Pi_1 = -Pi_2 = closed_form_pi1(m)."""
        return self.conforming and abs(self.pi1.value - self.reference_pi1) <= INTERCEPT_TOL

    def as_dict(self):
        return {
            "variant": self.variant,
            "kernel": self.kernel.value,
            "m": self.m,
            "polarization": self.polarization.as_dict(),
            "pi0": self.pi0.as_dict(),
            "pi1": self.pi1.as_dict(),
            "pi2": self.pi2.as_dict(),
            "pi1_plus_pi2": self.remainder,
            "pi1_plus_pi2_error": self.remainder_error,
            "conforming": self.conforming,
            "reference_pi1": self.reference_pi1,
            "matches_reference": self.matches_reference,
        }


def _richardson(fine: float, coarse: float, cubature_error: float, name: str, params: dict) -> LoopIntegralResult:
    spread = abs(fine - coarse)
    if spread > EXPANSION_SPREAD * abs(fine) + 10.0 * cubature_error:
        raise ExpansionUnstable(f"{name}: step h gives {fine:.6g}, step 2h gives {coarse:.6g}")
    return LoopIntegralResult((4.0 * fine - coarse) / 3.0, cubature_error + spread / 3.0, 0, params)


def pi1(
    k0: float = 0.0,
    kvec: Optional[Sequence[float]] = None,
    m: float = 0.1,
    literal: bool = False,
    kernel: Kernel = Kernel.CONTINUUM,
    tol: float = EXPANSION_TOL,
    budget: int = CUBATURE_BUDGET,
) -> PolarizationExpansion:
    """Pi^(1) with zeta = e_1, and its small-momentum coefficients.

    Pi_1 is a central difference in k0^2 with steps h and 2h (h = 1e-3 m^2),
    Pi_2 a symmetric second difference in k along the last axis (k = 1e-2 m),
    both Richardson-extrapolated from the two steps.

    Raises:
        ConfigError: If m <= 0.
        ExpansionUnstable: If the two step sizes disagree beyond noise.
        PoleProximity: If k0 reaches the two-particle threshold.
    """
    if m <= 0:
        raise ConfigError(f"Pi_1 diverges logarithmically at m = 0; need m > 0, got {m}")
    dim = 3
    kvec = np.zeros(dim) if kvec is None else np.asarray(kvec, dtype=float)
    if kvec.shape != (dim,):
        raise ConfigError(f"kvec must have {dim} components")
    params = {"m": m, "k0": k0, "kvec": kvec.tolist(), "literal": literal, "kernel": kernel.value}

    grid = _coarse_grid(dim)
    _check_threshold(k0, float(np.min(frequency(grid, m, kernel) + frequency(grid + kvec, m, kernel))), "pair")

    h = K0_STEP * m**2
    kappa = K_STEP * m
    axis = np.zeros(dim)
    axis[-1] = 1.0
    zero = np.zeros(dim)

    def expansion(l):
        f = lambda k0sq, k: polarization_density(l, k0sq, k, m, literal, kernel)
        base = f(0.0, zero)
        columns = [base]
        for step in (h, 2 * h):
            columns.append((f(step, zero) - f(-step, zero)) / (2 * step))
        for step in (kappa, 2 * kappa):
            columns.append((f(0.0, step * axis) + f(0.0, -step * axis) - 2 * base) / (2 * step**2))
        return np.stack(columns, axis=1)

    result = integrate_brillouin_zone(expansion, dim=dim, tol=tol, budget=budget)
    values, error = result.value, result.error
    pi0_result = LoopIntegralResult(float(values[0]), error, result.evaluations, params)
    pi1_result = _richardson(float(values[1]), float(values[2]), error, "Pi_1", params)
    pi2_result = _richardson(float(values[3]), float(values[4]), error, "Pi_2", params)

    if k0 == 0 and not np.any(kvec):
        polarization = pi0_result
    else:
        kinematic = integrate_brillouin_zone(
            lambda l: polarization_density(l, k0**2, kvec, m, literal, kernel),
            dim=dim, tol=tol, budget=budget, even=False,
        )
        polarization = LoopIntegralResult(kinematic.scalar, kinematic.error, kinematic.evaluations, params)

    L.info(
        f"Pi^(1) m={m} ({kernel.value}, {'literal' if literal else 'squared'}): "
        f"Pi_0={pi0_result.value:.6f} Pi_1={pi1_result.value:.6f} Pi_2={pi2_result.value:.6f}"
    )
    expansion = PolarizationExpansion(polarization, pi0_result, pi1_result, pi2_result, literal, kernel, m)
    if not expansion.conforming:
        L.warning(
            f"Pi_1 + Pi_2 = {expansion.remainder:.3e} exceeds the combined error {expansion.remainder_error:.1e} "
            f"({expansion.variant}); the expansion is non-conforming"
        )
    return expansion


@dataclass(frozen=True)
class LogFit:
    """Pi_1(m) = slope * log(1/m^2) + intercept over a few decades of m."""

    slope: float
    intercept: float
    points: list

    @property
    def slope_deviation(self) -> float:
        return self.slope / REFERENCE_LOG_COEFFICIENT - 1.0

    @property
    def intercept_deviation(self) -> float:
        return self.intercept - REFERENCE_PI1_INTERCEPT

    def as_dict(self):
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "reference_slope": REFERENCE_LOG_COEFFICIENT,
            "reference_intercept": REFERENCE_PI1_INTERCEPT,
            "slope_relative_deviation": self.slope_deviation,
            "points": self.points,
        }


def fit_log_coefficient(
    masses: Sequence[float] = (1e-1, 1e-2, 1e-3),
    kernel: Kernel = Kernel.CONTINUUM,
    literal: bool = False,
    tol: float = EXPANSION_TOL,
) -> LogFit:
    """Linear regression of Pi_1(m) against log(1/m^2)."""
    estimator = TrendEstimator()
    points = []
    for m in masses:
        coefficient = pi1(m=m, kernel=kernel, literal=literal, tol=tol).pi1
        x = float(np.log(1.0 / m**2))
        estimator.add(x, coefficient.value)
        points.append({"m": m, "log_inverse_m2": x, "pi1": coefficient.value, "error": coefficient.abs_error_estimate})
    slope, intercept = estimator.fit()
    L.info(f"Log fit ({kernel.value}): slope {slope:.6f} (reference {REFERENCE_LOG_COEFFICIENT:.6f}), intercept {intercept:.5f}")
    return LogFit(slope, intercept, points)


@dataclass(frozen=True)
class ChargeShift:
    e: float
    m: float
    delta_e: float
    e0_squared: float
    closed_form: float
    pi1: Optional[LoopIntegralResult]

    def as_dict(self):
        return {
            "e": self.e,
            "m": self.m,
            "delta_e": self.delta_e,
            "e0_squared": self.e0_squared,
            "closed_form": self.closed_form,
            "pi1": self.pi1.as_dict() if self.pi1 else None,
        }


def delta_e(e: float, m: float, kernel: Kernel = Kernel.CONTINUUM, tol: float = EXPANSION_TOL) -> ChargeShift:
    """Bare charge e0^2 = e^2 + delta_e with delta_e = Pi_1(m) e^4. Informational only."""
    if m <= 0:
        raise ConfigError(f"delta_e needs m > 0, got {m}")
    closed = closed_form_pi1(m) * e**4
    if e == 0:
        return ChargeShift(e, m, 0.0, 0.0, 0.0, None)
    coefficient = pi1(m=m, kernel=kernel, tol=tol).pi1
    shift = coefficient.value * e**4
    return ChargeShift(e, m, shift, e**2 + shift, float(closed), coefficient)


def reduced_pair(a: np.ndarray, b: np.ndarray, k0: float) -> np.ndarray:
    """I2(a, b, k0) = -(a + b) / (2ab((a + b)^2 - k0^2))."""
    s = a + b
    return -s / (2.0 * a * b * (s**2 - k0**2))


@dataclass(frozen=True)
class SelfEnergy:
    sigma1: LoopIntegralResult
    sigma2: LoopIntegralResult

    @property
    def total(self) -> float:
        return self.sigma1.value + self.sigma2.value

    @property
    def error(self) -> float:
        return self.sigma1.abs_error_estimate + self.sigma2.abs_error_estimate

    def as_dict(self):
        return {"sigma1": self.sigma1.as_dict(), "sigma2": self.sigma2.as_dict(), "total": self.total}


def sigma_phi(
    k0: float,
    kvec: Sequence[float],
    m: float,
    e: float,
    photon_mass: float = 0.0,
    dim: int = 3,
    tol: float = HEADLINE_TOL,
) -> SelfEnergy:
    """Scalar self-energy pair at external momentum (k0, k).

    Sigma1 = 2 e^2 int [1/a - 1/(2b) + I2(a, b, k0)(2b^2 - a^2 + 2 k0^2 - s)],
    Sigma2 = -4 e^2 int 1/a,
    with a = omega_gamma(l), b = omega(l + k), s = 4 sum sin^2((l + 2k)/2).
    The tolerance applies to the integrals before the e^2 factors.

    Raises:
        PoleProximity: If k0 reaches a + b somewhere in the zone.
    """
    kvec = np.asarray(kvec, dtype=float)
    if kvec.shape != (dim,):
        raise ConfigError(f"kvec must have {dim} components")
    params = {"k0": k0, "kvec": kvec.tolist(), "m": m, "e": e, "photon_mass": photon_mass}
    grid = _coarse_grid(dim)
    grid_sum = lattice_frequency(grid, photon_mass) + lattice_frequency(grid + kvec, m)
    _check_threshold(k0, min(float(np.min(grid_sum)), photon_mass + float(lattice_frequency(kvec, m))), "scalar-photon")

    def one_loop(l):
        a = lattice_frequency(l, photon_mass)
        b = lattice_frequency(l + kvec, m)
        s = 4.0 * np.sum(np.sin(0.5 * (l + 2.0 * kvec)) ** 2, axis=-1)
        return 1.0 / a - 0.5 / b + reduced_pair(a, b, k0) * (2 * b**2 - a**2 + 2 * k0**2 - s)

    even = not np.any(kvec)
    first = integrate_brillouin_zone(one_loop, dim=dim, tol=tol, even=even)
    second = integrate_brillouin_zone(lambda l: 1.0 / lattice_frequency(l, photon_mass), dim=dim, tol=tol, even=True)
    sigma1 = LoopIntegralResult(2 * e**2 * first.scalar, 2 * e**2 * first.error, first.evaluations, params)
    sigma2 = LoopIntegralResult(-4 * e**2 * second.scalar, 4 * e**2 * second.error, second.evaluations, params)
    return SelfEnergy(sigma1, sigma2)


@dataclass(frozen=True)
class MonteCarloCheck:
    name: str
    value: float
    standard_error: float
    cubature_value: float
    cubature_error: float

    @property
    def agrees(self) -> bool:
        combined = np.hypot(self.standard_error, self.cubature_error)
        return bool(abs(self.value - self.cubature_value) <= 3.0 * combined)

    def as_dict(self):
        return {
            "name": self.name,
            "value": self.value,
            "standard_error": self.standard_error,
            "cubature_value": self.cubature_value,
            "cubature_error": self.cubature_error,
            "agrees": self.agrees,
        }


MONTE_CARLO_CONSTANTS = ("delta_m", "pi0", "pi1")


def monte_carlo_crosscheck(
    name: str,
    m: float = 0.0,
    seed: int = 12345,
    n_points: int = 2**14,
    n_estimates: int = 8,
) -> MonteCarloCheck:
    """Scrambled-Sobol estimate of a headline constant against its cubature value.

    Args:
        name: "delta_m" (per e^2), "pi0", or "pi1" (needs m > 0).
    """
    dim = 3
    norm = 2**dim / (2.0 * np.pi) ** dim
    if name in ("delta_m", "pi0"):
        scale = -3.0 if name == "delta_m" else 1.0
        integrand = lambda l: scale * norm / lattice_frequency(l, m)
        reference = tadpole(m, dim)
        cubature_value, cubature_error = scale * reference.scalar, abs(scale) * reference.error
    elif name == "pi1":
        expansion = pi1(m=m)
        h = K0_STEP * m**2
        zero = np.zeros(dim)

        def integrand(l):
            f = lambda k0sq: polarization_density(l, k0sq, zero, m)
            return norm * (f(h) - f(-h)) / (2 * h)

        cubature_value, cubature_error = expansion.pi1.value, expansion.pi1.abs_error_estimate
    else:
        raise ConfigError(f"No Monte Carlo check for '{name}'; choose one of {MONTE_CARLO_CONSTANTS}")

    engine = qmc.Sobol(d=dim, scramble=True, seed=np.random.default_rng(seed))
    result = qmc_quad(
        lambda x: integrand(np.asarray(x).T),
        np.zeros(dim),
        np.full(dim, np.pi),
        n_estimates=n_estimates,
        n_points=n_points,
        qrng=engine,
    )
    check = MonteCarloCheck(name, float(result.integral), float(result.standard_error), cubature_value, cubature_error)
    L.info(
        f"Monte Carlo {name}: {check.value:.6f} +- {check.standard_error:.1e} vs cubature {cubature_value:.6f}"
        f" ({'agrees' if check.agrees else 'DISAGREES'})"
    )
    return check
