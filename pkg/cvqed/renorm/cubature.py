"""
Brillouin-zone integrals on top of scipy's adaptive cubature.

scipy.integrate.cubature bisects the worst region along every axis with a
tensor-product 15-point Gauss-Kronrod rule until every component of the
estimate meets the absolute tolerance. The evaluation budget is translated
into a subdivision limit.
"""
import itertools
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from cvqed.common.constants import CUBATURE_BUDGET, HEADLINE_TOL
from cvqed.common.errors import QuadratureNotConverged
from cvqed.common.logging import get_logger

L = get_logger(__name__)

RULE = "gk15"
RULE_POINTS = 15


@dataclass(frozen=True)
class CubatureResult:
    value: np.ndarray
    error: float
    evaluations: int
    subdivisions: int

    @property
    def scalar(self) -> float:
        return float(np.atleast_1d(self.value)[0])


def subdivision_limit(dim: int, budget: int) -> int:
    """Number of 2^dim-way splits that fit in an evaluation budget."""
    per_split = (2**dim) * RULE_POINTS**dim
    return max(1, (budget - RULE_POINTS**dim) // per_split)


def integrate_box(func: Callable, lower, upper, tol: float = HEADLINE_TOL, budget: int = CUBATURE_BUDGET) -> CubatureResult:
    """Integrates a vectorised func over the box [lower, upper].

    func takes an (n, dim) array and returns shape (n,) or (n, p).

    Raises:
        QuadratureNotConverged: If the budget is spent before the tolerance is met.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    evaluations = 0

    def counted(points):
        nonlocal evaluations
        evaluations += len(points)
        return np.asarray(func(points), dtype=float).reshape(len(points), -1)

    result = integrate.cubature(
        counted,
        lower,
        upper,
        rule=RULE,
        atol=tol,
        rtol=0.0,
        max_subdivisions=subdivision_limit(len(lower), budget),
    )
    error = float(np.max(result.error))
    if result.status != "converged":
        raise QuadratureNotConverged(
            f"Error estimate {error:.3e} above {tol:.1e} after {evaluations} evaluations"
        )
    L.debug(f"Cubature converged: {result.subdivisions} subdivisions, {evaluations} evaluations, error {error:.2e}")
    return CubatureResult(np.atleast_1d(result.estimate), error, evaluations, int(result.subdivisions))


def integrate_brillouin_zone(
    func: Callable,
    dim: int = 3,
    tol: float = HEADLINE_TOL,
    budget: int = CUBATURE_BUDGET,
    even: bool = True,
) -> CubatureResult:
    """integral over [-pi, pi]^dim of func(l) d^dim l / (2 pi)^dim.

    Even integrands are folded onto [0, pi]^dim with weight 2^dim; otherwise
    all reflections are summed on the folded cube.
    """
    norm = (2.0 * np.pi) ** dim
    signs = np.array(list(itertools.product((1.0, -1.0), repeat=dim)))

    def folded(points):
        if even:
            return (2**dim / norm) * np.asarray(func(points))
        total = sum(np.asarray(func(points * s)) for s in signs)
        return total / norm

    return integrate_box(folded, np.zeros(dim), np.full(dim, np.pi), tol=tol, budget=budget)
