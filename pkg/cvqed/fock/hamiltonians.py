"""
Field operators and Hamiltonians on a truncated Fock space.

Fields are assembled from the position-space modes of every site:
    phi = (B + C^dagger)/sqrt(2),  pi = -i (C - B^dagger)/sqrt(2),
    A_i = (A_i + A_i^dagger)/sqrt(2),  varpi_i = (A_i - A_i^dagger)/(i sqrt(2)),
so that phi = (phi_1 + i phi_2)/sqrt(2) and pi = (pi_1 - i pi_2)/sqrt(2) with
phi_1 = (x_B + x_C)/sqrt(2), phi_2 = (p_B - p_C)/sqrt(2).
"""
import enum
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy import sparse
from scipy.linalg import orth
from scipy.sparse.linalg import norm as sparse_norm

from cvqed.common.logging import get_logger
from cvqed.fock.space import FockSpace, Frame, LinearForm
from cvqed.lattice import (
    FieldKind,
    LatticeConfig,
    all_coords,
    dispersion,
    momentum_vector,
    neighbor,
)

L = get_logger(__name__)

SQRT2 = np.sqrt(2.0)


class PhotonCoupling(enum.Enum):
    """Photon field seen by the charged current.

    TRANSVERSE drops the components of every photon momentum mode along k and
    -k, so the interaction commutes with every C(k) and longitudinal photons
    stay free. FULL couples all components as written.
    """

    TRANSVERSE = "transverse"
    FULL = "full"


@lru_cache(maxsize=None)
def transverse_kernel(cfg: LatticeConfig) -> np.ndarray:
    """K[i, j, x, y] = (1/N) sum_q cos(q.(x - y)) P_ij(q).

    P(q) projects off span{k(q), k(-q)}; at q = 0 it is the identity.
    """
    coords = np.array(all_coords(cfg.dim, cfg.extent))
    separation = coords[:, None, :] - coords[None, :, :]
    kernel = np.zeros((cfg.dim, cfg.dim, len(coords), len(coords)))
    for q in coords:
        k = momentum_vector(q, cfg.extent)
        directions = np.stack([k, momentum_vector((-q) % cfg.extent, cfg.extent)], axis=1)
        basis = orth(directions)
        projector = np.eye(cfg.dim) - basis @ basis.T
        kernel += projector[:, :, None, None] * np.cos(separation @ k)[None, None, :, :]
    return kernel / len(coords)


def hermitize(op):
    return (0.5 * (op + op.conj().T)).tocsr()


def hermiticity_error(op) -> float:
    return float(sparse_norm(op - op.conj().T)) if sparse.issparse(op) else float(
        np.linalg.norm(op - op.conj().T)
    )


class FieldOperators:
    """Lazily materialized field operators of one Fock space."""

    def __init__(self, space: FockSpace):
        self.space = space
        self.cfg = space.cfg
        self.layout = space.layout
        self._cache = {}

    def _hardware(self, kind: FieldKind, site: int, component: int = 0) -> LinearForm:
        return self.space.hardware_form(self.layout.index(kind, site, component))

    # Linear forms

    def phi_form(self, site: int) -> LinearForm:
        return (self._hardware(FieldKind.SCALAR_B, site) + self._hardware(FieldKind.SCALAR_C, site).dagger()) / SQRT2

    def pi_form(self, site: int) -> LinearForm:
        return -1j * (self._hardware(FieldKind.SCALAR_C, site) - self._hardware(FieldKind.SCALAR_B, site).dagger()) / SQRT2

    def phi_components_form(self, site: int):
        phi = self.phi_form(site)
        return (phi + phi.dagger()) / SQRT2, (phi - phi.dagger()) / (1j * SQRT2)

    def pi_components_form(self, site: int):
        pi = self.pi_form(site)
        return (pi + pi.dagger()) / SQRT2, (pi.dagger() - pi) / (1j * SQRT2)

    def gauge_form(self, component: int, site: int) -> LinearForm:
        a = self._hardware(FieldKind.PHOTON, site, component)
        return (a + a.dagger()) / SQRT2

    def transverse_gauge_form(self, component: int, site: int) -> LinearForm:
        kernel = transverse_kernel(self.cfg)
        form = LinearForm.zeros(self.space.n_layout_modes)
        for other in range(self.cfg.dim):
            for source in range(self.cfg.n_sites):
                weight = kernel[component, other, site, source]
                if abs(weight) > 1e-14:
                    form = form + self.gauge_form(other, source) * float(weight)
        return form

    def electric_form(self, component: int, site: int) -> LinearForm:
        a = self._hardware(FieldKind.PHOTON, site, component)
        return (a - a.dagger()) / (1j * SQRT2)

    def gradient_form(self, form_at, component: int, site: int) -> LinearForm:
        """Symmetric difference (f(x + e_i) - f(x - e_i)) / 2 of a site-indexed form."""
        cfg = self.cfg
        forward = neighbor(site, component, +1, cfg.dim, cfg.extent)
        backward = neighbor(site, component, -1, cfg.dim, cfg.extent)
        return (form_at(forward) - form_at(backward)) / 2.0

    # Materialized operators

    def _get(self, key, build):
        if key not in self._cache:
            self._cache[key] = self.space.materialize(build())
        return self._cache[key]

    def phi(self, site: int):
        return self._get(("phi", site), lambda: self.phi_form(site))

    def pi(self, site: int):
        return self._get(("pi", site), lambda: self.pi_form(site))

    def gauge(self, component: int, site: int):
        return self._get(("A", component, site), lambda: self.gauge_form(component, site))

    def transverse_gauge(self, component: int, site: int):
        return self._get(("A_T", component, site), lambda: self.transverse_gauge_form(component, site))

    def coupled_gauge(self, component: int, site: int, coupling: "PhotonCoupling"):
        if coupling is PhotonCoupling.FULL:
            return self.gauge(component, site)
        return self.transverse_gauge(component, site)

    def electric(self, component: int, site: int):
        return self._get(("E", component, site), lambda: self.electric_form(component, site))

    def phi_components(self, site: int):
        one, two = self.phi_components_form(site)
        return self.space.materialize(one), self.space.materialize(two)

    def pi_components(self, site: int):
        one, two = self.pi_components_form(site)
        return self.space.materialize(one), self.space.materialize(two)


def build_quadrature_ops(space: FockSpace) -> FieldOperators:
    """Field operator families phi(x), pi(x), A_i(x), varpi_i(x) on the space."""
    return FieldOperators(space)


def build_H0(space: FockSpace, cfg: LatticeConfig):
    """Normal-ordered sum_k omega (b^dagger b + c^dagger c) + omega_gamma a^dagger . a."""
    omegas = space.layout.frequencies()
    if space.frame is Frame.PARTICLE:
        diagonal = space.occupations.astype(float) @ omegas[space.modes]
        return sparse.diags(diagonal.astype(complex), format="csr")
    h0 = sparse.csr_matrix((space.dim, space.dim), dtype=complex)
    for mode in space.modes:
        b = space.particle_ladder(mode)
        h0 = h0 + omegas[mode] * (b.conj().T @ b)
    return hermitize(h0)


def interaction_terms(space: FockSpace, cfg: LatticeConfig, coupling: PhotonCoupling = PhotonCoupling.TRANSVERSE):
    """(cubic, quartic) with H_I(e) = e * cubic + e^2 * quartic.

    cubic = -sum_x sum_i i A_i (phi grad_i phi^dagger - phi^dagger grad_i phi)
    quartic = -sum_x sum_i A_i^2 phi^dagger phi
    with A_i the transverse part of the photon field unless coupling is FULL.
    """
    ops = FieldOperators(space)
    cubic = sparse.csr_matrix((space.dim, space.dim), dtype=complex)
    quartic = sparse.csr_matrix((space.dim, space.dim), dtype=complex)
    for site in range(cfg.n_sites):
        phi = ops.phi(site)
        phi_dag = phi.conj().T
        density = phi_dag @ phi
        for component in range(cfg.dim):
            gauge = ops.coupled_gauge(component, site, coupling)
            quartic = quartic - gauge @ gauge @ density
            grad = ops.gradient_form(ops.phi_form, component, site)
            if grad.is_zero():
                continue
            grad_phi = space.materialize(grad)
            current = phi @ grad_phi.conj().T - phi_dag @ grad_phi
            cubic = cubic - 1j * (gauge @ current)
    return hermitize(cubic), hermitize(quartic)


def build_HI(space: FockSpace, cfg: LatticeConfig, e: float, coupling: PhotonCoupling = PhotonCoupling.TRANSVERSE):
    if e == 0:
        return sparse.csr_matrix((space.dim, space.dim), dtype=complex)
    cubic, quartic = interaction_terms(space, cfg, coupling)
    return (e * cubic + e**2 * quartic).tocsr()


def counterterm_unit(space: FockSpace, cfg: LatticeConfig):
    """1/2 sum_x phi^dagger phi, so that H_ct = delta_m * unit."""
    ops = FieldOperators(space)
    unit = sparse.csr_matrix((space.dim, space.dim), dtype=complex)
    for site in range(cfg.n_sites):
        phi = ops.phi(site)
        unit = unit + 0.5 * (phi.conj().T @ phi)
    return hermitize(unit)


def build_Hct(space: FockSpace, cfg: LatticeConfig, delta_m: float):
    if delta_m == 0:
        return sparse.csr_matrix((space.dim, space.dim), dtype=complex)
    return (delta_m * counterterm_unit(space, cfg)).tocsr()


def charge_op(space: FockSpace):
    """Q = sum (n_B - n_C); the same operator as sum_k (n_b - n_c)."""
    layout = space.layout
    diagonal = np.zeros(space.dim)
    for mode in space.modes:
        kind = layout.locate(mode).kind
        if kind is FieldKind.SCALAR_B:
            diagonal += space.occupations[:, space.slot(mode)]
        elif kind is FieldKind.SCALAR_C:
            diagonal -= space.occupations[:, space.slot(mode)]
    return sparse.diags(diagonal.astype(complex), format="csr")


def number_op(space: FockSpace, mode: int):
    return space.number(mode)


def gauss_constraint_form(space: FockSpace, cfg: LatticeConfig, k_index: int) -> LinearForm:
    k = momentum_vector(all_coords(cfg.dim, cfg.extent)[k_index], cfg.extent)
    form = LinearForm.zeros(space.n_layout_modes)
    for component in range(cfg.dim):
        if k[component] == 0:
            continue
        mode = space.layout.index(FieldKind.PHOTON, k_index, component)
        form = form + space.particle_form(mode) * float(k[component])
    return form


def gauss_constraint_op(space: FockSpace, cfg: LatticeConfig, k_index: int):
    """C(k) = sum_i k_i a_i(k); physical states are annihilated by every C(k)."""
    return space.materialize(gauss_constraint_form(space, cfg, k_index))


def gauss_law_op(space: FockSpace, cfg: LatticeConfig, site: int, e: float):
    """G(x) = div varpi(x) - rho(x), rho = i e (pi phi - pi^dagger phi^dagger).

    The divergence is the backward difference sum_i varpi_i(x) - varpi_i(x - e_i).
    """
    ops = FieldOperators(space)
    divergence = LinearForm.zeros(space.n_layout_modes)
    for component in range(cfg.dim):
        behind = neighbor(site, component, -1, cfg.dim, cfg.extent)
        divergence = divergence + ops.electric_form(component, site) - ops.electric_form(component, behind)
    op = space.materialize(divergence)
    if e != 0:
        phi, pi = ops.phi(site), ops.pi(site)
        rho = 1j * e * (pi @ phi - pi.conj().T @ phi.conj().T)
        op = op - rho
    return hermitize(op)


@dataclass
class HamiltonianSet:
    """Pieces of H(e, delta_m) = H0 + e * cubic + e^2 * quartic + delta_m * ct_unit."""

    h0: sparse.csr_matrix
    cubic: sparse.csr_matrix
    quartic: sparse.csr_matrix
    ct_unit: sparse.csr_matrix
    coupling: PhotonCoupling = PhotonCoupling.TRANSVERSE

    @property
    def h0_diagonal(self) -> Optional[np.ndarray]:
        """Diagonal of H0 when H0 is diagonal in the native basis."""
        diagonal = self.h0.diagonal()
        off_diagonal = (self.h0 - sparse.diags(diagonal)).tocsr()
        off_diagonal.eliminate_zeros()
        return diagonal if off_diagonal.nnz == 0 else None

    def interaction(self, e: float):
        return (e * self.cubic + e**2 * self.quartic).tocsr()

    def counterterm(self, delta_m: float):
        return (delta_m * self.ct_unit).tocsr()

    def total(self, e: float, delta_m: float):
        return (self.h0 + self.interaction(e) + self.counterterm(delta_m)).tocsr()


def build_hamiltonians(
    space: FockSpace, cfg: LatticeConfig, coupling: PhotonCoupling = PhotonCoupling.TRANSVERSE
) -> HamiltonianSet:
    h0 = build_H0(space, cfg)
    cubic, quartic = interaction_terms(space, cfg, coupling)
    ct_unit = counterterm_unit(space, cfg)
    L.info(
        f"Hamiltonians built ({coupling.value} coupling): "
        f"nnz H0={h0.nnz}, cubic={cubic.nnz}, quartic={quartic.nnz}, ct={ct_unit.nnz}"
    )
    return HamiltonianSet(h0, cubic, quartic, ct_unit, coupling)


@lru_cache(maxsize=None)
def free_two_point(cfg: LatticeConfig) -> float:
    """<phi^dagger(x) phi(x)> in the free ground state: (1/L^d) sum_k 1/(2 omega(k))."""
    omegas = np.array([dispersion(cfg, k, cfg.scalar_mass) for k in all_coords(cfg.dim, cfg.extent)])
    return float(np.mean(1.0 / (2.0 * omegas)))
