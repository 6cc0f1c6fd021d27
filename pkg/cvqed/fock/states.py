from dataclasses import dataclass, field
from typing import Dict, List, Sequence

import numpy as np
from scipy.sparse.linalg import expm_multiply

from cvqed.circuits.circuit import OpticalCircuit
from cvqed.circuits.decompose import groundstate_circuit
from cvqed.common.constants import NORM_TOL, OCCUPIED_THRESHOLD
from cvqed.common.errors import ConfigError, DimensionMismatch, ZeroNorm
from cvqed.common.logging import get_logger
from cvqed.fock.space import FockSpace, Frame, LinearForm
from cvqed.lattice import FieldKind, LatticeConfig, all_coords, site_index

L = get_logger(__name__)

PEAK_WEIGHT = 0.9


def apply_circuit(space: FockSpace, circuit: OpticalCircuit, psi: np.ndarray) -> np.ndarray:
    """Applies every element exp(-i G) of the circuit in order.

    Elements that touch only inactive modes are skipped, so a space restricted
    to whole field blocks runs its part of a block-diagonal circuit.

    Raises:
        DimensionMismatch: If an element straddles active and inactive modes.
    """
    if circuit.n_modes != space.n_layout_modes:
        raise DimensionMismatch(f"Circuit on {circuit.n_modes} modes, layout has {space.n_layout_modes}")
    active = set(space.modes)
    for element in circuit:
        touched = set(element.modes) & active
        if not touched:
            continue
        if touched != set(element.modes):
            raise DimensionMismatch(f"{element.TAG} on modes {element.modes} straddles the active set")
        generator = element.generator(space.hardware_ladder)
        psi = expm_multiply(-1j * generator.tocsr(), psi)
    return psi


def prepare_ground_state(space: FockSpace, cfg: LatticeConfig) -> np.ndarray:
    """|Omega> = U^dagger |0>.

    In the particle frame this is the native vacuum; in the position frame the
    inverse ground-state circuit is run on the hardware vacuum.
    """
    if space.frame is Frame.PARTICLE:
        return space.vacuum()
    psi = apply_circuit(space, groundstate_circuit(cfg).inverse(), space.vacuum())
    norm = np.linalg.norm(psi)
    L.info(f"Ground state prepared by circuit, norm after truncation {norm:.6f}")
    return psi / norm


@dataclass(frozen=True)
class WavepacketProfile:
    """Creation profile sum_k f(k) b^dagger(k) (kind "b") or c^dagger(k) (kind "c")."""

    kind: str
    peak: tuple
    weights: np.ndarray

    def __post_init__(self):
        if self.kind not in ("b", "c"):
            raise ConfigError(f"In-state profiles create scalars 'b' or antiscalars 'c', got '{self.kind}'")
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=complex))
        object.__setattr__(self, "peak", tuple(int(n) for n in self.peak))

    @property
    def field_kind(self) -> FieldKind:
        return FieldKind.SCALAR_B if self.kind == "b" else FieldKind.SCALAR_C


def _periodic_distance(n: Sequence[int], peak: Sequence[int], extent: int) -> np.ndarray:
    delta = np.abs(np.asarray(n) - np.asarray(peak)) % extent
    return np.minimum(delta, extent - delta)


def make_profile(cfg: LatticeConfig, entry: dict) -> WavepacketProfile:
    """Builds one profile from its config entry.

    Entries: {"kind": "b"|"c", "peak": [n_1..n_d], "shape": "sharp"|"gaussian"|"weights",
    "width": float, "weights": [[re, im], ...]}.
    """
    kind = entry.get("kind", "b")
    peak = entry.get("peak", [0] * cfg.dim)
    if len(peak) != cfg.dim:
        raise ConfigError(f"Peak {peak} does not have {cfg.dim} components")
    shape = entry.get("shape", "sharp")
    coords = all_coords(cfg.dim, cfg.extent)
    if shape == "sharp":
        weights = np.zeros(cfg.n_sites, dtype=complex)
        weights[site_index(peak, cfg.extent)] = 1.0
    elif shape == "gaussian":
        width = float(entry.get("width", 0.5))
        if width <= 0:
            raise ConfigError(f"Gaussian width must be > 0, got {width}")
        distances = np.array([np.sum(_periodic_distance(n, peak, cfg.extent) ** 2) for n in coords])
        weights = np.exp(-distances / (4.0 * width**2)).astype(complex)
    elif shape == "weights":
        raw = np.asarray(entry.get("weights", []), dtype=float)
        if raw.shape != (cfg.n_sites, 2):
            raise ConfigError(f"Explicit weights need {cfg.n_sites} [re, im] pairs, got shape {raw.shape}")
        weights = raw[:, 0] + 1j * raw[:, 1]
    else:
        raise ConfigError(f"Unknown profile shape '{shape}'")
    return WavepacketProfile(kind, tuple(peak), weights)


@dataclass(frozen=True)
class WavepacketSpec:
    profiles: List[WavepacketProfile] = field(default_factory=list)

    @classmethod
    def from_config(cls, cfg: LatticeConfig, entries: List[dict]) -> "WavepacketSpec":
        return cls([make_profile(cfg, entry) for entry in entries])

    def validate(self, cfg: LatticeConfig) -> List[str]:
        """Checks unit norm and peakedness; returns warning messages."""
        warnings = []
        coords = all_coords(cfg.dim, cfg.extent)
        for n, profile in enumerate(self.profiles):
            norm = float(np.linalg.norm(profile.weights))
            if abs(norm - 1.0) > NORM_TOL:
                warnings.append(f"profile {n} has norm {norm:.6f}; normalized")
            shell = [
                i for i, k in enumerate(coords)
                if np.sum(_periodic_distance(k, profile.peak, cfg.extent)) <= 1
            ]
            weight = float(np.sum(np.abs(profile.weights[shell]) ** 2)) / max(norm**2, 1e-300)
            if weight < PEAK_WEIGHT:
                warnings.append(f"profile {n} keeps only {weight:.1%} of its weight near peak {profile.peak}")
        for message in warnings:
            L.warning(f"Wavepacket {message}")
        return warnings


def creation_form(space: FockSpace, profile: WavepacketProfile) -> LinearForm:
    weights = profile.weights / np.linalg.norm(profile.weights)
    form = LinearForm.zeros(space.n_layout_modes)
    for k, weight in enumerate(weights):
        if weight == 0:
            continue
        mode = space.layout.index(profile.field_kind, k)
        form = form + weight * space.particle_form(mode).dagger()
    return form


def prepare_excited(space: FockSpace, psi_omega: np.ndarray, spec: WavepacketSpec) -> np.ndarray:
    """prod_n (sum_k f_n(k) b^dagger(k)) |Omega>, normalized.

    Raises:
        ZeroNorm: If the profiles annihilate the state at this cutoff.
    """
    psi = np.array(psi_omega, dtype=complex)
    for profile in spec.profiles:
        psi = space.materialize(creation_form(space, profile)) @ psi
    norm = float(np.linalg.norm(psi))
    if norm < 1e-12:
        raise ZeroNorm(f"{len(spec.profiles)} creation profiles annihilate the state at cutoff {space.cutoff}")
    return psi / norm


def single_photon(space: FockSpace, k_index: int, polarization: Sequence[complex]) -> np.ndarray:
    """sum_i zeta_i a_i^dagger(k) |Omega> for a particle-frame space; used for gauge checks."""
    cfg = space.cfg
    zeta = np.asarray(polarization, dtype=complex)
    if zeta.shape != (cfg.dim,):
        raise DimensionMismatch(f"Polarization needs {cfg.dim} components")
    zeta = zeta / np.linalg.norm(zeta)
    form = LinearForm.zeros(space.n_layout_modes)
    for component, weight in enumerate(zeta):
        if weight != 0:
            form = form + weight * space.particle_form(space.layout.index(FieldKind.PHOTON, k_index, component)).dagger()
    psi = space.materialize(form) @ space.vacuum()
    return psi / np.linalg.norm(psi)


@dataclass
class MeasurementResult:
    """Exact number statistics of every active mode."""

    space: FockSpace
    probabilities: np.ndarray
    marginals: np.ndarray

    @property
    def means(self) -> np.ndarray:
        return self.marginals @ np.arange(self.space.cutoff + 1)

    def classify(self) -> Dict[str, Dict[str, float]]:
        """Mean occupations grouped as scalars, antiscalars and photons."""
        groups = {"scalar": {}, "antiscalar": {}, "photon": {}}
        names = {FieldKind.SCALAR_B: "scalar", FieldKind.SCALAR_C: "antiscalar", FieldKind.PHOTON: "photon"}
        for slot, mode in enumerate(self.space.modes):
            label = self.space.layout.locate(mode)
            groups[names[label.kind]][str(label)] = float(self.means[slot])
        return groups

    def occupied(self, threshold: float = OCCUPIED_THRESHOLD) -> Dict[str, float]:
        return {
            str(self.space.layout.locate(mode)): float(self.means[slot])
            for slot, mode in enumerate(self.space.modes)
            if self.means[slot] > threshold
        }

    def sample(self, n_samples: int, seed: int) -> np.ndarray:
        """Seeded joint occupation samples, shape (n_samples, K)."""
        rng = np.random.default_rng(seed)
        p = self.probabilities / self.probabilities.sum()
        picks = rng.choice(self.space.dim, size=n_samples, p=p)
        return self.space.occupations[picks]


def measure_numbers(psi: np.ndarray, space: FockSpace) -> MeasurementResult:
    """Marginal distributions P(n_j) of every native mode."""
    probabilities = np.abs(psi) ** 2
    total = probabilities.sum()
    if abs(total - 1.0) > 1e-9:
        L.warning(f"Measuring a state of squared norm {total:.9f}; renormalizing")
        probabilities = probabilities / total
    marginals = np.zeros((len(space.modes), space.cutoff + 1))
    for slot in range(len(space.modes)):
        marginals[slot] = np.bincount(
            space.occupations[:, slot], weights=probabilities, minlength=space.cutoff + 1
        )
    return MeasurementResult(space, probabilities, marginals)
