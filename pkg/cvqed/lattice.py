import enum
import itertools
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from cvqed.common.errors import ConfigError
from cvqed.common.logging import get_logger

L = get_logger(__name__)


@dataclass(frozen=True)
class LatticeConfig:
    """Periodic cubic lattice with unit spacing.

    Args:
        dim: Spatial dimension, one of 1, 2, 3.
        extent: Sites per dimension.
        scalar_mass: Scalar mass m in lattice units.
    """

    dim: int
    extent: int
    scalar_mass: float

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ConfigError(f"dim must be 1, 2 or 3, got {self.dim}")
        if int(self.extent) != self.extent or self.extent < 2:
            raise ConfigError(f"extent must be an integer >= 2, got {self.extent}")
        if self.scalar_mass < 0:
            raise ConfigError(f"scalar_mass must be >= 0, got {self.scalar_mass}")

    @property
    def photon_mass(self) -> float:
        return 1.0 / self.extent

    @property
    def n_sites(self) -> int:
        return self.extent**self.dim

    @property
    def n_scalar_modes(self) -> int:
        return 2 * self.n_sites

    @property
    def n_photon_modes(self) -> int:
        return self.dim * self.n_sites

    @property
    def n_modes(self) -> int:
        return (2 + self.dim) * self.n_sites


# Site and momentum indices share one encoding: row-major over coordinates,
# first axis most significant.


def site_index(coords: Sequence[int], extent: int) -> int:
    index = 0
    for c in coords:
        index = index * extent + (int(c) % extent)
    return index


def site_coords(index: int, dim: int, extent: int) -> Tuple[int, ...]:
    if not 0 <= index < extent**dim:
        raise ValueError(f"Index {index} outside [0, {extent ** dim})")
    coords = []
    for _ in range(dim):
        coords.append(index % extent)
        index //= extent
    return tuple(reversed(coords))


def all_coords(dim: int, extent: int) -> List[Tuple[int, ...]]:
    """All coordinate tuples in index order."""
    return list(itertools.product(range(extent), repeat=dim))


def neighbor(index: int, axis: int, step: int, dim: int, extent: int) -> int:
    """Linear index of the site displaced by `step` along `axis`, wrapping mod L."""
    coords = list(site_coords(index, dim, extent))
    coords[axis] = (coords[axis] + step) % extent
    return site_index(coords, extent)


def momentum_vector(n: Sequence[int], extent: int) -> np.ndarray:
    """Physical momentum k_i = 2 pi n_i / L."""
    return 2.0 * np.pi * np.asarray(n, dtype=float) / extent


def negate_momentum(index: int, dim: int, extent: int) -> int:
    """Index of -k mod 2 pi."""
    coords = site_coords(index, dim, extent)
    return site_index([(-c) % extent for c in coords], extent)


def lattice_frequency(k, mass: float) -> np.ndarray:
    """Vectorised lattice dispersion sqrt(mass^2 + 4 sum_i sin^2(k_i/2)).

    Args:
        k: Array whose last axis holds momentum components.
        mass: Mass entering the dispersion.
    """
    k = np.asarray(k, dtype=float)
    return np.sqrt(mass**2 + 4.0 * np.sum(np.sin(0.5 * k) ** 2, axis=-1))


def continuum_frequency(k, mass: float) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    return np.sqrt(mass**2 + np.sum(k**2, axis=-1))


def dispersion(cfg: LatticeConfig, k: Sequence[int], mass: float) -> float:
    """Lattice dispersion at dual-lattice index k.

    Args:
        cfg: Lattice configuration.
        k: Momentum index coordinates n_i in [0, L).
        mass: Mass of the field (cfg.scalar_mass or cfg.photon_mass).

    Returns:
        omega(k) = sqrt(mass^2 + 4 sum_i sin^2(k_i / 2)).
    """
    if mass < 0:
        raise ValueError(f"mass must be >= 0, got {mass}")
    if len(k) != cfg.dim:
        raise ValueError(f"Momentum {tuple(k)} does not have {cfg.dim} components")
    return float(lattice_frequency(momentum_vector(k, cfg.extent), mass))


def dispersion_table(cfg: LatticeConfig) -> List[dict]:
    """Rows of (n, k, omega, omega_photon) over the dual lattice."""
    rows = []
    for index, n in enumerate(all_coords(cfg.dim, cfg.extent)):
        rows.append(
            {
                "index": index,
                "n": list(n),
                "k": [float(x) for x in momentum_vector(n, cfg.extent)],
                "omega": dispersion(cfg, n, cfg.scalar_mass),
                "omega_photon": dispersion(cfg, n, cfg.photon_mass),
            }
        )
    return rows


class FieldKind(enum.Enum):
    """Mode blocks of the layout, in layout order."""

    SCALAR_B = "B"
    SCALAR_C = "C"
    PHOTON = "A"


@dataclass(frozen=True)
class ModeLabel:
    kind: FieldKind
    component: int
    index: int

    def __str__(self):
        if self.kind is FieldKind.PHOTON:
            return f"A{self.component + 1}[{self.index}]"
        return f"{self.kind.value}[{self.index}]"


class ModeLayout:
    """Global ordering of the (2 + d) L^d qumodes.

    Block order: B (scalar-1), C (scalar-2), then one photon block per axis.
    Within a block modes follow the site index (position frame) or the
    dual-lattice index (particle frame); both share the same encoding.
    """

    def __init__(self, cfg: LatticeConfig):
        self.cfg = cfg
        self._block = cfg.n_sites

    @property
    def n_modes(self) -> int:
        return self.cfg.n_modes

    def index(self, kind: FieldKind, index: int, component: int = 0) -> int:
        if not 0 <= index < self._block:
            raise ValueError(f"Index {index} outside block of size {self._block}")
        if kind is FieldKind.SCALAR_B:
            return index
        if kind is FieldKind.SCALAR_C:
            return self._block + index
        if not 0 <= component < self.cfg.dim:
            raise ValueError(f"Photon component {component} outside [0, {self.cfg.dim})")
        return (2 + component) * self._block + index

    def locate(self, mode: int) -> ModeLabel:
        if not 0 <= mode < self.n_modes:
            raise ValueError(f"Mode {mode} outside [0, {self.n_modes})")
        block, index = divmod(mode, self._block)
        if block == 0:
            return ModeLabel(FieldKind.SCALAR_B, 0, index)
        if block == 1:
            return ModeLabel(FieldKind.SCALAR_C, 0, index)
        return ModeLabel(FieldKind.PHOTON, block - 2, index)

    @property
    def scalar_modes(self) -> List[int]:
        return list(range(2 * self._block))

    @property
    def photon_modes(self) -> List[int]:
        return list(range(2 * self._block, self.n_modes))

    def block(self, kind: FieldKind, component: int = 0) -> List[int]:
        return [self.index(kind, i, component) for i in range(self._block)]

    def frequencies(self) -> np.ndarray:
        """Particle-mode frequency for every layout mode (particle frame)."""
        omegas = np.empty(self.n_modes)
        coords = all_coords(self.cfg.dim, self.cfg.extent)
        for mode in range(self.n_modes):
            label = self.locate(mode)
            mass = (
                self.cfg.photon_mass
                if label.kind is FieldKind.PHOTON
                else self.cfg.scalar_mass
            )
            omegas[mode] = dispersion(self.cfg, coords[label.index], mass)
        return omegas


def mode_layout(cfg: LatticeConfig) -> ModeLayout:
    return ModeLayout(cfg)
