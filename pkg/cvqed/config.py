"""
Run configuration: one JSON document with nested sections, resolved against
defaults, validated before any computation and hashed canonically.
"""
import copy
import hashlib
import json
from typing import Any, Dict, List, Optional

from cvqed.codecs.report_writers import WRITERS
from cvqed.common.constants import CONSTRAINT_EPS, ORACLE_LIMIT, VERSION
from cvqed.common.errors import ConfigError
from cvqed.common.logging import get_logger
from cvqed.fock.evolution import TrotterSign
from cvqed.fock.hamiltonians import PhotonCoupling
from cvqed.fock.space import Frame
from cvqed.fock.states import WavepacketSpec
from cvqed.lattice import LatticeConfig
from cvqed.renorm.integrals import Kernel
from cvqed.scattering import CouplingSchedule, DeltaMSource, build_schedule

L = get_logger(__name__)

BACKENDS = ("gaussian", "fock")

DEFAULTS: Dict[str, Dict[str, Any]] = {
    "lattice": {"dim": 1, "extent": 2, "m": 1.0},
    "backend": {
        "kind": "fock",
        "n_max": 4,
        "frame": Frame.PARTICLE.value,
        "sign": "literal",
        "coupling": PhotonCoupling.TRANSVERSE.value,
        "oracle_limit": ORACLE_LIMIT,
    },
    "schedule": {
        "T": 1.0,
        "T1": 0.5,
        "dt": 0.02,
        "e_target": 0.3,
        "dm_source": DeltaMSource.REFERENCE.value,
        "dm_coefficient": None,
    },
    "in_state": {"wavepackets": [{"kind": "b", "shape": "sharp"}]},
    "output": {
        "dir": None,
        "seed": 0,
        "formats": ["json"],
        "n_samples": 100,
        "strict": False,
        "constraint_eps": CONSTRAINT_EPS,
        "truncation_check": False,
    },
    "renorm": {
        "constants": ["delta_m", "pi0", "identity"],
        "m": 0.0,
        "e": 0.3,
        "kernel": Kernel.CONTINUUM.value,
        "literal": False,
        "spacing": None,
        "monte_carlo": False,
    },
}

WAVEPACKET_KEYS = ("kind", "peak", "shape", "width", "weights")

# Flag name -> key path; flags win over file values.
FLAG_PATHS = {
    "m": ("lattice", "m"),
    "dim": ("lattice", "dim"),
    "extent": ("lattice", "extent"),
    "backend": ("backend", "kind"),
    "n_max": ("backend", "n_max"),
    "frame": ("backend", "frame"),
    "sign": ("backend", "sign"),
    "coupling": ("backend", "coupling"),
    "dt": ("schedule", "dt"),
    "e": ("schedule", "e_target"),
    "seed": ("output", "seed"),
    "out": ("output", "dir"),
    "strict": ("output", "strict"),
    "kernel": ("renorm", "kernel"),
    "constant": ("renorm", "constants"),
    "renorm_m": ("renorm", "m"),
    "spacing": ("renorm", "spacing"),
    "literal": ("renorm", "literal"),
    "monte_carlo": ("renorm", "monte_carlo"),
}


def _check_type(path: str, default, value):
    if default is None:
        if value is not None and (isinstance(value, bool) or not isinstance(value, (int, float, str))):
            raise ConfigError(f"{path} must be a number, a string or null, got {value!r}")
        return
    if isinstance(default, bool):
        ok = isinstance(value, bool)
    elif isinstance(default, int):
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif isinstance(default, float):
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    else:
        ok = isinstance(value, type(default))
    if not ok:
        raise ConfigError(f"{path} must be of type {type(default).__name__}, got {value!r}")


def _merge(data: dict) -> dict:
    if not isinstance(data, dict):
        raise ConfigError(f"Configuration must be a JSON object, got {type(data).__name__}")
    resolved = copy.deepcopy(DEFAULTS)
    for section, values in data.items():
        if section not in DEFAULTS:
            raise ConfigError(f"Unknown configuration section '{section}'")
        if not isinstance(values, dict):
            raise ConfigError(f"Section '{section}' must be an object")
        for key, value in values.items():
            path = f"{section}.{key}"
            if key not in DEFAULTS[section]:
                raise ConfigError(f"Unknown configuration key '{path}'")
            _check_type(path, DEFAULTS[section][key], value)
            resolved[section][key] = copy.deepcopy(value)
    return resolved


def _validate(resolved: dict):
    backend = resolved["backend"]
    if backend["kind"] not in BACKENDS:
        raise ConfigError(f"backend.kind must be one of {BACKENDS}, got '{backend['kind']}'")
    frames = [f.value for f in Frame]
    if backend["frame"] not in frames:
        raise ConfigError(f"backend.frame must be one of {frames}, got '{backend['frame']}'")
    if backend["sign"].upper() not in TrotterSign.__members__:
        raise ConfigError(f"backend.sign must be 'literal' or 'physical', got '{backend['sign']}'")
    couplings = [c.value for c in PhotonCoupling]
    if backend["coupling"] not in couplings:
        raise ConfigError(f"backend.coupling must be one of {couplings}, got '{backend['coupling']}'")
    if backend["n_max"] < 1:
        raise ConfigError(f"backend.n_max must be >= 1, got {backend['n_max']}")
    for fmt in resolved["output"]["formats"]:
        if fmt not in WRITERS:
            raise ConfigError(f"output.formats entry '{fmt}' is not one of {sorted(WRITERS)}")
    if resolved["renorm"]["kernel"] not in [k.value for k in Kernel]:
        raise ConfigError(f"renorm.kernel must be one of {[k.value for k in Kernel]}")
    wavepackets = resolved["in_state"]["wavepackets"]
    if not wavepackets:
        raise ConfigError("in_state.wavepackets needs at least one profile")
    for n, entry in enumerate(wavepackets):
        if not isinstance(entry, dict):
            raise ConfigError(f"in_state.wavepackets[{n}] must be an object")
        for key in entry:
            if key not in WAVEPACKET_KEYS:
                raise ConfigError(f"Unknown configuration key 'in_state.wavepackets[{n}].{key}'")
    # Constructing the lattice validates dim, extent and mass.
    LatticeConfig(resolved["lattice"]["dim"], resolved["lattice"]["extent"], float(resolved["lattice"]["m"]))


class RunConfig:
    """A resolved, validated run configuration.

    Args:
        data: Partial configuration; missing keys take the defaults.

    Raises:
        ConfigError: On unknown keys, wrong types or inconsistent values.
    """

    def __init__(self, data: Optional[dict] = None):
        self._data = _merge(data or {})
        _validate(self._data)

    @classmethod
    def load(cls, path: str) -> "RunConfig":
        try:
            with open(path, "r") as f:
                data = json.load(f)
        except OSError as e:
            raise ConfigError(f"Cannot read configuration '{path}': {e}") from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"Configuration '{path}' is not valid JSON: {e}") from e
        L.info(f"Configuration loaded from {path}")
        return cls(data)

    @classmethod
    def parse(cls, text: str) -> "RunConfig":
        try:
            return cls(json.loads(text))
        except json.JSONDecodeError as e:
            raise ConfigError(f"Configuration is not valid JSON: {e}") from e

    def with_overrides(self, **flags) -> "RunConfig":
        """Returns a copy with command-line flags applied; None values are ignored."""
        data = self.to_dict()
        for name, value in flags.items():
            if value is None:
                continue
            if name not in FLAG_PATHS:
                raise ConfigError(f"Unknown override '{name}'")
            section, key = FLAG_PATHS[name]
            data[section][key] = value
        return RunConfig(data)

    def to_dict(self) -> dict:
        return copy.deepcopy(self._data)

    def serialize(self) -> str:
        return json.dumps(self._data, sort_keys=True, separators=(",", ":"))

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.serialize().encode("utf-8")).hexdigest()

    def __eq__(self, other):
        return isinstance(other, RunConfig) and self._data == other._data

    def __getitem__(self, section: str) -> dict:
        return self._data[section]

    @property
    def seed(self) -> int:
        return self._data["output"]["seed"]

    def provenance(self) -> dict:
        """version, config hash, seed and the full resolved config, embedded in every output."""
        return {
            "version": VERSION,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "config": self.to_dict(),
        }

    def lattice(self) -> LatticeConfig:
        section = self._data["lattice"]
        return LatticeConfig(section["dim"], section["extent"], float(section["m"]))

    def schedule(self) -> CouplingSchedule:
        section = self._data["schedule"]
        return build_schedule(
            section["T"],
            section["T1"],
            section["dt"],
            section["e_target"],
            dm_coefficient=section["dm_coefficient"],
            dm_source=section["dm_source"],
            m=float(self._data["lattice"]["m"]),
        )

    def in_spec(self) -> WavepacketSpec:
        return WavepacketSpec.from_config(self.lattice(), self._data["in_state"]["wavepackets"])

    @property
    def frame(self) -> Frame:
        return Frame(self._data["backend"]["frame"])

    @property
    def sign(self) -> TrotterSign:
        return TrotterSign[self._data["backend"]["sign"].upper()]

    @property
    def coupling(self) -> PhotonCoupling:
        return PhotonCoupling(self._data["backend"]["coupling"])

    @property
    def formats(self) -> List[str]:
        return list(self._data["output"]["formats"])

    def scatter_kwargs(self) -> dict:
        """Keyword arguments of scattering.run_scattering."""
        backend, output = self._data["backend"], self._data["output"]
        return {
            "cfg": self.lattice(),
            "schedule": self.schedule(),
            "in_spec": self.in_spec(),
            "cutoff": backend["n_max"],
            "seed": output["seed"],
            "n_samples": output["n_samples"],
            "frame": self.frame,
            "sign": self.sign,
            "constraint_eps": output["constraint_eps"],
            "strict": output["strict"],
            "truncation_check": output["truncation_check"],
            "oracle_limit": backend["oracle_limit"],
            "coupling": self.coupling,
            "config": self.to_dict(),
        }

    def renorm_kwargs(self) -> dict:
        """Keyword arguments of renorm.report.constants_table."""
        section = self._data["renorm"]
        return {
            "names": list(section["constants"]),
            "m": float(section["m"]),
            "e": float(section["e"]),
            "kernel": Kernel(section["kernel"]),
            "literal": section["literal"],
            "spacing": section["spacing"],
            "monte_carlo": section["monte_carlo"],
            "seed": self.seed,
        }
