from cvqed.circuits.circuit import (
    ELEMENT_TYPES,
    BeamSplitter,
    OpticalCircuit,
    PhaseShifter,
    SingleModeSqueezer,
    TwoModeSqueezer,
)
from cvqed.common.errors import ConfigError


class CircuitCoder:
    """Line-oriented text format of an OpticalCircuit.

    One element per line, preceded by a `# modes N` header:

        # modes 6
        BS 0 1 0.785398163397 3.14159265359
        PS 2 1.5707963268
        TMS 0 2 0.693147180560
        SMS 4 0.346573590280 3.14159265359
    """

    HEADER = "# modes"
    # Mode indices first, then the real parameters, in field order.
    _FIELDS = {
        "BS": (2, ("theta", "phi")),
        "PS": (1, ("theta",)),
        "TMS": (2, ("xi",)),
        "SMS": (1, ("r", "phi")),
    }

    @staticmethod
    def encode_element(element) -> str:
        if isinstance(element, BeamSplitter):
            values = [element.i, element.j, element.theta, element.phi]
        elif isinstance(element, PhaseShifter):
            values = [element.i, element.theta]
        elif isinstance(element, TwoModeSqueezer):
            values = [element.i, element.j, element.xi]
        elif isinstance(element, SingleModeSqueezer):
            values = [element.i, element.r, element.phi]
        else:
            raise TypeError(f"Unknown circuit element {element!r}")
        n_modes, _ = CircuitCoder._FIELDS[element.TAG]
        text = [str(v) for v in values[:n_modes]] + [repr(float(v)) for v in values[n_modes:]]
        return " ".join([element.TAG] + text)

    @staticmethod
    def encode_circuit(circuit: OpticalCircuit) -> str:
        lines = [f"{CircuitCoder.HEADER} {circuit.n_modes}"]
        lines.extend(CircuitCoder.encode_element(e) for e in circuit)
        return "\n".join(lines) + "\n"

    @staticmethod
    def decode_element(line: str):
        tokens = line.split()
        tag = tokens[0].upper()
        if tag not in ELEMENT_TYPES:
            raise ConfigError(f"Unknown circuit element '{tokens[0]}'")
        n_modes, params = CircuitCoder._FIELDS[tag]
        if len(tokens) != 1 + n_modes + len(params):
            raise ConfigError(f"{tag} expects {n_modes + len(params)} fields: '{line}'")
        try:
            modes = [int(t) for t in tokens[1 : 1 + n_modes]]
            values = [float(t) for t in tokens[1 + n_modes :]]
        except ValueError as e:
            raise ConfigError(f"Malformed circuit line '{line}': {e}") from e
        return ELEMENT_TYPES[tag](*modes, *values)

    @staticmethod
    def decode_circuit(text: str) -> OpticalCircuit:
        """Parses the text format; blank lines and other `#` comments are ignored.

        Raises:
            ConfigError: On a missing header or a malformed element line.
        """
        n_modes = None
        elements = []
        for raw in text.splitlines():
            line = raw.strip()
            if not line:
                continue
            if line.startswith(CircuitCoder.HEADER):
                try:
                    n_modes = int(line[len(CircuitCoder.HEADER) :])
                except ValueError as e:
                    raise ConfigError(f"Malformed header '{line}'") from e
                continue
            if line.startswith("#"):
                continue
            elements.append(CircuitCoder.decode_element(line))

        if n_modes is None:
            raise ConfigError(f"Circuit text has no '{CircuitCoder.HEADER} N' header")
        circuit = OpticalCircuit(n_modes)
        circuit.extend(elements)
        return circuit
