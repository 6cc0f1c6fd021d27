import numpy as np

from cvqed.common.errors import ConfigError
from cvqed.gaussian_sim import GaussianState


class StateCoder:
    """Plain-text snapshot of a GaussianState.

    Layout: a `# gaussian N` header, a `mean` line followed by the 2N mean
    entries on one line, then a `cov` line followed by 2N rows of the
    covariance, row-major. Floats use repr() so decoding is exact.
    """

    HEADER = "# gaussian"

    @staticmethod
    def _row(values) -> str:
        return " ".join(repr(float(v)) for v in values)

    @staticmethod
    def encode_state(state: GaussianState) -> str:
        lines = [f"{StateCoder.HEADER} {state.n_modes}", "mean", StateCoder._row(state.mean), "cov"]
        lines.extend(StateCoder._row(row) for row in state.cov)
        return "\n".join(lines) + "\n"

    @staticmethod
    def decode_state(text: str) -> GaussianState:
        lines = [line.strip() for line in text.splitlines() if line.strip()]
        if not lines or not lines[0].startswith(StateCoder.HEADER):
            raise ConfigError(f"Snapshot must start with '{StateCoder.HEADER} N'")
        try:
            n_modes = int(lines[0][len(StateCoder.HEADER) :])
            size = 2 * n_modes
            if lines[1] != "mean" or lines[3] != "cov":
                raise ConfigError("Snapshot sections must be 'mean' then 'cov'")
            mean = np.array([float(v) for v in lines[2].split()])
            cov = np.array([[float(v) for v in row.split()] for row in lines[4 : 4 + size]])
        except (IndexError, ValueError) as e:
            raise ConfigError(f"Malformed Gaussian snapshot: {e}") from e
        if mean.shape != (size,) or cov.shape != (size, size):
            raise ConfigError(f"Snapshot sizes {mean.shape}, {cov.shape} do not match {n_modes} modes")
        return GaussianState(mean, cov)
