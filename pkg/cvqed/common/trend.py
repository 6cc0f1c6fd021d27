import collections
import enum
import math
from statistics import linear_regression
from cvqed.common.logging import get_logger

L = get_logger(__name__)


class CheckStatus(enum.Enum):
    """Outcome of an invariant check."""

    PASSED = "passed"
    FAILED = "failed"
    INSUFFICIENT_CUTOFF = "insufficient cutoff"
    UNKNOWN = "unknown"


class TrendEstimator:
    """Fits a straight line through a stream of (x, y) samples.

    Used for convergence orders (log-log slopes), logarithmic coefficients
    and frequency fits.
    """

    def __init__(self, window_size=None, log_x=False, log_y=False):
        """Initializes the estimator.
        Args:
            window_size (int, optional): Keep only the most recent samples. Defaults to all.
            log_x (bool, optional): Fit against log(x). Defaults to False.
            log_y (bool, optional): Fit log(y). Defaults to False.
        """
        self._xs = collections.deque(maxlen=window_size)
        self._ys = collections.deque(maxlen=window_size)
        self._log_x = log_x
        self._log_y = log_y

    def __len__(self):
        return len(self._xs)

    def add(self, x, y):
        """Adds one sample."""
        if self._log_x:
            x = math.log(x)
        if self._log_y:
            y = math.log(y)
        self._xs.append(float(x))
        self._ys.append(float(y))

    @property
    def samples(self):
        return list(zip(self._xs, self._ys))

    def fit(self):
        """Returns (slope, intercept) of the least-squares line.

        Raises:
            ValueError: If fewer than two samples were added.
        """
        if len(self._xs) < 2:
            raise ValueError("At least two samples are needed for a fit.")
        slope, intercept = linear_regression(list(self._xs), list(self._ys))
        L.debug(f"Fit over {len(self._xs)} samples: slope={slope:.6g}, intercept={intercept:.6g}")
        return slope, intercept

    @property
    def slope(self):
        return self.fit()[0]

    def is_monotonic(self, increasing=True):
        """True if the y samples move monotonically in the given direction."""
        ys = list(self._ys)
        pairs = zip(ys, ys[1:])
        if increasing:
            return all(b >= a for a, b in pairs)
        return all(b <= a for a, b in pairs)
