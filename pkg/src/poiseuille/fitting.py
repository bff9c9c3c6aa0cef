"""
Log-linear fits of decay rates and of power laws.
"""

import logging
import math
from dataclasses import dataclass
from logging import Logger
from typing import Optional, Tuple

import numpy as np
from scipy import stats

from .errors import FitError
from .grid import RealArray

_log = logging.getLogger(__name__)

MIN_SAMPLES = 8
DEFAULT_SKIP = 0.1


@dataclass(frozen=True)
class RateFit:
    """
    An exponential rate fitted to E(t) ~ exp(-rate t) on [window].

    `residual` is the root-mean-square residual of log E about the line.
    """

    rate: float
    window: Tuple[float, float]
    residual: float
    predicted: float
    n_samples: int

    @property
    def ratio(self: "RateFit") -> float:
        """Fitted over predicted rate; nan when nothing was predicted."""
        if self.predicted > 0:
            return self.rate / self.predicted
        return math.nan


def fit_decay_rate(
    times: RealArray,
    energy: RealArray,
    *,
    skip_fraction: float = DEFAULT_SKIP,
    predicted: float = math.nan,
    min_samples: int = MIN_SAMPLES,
    logger: Optional[Logger] = None,
) -> RateFit:
    """
    Fit the exponential decay rate of a positive series.

    The first `skip_fraction` of the samples is dropped as transient. If a
    non-positive value is found in the window, the window is cut just before
    it.

    Args:
        times (RealArray): sample times, increasing
        energy (RealArray): the series
        skip_fraction (float): leading fraction of samples to ignore
        predicted (float): the rate the fit is compared with
        min_samples (int): fewest samples a fit is accepted on
        logger (Optional[Logger]): receives the window-shrink warning

    Raises:
        FitError: fewer than `min_samples` usable samples

    Returns:
        RateFit: negated least-squares slope of log E against t
    """
    log = logger if logger is not None else _log
    t = np.asarray(times, dtype=float)
    e = np.asarray(energy, dtype=float)
    if t.shape != e.shape:
        raise FitError(f"{t.size} times for {e.size} samples")

    start = int(math.floor(skip_fraction * t.size))
    t, e = t[start:], e[start:]

    bad = np.flatnonzero(~(e > 0))
    if bad.size > 0:
        log.warning(
            f"Non-positive sample at t={t[bad[0]]:.6g}; fit window shrunk "
            f"from {t.size} to {bad[0]} samples"
        )
        t, e = t[: bad[0]], e[: bad[0]]

    if t.size < min_samples:
        raise FitError(
            f"{t.size} usable samples, at least {min_samples} are needed"
        )

    log_e = np.log(e)
    fit = stats.linregress(t, log_e)
    residual = log_e - (fit.intercept + fit.slope * t)

    return RateFit(
        rate=float(-fit.slope) + 0.0,
        window=(float(t[0]), float(t[-1])),
        residual=float(np.sqrt(np.mean(residual**2))),
        predicted=float(predicted),
        n_samples=int(t.size),
    )


def loglog_slope(x: RealArray, y: RealArray) -> float:
    """
    Slope of log y against log x.

    Raises:
        FitError: fewer than two points, or a non-positive value
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2 or np.any(x <= 0) or np.any(y <= 0):
        raise FitError("A log-log slope needs two or more positive points")

    return float(stats.linregress(np.log(x), np.log(y)).slope)
