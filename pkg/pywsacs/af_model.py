"""
Continuous-time autocorrelation functions of wide-sense cyclostationary
sources.

An autocorrelation function (AF) ``c(t, lag) = E{X(t) X(t + lag)}`` is
periodic in ``t`` with period ``T_c`` and vanishes for ``|lag| > lambda_c``.
`AutocorrelationModel` is the evaluable interface used by the rest of the
package; `AfModel` is the trapezoidal-pulse family with exponential lag decay.
"""

from __future__ import annotations

import abc
import logging
import math
from typing import Optional

import numpy as np
import pydantic
import pydantic.dataclasses as dataclasses
from numpy.typing import ArrayLike

from .exceptions import ConfigurationError

logger = logging.getLogger(__name__)

DEFAULT_GRID_SIZE = 4096
# Number of t-samples evaluated against the full lag grid at once.
_GAMMA_C_CHUNK = 256


class TrapezoidalPulse(pydantic.BaseModel, extra="forbid", frozen=True):
    """
    Unit-period trapezoidal pulse.

    One period is a linear rise over ``t_rf``, a flat top of length ``t_dc``,
    a linear fall over ``t_rf`` and zero for the remainder.

    Attributes
    ----------
    t_rf : float
        Rise/fall time as a fraction of one period.
    t_dc : float
        Flat-top (duty) time as a fraction of one period.
    """

    t_rf: float = pydantic.Field(default=0.01, gt=0.0)
    t_dc: float = pydantic.Field(default=0.4, ge=0.0)

    @pydantic.model_validator(mode="after")
    def _check_tiling(self) -> "TrapezoidalPulse":
        if 2.0 * self.t_rf + self.t_dc > 1.0:
            raise ValueError(
                f"2*t_rf + t_dc must not exceed 1 (got t_rf={self.t_rf}, t_dc={self.t_dc})"
            )
        return self

    @property
    def breakpoints(self) -> np.ndarray:
        """Corners of one period, in [0, 1)."""
        corners = [0.0, self.t_rf, self.t_rf + self.t_dc, 2.0 * self.t_rf + self.t_dc]
        return np.unique(np.mod(corners, 1.0))

    def __call__(self, t: ArrayLike) -> np.ndarray:
        return pulse_eval(self, t)


def pulse_eval(pulse: TrapezoidalPulse, t: ArrayLike) -> np.ndarray:
    """
    Evaluate the trapezoidal pulse at dimensionless time(s) ``t``.

    Parameters
    ----------
    pulse : TrapezoidalPulse
    t : array_like
        Dimensionless time; reduced modulo 1.

    Returns
    -------
    np.ndarray
        Values in [0, 1], same shape as ``t``.
    """
    x = np.mod(np.asarray(t, dtype=float), 1.0)
    rise_end = pulse.t_rf
    top_end = pulse.t_rf + pulse.t_dc
    fall_end = 2.0 * pulse.t_rf + pulse.t_dc

    rising = x / pulse.t_rf
    falling = 1.0 - (x - top_end) / pulse.t_rf
    value = np.select(
        [x < rise_end, x < top_end, x < fall_end],
        [rising, 1.0, falling],
        default=0.0,
    )
    return np.clip(value, 0.0, 1.0)


class AutocorrelationModel(pydantic.BaseModel, abc.ABC):
    """
    Evaluable autocorrelation function of a WSCS source.

    Subclasses provide the variance profile, the lag kernel and a certified
    bound; everything downstream only uses this interface.
    """

    model_config = pydantic.ConfigDict(
        extra="forbid",
        frozen=True,
        populate_by_name=True,
    )

    @property
    @abc.abstractmethod
    def period(self) -> float:
        """Period of the statistics, in seconds."""

    @property
    @abc.abstractmethod
    def memory(self) -> float:
        """Maximal autocorrelation length, in seconds."""

    @abc.abstractmethod
    def variance(self, t: ArrayLike) -> np.ndarray:
        """c(t, 0)."""

    @abc.abstractmethod
    def evaluate(self, t: ArrayLike, lag: ArrayLike) -> np.ndarray:
        """c(t, lag), broadcasting ``t`` against ``lag``."""

    @abc.abstractmethod
    def gamma_bound(self) -> float:
        """Certified upper bound on sup |c(t, lag)|."""

    def breakpoints(self) -> np.ndarray:
        """Times in [0, period) where the variance profile has corners."""
        return np.zeros(0)

    def memory_samples(self, p: int) -> int:
        """
        Maximal discrete-time correlation length, ceil((p + 1) * memory / period).

        Always at least 1.
        """
        if p < 1:
            raise ConfigurationError(f"p must be a positive integer, got {p}")
        ratio = (p + 1) * self.memory / self.period
        # An exact integer ratio can land one ulp above the integer.
        return max(1, math.ceil(ratio * (1.0 - 4.0 * np.finfo(float).eps)))


class AfModel(AutocorrelationModel):
    """
    Trapezoidal-pulse variance profile with exponentially decaying lags.

    ``c(t, 0) = base_var + var_amp * pulse(t / T_c - phi_tilde)`` and, for
    ``0 <= lag <= lambda_c``, ``c(t, lag) = exp(-lag * decay_rate) * c(t, 0)``.
    Lags beyond ``lambda_c`` are zero; negative lags use
    ``c(t, lag) = c(t + lag, -lag)``.

    Attributes
    ----------
    T_c : float
        Period in seconds.
    lambda_c : float
        Maximal autocorrelation length in seconds.
    pulse : TrapezoidalPulse
    base_var : float
        Variance floor.
    var_amp : float
        Variance amplitude multiplying the pulse.
    decay_rate : float
        Lag-decay exponent in 1/seconds.  ``inf`` gives a memoryless source.
    phi_tilde : float
        Normalized offset of the variance profile, in [0, 1).
    """

    T_c: float = pydantic.Field(default=5e-6, gt=0.0, alias="T_c_seconds")
    lambda_c: float = pydantic.Field(default=4e-6, gt=0.0, alias="lambda_c_seconds")
    t_rf: float = pydantic.Field(default=0.01, gt=0.0)
    t_dc: float = pydantic.Field(default=0.4, ge=0.0)
    base_var: float = 2.0
    var_amp: float = 8.0
    decay_rate: float = pydantic.Field(
        default=10**6.1, ge=0.0, alias="decay_rate_per_second"
    )
    phi_tilde: float = pydantic.Field(default=0.0, ge=0.0, lt=1.0)

    @pydantic.model_validator(mode="after")
    def _check_model(self) -> "AfModel":
        # Delegates the tiling check.
        TrapezoidalPulse(t_rf=self.t_rf, t_dc=self.t_dc)
        if not math.isfinite(self.T_c) or not math.isfinite(self.lambda_c):
            raise ValueError("T_c and lambda_c must be finite")
        if self.base_var <= 0.0 or self.base_var + self.var_amp <= 0.0:
            raise ValueError(
                "The variance profile must be strictly positive: "
                f"base_var={self.base_var}, base_var + var_amp={self.base_var + self.var_amp}"
            )
        return self

    @property
    def pulse(self) -> TrapezoidalPulse:
        return TrapezoidalPulse(t_rf=self.t_rf, t_dc=self.t_dc)

    @property
    def period(self) -> float:
        return self.T_c

    @property
    def memory(self) -> float:
        return self.lambda_c

    def variance(self, t: ArrayLike) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        phase = t / self.T_c - self.phi_tilde
        return self.base_var + self.var_amp * pulse_eval(self.pulse, phase)

    def evaluate(self, t: ArrayLike, lag: ArrayLike) -> np.ndarray:
        t, lag = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(lag, dtype=float))
        start = np.where(lag < 0.0, t + lag, t)
        distance = np.abs(lag)
        with np.errstate(invalid="ignore", over="ignore"):
            decay = np.where(distance == 0.0, 1.0, np.exp(-distance * self.decay_rate))
        value = decay * self.variance(start)
        return np.where(distance > self.lambda_c, 0.0, value)

    def gamma_bound(self) -> float:
        return float(max(abs(self.base_var), abs(self.base_var + self.var_amp)))

    def breakpoints(self) -> np.ndarray:
        shifted = (self.pulse.breakpoints + self.phi_tilde) * self.T_c
        return np.unique(np.mod(shifted, self.T_c))


def af_eval(model: AutocorrelationModel, t: ArrayLike, lag: ArrayLike) -> np.ndarray:
    """
    Evaluate the AF ``c(t, lag)``.

    Parameters
    ----------
    model : AutocorrelationModel
    t : array_like
        Time in seconds.
    lag : array_like
        Lag in seconds.

    Returns
    -------
    np.ndarray
        Broadcast result; exactly zero where ``|lag| > memory``.
    """
    return model.evaluate(t, lag)


def gamma_bound(model: AutocorrelationModel) -> float:
    """Certified upper bound on ``sup |c(t, lag)|``."""
    return model.gamma_bound()


@dataclasses.dataclass(frozen=True)
class GammaCEstimate:
    """
    Grid estimate of the strict-diagonal-dominance margin.

    Attributes
    ----------
    value : float
        min over t of c(t, 0) - 2 * tau_c * max |c(t, lag)| for
        period/(p+1) < |lag| <= memory.
    positive : bool
        Whether ``value > 0``.
    p : int
    tau_c : int
    t_grid_size : int
        Uniform t-nodes (breakpoints are added on top of these).
    lag_grid_size : int
        Lag nodes per sign.
    t_nodes : int
        Total t-nodes evaluated, including breakpoints.
    argmin_t : float
        Time in seconds achieving the minimum.
    lag_window : tuple of float
        The open-closed lag window (low, high] in seconds; empty when low >= high.
    """

    value: float
    positive: bool
    p: int
    tau_c: int
    t_grid_size: int
    lag_grid_size: int
    t_nodes: int
    argmin_t: float
    lag_window: tuple


def gamma_c(
    model: AutocorrelationModel,
    p: int,
    t_grid_size: int = DEFAULT_GRID_SIZE,
    lag_grid_size: int = DEFAULT_GRID_SIZE,
    tau_c: Optional[int] = None,
) -> GammaCEstimate:
    """
    Estimate the diagonal-dominance margin gamma_c on uniform grids.

    Parameters
    ----------
    model : AutocorrelationModel
    p : int
        Integer part of the samples-per-period ratio.
    t_grid_size : int, default=4096
        Uniform t-nodes over [0, period); the variance breakpoints are added.
    lag_grid_size : int, default=4096
        Lag nodes over (period/(p+1), memory], used with both signs.
    tau_c : int, optional
        Override for the memory length in samples.  Defaults to
        ``model.memory_samples(p)``.

    Returns
    -------
    GammaCEstimate
        A negative value is a valid outcome, meaning the gate fails.
    """
    if t_grid_size < 2 or lag_grid_size < 2:
        raise ConfigurationError("gamma_c grids need at least 2 points")
    if tau_c is None:
        tau_c = model.memory_samples(p)

    T_c = model.period
    t_nodes = np.unique(
        np.concatenate([np.arange(t_grid_size) * (T_c / t_grid_size), model.breakpoints()])
    )

    low = T_c / (p + 1)
    high = model.memory
    variances = model.variance(t_nodes)

    if low >= high:
        worst = np.zeros_like(t_nodes)
    else:
        k = np.arange(1, lag_grid_size + 1)
        lags = low + k * ((high - low) / lag_grid_size)
        lags = np.concatenate([lags, -lags])
        worst = np.empty_like(t_nodes)
        for start in range(0, len(t_nodes), _GAMMA_C_CHUNK):
            chunk = t_nodes[start : start + _GAMMA_C_CHUNK]
            values = np.abs(model.evaluate(chunk[:, np.newaxis], lags[np.newaxis, :]))
            worst[start : start + len(chunk)] = values.max(axis=1)

    margins = variances - 2.0 * tau_c * worst
    index = int(np.argmin(margins))
    value = float(margins[index])
    logger.debug(
        "gamma_c: p=%d tau_c=%d value=%g at t=%g (%d t-nodes, %d lags per sign)",
        p,
        tau_c,
        value,
        t_nodes[index],
        len(t_nodes),
        lag_grid_size,
    )
    return GammaCEstimate(
        value=value,
        positive=value > 0.0,
        p=p,
        tau_c=tau_c,
        t_grid_size=t_grid_size,
        lag_grid_size=lag_grid_size,
        t_nodes=len(t_nodes),
        argmin_t=float(t_nodes[index]),
        lag_window=(float(low), float(high)),
    )
