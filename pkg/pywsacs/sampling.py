"""
Sampling of a continuous-time WSCS source.

A source with period ``T_c`` is sampled every ``T_s(eps) = T_c / (p + eps)``
starting at phase ``phi_s``.  For finite ``n`` the offset ``eps`` is replaced
by its rational approximation ``eps_n = floor(n * eps) / n``, giving a
synchronously sampled process whose statistics repeat every
``p_n = p * n + floor(n * eps)`` samples.
"""

from __future__ import annotations

import logging
from fractions import Fraction
from typing import Literal, Optional, Union

import numpy as np
import pydantic
import pydantic.dataclasses as dataclasses
from numpy.typing import ArrayLike

from .af_model import AutocorrelationModel
from .exceptions import ConfigurationError, DomainError
from .util.expressions import PiRational, parse_float_expression, parse_pi_rational

logger = logging.getLogger(__name__)

ASYNCHRONOUS = "asynchronous"

EpsilonLike = Union[str, float, int, Fraction, PiRational]


def as_epsilon(epsilon: EpsilonLike) -> PiRational:
    """
    Parse and range-check the sampling offset.

    Raises
    ------
    ConfigurationError
        If epsilon is not in [0, 1).
    """
    value = parse_pi_rational(epsilon)
    low, high = value.bracket()
    if low < 0 or high >= 1:
        raise ConfigurationError(f"epsilon must lie in [0, 1), got {value}")
    return value


@dataclasses.dataclass(frozen=True, config=pydantic.ConfigDict(arbitrary_types_allowed=True))
class RationalApprox:
    """
    Rational approximation of the sampling offset.

    Attributes
    ----------
    n : int
    floor_n_eps : int
        floor(n * eps), certified.
    epsilon_n : Fraction
        floor(n * eps) / n, exact.
    p_n : int
        Period of the sampled statistics, in samples.
    T_s : float
        Sampling interval T_c / (p + eps_n), in units of ``period``.
    """

    n: int
    floor_n_eps: int
    epsilon_n: Fraction
    p_n: int
    T_s: float


def rational_approx(
    epsilon: EpsilonLike,
    n: int,
    p: int = 2,
    period: float = 1.0,
) -> RationalApprox:
    """
    Resolve ``eps_n``, ``p_n`` and the sampling interval for a given ``n``.

    Parameters
    ----------
    epsilon : str, float or PiRational
        Offset in [0, 1); ``"pi/7"``-style expressions are exact.
    n : int
        Approximation index, n >= 1.
    p : int, default=2
    period : float, default=1.0
        T_c in seconds.  With the default, ``T_s`` is in units of T_c.

    Returns
    -------
    RationalApprox

    Raises
    ------
    DomainError
        If ``n < 1``.
    PrecisionError
        If floor(n * eps) cannot be certified.
    """
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n!r}")
    if p < 1:
        raise ConfigurationError(f"p must be a positive integer, got {p}")
    n = int(n)
    eps = as_epsilon(epsilon)
    floor_n_eps = eps.floor_times(n)
    epsilon_n = Fraction(floor_n_eps, n)
    p_n = p * n + floor_n_eps
    T_s = period / (p + float(epsilon_n))
    return RationalApprox(
        n=n,
        floor_n_eps=floor_n_eps,
        epsilon_n=epsilon_n,
        p_n=p_n,
        T_s=T_s,
    )


def tau_c(model: AutocorrelationModel, p: int) -> int:
    """Memory length in samples: ceil((p + 1) * lambda_c / T_c), at least 1."""
    return model.memory_samples(p)


@dataclasses.dataclass(frozen=True, config=pydantic.ConfigDict(arbitrary_types_allowed=True))
class ResolvedPlan:
    """
    A sampling plan with every derived quantity filled in.

    Attributes
    ----------
    p : int
    epsilon : PiRational
        The exact offset.
    n : int or None
        None for the asynchronous plan.
    epsilon_n : float
        Offset actually used; ``float(epsilon)`` when asynchronous.
    p_n : int or None
        Period in samples; None when asynchronous.
    T_s : float
        Sampling interval in seconds.
    tau_c : int
    phi_s : float
        Initial sampling phase in seconds.
    """

    p: int
    epsilon: PiRational
    n: Optional[int]
    epsilon_n: float
    p_n: Optional[int]
    T_s: float
    tau_c: int
    phi_s: float

    @property
    def synchronous(self) -> bool:
        return self.p_n is not None

    def with_phase(self, phi_s: float) -> "ResolvedPlan":
        return ResolvedPlan(
            p=self.p,
            epsilon=self.epsilon,
            n=self.n,
            epsilon_n=self.epsilon_n,
            p_n=self.p_n,
            T_s=self.T_s,
            tau_c=self.tau_c,
            phi_s=float(phi_s),
        )


def resolve_plan(
    model: AutocorrelationModel,
    p: int,
    epsilon: EpsilonLike,
    n: Union[int, str, None],
    phi_s: float = 0.0,
) -> ResolvedPlan:
    """
    Resolve a sampling plan against a model.

    Parameters
    ----------
    model : AutocorrelationModel
    p : int
    epsilon : str, float or PiRational
    n : int, "asynchronous" or None
        None and "asynchronous" both sample at the exact offset.
    phi_s : float, default=0.0
        Initial sampling phase in seconds.

    Returns
    -------
    ResolvedPlan
    """
    eps = as_epsilon(epsilon)
    memory = tau_c(model, p)
    if n is None or n == ASYNCHRONOUS:
        return ResolvedPlan(
            p=p,
            epsilon=eps,
            n=None,
            epsilon_n=float(eps),
            p_n=None,
            T_s=model.period / (p + float(eps)),
            tau_c=memory,
            phi_s=float(phi_s),
        )
    approx = rational_approx(eps, n, p=p, period=model.period)
    return ResolvedPlan(
        p=p,
        epsilon=eps,
        n=approx.n,
        epsilon_n=float(approx.epsilon_n),
        p_n=approx.p_n,
        T_s=approx.T_s,
        tau_c=memory,
        phi_s=float(phi_s),
    )


def dt_autocorr(
    model: AutocorrelationModel,
    plan: ResolvedPlan,
    i: ArrayLike,
    delta: ArrayLike,
) -> np.ndarray:
    """
    Discrete-time autocorrelation ``c_X[i, delta] = c(i*T_s + phi_s, delta*T_s)``.

    Every ``(i, delta)`` pair is first normalized to a non-negative lag
    (``i <- i + delta``, ``delta <- -delta`` when ``delta < 0``) and, for
    synchronous plans, ``i`` is reduced modulo ``p_n``.  Lag symmetry and
    periodicity therefore hold bit for bit.

    Parameters
    ----------
    model : AutocorrelationModel
    plan : ResolvedPlan
    i : array_like of int
        Sample index.
    delta : array_like of int
        Lag in samples.

    Returns
    -------
    np.ndarray
    """
    i, delta = np.broadcast_arrays(
        np.asarray(i, dtype=np.int64), np.asarray(delta, dtype=np.int64)
    )
    negative = delta < 0
    start = np.where(negative, i + delta, i)
    distance = np.abs(delta)
    if plan.synchronous:
        start = np.mod(start, plan.p_n)
    t = start * plan.T_s + plan.phi_s
    return model.evaluate(t, distance * plan.T_s)


def block_covariance(model: AutocorrelationModel, plan: ResolvedPlan, l: int) -> np.ndarray:
    """
    Covariance matrix of ``l`` consecutive samples starting at sample 0.

    ``(C)_{u,v} = c(u*T_s + phi_s, (v - u)*T_s)``.

    Parameters
    ----------
    model : AutocorrelationModel
    plan : ResolvedPlan
    l : int
        Block length, l >= 1.

    Returns
    -------
    np.ndarray
        Symmetric ``(l, l)`` array.
    """
    if l < 1:
        raise DomainError(f"Block length must be positive, got {l}")
    u = np.arange(l)[:, np.newaxis]
    v = np.arange(l)[np.newaxis, :]
    return dt_autocorr(model, plan, u, v - u)


class SamplingPlan(pydantic.BaseModel, extra="forbid", validate_assignment=True):
    """
    Sampling configuration.

    Attributes
    ----------
    p : int
        Integer part of the samples-per-period ratio.
    epsilon : str or float
        Offset in [0, 1), a number or an expression like ``"pi/7"``.
    n : int or "asynchronous"
        Approximation index.
    phi_s_seconds : float, optional
        Initial sampling phase in seconds.
    phi_tilde : str or float, optional
        Normalized initial sampling phase (phi_s / T_c), in [0, 1).
        Mutually exclusive with ``phi_s_seconds``.
    """

    p: int = pydantic.Field(default=2, ge=1)
    epsilon: Union[str, float] = "pi/7"
    n: Union[pydantic.PositiveInt, Literal["asynchronous"]] = 1
    phi_s_seconds: Optional[float] = pydantic.Field(default=None, ge=0.0)
    phi_tilde: Optional[Union[str, float]] = None

    @pydantic.field_validator("epsilon")
    @classmethod
    def _check_epsilon(cls, value):
        as_epsilon(value)
        return value

    @pydantic.field_validator("phi_tilde")
    @classmethod
    def _check_phi_tilde(cls, value):
        if value is None:
            return value
        phase = parse_float_expression(value)
        if not 0.0 <= phase < 1.0:
            raise ValueError(f"phi_tilde must lie in [0, 1), got {value!r}")
        return value

    @pydantic.model_validator(mode="after")
    def _check_phase(self) -> "SamplingPlan":
        if self.phi_s_seconds is not None and self.phi_tilde is not None:
            raise ValueError("Specify at most one of phi_s_seconds and phi_tilde")
        return self

    @property
    def epsilon_value(self) -> PiRational:
        return as_epsilon(self.epsilon)

    def phase_seconds(self, model: AutocorrelationModel) -> float:
        if self.phi_s_seconds is not None:
            if self.phi_s_seconds >= model.period:
                raise ConfigurationError(
                    f"phi_s_seconds={self.phi_s_seconds} must be below T_c={model.period}"
                )
            return self.phi_s_seconds
        if self.phi_tilde is not None:
            return parse_float_expression(self.phi_tilde) * model.period
        return 0.0

    def resolve(self, model: AutocorrelationModel) -> ResolvedPlan:
        """Resolve against ``model``; see `resolve_plan`."""
        return resolve_plan(
            model,
            p=self.p,
            epsilon=self.epsilon,
            n=self.n,
            phi_s=self.phase_seconds(model),
        )
