"""
Phase optimization, sweeps and the asymptotic (asynchronous) rate.

The RDF of the asynchronously sampled source is the limit superior over n
of the phase-optimized rates of its synchronous approximations.  This module
evaluates those rates, sweeps them over n, the sampling phase or the
distortion, and reports the admissibility gate and the overhead of the
guard-interval construction.
"""

from __future__ import annotations

import concurrent.futures
import logging
import math
from typing import List, Literal, Optional, Sequence, Union

import numpy as np
import pydantic
import pydantic.dataclasses as dataclasses

from .af_model import AutocorrelationModel, GammaCEstimate, gamma_c
from .config import GateSettings, SpectrumSettings
from .exceptions import ConfigurationError, DomainError, WsacsException
from .sampling import EpsilonLike, ResolvedPlan, block_covariance, resolve_plan
from .spectrum import build_block_autocorr, eigen_field
from .waterfill import RdfPoint, finite_block_rdf, solve_theta

logger = logging.getLogger(__name__)

PASS = "PASS"
FAIL = "FAIL"
CERTIFIED = "certified"
HEURISTIC = "heuristic"

Verdict = Literal["PASS", "FAIL"]
Label = Literal["certified", "heuristic"]


def _spectrum(settings: Optional[SpectrumSettings]) -> SpectrumSettings:
    return settings if settings is not None else SpectrumSettings()


def rdf_curve(
    model: AutocorrelationModel,
    plan: ResolvedPlan,
    D_values: Sequence[float],
    spectrum: Optional[SpectrumSettings] = None,
) -> List[RdfPoint]:
    """
    Water-filled rates of one synchronous plan at several distortions.

    The eigenvalue field is computed once and shared by every ``D``.
    """
    spectrum = _spectrum(spectrum)
    ba = build_block_autocorr(model, plan, max_entries=spectrum.max_entries)
    field = eigen_field(
        ba,
        grid_size=spectrum.grid_size,
        tol_psd=spectrum.tol_psd,
        workers=spectrum.workers,
    )
    return [solve_theta(field, D) for D in D_values]


def rdf_sync(
    model: AutocorrelationModel,
    plan: ResolvedPlan,
    D: float,
    spectrum: Optional[SpectrumSettings] = None,
) -> RdfPoint:
    """
    RDF of the synchronously sampled process at distortion ``D``.

    Block autocorrelation, eigenvalue field and water-filling, in that order.
    No admissibility gate is applied.

    Parameters
    ----------
    model : AutocorrelationModel
    plan : ResolvedPlan
        Synchronous plan (finite n) including the sampling phase.
    D : float
    spectrum : SpectrumSettings, optional

    Returns
    -------
    RdfPoint
    """
    (point,) = rdf_curve(model, plan, [D], spectrum)
    return point


@dataclasses.dataclass(frozen=True)
class PhasePoint:
    """Rate at one sampling phase."""

    phi_tilde: float
    phi_s: float
    R: float
    theta: float


@dataclasses.dataclass(frozen=True)
class PhaseCurve:
    """
    Result of a phase grid search.

    Attributes
    ----------
    phi_opt : float
        Minimizing phase in seconds (smallest index on ties).
    phi_tilde_opt : float
        Same, normalized by the period.
    R_min : float
    theta_opt : float
    points : list of PhasePoint
        The full curve, in grid order.
    """

    phi_opt: float
    phi_tilde_opt: float
    R_min: float
    theta_opt: float
    points: List[PhasePoint]

    @property
    def spread(self) -> float:
        """max - min of the rate over the phase grid."""
        rates = [point.R for point in self.points]
        return max(rates) - min(rates)


def phase_curve(
    model: AutocorrelationModel,
    plan: ResolvedPlan,
    D: float,
    phi_tilde_values: Sequence[float],
    spectrum: Optional[SpectrumSettings] = None,
) -> PhaseCurve:
    """
    Rates at the given normalized phases, with the minimizer.

    Phases may exceed 1; the statistics are periodic in the phase.
    """
    if not len(phi_tilde_values):
        raise ConfigurationError("At least one phase is required")
    points = []
    for phi_tilde in phi_tilde_values:
        phi_s = float(phi_tilde) * model.period
        point = rdf_sync(model, plan.with_phase(phi_s), D, spectrum)
        points.append(
            PhasePoint(phi_tilde=float(phi_tilde), phi_s=phi_s, R=point.R, theta=point.theta)
        )
        logger.debug("phase %g: R=%g", phi_tilde, point.R)

    best = int(np.argmin([point.R for point in points]))
    return PhaseCurve(
        phi_opt=points[best].phi_s,
        phi_tilde_opt=points[best].phi_tilde,
        R_min=points[best].R,
        theta_opt=points[best].theta,
        points=points,
    )


def phase_optimize(
    model: AutocorrelationModel,
    plan: ResolvedPlan,
    D: float,
    phase_grid_size: int = 64,
    spectrum: Optional[SpectrumSettings] = None,
) -> PhaseCurve:
    """
    Minimize the rate over the sampling phase by grid search.

    Phases are ``phi_s = k * T_c / phase_grid_size`` for
    ``k = 0 .. phase_grid_size - 1``.  Ties go to the smallest ``k``.

    Parameters
    ----------
    model : AutocorrelationModel
    plan : ResolvedPlan
        Synchronous plan; its own phase is ignored.
    D : float
    phase_grid_size : int, default=64
    spectrum : SpectrumSettings, optional

    Returns
    -------
    PhaseCurve
    """
    if phase_grid_size < 2:
        raise ConfigurationError(
            f"phase_grid_size must be at least 2, got {phase_grid_size}"
        )
    phases = np.arange(phase_grid_size) / phase_grid_size
    return phase_curve(model, plan, D, phases, spectrum)


def phase_shift_gap(
    model: AutocorrelationModel,
    plan: ResolvedPlan,
    D: float,
    spectrum: Optional[SpectrumSettings] = None,
) -> float:
    """
    ``|R(phi_s + T_s) - R(phi_s)|``, the rate change under a one-sample shift.

    Reported empirically; no invariance is assumed.
    """
    here = rdf_sync(model, plan, D, spectrum)
    shifted = rdf_sync(model, plan.with_phase(plan.phi_s + plan.T_s), D, spectrum)
    return abs(shifted.R - here.R)


@dataclasses.dataclass(frozen=True)
class GateVerdict:
    """
    Admissibility gate: the diagonal-dominance margin against ``D``.

    Attributes
    ----------
    estimate : GammaCEstimate
    D : float
    verdict : {"PASS", "FAIL"}
        PASS iff the margin is positive and ``D <= gamma_c``.
    """

    estimate: GammaCEstimate
    D: float
    verdict: Verdict

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    @property
    def label(self) -> Label:
        return CERTIFIED if self.passed else HEURISTIC

    def to_report(self) -> dict:
        return {
            "gamma_c_estimate": self.estimate.value,
            "gamma_c_positive": self.estimate.positive,
            "D": self.D,
            "verdict": self.verdict,
            "label": self.label,
            "p": self.estimate.p,
            "tau_c": self.estimate.tau_c,
            "t_grid_size": self.estimate.t_grid_size,
            "lag_grid_size": self.estimate.lag_grid_size,
            "t_nodes": self.estimate.t_nodes,
            "argmin_t_seconds": self.estimate.argmin_t,
            "lag_window_seconds": list(self.estimate.lag_window),
        }


def gate_check(
    model: AutocorrelationModel,
    p: int,
    D: float,
    settings: Optional[GateSettings] = None,
) -> GateVerdict:
    """
    Check whether ``D <= gamma_c`` with a positive margin.

    A failing gate is a verdict, not an error; sweeps computed without a
    passing gate are labeled heuristic.
    """
    settings = settings if settings is not None else GateSettings()
    estimate = gamma_c(
        model,
        p,
        t_grid_size=settings.t_grid_size,
        lag_grid_size=settings.lag_grid_size,
    )
    verdict = PASS if estimate.positive and D <= estimate.value else FAIL
    if verdict == FAIL:
        logger.warning("Gate FAIL: gamma_c estimate %g, D=%g", estimate.value, D)
    else:
        logger.info("Gate PASS: gamma_c estimate %g, D=%g", estimate.value, D)
    return GateVerdict(estimate=estimate, D=float(D), verdict=verdict)


@dataclasses.dataclass(frozen=True)
class SweepPoint:
    """
    One sweep point.

    Attributes
    ----------
    axis_value : float
    R : float, optional
        Missing when the point failed.
    theta : float, optional
    p_n : int, optional
    epsilon_n : float, optional
    phi_opt : float, optional
        Phase used, in seconds.
    phi_tilde_opt : float, optional
    quad_error : float, optional
    constraint_inactive : bool
    status : {"ok", "failed"}
    error : str
    """

    axis_value: float
    R: Optional[float] = None
    theta: Optional[float] = None
    p_n: Optional[int] = None
    epsilon_n: Optional[float] = None
    phi_opt: Optional[float] = None
    phi_tilde_opt: Optional[float] = None
    quad_error: Optional[float] = None
    constraint_inactive: bool = False
    status: Literal["ok", "failed"] = "ok"
    error: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "ok"


@dataclasses.dataclass(frozen=True)
class SweepResult:
    """
    An ordered sweep along one axis.

    Attributes
    ----------
    axis : {"n", "phi", "D"}
    points : list of SweepPoint
        Strictly ascending in ``axis_value``.
    gate : GateVerdict, optional
    limsup_estimate : float, optional
        n-sweeps only: max of R over the trailing window.
    window : list of float
        Axis values in the trailing window.
    label : {"certified", "heuristic"}
    """

    axis: Literal["n", "phi", "D"]
    points: List[SweepPoint]
    gate: Optional[GateVerdict] = None
    limsup_estimate: Optional[float] = None
    window: List[float] = pydantic.Field(default_factory=list)
    label: Label = HEURISTIC

    def __post_init__(self):
        values = [point.axis_value for point in self.points]
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError(f"Sweep points must be strictly ascending in {self.axis}")
        if self.axis != "n" and self.limsup_estimate is not None:
            raise ValueError("limsup_estimate is defined for n-sweeps only")

    @property
    def partial(self) -> bool:
        return any(not point.ok for point in self.points)

    @property
    def axis_values(self) -> List[float]:
        return [point.axis_value for point in self.points]

    @property
    def rates(self) -> List[Optional[float]]:
        return [point.R for point in self.points]


def limsup_estimate(rates: Sequence[Optional[float]], window_fraction: float = 0.2) -> tuple:
    """
    Max of the rates over the trailing ``window_fraction`` of the sequence.

    The window holds ``ceil(window_fraction * len(rates))`` entries, at least
    one.  Missing rates (failed points) are skipped.

    Returns
    -------
    (float or None, int)
        The estimate and the window length.
    """
    if not 0.0 < window_fraction <= 1.0:
        raise ConfigurationError(
            f"window_fraction must lie in (0, 1], got {window_fraction}"
        )
    if not len(rates):
        return None, 0
    size = max(1, math.ceil(window_fraction * len(rates) - 1e-12))
    window = [rate for rate in rates[-size:] if rate is not None]
    return (max(window) if window else None), size


def _n_point(
    model: AutocorrelationModel,
    p: int,
    epsilon: EpsilonLike,
    n: int,
    D: float,
    phase: Union[Literal["optimize"], float],
    phase_grid_size: int,
    spectrum: SpectrumSettings,
    max_cost: int,
    allow_expensive: bool,
) -> SweepPoint:
    try:
        plan = resolve_plan(model, p, epsilon, n)
        cost = plan.p_n * spectrum.grid_size
        if cost > max_cost and not allow_expensive:
            return SweepPoint(
                axis_value=float(n),
                p_n=plan.p_n,
                epsilon_n=plan.epsilon_n,
                status="failed",
                error=(
                    f"cost p_n*grid_size={cost} exceeds max_cost={max_cost}; "
                    "set allow_expensive to run it"
                ),
            )
        if phase == "optimize":
            curve = phase_optimize(model, plan, D, phase_grid_size, spectrum)
            phi_tilde = curve.phi_tilde_opt
            R, theta = curve.R_min, curve.theta_opt
            point = None
        else:
            phi_tilde = float(phase)
            point = rdf_sync(model, plan.with_phase(phi_tilde * model.period), D, spectrum)
            R, theta = point.R, point.theta
        logger.debug("n=%d p_n=%d R=%g", n, plan.p_n, R)
        return SweepPoint(
            axis_value=float(n),
            R=R,
            theta=theta,
            p_n=plan.p_n,
            epsilon_n=plan.epsilon_n,
            phi_opt=phi_tilde * model.period,
            phi_tilde_opt=phi_tilde,
            quad_error=point.quad_error if point is not None else None,
            constraint_inactive=point.constraint_inactive if point is not None else False,
        )
    except WsacsException as ex:
        logger.error("Sweep point n=%d failed: %s", n, ex)
        return SweepPoint(
            axis_value=float(n), status="failed", error=f"{type(ex).__name__}: {ex}"
        )


def _n_point_star(args: tuple) -> SweepPoint:
    return _n_point(*args)


def n_sweep(
    model: AutocorrelationModel,
    p: int,
    epsilon: EpsilonLike,
    D: float,
    n_values: Sequence[int],
    window_fraction: float = 0.2,
    phase: Union[Literal["optimize"], float] = "optimize",
    phase_grid_size: int = 64,
    spectrum: Optional[SpectrumSettings] = None,
    max_cost: int = 2**19,
    allow_expensive: bool = False,
    gate: Optional[GateVerdict] = None,
    jobs: int = 1,
) -> SweepResult:
    """
    Phase-optimized rates of the synchronous approximations along n.

    Parameters
    ----------
    model : AutocorrelationModel
    p : int
    epsilon : str, float or PiRational
    D : float
    n_values : sequence of int
        Non-empty, strictly ascending.
    window_fraction : float, default=0.2
        Trailing fraction used for the limsup estimate.
    phase : "optimize" or float, default="optimize"
        Grid-search the phase, or use this fixed normalized phase.
    phase_grid_size : int, default=64
    spectrum : SpectrumSettings, optional
    max_cost : int, default=2**19
        Points with ``p_n * grid_size`` above this are refused (recorded as
        failed) unless ``allow_expensive``.
    allow_expensive : bool, default=False
    gate : GateVerdict, optional
        Labels the result certified when it passed.
    jobs : int, default=1
        Worker processes.  Results are merged in n order.

    Returns
    -------
    SweepResult
        Failed points are recorded and the sweep continues.
    """
    n_values = [int(n) for n in n_values]
    if not n_values:
        raise ConfigurationError("n_values must not be empty")
    if any(b <= a for a, b in zip(n_values, n_values[1:])):
        raise ConfigurationError("n_values must be strictly ascending")
    spectrum = _spectrum(spectrum)

    args = [
        (model, p, epsilon, n, D, phase, phase_grid_size, spectrum, max_cost, allow_expensive)
        for n in n_values
    ]
    if jobs > 1 and len(args) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as executor:
            points = list(executor.map(_n_point_star, args))
    else:
        points = [_n_point_star(arg) for arg in args]

    estimate, size = limsup_estimate([point.R for point in points], window_fraction)
    result = SweepResult(
        axis="n",
        points=points,
        gate=gate,
        limsup_estimate=estimate,
        window=[point.axis_value for point in points[-size:]],
        label=gate.label if gate is not None else HEURISTIC,
    )
    if result.partial:
        logger.warning(
            "n-sweep partial: %d of %d points failed",
            sum(not point.ok for point in points),
            len(points),
        )
    return result


def phase_sweep(
    model: AutocorrelationModel,
    plan: ResolvedPlan,
    D: float,
    phi_tilde_values: Sequence[float],
    spectrum: Optional[SpectrumSettings] = None,
    gate: Optional[GateVerdict] = None,
) -> SweepResult:
    """Rates over normalized sampling phases for a fixed plan."""
    points = []
    for phi_tilde in sorted(float(value) for value in phi_tilde_values):
        phi_s = phi_tilde * model.period
        try:
            point = rdf_sync(model, plan.with_phase(phi_s), D, spectrum)
        except WsacsException as ex:
            logger.error("Sweep point phi=%g failed: %s", phi_tilde, ex)
            points.append(
                SweepPoint(
                    axis_value=phi_tilde, status="failed", error=f"{type(ex).__name__}: {ex}"
                )
            )
            continue
        points.append(
            SweepPoint(
                axis_value=phi_tilde,
                R=point.R,
                theta=point.theta,
                p_n=plan.p_n,
                epsilon_n=plan.epsilon_n,
                phi_opt=phi_s,
                phi_tilde_opt=phi_tilde,
                quad_error=point.quad_error,
                constraint_inactive=point.constraint_inactive,
            )
        )
    return SweepResult(
        axis="phi",
        points=points,
        gate=gate,
        label=gate.label if gate is not None else HEURISTIC,
    )


def distortion_sweep(
    model: AutocorrelationModel,
    plan: ResolvedPlan,
    D_values: Sequence[float],
    spectrum: Optional[SpectrumSettings] = None,
    gate: Optional[GateVerdict] = None,
) -> SweepResult:
    """Rates over distortions for a fixed plan and phase."""
    D_values = sorted(float(D) for D in D_values)
    try:
        rdf_points = rdf_curve(model, plan, D_values, spectrum)
    except WsacsException as ex:
        logger.error("D-sweep failed: %s", ex)
        points = [
            SweepPoint(axis_value=D, status="failed", error=f"{type(ex).__name__}: {ex}")
            for D in D_values
        ]
    else:
        points = [
            SweepPoint(
                axis_value=D,
                R=point.R,
                theta=point.theta,
                p_n=plan.p_n,
                epsilon_n=plan.epsilon_n,
                phi_opt=plan.phi_s,
                phi_tilde_opt=plan.phi_s / model.period,
                quad_error=point.quad_error,
                constraint_inactive=point.constraint_inactive,
            )
            for D, point in zip(D_values, rdf_points)
        ]
    return SweepResult(
        axis="D",
        points=points,
        gate=gate,
        label=gate.label if gate is not None else HEURISTIC,
    )


def async_block_rdf(
    model: AutocorrelationModel,
    p: int,
    epsilon: EpsilonLike,
    l: int,
    D: float,
    phi_tilde_values: Sequence[float],
) -> tuple:
    """
    Phase-optimized finite-block RDF sampled at the exact offset.

    Returns
    -------
    (float, float)
        ``min_phi R_l`` and the minimizing normalized phase.
    """
    plan = resolve_plan(model, p, epsilon, None)
    best_rate, best_phase = math.inf, None
    for phi_tilde in phi_tilde_values:
        cov = block_covariance(model, plan.with_phase(float(phi_tilde) * model.period), l)
        rate = finite_block_rdf(cov, D).R
        if rate < best_rate:
            best_rate, best_phase = rate, float(phi_tilde)
    return best_rate, best_phase


@dataclasses.dataclass(frozen=True)
class GuardPlan:
    """
    Overhead of the guard-interval block construction.

    Attributes
    ----------
    l : int
        Block length in samples.
    tau_c : int
        Guard samples after each block.
    delta_g_prime : float
        Phase of the end of an (l + tau_c)-block, in [0, T_c) seconds.
    delta_g : float
        Extra continuous-time gap re-synchronizing to the optimal phase.
    rate_factor : float
        ``l / (l + tau_c + delta_g / T_s)``.
    distortion_penalty : float
        ``tau_c * gamma / l``.
    max_delay : float
        Allowed delay between consecutive sampled sequences,
        ``tau_c * T_s + T_c`` seconds.
    """

    l: int
    tau_c: int
    delta_g_prime: float
    delta_g: float
    rate_factor: float
    distortion_penalty: float
    max_delay: float

    def overall_rate(self, R: float) -> float:
        """Code rate after the guard overhead."""
        return R * self.rate_factor


def exact_interval(model: AutocorrelationModel, plan: ResolvedPlan) -> float:
    """Sampling interval ``T_c / (p + epsilon)`` at the exact offset, in seconds."""
    return model.period / (plan.p + float(plan.epsilon))


def max_delay(model: AutocorrelationModel, plan: ResolvedPlan) -> float:
    """``tau_c * T_s + T_c`` in seconds, with ``T_s`` at the exact offset."""
    return plan.tau_c * exact_interval(model, plan) + model.period


def guard_plan(
    model: AutocorrelationModel,
    plan: ResolvedPlan,
    l: int,
    phi_opt: float,
) -> GuardPlan:
    """
    Guard interval and its rate and distortion overhead.

    The guard is laid out on the sampler that actually runs, so the block
    end phase and the rate factor use ``T_s = T_c / (p + epsilon)`` even
    when ``plan`` carries the approximated offset ``epsilon_n``.

    Parameters
    ----------
    model : AutocorrelationModel
    plan : ResolvedPlan
        Supplies ``p``, ``epsilon`` and ``tau_c``.
    l : int
        Block length, l >= 1.
    phi_opt : float
        Optimal initial sampling phase in seconds, in [0, T_c).

    Returns
    -------
    GuardPlan
    """
    if l < 1:
        raise DomainError(f"Block length must be positive, got {l}")
    T_c = model.period
    T_s = exact_interval(model, plan)
    delta_prime = math.fmod(phi_opt + (l + plan.tau_c) * T_s, T_c)
    if T_c - delta_prime <= 1e-12 * T_c:
        delta_prime = 0.0
    if delta_prime <= phi_opt:
        delta_g = phi_opt - delta_prime
    else:
        delta_g = T_c - delta_prime + phi_opt
    rate_factor = l / (l + plan.tau_c + delta_g / T_s)
    return GuardPlan(
        l=l,
        tau_c=plan.tau_c,
        delta_g_prime=delta_prime,
        delta_g=delta_g,
        rate_factor=rate_factor,
        distortion_penalty=plan.tau_c * model.gamma_bound() / l,
        max_delay=max_delay(model, plan),
    )
