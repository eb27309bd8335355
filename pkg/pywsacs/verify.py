"""
Executable checks of the supporting analysis.

Moment bounds of the squared-error distortion (analytic and Monte Carlo),
convergence of block statistics as the sampling offset approximation
improves, the diagonal-dominance eigenvalue bound, and the mean of the
information density rate.
"""

from __future__ import annotations

import concurrent.futures
import logging
import math
from typing import Callable, Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
import pydantic
import pydantic.dataclasses as dataclasses
import scipy.linalg

from .af_model import AutocorrelationModel
from .asymptotic import FAIL, PASS, GateVerdict, async_block_rdf, gate_check, rdf_sync
from .config import GateSettings, SpectrumSettings, VerifySettings
from .exceptions import (
    ConfigurationError,
    NumericalError,
    PreconditionError,
    WsacsException,
)
from .sampling import EpsilonLike, ResolvedPlan, block_covariance, resolve_plan
from .util.stats import (
    PowerSums,
    batch_generators,
    batch_sizes,
    is_non_increasing,
    normal_ci,
    within,
)
from .util.tools import fingerprint
from .waterfill import block_eigenvalues, finite_block_rdf, test_channel

logger = logging.getLogger(__name__)

SKIP = "SKIP"
Status = Literal["PASS", "FAIL", "SKIP"]

MC_BATCH_SIZE = 10_000
MIN_MC_SAMPLES = 1000
CONFIDENCE = 0.99
MIN_COVERAGE = 0.99
MOMENT_RTOL = 1e-12
SINGULAR_RTOL = 1e-12
MONOTONE_RTOL = 1e-9


def _status(ok: bool) -> Status:
    return PASS if ok else FAIL


# Moments of the squared-error distortion


@dataclasses.dataclass(frozen=True)
class MonteCarloMoments:
    """
    Monte Carlo estimates of the distortion moments.

    Attributes
    ----------
    samples : int
    seed : int
    mc_mean : float
    mc_second : float
    mean_ci : (float, float)
        99% normal-approximation interval of ``mc_mean``.
    second_ci : (float, float)
    mean_covered : bool
        Analytic mean inside ``mean_ci``.
    second_covered : bool
    verdict : {"PASS", "FAIL"}
    """

    samples: int
    seed: int
    mc_mean: float
    mc_second: float
    mean_ci: Tuple[float, float]
    second_ci: Tuple[float, float]
    mean_covered: bool
    second_covered: bool
    verdict: Status


@dataclasses.dataclass(frozen=True)
class MomentReport:
    """
    Moments of ``d = (1/l) |x|^2`` for a zero-mean Gaussian block ``x``.

    Attributes
    ----------
    l : int
    rho : float
        Bound on the variances (diagonal of the covariance).
    mean_d : float
        ``E{d} = (1/l) sum lambda_i``.
    second_moment : float
        ``E{d^2} = (2/l^2) sum lambda_i^2 + E{d}^2``.
    bound_3rho2 : float
    mean_within_rho : bool
    second_within_bound : bool
    monte_carlo : MonteCarloMoments, optional
    """

    l: int
    rho: float
    mean_d: float
    second_moment: float
    bound_3rho2: float
    mean_within_rho: bool
    second_within_bound: bool
    monte_carlo: Optional[MonteCarloMoments] = None

    @property
    def mc_mean(self) -> Optional[float]:
        return self.monte_carlo.mc_mean if self.monte_carlo else None

    @property
    def mc_second(self) -> Optional[float]:
        return self.monte_carlo.mc_second if self.monte_carlo else None


def _analytic_moments(eigs: np.ndarray) -> Tuple[float, float]:
    l = len(eigs)
    mean = math.fsum(eigs) / l
    second = 2.0 * math.fsum(eigs * eigs) / (l * l) + mean * mean
    return mean, second


def moment_bound_check(cov: np.ndarray, rho: float) -> MomentReport:
    """
    Analytic moments of the squared-error distortion against the bounds.

    With eigenvalues ``lambda_i`` of ``cov``, ``d`` is a weighted sum of
    chi-square variables with one degree of freedom, so
    ``E{d} = (1/l) sum lambda_i <= rho`` and
    ``E{d^2} = (2/l^2) sum lambda_i^2 + E{d}^2 <= 3 rho^2``.
    Zero eigenvalues contribute nothing.

    Parameters
    ----------
    cov : np.ndarray
        Symmetric PSD ``(l, l)`` covariance.
    rho : float
        Variance bound; every diagonal entry must be at most ``rho``.

    Returns
    -------
    MomentReport

    Raises
    ------
    PreconditionError
        If a diagonal entry exceeds ``rho``.
    """
    cov = np.asarray(cov, dtype=float)
    diagonal = np.diag(cov)
    if diagonal.max() > rho * (1.0 + MOMENT_RTOL):
        raise PreconditionError(
            f"Covariance diagonal {diagonal.max()} exceeds the variance bound rho={rho}"
        )
    eigs = block_eigenvalues(cov)
    mean, second = _analytic_moments(eigs)
    bound = 3.0 * rho * rho
    return MomentReport(
        l=len(eigs),
        rho=float(rho),
        mean_d=mean,
        second_moment=second,
        bound_3rho2=bound,
        mean_within_rho=mean <= rho * (1.0 + MOMENT_RTOL),
        second_within_bound=second <= bound * (1.0 + MOMENT_RTOL),
    )


def symmetric_sqrt(cov: np.ndarray, scale: Optional[float] = None) -> np.ndarray:
    """
    Symmetric square root ``U sqrt(Lambda) U^T`` of a PSD matrix.

    Handles rank-deficient covariances.

    Raises
    ------
    NumericalError
        If ``cov`` is indefinite beyond ``1e-10 * scale``; ``scale``
        defaults to the trace.
    """
    cov = np.asarray(cov, dtype=float)
    eigs, vectors = scipy.linalg.eigh(cov)
    if scale is None:
        scale = abs(float(np.trace(cov)))
    floor = -1e-10 * scale
    if eigs.min() < floor:
        raise NumericalError(
            f"Cannot factor an indefinite covariance (eigenvalue {eigs.min()})",
            details=f"floor={floor}",
        )
    root = (vectors * np.sqrt(np.maximum(eigs, 0.0))) @ vectors.T
    return 0.5 * (root + root.T)


def _distortion_sums(root: np.ndarray, size: int, rng: np.random.Generator) -> PowerSums:
    l = root.shape[0]
    x = rng.standard_normal((size, l)) @ root
    sums = PowerSums(order=4)
    sums.add(np.einsum("ij,ij->i", x, x) / l)
    return sums


def mc_distortion_check(
    cov: np.ndarray,
    samples: int,
    seed: int,
    rho: Optional[float] = None,
    batch_size: int = MC_BATCH_SIZE,
    workers: int = 1,
) -> MomentReport:
    """
    Monte Carlo estimate of the distortion moments against the analytic values.

    Draws ``x = B z`` with ``B`` the symmetric square root of ``cov``,
    computes ``d = (1/l) |x|^2`` (distortion against the all-zero word) and
    checks that the analytic mean and second moment lie in 99% confidence
    intervals.

    Parameters
    ----------
    cov : np.ndarray
    samples : int
        At least 1000.
    seed : int
    rho : float, optional
        Defaults to the largest diagonal entry.
    batch_size : int, default=10000
        Draws per independent stream.
    workers : int, default=1
        Threads drawing the batches.  Partial sums are merged in batch
        order, so the result does not depend on it.

    Returns
    -------
    MomentReport
        With ``monte_carlo`` filled in.
    """
    if samples < MIN_MC_SAMPLES:
        raise PreconditionError(
            f"At least {MIN_MC_SAMPLES} samples are required, got {samples}"
        )
    cov = np.asarray(cov, dtype=float)
    if rho is None:
        rho = float(np.diag(cov).max())
    root = symmetric_sqrt(cov)
    report = moment_bound_check(cov, rho)
    sizes = batch_sizes(samples, batch_size)
    batches = list(zip(sizes, batch_generators(seed, len(sizes))))
    if workers > 1 and len(batches) > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as executor:
            partials = list(
                executor.map(lambda batch: _distortion_sums(root, *batch), batches)
            )
    else:
        partials = [_distortion_sums(root, *batch) for batch in batches]
    sums = PowerSums(order=4)
    for partial in partials:
        sums.merge(partial)

    mc_mean = sums.moment(1)
    mc_second = sums.moment(2)
    mean_ci = normal_ci(mc_mean, sums.variance_of_power(1), sums.count, CONFIDENCE)
    second_ci = normal_ci(mc_second, sums.variance_of_power(2), sums.count, CONFIDENCE)
    mean_covered = within(report.mean_d, mean_ci)
    second_covered = within(report.second_moment, second_ci)
    monte_carlo = MonteCarloMoments(
        samples=samples,
        seed=seed,
        mc_mean=mc_mean,
        mc_second=mc_second,
        mean_ci=mean_ci,
        second_ci=second_ci,
        mean_covered=mean_covered,
        second_covered=second_covered,
        verdict=_status(mean_covered and second_covered),
    )
    return MomentReport(
        l=report.l,
        rho=report.rho,
        mean_d=report.mean_d,
        second_moment=report.second_moment,
        bound_3rho2=report.bound_3rho2,
        mean_within_rho=report.mean_within_rho,
        second_within_bound=report.second_within_bound,
        monte_carlo=monte_carlo,
    )


@dataclasses.dataclass(frozen=True)
class CoverageSummary:
    """
    How many Monte Carlo confidence intervals covered the analytic moments.

    Every case contributes two intervals, the mean and the second moment.

    Attributes
    ----------
    cases : int
    intervals : int
    covered : int
    coverage : float
        ``covered / intervals``.
    required : float
    verdict : {"PASS", "FAIL"}
    """

    cases: int
    intervals: int
    covered: int
    coverage: float
    required: float
    verdict: Status


def coverage_verdict(
    results: Sequence[MonteCarloMoments], required: float = MIN_COVERAGE
) -> CoverageSummary:
    """PASS when at least ``required`` of the intervals cover their analytic moment."""
    if not results:
        raise PreconditionError("At least one Monte Carlo case is required")
    intervals = 2 * len(results)
    covered = sum(int(mc.mean_covered) + int(mc.second_covered) for mc in results)
    coverage = covered / intervals
    return CoverageSummary(
        cases=len(results),
        intervals=intervals,
        covered=covered,
        coverage=coverage,
        required=required,
        verdict=_status(coverage >= required - 1e-12),
    )


# Convergence of block statistics in n


@dataclasses.dataclass(frozen=True)
class ConvergenceRow:
    """
    One n of a convergence table.

    ``value`` is None for rows flagged singular.
    """

    n: int
    p_n: int
    epsilon_n: float
    value: Optional[float]
    reference: Optional[float] = None
    bound: Optional[float] = None
    flagged: bool = False


@dataclasses.dataclass(frozen=True)
class ConvergenceTable:
    """
    Per-n gaps between the rational approximation and the exact offset.

    Attributes
    ----------
    name : str
    l : int
    phases : list of float
        Normalized phases the gaps are maximized over.
    rows : list of ConvergenceRow
    non_increasing : bool
        Gaps never increase along the rows (relative tolerance 1e-9).
    label : {"certified", "heuristic"}
    """

    name: str
    l: int
    phases: List[float]
    rows: List[ConvergenceRow]
    non_increasing: bool
    label: str = "certified"

    @property
    def values(self) -> List[Optional[float]]:
        return [row.value for row in self.rows]


def _reference_plan(model, p, epsilon, plan: ResolvedPlan) -> ResolvedPlan:
    eps = plan.epsilon
    # A rational offset hit exactly by eps_n samples the same process.
    if eps.is_rational and (eps.coefficient * plan.n).denominator == 1:
        return plan
    return resolve_plan(model, p, epsilon, None)


def _check_n_list(n_list: Sequence[int]) -> List[int]:
    n_list = [int(n) for n in n_list]
    if not n_list or any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ConfigurationError(
            f"n_list must be non-empty and strictly ascending, got {n_list}"
        )
    return n_list


def _block_pairs(
    model: AutocorrelationModel,
    p: int,
    epsilon: EpsilonLike,
    l: int,
    n: int,
    phases: Sequence[float],
):
    """Yield (plan, approximating block, reference block) per phase."""
    base = resolve_plan(model, p, epsilon, n)
    reference = _reference_plan(model, p, epsilon, base)
    for phi_tilde in phases:
        phi_s = float(phi_tilde) * model.period
        plan = base.with_phase(phi_s)
        yield (
            plan,
            block_covariance(model, plan, l),
            block_covariance(model, reference.with_phase(phi_s), l),
        )


def _table(
    name: str,
    l: int,
    phases: Sequence[float],
    rows: List[ConvergenceRow],
    label: str = "certified",
) -> ConvergenceTable:
    return ConvergenceTable(
        name=name,
        l=l,
        phases=[float(phase) for phase in phases],
        rows=rows,
        non_increasing=is_non_increasing([row.value for row in rows], MONOTONE_RTOL),
        label=label,
    )


def autocorr_convergence(
    model: AutocorrelationModel,
    p: int,
    epsilon: EpsilonLike,
    l: int,
    n_list: Sequence[int],
    phases: Sequence[float],
) -> ConvergenceTable:
    """
    Max entrywise gap between the block covariances at ``eps_n`` and ``eps``.

    Parameters
    ----------
    model : AutocorrelationModel
    p : int
    epsilon : str, float or PiRational
    l : int
        Block length.
    n_list : sequence of int
        Strictly ascending.
    phases : sequence of float
        Normalized sampling phases; the gap is maximized over them.

    Returns
    -------
    ConvergenceTable
    """
    rows = []
    for n in _check_n_list(n_list):
        gap = 0.0
        plan = None
        for plan, approx, exact in _block_pairs(model, p, epsilon, l, n, phases):
            gap = max(gap, float(np.abs(approx - exact).max()))
        rows.append(ConvergenceRow(n=n, p_n=plan.p_n, epsilon_n=plan.epsilon_n, value=gap))
        logger.debug("autocorr gap n=%d: %g", n, gap)
    return _table("autocorr_convergence", l, phases, rows)


def eigenvalue_convergence(
    model: AutocorrelationModel,
    p: int,
    epsilon: EpsilonLike,
    l: int,
    n_list: Sequence[int],
    phases: Sequence[float],
) -> ConvergenceTable:
    """
    Max gap between sorted eigenvalues of the block covariances at ``eps_n`` and ``eps``.

    Each row also carries ``bound``, the largest spectral norm of the
    covariance difference, which bounds the eigenvalue gap.
    """
    rows = []
    for n in _check_n_list(n_list):
        gap, bound = 0.0, 0.0
        plan = None
        for plan, approx, exact in _block_pairs(model, p, epsilon, l, n, phases):
            eig_approx = scipy.linalg.eigvalsh(approx)
            eig_exact = scipy.linalg.eigvalsh(exact)
            gap = max(gap, float(np.abs(eig_approx - eig_exact).max()))
            bound = max(bound, float(np.linalg.norm(approx - exact, 2)))
        rows.append(
            ConvergenceRow(n=n, p_n=plan.p_n, epsilon_n=plan.epsilon_n, value=gap, bound=bound)
        )
    return _table("eigenvalue_convergence", l, phases, rows)


def _log2det(cov: np.ndarray) -> Optional[float]:
    eigs = scipy.linalg.eigvalsh(cov)
    if eigs.min() <= SINGULAR_RTOL * abs(float(np.trace(cov))):
        return None
    return math.fsum(np.log2(eigs))


def logdet_convergence(
    model: AutocorrelationModel,
    p: int,
    epsilon: EpsilonLike,
    l: int,
    n_list: Sequence[int],
    phases: Sequence[float],
    gate: Optional[GateVerdict] = None,
) -> ConvergenceTable:
    """
    Max gap of ``(1/2l) log2 det`` between the block covariances at ``eps_n`` and ``eps``.

    Rows where either covariance is singular (an eigenvalue at most
    ``1e-12 * trace``) are flagged and carry no value.  Without a passing
    gate the table is labeled heuristic.
    """
    rows = []
    for n in _check_n_list(n_list):
        gap, flagged = 0.0, False
        plan = None
        for plan, approx, exact in _block_pairs(model, p, epsilon, l, n, phases):
            logdet_approx, logdet_exact = _log2det(approx), _log2det(exact)
            if logdet_approx is None or logdet_exact is None:
                flagged = True
                continue
            gap = max(gap, abs(logdet_approx - logdet_exact) / (2 * l))
        if flagged:
            logger.warning("logdet_convergence: singular block covariance at n=%d", n)
        rows.append(
            ConvergenceRow(
                n=n,
                p_n=plan.p_n,
                epsilon_n=plan.epsilon_n,
                value=None if flagged else gap,
                flagged=flagged,
            )
        )
    label = "certified" if gate is not None and gate.passed else "heuristic"
    return _table("logdet_convergence", l, phases, rows, label=label)


def block_rdf_convergence(
    model: AutocorrelationModel,
    p: int,
    epsilon: EpsilonLike,
    l: int,
    D: float,
    n_list: Sequence[int],
    phases: Sequence[float],
) -> ConvergenceTable:
    """
    Phase-optimized finite-block rate at ``eps_n`` against the one at ``eps``.

    Each row holds ``min_phi R_l(eps_n, phi)`` as ``value`` and
    ``min_phi R_l(eps, phi)`` as ``reference``.  ``non_increasing`` refers to
    the gap ``|value - reference|``.
    """
    reference, _ = async_block_rdf(model, p, epsilon, l, D, phases)
    rows = []
    gaps = []
    for n in _check_n_list(n_list):
        base = resolve_plan(model, p, epsilon, n)
        rate = min(
            finite_block_rdf(
                block_covariance(model, base.with_phase(float(phi) * model.period), l), D
            ).R
            for phi in phases
        )
        rows.append(
            ConvergenceRow(
                n=n,
                p_n=base.p_n,
                epsilon_n=base.epsilon_n,
                value=rate,
                reference=reference,
            )
        )
        gaps.append(abs(rate - reference))
    return ConvergenceTable(
        name="block_rdf_convergence",
        l=l,
        phases=[float(phase) for phase in phases],
        rows=rows,
        non_increasing=is_non_increasing(gaps, MONOTONE_RTOL),
    )


# Diagonal dominance


@dataclasses.dataclass(frozen=True)
class SddReport:
    """
    Minimal eigenvalue against the diagonal-dominance bound.

    Attributes
    ----------
    min_eig : float
    gershgorin_bound : float
        ``min_i (|a_ii| - sum_{j != i} |a_ij|)``.
    sdd_flag : bool
        Every row strictly diagonally dominant.
    bound_holds : bool, optional
        ``min_eig >= gershgorin_bound - 1e-10``; None when not SDD.
    """

    min_eig: float
    gershgorin_bound: float
    sdd_flag: bool
    bound_holds: Optional[bool]


def sdd_min_eig_bound(cov: np.ndarray) -> SddReport:
    """
    Compare the minimal eigenvalue of a symmetric matrix with its
    Gershgorin lower bound.

    Raises
    ------
    PreconditionError
        If ``cov`` is not square and symmetric.
    """
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1] or not np.array_equal(cov, cov.T):
        raise PreconditionError("sdd_min_eig_bound needs a symmetric matrix")
    diagonal = np.abs(np.diag(cov))
    off = np.abs(cov).sum(axis=1) - diagonal
    margins = diagonal - off
    sdd = bool(np.all(margins > 0.0))
    bound = float(margins.min())
    min_eig = float(scipy.linalg.eigvalsh(cov)[0])
    return SddReport(
        min_eig=min_eig,
        gershgorin_bound=bound,
        sdd_flag=sdd,
        bound_holds=(min_eig >= bound - 1e-10) if sdd else None,
    )


# Information density


@dataclasses.dataclass(frozen=True)
class InfoDensityReport:
    """
    Monte Carlo information density rate of the water-filling test channel.

    Attributes
    ----------
    l : int
    blocks : int
    samples : int
        Draws per block.
    seed : int
    expected : float
        ``(1/2l) log2(det covX / det covS)`` in bits per sample.
    mean_Z : float
    std_Z : float
        Empirical standard deviation of one draw of Z.
    variance_Z : float
        Reported, not asserted.
    standard_error : float
    deviation : float
        ``|mean_Z - expected|``.
    verdict : {"PASS", "FAIL"}
        PASS iff ``deviation <= 4 * standard_error``.
    """

    l: int
    blocks: int
    samples: int
    seed: int
    expected: float
    mean_Z: float
    std_Z: float
    variance_Z: float
    standard_error: float
    deviation: float
    verdict: Status


def _cholesky(cov: np.ndarray, name: str) -> np.ndarray:
    try:
        return scipy.linalg.cholesky(cov, lower=True)
    except np.linalg.LinAlgError as ex:
        raise NumericalError(f"{name} is not positive definite", details=str(ex)) from ex


def _quadratic(factor: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    whitened = scipy.linalg.solve_triangular(factor, vectors.T, lower=True)
    return np.einsum("ij,ij->j", whitened, whitened)


def info_density_mc(
    covX: np.ndarray,
    covS: np.ndarray,
    blocks: int,
    samples: int,
    seed: int,
) -> InfoDensityReport:
    """
    Check the mean of the information density rate of a Gaussian test channel.

    The reconstruction ``X_hat ~ N(0, covX - covS)`` and the error
    ``S ~ N(0, covS)`` are drawn independently and ``X = X_hat + S``.  Per
    draw, ``Z = (1/l) log2(p(X | X_hat) / p(X))`` from exact Gaussian
    log-densities.

    Parameters
    ----------
    covX : np.ndarray
        Source covariance, positive definite.
    covS : np.ndarray
        Error covariance with ``covS <= covX``, positive definite.
    blocks : int
        Independent streams.
    samples : int
        Draws per stream.
    seed : int

    Returns
    -------
    InfoDensityReport

    Raises
    ------
    PreconditionError
        If ``covX - covS`` is not PSD.
    """
    covX = np.asarray(covX, dtype=float)
    covS = np.asarray(covS, dtype=float)
    l = covX.shape[0]
    reconstruction = covX - covS
    eigs = scipy.linalg.eigvalsh(reconstruction)
    if eigs.min() < -1e-10 * abs(float(np.trace(covX))):
        raise PreconditionError(
            "The error covariance must not exceed the source covariance "
            f"(covX - covS has eigenvalue {eigs.min()})"
        )
    root = symmetric_sqrt(reconstruction, scale=abs(float(np.trace(covX))))
    error_root = symmetric_sqrt(covS)
    factor_X = _cholesky(covX, "covX")
    factor_S = _cholesky(covS, "covS")
    logdet_X = 2.0 * math.fsum(np.log(np.diag(factor_X)))
    logdet_S = 2.0 * math.fsum(np.log(np.diag(factor_S)))
    expected = (logdet_X - logdet_S) / (2.0 * l * math.log(2.0))

    sums = PowerSums(order=2)
    for rng in batch_generators(seed, blocks):
        x_hat = rng.standard_normal((samples, l)) @ root
        error = rng.standard_normal((samples, l)) @ error_root
        x = x_hat + error
        log_ratio = 0.5 * (logdet_X - logdet_S) + 0.5 * (
            _quadratic(factor_X, x) - _quadratic(factor_S, error)
        )
        sums.add(log_ratio / (l * math.log(2.0)))

    mean = sums.mean
    variance = sums.variance_of_power(1)
    std = math.sqrt(variance)
    standard_error = std / math.sqrt(sums.count)
    deviation = abs(mean - expected)
    return InfoDensityReport(
        l=l,
        blocks=blocks,
        samples=samples,
        seed=seed,
        expected=expected,
        mean_Z=mean,
        std_Z=std,
        variance_Z=variance,
        standard_error=standard_error,
        deviation=deviation,
        verdict=_status(deviation <= 4.0 * standard_error),
    )


# Suite


@dataclasses.dataclass(frozen=True, config=pydantic.ConfigDict(arbitrary_types_allowed=True))
class CheckResult:
    """
    One entry of the verification report.

    Attributes
    ----------
    name : str
    inputs_digest : str
        Fingerprint of the check's inputs.
    status : {"PASS", "FAIL", "SKIP"}
    numbers : dict
        JSON-serializable results.
    seed : int, optional
    """

    name: str
    inputs_digest: str
    status: Status
    numbers: Dict
    seed: Optional[int] = None

    def to_report(self) -> dict:
        return {
            "name": self.name,
            "inputs_digest": self.inputs_digest,
            "status": self.status,
            "numbers": self.numbers,
            "seed": self.seed,
        }


@dataclasses.dataclass(frozen=True, config=pydantic.ConfigDict(arbitrary_types_allowed=True))
class SuiteReport:
    """All checks of a verification run."""

    checks: List[CheckResult]
    seed: int
    gate: Optional[Dict] = None

    @property
    def passed(self) -> bool:
        return all(check.status != FAIL for check in self.checks)

    @property
    def status(self) -> Status:
        return PASS if self.passed else FAIL

    def to_report(self) -> dict:
        return {
            "status": self.status,
            "seed": self.seed,
            "gate": self.gate,
            "checks": [check.to_report() for check in self.checks],
        }


def random_psd(rng: np.random.Generator, l: int, rho: float) -> np.ndarray:
    """A random PSD matrix, possibly rank-deficient, with diagonal at most ``rho``."""
    rank = int(rng.integers(1, l + 1))
    factor = rng.standard_normal((l, rank))
    cov = factor @ factor.T
    cov = 0.5 * (cov + cov.T)
    scale = rho * rng.uniform(0.1, 1.0) / np.diag(cov).max()
    return cov * scale


def random_sdd(rng: np.random.Generator, l: int) -> np.ndarray:
    """A random symmetric strictly diagonally dominant matrix."""
    off = rng.uniform(-1.0, 1.0, size=(l, l))
    off = np.triu(off, 1)
    off = off + off.T
    diagonal = np.abs(off).sum(axis=1) + rng.uniform(1e-3, 1.0, size=l)
    return off + np.diag(diagonal)


def _table_numbers(table: ConvergenceTable) -> dict:
    return {
        "l": table.l,
        "phases": table.phases,
        "label": table.label,
        "non_increasing": table.non_increasing,
        "rows": [
            {
                "n": row.n,
                "p_n": row.p_n,
                "epsilon_n": row.epsilon_n,
                "value": row.value,
                "reference": row.reference,
                "bound": row.bound,
                "flagged": row.flagged,
            }
            for row in table.rows
        ],
    }


def _run_check(
    name: str, inputs: dict, seed: Optional[int], check: Callable[[], tuple]
) -> CheckResult:
    digest = fingerprint(inputs)
    try:
        status, numbers = check()
    except (WsacsException, ValueError, np.linalg.LinAlgError) as ex:
        logger.error("Check %s failed with %s: %s", name, type(ex).__name__, ex)
        status, numbers = FAIL, {"error": f"{type(ex).__name__}: {ex}"}
    logger.info("Check %s: %s", name, status)
    return CheckResult(
        name=name, inputs_digest=digest, status=status, numbers=numbers, seed=seed
    )


def run_suite(
    model: AutocorrelationModel,
    p: int,
    epsilon: EpsilonLike,
    D: float,
    seed: int,
    settings: Optional[VerifySettings] = None,
    spectrum: Optional[SpectrumSettings] = None,
    gate_settings: Optional[GateSettings] = None,
    phi_s: float = 0.0,
) -> SuiteReport:
    """
    Run every verification check at the configured sizes.

    Parameters
    ----------
    model : AutocorrelationModel
    p : int
    epsilon : str, float or PiRational
    D : float
        Distortion used by the rate-based checks.
    seed : int
        Seeds every random stream; identical seeds give identical reports.
    settings : VerifySettings, optional
    spectrum : SpectrumSettings, optional
    gate_settings : GateSettings, optional
    phi_s : float, default=0.0
        Sampling phase (seconds) of the single-phase checks.

    Returns
    -------
    SuiteReport
    """
    settings = settings if settings is not None else VerifySettings()
    spectrum = spectrum if spectrum is not None else SpectrumSettings()
    model_inputs = model.model_dump(mode="json", by_alias=True)
    eps_text = str(epsilon)
    phases = [k / settings.phi_grid_size for k in range(settings.phi_grid_size)]
    streams = np.random.SeedSequence(seed).spawn(3)
    checks = []

    gate = gate_check(model, p, D, gate_settings)

    def moments():
        rng = np.random.Generator(np.random.Philox(streams[0]))
        worst_mean, worst_second, violations = 0.0, 0.0, 0
        for _ in range(settings.moment_matrices):
            l = int(rng.integers(1, settings.moment_max_dim + 1))
            report = moment_bound_check(random_psd(rng, l, settings.rho), settings.rho)
            worst_mean = max(worst_mean, report.mean_d / report.rho)
            worst_second = max(worst_second, report.second_moment / report.bound_3rho2)
            violations += not (report.mean_within_rho and report.second_within_bound)
        return _status(violations == 0), {
            "matrices": settings.moment_matrices,
            "violations": violations,
            "max_mean_over_rho": worst_mean,
            "max_second_over_3rho2": worst_second,
        }

    checks.append(
        _run_check(
            "moment_bound",
            {
                "matrices": settings.moment_matrices,
                "max_dim": settings.moment_max_dim,
                "rho": settings.rho,
                "seed": seed,
            },
            seed,
            moments,
        )
    )

    def monte_carlo():
        rng = np.random.Generator(np.random.Philox(streams[1]))
        case_seeds = rng.integers(0, 2**63, size=settings.mc_cases)
        results, cases = [], []
        for case_seed in case_seeds:
            l = int(rng.integers(1, min(settings.moment_max_dim, 8) + 1))
            cov = random_psd(rng, l, settings.rho)
            report = mc_distortion_check(
                cov,
                settings.mc_samples,
                int(case_seed),
                settings.rho,
                workers=settings.mc_workers,
            )
            mc = report.monte_carlo
            results.append(mc)
            cases.append(
                {
                    "l": l,
                    "mean_d": report.mean_d,
                    "mc_mean": mc.mc_mean,
                    "second_moment": report.second_moment,
                    "mc_second": mc.mc_second,
                    "verdict": mc.verdict,
                }
            )
        summary = coverage_verdict(results)
        return summary.verdict, {
            "cases": cases,
            "intervals": summary.intervals,
            "covered": summary.covered,
            "coverage": summary.coverage,
            "required_coverage": summary.required,
        }

    checks.append(
        _run_check(
            "moment_monte_carlo",
            {
                "cases": settings.mc_cases,
                "samples": settings.mc_samples,
                "rho": settings.rho,
                "seed": seed,
            },
            seed,
            monte_carlo,
        )
    )

    def sdd():
        rng = np.random.Generator(np.random.Philox(streams[2]))
        violations, worst = 0, math.inf
        for _ in range(settings.sdd_matrices):
            l = int(rng.integers(1, settings.moment_max_dim + 1))
            report = sdd_min_eig_bound(random_sdd(rng, l))
            violations += not report.bound_holds
            worst = min(worst, report.min_eig - report.gershgorin_bound)
        return _status(violations == 0), {
            "matrices": settings.sdd_matrices,
            "violations": violations,
            "min_slack": worst,
        }

    checks.append(
        _run_check("sdd_bound", {"matrices": settings.sdd_matrices, "seed": seed}, seed, sdd)
    )

    convergence_inputs = {
        "model": model_inputs,
        "p": p,
        "epsilon": eps_text,
        "l": settings.l,
        "n_list": settings.n_list,
        "phases": phases,
    }

    def autocorr():
        table = autocorr_convergence(model, p, epsilon, settings.l, settings.n_list, phases)
        numbers = _table_numbers(table)
        threshold = 1e-3 * model.gamma_bound()
        numbers["threshold"] = threshold
        numbers["below_threshold"] = table.rows[-1].value < threshold
        return _status(table.non_increasing), numbers

    checks.append(_run_check("autocorr_convergence", convergence_inputs, None, autocorr))

    def eigenvalues():
        table = eigenvalue_convergence(model, p, epsilon, settings.l, settings.n_list, phases)
        bounded = all(
            row.value <= row.bound * (1.0 + MONOTONE_RTOL) + 1e-12 for row in table.rows
        )
        numbers = _table_numbers(table)
        numbers["within_norm_bound"] = bounded
        return _status(bounded), numbers

    checks.append(_run_check("eigenvalue_convergence", convergence_inputs, None, eigenvalues))

    def logdet():
        table = logdet_convergence(
            model, p, epsilon, settings.l, settings.n_list, phases, gate
        )
        if table.non_increasing:
            status = PASS
        else:
            # Monotonicity is only asserted under a passing gate.
            status = FAIL if gate.passed else SKIP
        return status, _table_numbers(table)

    checks.append(_run_check("logdet_convergence", convergence_inputs, None, logdet))

    def block_rdf():
        table = block_rdf_convergence(
            model, p, epsilon, settings.l, D, settings.n_list, phases
        )
        return PASS, _table_numbers(table)

    checks.append(
        _run_check("block_rdf_convergence", {**convergence_inputs, "D": D}, None, block_rdf)
    )

    def finite_block():
        plan = resolve_plan(model, p, epsilon, 1, phi_s)
        l = settings.finite_block_multiple * plan.p_n
        block = finite_block_rdf(block_covariance(model, plan, l), D)
        spectral = rdf_sync(model, plan, D, spectrum)
        gap = abs(block.R - spectral.R) / spectral.R if spectral.R > 0 else abs(block.R)
        return _status(gap < 0.02), {
            "l": l,
            "p_n": plan.p_n,
            "R_block": block.R,
            "R_spectral": spectral.R,
            "relative_gap": gap,
        }

    checks.append(
        _run_check(
            "finite_block_consistency",
            {
                "model": model_inputs,
                "p": p,
                "epsilon": eps_text,
                "D": D,
                "phi_s": phi_s,
                "multiple": settings.finite_block_multiple,
                "spectrum": spectrum.model_dump(mode="json"),
            },
            None,
            finite_block,
        )
    )

    def info_density():
        plan = resolve_plan(model, p, epsilon, 1, phi_s)
        cov = block_covariance(model, plan, settings.info_l)
        channel = test_channel(cov, D)
        report = info_density_mc(
            cov, channel.error_cov, settings.info_blocks, settings.info_samples, seed
        )
        return report.verdict, {
            "l": report.l,
            "expected": report.expected,
            "mean_Z": report.mean_Z,
            "std_Z": report.std_Z,
            "variance_Z": report.variance_Z,
            "standard_error": report.standard_error,
            "deviation": report.deviation,
        }

    checks.append(
        _run_check(
            "info_density_mean",
            {
                "model": model_inputs,
                "p": p,
                "epsilon": eps_text,
                "D": D,
                "phi_s": phi_s,
                "l": settings.info_l,
                "blocks": settings.info_blocks,
                "samples": settings.info_samples,
                "seed": seed,
            },
            seed,
            info_density,
        )
    )

    return SuiteReport(checks=checks, seed=seed, gate=gate.to_report())
