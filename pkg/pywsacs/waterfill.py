"""
Reverse water-filling over eigenvalue spectra.

For a water level ``theta`` every spectral component contributes distortion
``min(lambda, theta)`` and rate ``max(0, 1/2 log2(lambda / theta))``.  The
level is chosen by bisection so the average distortion meets the target.
Rates are in bits per sample.
"""

from __future__ import annotations

import logging
import math
from typing import Optional

import numpy as np
import pydantic
import pydantic.dataclasses as dataclasses
import scipy.linalg

from .exceptions import DomainError, NumericalError, PreconditionError
from .spectrum import EigenField, freq_integral

logger = logging.getLogger(__name__)

MAX_ITERATIONS = 200
RELATIVE_TOLERANCE = 1e-12
# Eigenvalues of a finite-block covariance may dip this far below zero (relative to trace).
BLOCK_CLAMP = 1e-10


@dataclasses.dataclass(frozen=True)
class RdfPoint:
    """
    One point of a rate-distortion curve.

    Attributes
    ----------
    D : float
        Target mean-squared distortion.
    theta : float
        Water level.
    R : float
        Rate in bits per sample.
    avg_var : float
        Time-averaged variance of the source.
    active_fraction : float
        Fraction of spectral mass with eigenvalue above ``theta``.
    constraint_inactive : bool
        True when ``D`` is at or above ``avg_var`` (zero rate).
    p_n : int, optional
        Block dimension of the spectrum used.
    quad_error : float, optional
        ``|R - R_half|`` with ``R_half`` from every second quadrature node.
    iterations : int
        Bisection steps taken.
    """

    D: float
    theta: float
    R: float
    avg_var: float
    active_fraction: float
    constraint_inactive: bool = False
    p_n: Optional[int] = None
    quad_error: Optional[float] = None
    iterations: int = 0


class _Spectrum:
    """Eigenvalues with nonnegative weights summing to 1."""

    def __init__(self, values: np.ndarray, weights: np.ndarray):
        self.values = np.asarray(values, dtype=float).ravel()
        self.weights = np.asarray(weights, dtype=float).ravel()

    @property
    def avg_var(self) -> float:
        return math.fsum(self.values * self.weights)

    @property
    def max_value(self) -> float:
        return float(self.values.max())

    def distortion(self, theta: float) -> float:
        return math.fsum(np.minimum(self.values, theta) * self.weights)

    def rate(self, theta: float) -> float:
        return 0.5 * math.fsum(_log_excess(self.values, theta) * self.weights)

    def active_fraction(self, theta: float) -> float:
        return math.fsum(np.where(self.values > theta, self.weights, 0.0))


def _log_excess(values: np.ndarray, theta: float) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(values > theta, np.log2(values / theta), 0.0)


def _field_spectrum(field: EigenField, even_only: bool = False) -> _Spectrum:
    eigs, weights = field.eigs, field.weights
    if even_only:
        eigs, weights = eigs[::2], 2.0 * weights[::2]
    per_value = np.broadcast_to(weights[:, np.newaxis] / field.p_n, eigs.shape)
    return _Spectrum(eigs, per_value)


def _check_theta(theta: float) -> None:
    if not theta > 0.0:
        raise DomainError(f"The water level must be positive, got theta={theta}")


def _bisect(spectrum: _Spectrum, D: float, avg_var: float) -> tuple:
    low, high = 0.0, spectrum.max_value
    tolerance = RELATIVE_TOLERANCE * avg_var
    for iteration in range(1, MAX_ITERATIONS + 1):
        theta = 0.5 * (low + high)
        distortion = spectrum.distortion(theta)
        if abs(distortion - D) <= tolerance:
            return theta, iteration
        if distortion < D:
            low = theta
        else:
            high = theta
    raise NumericalError(
        f"Water-level bisection stalled after {MAX_ITERATIONS} iterations "
        f"(D={D}, bracket=[{low}, {high}])",
        details=f"last distortion={distortion}",
    )


def _solve(spectrum: _Spectrum, D: float) -> tuple:
    """Return (theta, R, active_fraction, inactive, iterations)."""
    if not D > 0.0:
        raise DomainError(f"The distortion must be positive, got D={D}")
    avg_var = spectrum.avg_var
    if D >= avg_var * (1.0 - RELATIVE_TOLERANCE):
        if D > avg_var * (1.0 + RELATIVE_TOLERANCE):
            logger.warning(
                "D=%g exceeds the average variance %g; distortion constraint inactive",
                D,
                avg_var,
            )
        return spectrum.max_value, 0.0, 0.0, True, 0
    theta, iterations = _bisect(spectrum, D, avg_var)
    rate = spectrum.rate(theta)
    return theta, rate, spectrum.active_fraction(theta), False, iterations


def distortion_of_theta(field: EigenField, theta: float) -> float:
    """
    Average distortion ``(1/p_n) sum_m int min(lambda_m(f), theta) df``.

    Parameters
    ----------
    field : EigenField
    theta : float
        Water level, >= 0.

    Returns
    -------
    float
    """
    if theta < 0.0:
        raise DomainError(f"The water level must be nonnegative, got theta={theta}")
    return freq_integral(field, lambda eigs: np.minimum(eigs, theta))


def rate_of_theta(field: EigenField, theta: float) -> float:
    """
    Rate ``(1/(2 p_n)) sum_m int max(0, log2(lambda_m(f) / theta)) df`` in bits.

    Raises
    ------
    DomainError
        If ``theta <= 0``.
    """
    _check_theta(theta)
    return 0.5 * freq_integral(field, lambda eigs: _log_excess(eigs, theta))


def solve_theta(field: EigenField, D: float) -> RdfPoint:
    """
    Solve for the water level meeting distortion ``D`` and evaluate the rate.

    Bisection on ``[0, max eigenvalue]`` stops once the distortion is within
    ``1e-12 * avg_var`` of ``D``.

    Parameters
    ----------
    field : EigenField
    D : float
        Target distortion.

    Returns
    -------
    RdfPoint
        ``D >= avg_var`` gives ``R = 0`` and ``theta = max eigenvalue``;
        ``constraint_inactive`` is set for both.

    Raises
    ------
    DomainError
        If ``D <= 0``.
    NumericalError
        If the bisection stalls.
    """
    spectrum = _field_spectrum(field)
    theta, rate, active, inactive, iterations = _solve(spectrum, D)
    if inactive:
        quad_error = 0.0
    else:
        quad_error = abs(rate - _field_spectrum(field, even_only=True).rate(theta))
    logger.debug("solve_theta: D=%g theta=%g R=%g (%d iterations)", D, theta, rate, iterations)
    return RdfPoint(
        D=float(D),
        theta=float(theta),
        R=float(rate),
        avg_var=spectrum.avg_var,
        active_fraction=active,
        constraint_inactive=inactive,
        p_n=field.p_n,
        quad_error=quad_error,
        iterations=iterations,
    )


def block_eigenvalues(cov: np.ndarray) -> np.ndarray:
    """
    Eigenvalues of a symmetric PSD block covariance, ascending, clamped at 0.

    Raises
    ------
    PreconditionError
        If ``cov`` is not square and symmetric, or has an eigenvalue below
        ``-1e-10 * trace``.
    """
    cov = np.asarray(cov, dtype=float)
    _check_symmetric(cov)
    eigs = scipy.linalg.eigvalsh(cov)
    return _clamp_block(eigs, float(np.trace(cov)))


def _check_symmetric(cov: np.ndarray) -> None:
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise PreconditionError(f"Covariance must be square, got shape {cov.shape}")
    scale = max(float(np.abs(cov).max()), np.finfo(float).tiny)
    if np.abs(cov - cov.T).max() > 1e-12 * scale:
        raise PreconditionError("Covariance must be symmetric")


def _clamp_block(eigs: np.ndarray, trace: float) -> np.ndarray:
    floor = -BLOCK_CLAMP * abs(trace)
    if eigs.min() < floor:
        raise PreconditionError(
            f"Covariance is indefinite: eigenvalue {eigs.min()} below {floor}"
        )
    return np.maximum(eigs, 0.0)


def finite_block_rdf(cov: np.ndarray, D: float) -> RdfPoint:
    """
    Rate-distortion function of a Gaussian vector with covariance ``cov``.

    Water-fills over the ``l`` eigenvalues:
    ``R_l = (1/2l) sum max(0, log2(lambda_i / theta))`` with
    ``(1/l) sum min(lambda_i, theta) = D``.

    Parameters
    ----------
    cov : np.ndarray
        Symmetric PSD ``(l, l)`` matrix.
    D : float

    Returns
    -------
    RdfPoint
        ``R`` is ``R_l`` in bits per sample.
    """
    eigs = block_eigenvalues(cov)
    spectrum = _Spectrum(eigs, np.full(len(eigs), 1.0 / len(eigs)))
    theta, rate, active, inactive, iterations = _solve(spectrum, D)
    return RdfPoint(
        D=float(D),
        theta=float(theta),
        R=float(rate),
        avg_var=spectrum.avg_var,
        active_fraction=active,
        constraint_inactive=inactive,
        iterations=iterations,
    )


@dataclasses.dataclass(frozen=True, config=pydantic.ConfigDict(arbitrary_types_allowed=True))
class TestChannel:
    """
    Backward test channel ``X = X_hat + S`` achieving the block RDF.

    Attributes
    ----------
    point : RdfPoint
    error_cov : np.ndarray
        Covariance of the error ``S``, ``U diag(min(lambda, theta)) U^T``.
    reconstruction_cov : np.ndarray
        Covariance of ``X_hat``, ``cov - error_cov``.
    """

    __test__ = False

    point: RdfPoint
    error_cov: np.ndarray
    reconstruction_cov: np.ndarray


def test_channel(cov: np.ndarray, D: float) -> TestChannel:
    """
    Reverse water-filling test channel of a finite block.

    Parameters
    ----------
    cov : np.ndarray
        Symmetric PSD ``(l, l)`` source covariance.
    D : float

    Returns
    -------
    TestChannel
    """
    cov = np.asarray(cov, dtype=float)
    _check_symmetric(cov)
    eigs, vectors = scipy.linalg.eigh(cov)
    eigs = _clamp_block(eigs, float(np.trace(cov)))
    point = finite_block_rdf(cov, D)
    kept = np.minimum(eigs, point.theta)
    error_cov = (vectors * kept) @ vectors.T
    error_cov = 0.5 * (error_cov + error_cov.T)
    reconstruction = (vectors * (eigs - kept)) @ vectors.T
    reconstruction = 0.5 * (reconstruction + reconstruction.T)
    return TestChannel(point=point, error_cov=error_cov, reconstruction_cov=reconstruction)


# Not a pytest test function.
test_channel.__test__ = False
