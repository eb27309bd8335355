"""
Polyphase spectral decomposition of a synchronously sampled WSCS process.

Stacking ``p_n`` consecutive samples gives a stationary vector process with
block autocorrelation ``C[delta]`` and PSD matrix
``S(f) = sum_delta C[delta] exp(-j 2 pi f delta)``.  The sorted eigenvalues
of ``S(f)`` on a midpoint quadrature grid form the `EigenField` that the
water-filling solver integrates over.
"""

from __future__ import annotations

import concurrent.futures
import logging
import math
from typing import Callable, List, Optional

import numpy as np
import pydantic
import pydantic.dataclasses as dataclasses

from .af_model import AutocorrelationModel
from .exceptions import (
    ConfigurationError,
    NumericalError,
    PreconditionError,
    ResourceError,
)
from .sampling import ResolvedPlan, dt_autocorr
from .util.tools import AnyPath, write_csv

logger = logging.getLogger(__name__)

DEFAULT_GRID_SIZE = 1024
DEFAULT_TOL_PSD = 1e-8
DEFAULT_MAX_ENTRIES = 50_000_000

# Upper bound on floats held by one batch of real-embedded PSD matrices.
_BATCH_FLOATS = 1 << 23

_array_config = pydantic.ConfigDict(arbitrary_types_allowed=True)


@dataclasses.dataclass(frozen=True, config=_array_config)
class BlockAutocorr:
    """
    Block autocorrelation of the polyphase vector process.

    Attributes
    ----------
    p_n : int
        Block dimension.
    delta_max : int
        ``C[delta] = 0`` for ``|delta| > delta_max``.
    matrices : np.ndarray
        Shape ``(2 * delta_max + 1, p_n, p_n)``; ``matrices[delta + delta_max]``
        is ``C[delta]``.
    """

    p_n: int
    delta_max: int
    matrices: np.ndarray

    def __getitem__(self, delta: int) -> np.ndarray:
        if abs(delta) > self.delta_max:
            return np.zeros((self.p_n, self.p_n))
        return self.matrices[delta + self.delta_max]

    @property
    def lags(self) -> np.ndarray:
        return np.arange(-self.delta_max, self.delta_max + 1)


@dataclasses.dataclass(frozen=True)
class EigenDiagnostics:
    """
    Clamping report of an eigenvalue field.

    Attributes
    ----------
    clamped_values : int
        Negative eigenvalues within ``tol_psd * trace`` that were set to 0.
    max_clamped_relative : float
        Largest clamped magnitude relative to the node's trace.
    flagged_freqs : list of float
        Nodes with negativity beyond ``tol_psd * trace``.  Those values are
        also set to 0 but must not be ignored.
    max_negative_relative : float
        Largest negativity relative to trace over all nodes.
    tol_psd : float
    """

    clamped_values: int = 0
    max_clamped_relative: float = 0.0
    flagged_freqs: List[float] = pydantic.Field(default_factory=list)
    max_negative_relative: float = 0.0
    tol_psd: float = DEFAULT_TOL_PSD

    @property
    def flagged(self) -> bool:
        return len(self.flagged_freqs) > 0


@dataclasses.dataclass(frozen=True, config=_array_config)
class EigenField:
    """
    Sorted eigenvalues of the PSD matrix on a quadrature grid.

    Attributes
    ----------
    freqs : np.ndarray
        Midpoint nodes in [-1/2, 1/2), ascending.
    weights : np.ndarray
        Quadrature weights, summing to 1.
    eigs : np.ndarray
        Shape ``(len(freqs), p_n)``, each row sorted descending, all >= 0.
    diagnostics : EigenDiagnostics
    """

    freqs: np.ndarray
    weights: np.ndarray
    eigs: np.ndarray
    diagnostics: EigenDiagnostics

    @property
    def p_n(self) -> int:
        return int(self.eigs.shape[1])

    @property
    def grid_size(self) -> int:
        return int(len(self.freqs))

    @property
    def max_eig(self) -> float:
        return float(self.eigs.max())


def delta_max_for(tau_c: int, p_n: int) -> int:
    """Block-lag cutoff ``1 + ceil(tau_c / p_n)``."""
    return 1 + -(-tau_c // p_n)


def build_block_autocorr(
    model: AutocorrelationModel,
    plan: ResolvedPlan,
    max_entries: float = DEFAULT_MAX_ENTRIES,
) -> BlockAutocorr:
    """
    Build ``C[delta]`` with ``(C[delta])_{u,v} = c(u*T_s + phi_s, (delta*p_n + v - u)*T_s)``.

    Parameters
    ----------
    model : AutocorrelationModel
    plan : ResolvedPlan
        Must be synchronous.
    max_entries : float, default=5e7
        Refuse to allocate more matrix entries than this.

    Returns
    -------
    BlockAutocorr

    Raises
    ------
    PreconditionError
        For asynchronous plans, which have no finite period.
    ResourceError
        When the block family exceeds ``max_entries``.
    """
    if not plan.synchronous:
        raise PreconditionError(
            "The block autocorrelation needs a synchronous plan (finite n)"
        )
    p_n = plan.p_n
    delta_max = delta_max_for(plan.tau_c, p_n)
    entries = (2 * delta_max + 1) * p_n * p_n
    if entries > max_entries:
        raise ResourceError(
            f"Block autocorrelation for p_n={p_n}, delta_max={delta_max} needs "
            f"{entries} entries (limit {int(max_entries)})",
            p_n=p_n,
            cost=entries,
            advisory="Use a smaller n or raise max_entries",
        )

    deltas = np.arange(-delta_max, delta_max + 1)[:, np.newaxis, np.newaxis]
    u = np.arange(p_n)[np.newaxis, :, np.newaxis]
    v = np.arange(p_n)[np.newaxis, np.newaxis, :]
    matrices = dt_autocorr(model, plan, u, deltas * p_n + v - u)
    logger.debug("Built block autocorrelation: p_n=%d delta_max=%d", p_n, delta_max)
    return BlockAutocorr(p_n=p_n, delta_max=delta_max, matrices=np.ascontiguousarray(matrices))


def time_averaged_variance(ba: BlockAutocorr) -> float:
    """(1/p_n) tr(C[0])."""
    return math.fsum(np.diag(ba[0])) / ba.p_n


def _phases(ba: BlockAutocorr, freqs: np.ndarray) -> np.ndarray:
    return np.exp(-2j * np.pi * np.outer(freqs, ba.lags))


def psd_at_freq(ba: BlockAutocorr, f: float, hermitize: bool = True) -> np.ndarray:
    """
    PSD matrix ``S(f)``.

    Parameters
    ----------
    ba : BlockAutocorr
    f : float
        Normalized frequency in cycles per block.
    hermitize : bool, default=True
        Return ``(S + S^H) / 2``.

    Returns
    -------
    np.ndarray
        Complex ``(p_n, p_n)`` array.
    """
    phases = _phases(ba, np.array([f], dtype=float))[0]
    S = np.tensordot(phases, ba.matrices, axes=(0, 0))
    if hermitize:
        S = 0.5 * (S + S.conj().T)
    return S


def real_embedding(S: np.ndarray) -> np.ndarray:
    """
    Real symmetric embedding ``[[Re S, -Im S], [Im S, Re S]]``.

    Works on a single matrix or a stack along the leading axis.  Every
    eigenvalue of ``S`` appears twice in the embedding.
    """
    re, im = S.real, S.imag
    top = np.concatenate([re, -im], axis=-1)
    bottom = np.concatenate([im, re], axis=-1)
    return np.concatenate([top, bottom], axis=-2)


def hermitian_eigvals(S: np.ndarray) -> np.ndarray:
    """
    Eigenvalues of Hermitian matrices, sorted descending, via the real embedding.

    Parameters
    ----------
    S : np.ndarray
        ``(p, p)`` or ``(k, p, p)`` Hermitian.

    Returns
    -------
    np.ndarray
        ``(p,)`` or ``(k, p)``.
    """
    doubled = np.linalg.eigvalsh(real_embedding(S))
    return doubled[..., ::-1][..., ::2]


def _solve_batch(ba: BlockAutocorr, freqs: np.ndarray) -> tuple:
    phases = _phases(ba, freqs)
    S = np.einsum("kd,duv->kuv", phases, ba.matrices)
    S = 0.5 * (S + np.conj(np.swapaxes(S, -1, -2)))
    traces = np.einsum("kuu->k", S).real
    try:
        eigs = hermitian_eigvals(S)
    except np.linalg.LinAlgError as ex:
        # Find the offending node for the report.
        for f, single in zip(freqs, S):
            try:
                hermitian_eigvals(single)
            except np.linalg.LinAlgError:
                raise NumericalError(
                    f"Eigen-solver did not converge at f={f}",
                    frequency=float(f),
                    details=str(ex),
                ) from ex
        raise NumericalError("Eigen-solver did not converge", details=str(ex)) from ex
    return eigs, traces


def frequency_grid(grid_size: int) -> np.ndarray:
    """Midpoint nodes ``-1/2 + (k + 1/2) / grid_size``."""
    return -0.5 + (np.arange(grid_size) + 0.5) / grid_size


def eigen_field(
    ba: BlockAutocorr,
    grid_size: int = DEFAULT_GRID_SIZE,
    tol_psd: float = DEFAULT_TOL_PSD,
    workers: int = 1,
) -> EigenField:
    """
    Sorted eigenvalue field of ``S(f)`` on the midpoint grid.

    Only nodes with ``f > 0`` are solved; the mirrored node ``-f`` has the
    conjugate matrix and the same eigenvalues.

    Parameters
    ----------
    ba : BlockAutocorr
    grid_size : int, default=1024
        Number of nodes; must be even and at least 2.
    tol_psd : float, default=1e-8
        Negative eigenvalues down to ``-tol_psd * trace(S(f))`` are clamped
        silently; anything lower is clamped and flagged.
    workers : int, default=1
        Threads used for the eigen solves.  The result does not depend on it.

    Returns
    -------
    EigenField

    Raises
    ------
    NumericalError
        If an eigen solve fails; carries the offending frequency.
    """
    if grid_size < 2 or grid_size % 2:
        raise ConfigurationError(f"grid_size must be even and >= 2, got {grid_size}")

    freqs = frequency_grid(grid_size)
    half = grid_size // 2
    positive = freqs[half:]
    p_n = ba.p_n
    batch = max(1, _BATCH_FLOATS // (4 * p_n * p_n))
    chunks = [positive[start : start + batch] for start in range(0, len(positive), batch)]

    if workers > 1 and len(chunks) > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as executor:
            results = list(executor.map(lambda chunk: _solve_batch(ba, chunk), chunks))
    else:
        results = [_solve_batch(ba, chunk) for chunk in chunks]

    upper = np.concatenate([eigs for eigs, _ in results], axis=0)
    traces = np.concatenate([tr for _, tr in results])

    scale = np.maximum(np.abs(traces), np.finfo(float).tiny)[:, np.newaxis]
    relative = np.where(upper < 0.0, -upper / scale, 0.0)
    within = (upper < 0.0) & (relative <= tol_psd)
    beyond = relative > tol_psd
    flagged_rows = np.flatnonzero(beyond.any(axis=1))
    flagged_freqs = sorted(
        {float(f) for f in positive[flagged_rows]}
        | {float(-f) for f in positive[flagged_rows]}
    )
    diagnostics = EigenDiagnostics(
        clamped_values=2 * int(within.sum()),
        max_clamped_relative=float(relative[within].max()) if within.any() else 0.0,
        flagged_freqs=flagged_freqs,
        max_negative_relative=float(relative.max()),
        tol_psd=tol_psd,
    )
    if diagnostics.flagged:
        logger.warning(
            "PSD matrix indefinite beyond tol_psd=%g at %d nodes (worst %g of trace)",
            tol_psd,
            len(flagged_freqs),
            diagnostics.max_negative_relative,
        )

    upper = np.maximum(upper, 0.0)
    eigs = np.concatenate([upper[::-1], upper], axis=0)
    weights = np.full(grid_size, 1.0 / grid_size)
    logger.debug("Eigen field: p_n=%d grid_size=%d", p_n, grid_size)
    return EigenField(freqs=freqs, weights=weights, eigs=eigs, diagnostics=diagnostics)


def freq_integral(field: EigenField, g: Callable[[np.ndarray], np.ndarray]) -> float:
    """
    ``(1/p_n) * sum_k weight_k * sum_m g(lambda_m(f_k))``.

    ``g`` is applied elementwise to the eigenvalue array.  The sum is
    correctly rounded, so the result does not depend on summation order.
    """
    values = np.asarray(g(field.eigs), dtype=float) * field.weights[:, np.newaxis]
    return math.fsum(values.ravel()) / field.p_n


def export_eigen_field_csv(field: EigenField, path: AnyPath, step: Optional[int] = None):
    """
    Write the eigenvalue field as CSV with columns ``f, m, lambda``.

    Parameters
    ----------
    field : EigenField
    path : str or pathlib.Path
    step : int, optional
        Only write every ``step``-th frequency node.
    """
    step = step or 1
    rows = (
        (field.freqs[k], m, field.eigs[k, m])
        for k in range(0, field.grid_size, step)
        for m in range(field.p_n)
    )
    return write_csv(path, ["f", "m", "lambda"], rows)
