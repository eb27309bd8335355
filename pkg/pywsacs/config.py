"""
Experiment configuration.

Configurations are JSON documents validated by the pydantic models below.
JSON keys follow the field aliases (``T_c_seconds``, ``phi_s_seconds``, ...).
"""

from __future__ import annotations

import json
import logging
import pathlib
from typing import List, Literal, Optional, Tuple, Union

import numpy as np
import pydantic

from .af_model import AfModel
from .exceptions import ConfigurationError
from .sampling import SamplingPlan
from .util.expressions import parse_float_expression
from .util.tools import AnyPath, full_path

logger = logging.getLogger(__name__)

PhaseLike = Union[str, float]


class SpectrumSettings(pydantic.BaseModel, extra="forbid", validate_assignment=True):
    """
    Numerical knobs of the spectral pipeline.

    Attributes
    ----------
    grid_size : int
        Midpoint quadrature nodes over [-1/2, 1/2); even.
    tol_psd : float
        Relative tolerance for clamping negative PSD eigenvalues.
    max_entries : float
        Memory guard on the number of block-autocorrelation entries.
    workers : int
        Threads for the per-frequency eigen solves.
    """

    grid_size: int = pydantic.Field(default=1024, ge=2)
    tol_psd: float = pydantic.Field(default=1e-8, gt=0.0)
    max_entries: float = pydantic.Field(default=5e7, gt=0.0)
    workers: int = pydantic.Field(default=1, ge=1)

    @pydantic.field_validator("grid_size")
    @classmethod
    def _check_even(cls, value: int) -> int:
        if value % 2:
            raise ValueError(f"grid_size must be even, got {value}")
        return value


class GateSettings(pydantic.BaseModel, extra="forbid", validate_assignment=True):
    """Grid sizes for the diagonal-dominance margin estimate."""

    t_grid_size: int = pydantic.Field(default=4096, ge=2)
    lag_grid_size: int = pydantic.Field(default=4096, ge=2)


class SweepSettings(pydantic.BaseModel, extra="forbid", validate_assignment=True):
    """
    One sweep axis and its range.

    Attributes
    ----------
    axis : {"n", "phi", "D"}
    n_values : list of int, optional
        n values of an n-sweep; for phi- and D-sweeps, one curve per n.
    n_range : (int, int), optional
        Inclusive ``(first, last)`` alternative to ``n_values``.
    phi_values : list, optional
        Normalized phases of a phi-sweep; ``"pi/5"``-style expressions allowed.
    phi_range : (start, stop, count), optional
        Uniform normalized phases, endpoints included.
    D_values : list of float, optional
    D_range : (start, stop, count), optional
        Uniform distortions, endpoints included.
    phase : {"optimize", "fixed"}
        n-sweeps minimize over the phase grid, or use the plan's phase.
    phase_grid_size : int
    window_fraction : float
        Trailing fraction of the n-range used for the limsup estimate.
    t_dc_values : list of float, optional
        One curve per duty value; defaults to the model's ``t_dc``.
    max_cost : int
        Refuse n with ``p_n * grid_size`` above this unless ``allow_expensive``.
    allow_expensive : bool
    """

    axis: Literal["n", "phi", "D"]
    n_values: Optional[List[pydantic.PositiveInt]] = None
    n_range: Optional[Tuple[pydantic.PositiveInt, pydantic.PositiveInt]] = None
    phi_values: Optional[List[PhaseLike]] = None
    phi_range: Optional[Tuple[PhaseLike, PhaseLike, pydantic.PositiveInt]] = None
    D_values: Optional[List[pydantic.PositiveFloat]] = None
    D_range: Optional[
        Tuple[pydantic.PositiveFloat, pydantic.PositiveFloat, pydantic.PositiveInt]
    ] = None
    phase: Literal["optimize", "fixed"] = "optimize"
    phase_grid_size: int = pydantic.Field(default=64, ge=2)
    window_fraction: float = pydantic.Field(default=0.2, gt=0.0, le=1.0)
    t_dc_values: Optional[List[pydantic.NonNegativeFloat]] = None
    max_cost: int = pydantic.Field(default=2**19, ge=1)
    allow_expensive: bool = False

    @pydantic.model_validator(mode="after")
    def _check_axis(self) -> "SweepSettings":
        if self.n_values is not None and self.n_range is not None:
            raise ValueError("Specify at most one of n_values and n_range")
        if self.phi_values is not None and self.phi_range is not None:
            raise ValueError("Specify at most one of phi_values and phi_range")
        if self.D_values is not None and self.D_range is not None:
            raise ValueError("Specify at most one of D_values and D_range")
        if self.n_range is not None and self.n_range[0] > self.n_range[1]:
            raise ValueError(f"Empty n_range {self.n_range}")

        if self.axis == "n" and not self.get_n_values():
            raise ValueError("An n-sweep needs n_values or n_range")
        if self.axis == "phi" and not self.get_phi_values():
            raise ValueError("A phi-sweep needs phi_values or phi_range")
        if self.axis == "D" and not self.get_D_values():
            raise ValueError("A D-sweep needs D_values or D_range")
        for name, values in (
            ("n", self.get_n_values()),
            ("phi", self.get_phi_values()),
            ("D", self.get_D_values()),
        ):
            if len(set(values)) != len(values):
                raise ValueError(f"Duplicate {name} values in sweep")
        return self

    def get_n_values(self) -> List[int]:
        if self.n_values is not None:
            return sorted(self.n_values)
        if self.n_range is not None:
            return list(range(self.n_range[0], self.n_range[1] + 1))
        return []

    def get_phi_values(self) -> List[float]:
        if self.phi_values is not None:
            return sorted(parse_float_expression(value) for value in self.phi_values)
        if self.phi_range is not None:
            start, stop, count = self.phi_range
            return _uniform(parse_float_expression(start), parse_float_expression(stop), count)
        return []

    def get_D_values(self) -> List[float]:
        if self.D_values is not None:
            return sorted(self.D_values)
        if self.D_range is not None:
            return _uniform(*self.D_range)
        return []


def _uniform(start: float, stop: float, count: int) -> List[float]:
    if count == 1:
        return [float(start)]
    return [float(value) for value in np.linspace(start, stop, count)]


class VerifySettings(pydantic.BaseModel, extra="forbid", validate_assignment=True):
    """
    Sizes of the verification suite.

    Attributes
    ----------
    l : int
        Block length of the convergence checks.
    n_list : list of int
        Ascending n values of the convergence tables.
    phi_grid_size : int
        Normalized phases k / phi_grid_size used by the convergence checks.
    moment_matrices : int
        Random PSD matrices for the analytic moment bound.
    moment_max_dim : int
    rho : float
        Diagonal bound of the random moment matrices.
    mc_cases : int
        Random matrices checked by Monte Carlo.  At least 99% of their
        confidence intervals must cover the analytic moments.
    mc_samples : int
        Draws per Monte Carlo case.
    mc_workers : int
        Threads drawing the Monte Carlo batches.  Results do not depend on it.
    sdd_matrices : int
        Random strictly diagonally dominant matrices.
    info_l : int
        Block length of the information-density check.
    info_blocks : int
    info_samples : int
        Draws per block; ``info_blocks * info_samples`` in total.
    finite_block_multiple : int
        The finite-block oracle uses ``l = finite_block_multiple * p_n`` at n=1.
    """

    l: int = pydantic.Field(default=32, ge=1)
    n_list: List[pydantic.PositiveInt] = [10, 20, 40, 80]
    phi_grid_size: int = pydantic.Field(default=4, ge=1)
    moment_matrices: int = pydantic.Field(default=1000, ge=1)
    moment_max_dim: int = pydantic.Field(default=32, ge=1)
    rho: float = pydantic.Field(default=1.0, gt=0.0)
    mc_cases: int = pydantic.Field(default=1000, ge=1)
    mc_samples: int = pydantic.Field(default=100_000, ge=1000)
    mc_workers: int = pydantic.Field(default=1, ge=1)
    sdd_matrices: int = pydantic.Field(default=1000, ge=1)
    info_l: int = pydantic.Field(default=8, ge=1)
    info_blocks: int = pydantic.Field(default=10, ge=1)
    info_samples: int = pydantic.Field(default=10_000, ge=1)
    finite_block_multiple: int = pydantic.Field(default=64, ge=1)

    @pydantic.field_validator("n_list")
    @classmethod
    def _check_ascending(cls, value: List[int]) -> List[int]:
        if not value:
            raise ValueError("n_list must not be empty")
        if any(b <= a for a, b in zip(value, value[1:])):
            raise ValueError(f"n_list must be strictly ascending, got {value}")
        return value


class OutputSettings(pydantic.BaseModel, extra="forbid", validate_assignment=True):
    """
    Where and what to write.

    Attributes
    ----------
    directory : str
    csv : bool
    svg : bool
        Static matplotlib figures.
    html : bool
        Standalone Bokeh figures.
    seed : int
        Seed of every Monte Carlo stream.
    jobs : int
        Worker processes for sweep points.
    """

    directory: str = "out"
    csv: bool = True
    svg: bool = False
    html: bool = False
    seed: int = pydantic.Field(default=0, ge=0, lt=2**64)
    jobs: int = pydantic.Field(default=1, ge=1)

    @property
    def path(self) -> pathlib.Path:
        return full_path(self.directory)


class ExperimentConfig(pydantic.BaseModel, extra="forbid", validate_assignment=True):
    """
    A complete experiment.

    Attributes
    ----------
    af : AfModel
    sampling : SamplingPlan
    D : float
        Distortion of single-point evaluations, n-sweeps and phi-sweeps.
    guard_block_length : int
        Block length l of the guard plan reported by single-point runs.
    spectrum : SpectrumSettings
    sweep : SweepSettings, optional
    gate : GateSettings
    verify : VerifySettings
    output : OutputSettings
    """

    af: AfModel = pydantic.Field(default_factory=AfModel)
    sampling: SamplingPlan = pydantic.Field(default_factory=SamplingPlan)
    D: pydantic.PositiveFloat = 0.15
    guard_block_length: pydantic.PositiveInt = 128
    spectrum: SpectrumSettings = pydantic.Field(default_factory=SpectrumSettings)
    sweep: Optional[SweepSettings] = None
    gate: GateSettings = pydantic.Field(default_factory=GateSettings)
    verify: VerifySettings = pydantic.Field(default_factory=VerifySettings)
    output: OutputSettings = pydantic.Field(default_factory=OutputSettings)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            return cls.model_validate_json(text)
        except pydantic.ValidationError as ex:
            raise ConfigurationError(f"Invalid configuration:\n{ex}") from ex

    @classmethod
    def from_file(cls, path: AnyPath) -> "ExperimentConfig":
        """
        Load a JSON configuration file.

        Raises
        ------
        ConfigurationError
            If the file is missing, is not JSON, or fails validation.
        """
        path = full_path(path)
        try:
            text = path.read_text(encoding="utf-8")
            json.loads(text)
        except OSError as ex:
            raise ConfigurationError(f"Unable to read configuration {path}: {ex}") from ex
        except json.JSONDecodeError as ex:
            raise ConfigurationError(f"Configuration {path} is not valid JSON: {ex}") from ex
        logger.debug("Loading configuration from %s", path)
        return cls.from_json(text)

    @pydantic.model_validator(mode="after")
    def _check_curves(self) -> "ExperimentConfig":
        self.models()
        return self

    def models(self) -> List[AfModel]:
        """The AF model once per configured ``t_dc`` value."""
        if self.sweep is None or not self.sweep.t_dc_values:
            return [self.af]
        return [with_t_dc(self.af, t_dc) for t_dc in self.sweep.t_dc_values]


def with_t_dc(model: AfModel, t_dc: float) -> AfModel:
    """A validated copy of ``model`` with another duty value."""
    try:
        return AfModel.model_validate({**model.model_dump(by_alias=True), "t_dc": t_dc})
    except pydantic.ValidationError as ex:
        raise ConfigurationError(f"Invalid t_dc={t_dc}: {ex}") from ex


def schema_json() -> str:
    """JSON schema of `ExperimentConfig`."""
    schema = ExperimentConfig.model_json_schema(by_alias=True)
    return json.dumps(schema, indent=2, sort_keys=True)
