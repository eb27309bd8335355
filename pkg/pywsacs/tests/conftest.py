import json
import math
import pathlib
from typing import Any, Dict

import matplotlib
import pytest

from ..af_model import AfModel
from ..config import GateSettings, SpectrumSettings

matplotlib.use("Agg")

test_root = pathlib.Path(__file__).parent.resolve()
packaged_configs_root = test_root / "input_files"

# Much shorter than any sampling interval of the models below.
MEMORYLESS_LAMBDA_C = 1e-9


@pytest.fixture
def pulse_model() -> AfModel:
    """The trapezoidal-pulse model with its default parameters."""
    return AfModel()


@pytest.fixture
def stationary_model() -> AfModel:
    """Memoryless stationary source with variance 4."""
    return AfModel(
        base_var=4.0,
        var_amp=0.0,
        lambda_c=MEMORYLESS_LAMBDA_C,
        decay_rate=math.inf,
    )


@pytest.fixture
def two_phase_model() -> AfModel:
    """
    Memoryless source whose two samples per period (p=2, n=1) have
    variances 1 and 9.
    """
    return AfModel(
        base_var=1.0,
        var_amp=8.0,
        phi_tilde=0.3,
        lambda_c=MEMORYLESS_LAMBDA_C,
        decay_rate=math.inf,
    )


@pytest.fixture
def triangle_model() -> AfModel:
    """Triangular variance profile: Lipschitz everywhere, no flat top."""
    return AfModel(t_rf=0.5, t_dc=0.0)


@pytest.fixture
def small_spectrum() -> SpectrumSettings:
    return SpectrumSettings(grid_size=32)


@pytest.fixture
def small_gate() -> GateSettings:
    return GateSettings(t_grid_size=128, lag_grid_size=128)


def stationary_af_section() -> Dict[str, Any]:
    return {
        "base_var": 4.0,
        "var_amp": 0.0,
        "lambda_c_seconds": MEMORYLESS_LAMBDA_C,
        "decay_rate_per_second": 1e300,
    }


def write_config(
    directory: pathlib.Path, name: str = "config.json", **sections
) -> pathlib.Path:
    """Write an experiment configuration with small numerical defaults."""
    config = {
        "spectrum": {"grid_size": 16},
        "gate": {"t_grid_size": 64, "lag_grid_size": 64},
        "output": {"directory": str(directory / "out")},
    }
    for key, value in sections.items():
        if isinstance(value, dict) and isinstance(config.get(key), dict):
            config[key] = {**config[key], **value}
        else:
            config[key] = value
    path = directory / name
    path.write_text(json.dumps(config, indent=2))
    return path
