import math

import numpy as np
import pytest

from ..af_model import AfModel
from ..exceptions import DomainError, PreconditionError
from ..sampling import block_covariance, resolve_plan
from ..spectrum import EigenField, build_block_autocorr, eigen_field
from ..waterfill import (
    block_eigenvalues,
    distortion_of_theta,
    finite_block_rdf,
    rate_of_theta,
    solve_theta,
    test_channel,
)


def make_field(model: AfModel, n: int = 1, grid_size: int = 16) -> EigenField:
    plan = resolve_plan(model, 2, "pi/7", n)
    return eigen_field(build_block_autocorr(model, plan), grid_size=grid_size)


def test_stationary_closed_form(stationary_model: AfModel):
    point = solve_theta(make_field(stationary_model), 1.0)
    assert point.R == pytest.approx(1.0, abs=1e-9)
    assert point.theta == pytest.approx(1.0, abs=1e-9)
    assert point.avg_var == pytest.approx(4.0)
    assert point.active_fraction == pytest.approx(1.0)
    assert not point.constraint_inactive
    assert point.p_n == 2
    assert point.iterations > 0


def test_two_phase_oracle(two_phase_model: AfModel):
    # Water level 1: only the variance-9 component is coded.
    point = solve_theta(make_field(two_phase_model), 1.0)
    assert point.R == pytest.approx(0.25 * math.log2(9.0), abs=1e-9)
    assert point.theta == pytest.approx(1.0, abs=1e-9)


def test_two_phase_partial_water_level(two_phase_model: AfModel):
    point = solve_theta(make_field(two_phase_model), 2.0)
    assert point.theta == pytest.approx(3.0, abs=1e-9)
    assert point.R == pytest.approx(0.25 * math.log2(3.0), abs=1e-9)
    assert point.active_fraction == pytest.approx(0.5)


def test_quadrature_error_vanishes_for_flat_spectrum(two_phase_model: AfModel):
    point = solve_theta(make_field(two_phase_model), 2.0)
    assert point.quad_error == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("D", [5.0, 7.5])
def test_distortion_at_or_above_variance(two_phase_model: AfModel, D: float):
    point = solve_theta(make_field(two_phase_model), D)
    assert point.R == 0.0
    assert point.constraint_inactive
    assert point.theta == pytest.approx(9.0)


@pytest.mark.parametrize("D", [0.0, -1.0])
def test_nonpositive_distortion(two_phase_model: AfModel, D: float):
    with pytest.raises(DomainError):
        solve_theta(make_field(two_phase_model), D)


def test_theta_functions(two_phase_model: AfModel):
    field = make_field(two_phase_model)
    assert distortion_of_theta(field, 0.0) == 0.0
    assert distortion_of_theta(field, 1.0) == pytest.approx(1.0)
    assert distortion_of_theta(field, 100.0) == pytest.approx(5.0)
    assert rate_of_theta(field, 1.0) == pytest.approx(0.25 * math.log2(9.0))
    assert rate_of_theta(field, 9.0) == 0.0
    with pytest.raises(DomainError):
        rate_of_theta(field, 0.0)
    with pytest.raises(DomainError):
        distortion_of_theta(field, -1.0)


def test_rate_is_decreasing_in_distortion(pulse_model: AfModel):
    field = make_field(pulse_model, n=3, grid_size=32)
    rates = [solve_theta(field, D).R for D in np.linspace(0.05, 1.5, 8)]
    assert all(b < a for a, b in zip(rates, rates[1:]))


def test_solution_meets_distortion(pulse_model: AfModel):
    field = make_field(pulse_model, n=3, grid_size=32)
    point = solve_theta(field, 0.15)
    assert distortion_of_theta(field, point.theta) == pytest.approx(0.15, abs=1e-11)
    assert rate_of_theta(field, point.theta) == pytest.approx(point.R)


def test_finite_block_diagonal():
    point = finite_block_rdf(np.diag([4.0, 4.0, 4.0]), 1.0)
    assert point.R == pytest.approx(1.0, abs=1e-9)
    assert point.p_n is None


def test_finite_block_two_phase():
    point = finite_block_rdf(np.diag([1.0, 9.0]), 1.0)
    assert point.R == pytest.approx(0.25 * math.log2(9.0), abs=1e-9)


def test_finite_block_rank_deficient():
    cov = np.ones((3, 3))
    point = finite_block_rdf(cov, 0.5)
    # One eigenvalue 3, two zeros: (1/3) (min(3, theta)) = 0.5.
    assert point.theta == pytest.approx(1.5)
    assert point.R == pytest.approx(math.log2(2.0) / 6)


def test_block_eigenvalues_preconditions():
    with pytest.raises(PreconditionError):
        block_eigenvalues(np.array([[1.0, 0.5], [0.0, 1.0]]))
    with pytest.raises(PreconditionError):
        block_eigenvalues(np.ones((2, 3)))
    with pytest.raises(PreconditionError):
        block_eigenvalues(np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_test_channel(pulse_model: AfModel):
    plan = resolve_plan(pulse_model, 2, "pi/7", 1)
    cov = block_covariance(pulse_model, plan, 8)
    channel = test_channel(cov, 0.15)
    l = cov.shape[0]
    assert np.trace(channel.error_cov) / l == pytest.approx(0.15, rel=1e-9)
    np.testing.assert_allclose(channel.error_cov + channel.reconstruction_cov, cov, atol=1e-12)
    assert np.linalg.eigvalsh(channel.reconstruction_cov).min() >= -1e-12
    assert np.linalg.eigvalsh(channel.error_cov).max() <= channel.point.theta + 1e-12
