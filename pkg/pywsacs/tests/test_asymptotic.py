import math

import numpy as np
import pytest

from ..af_model import AfModel
from ..asymptotic import (
    FAIL,
    PASS,
    SweepPoint,
    SweepResult,
    async_block_rdf,
    distortion_sweep,
    exact_interval,
    gate_check,
    guard_plan,
    limsup_estimate,
    max_delay,
    n_sweep,
    phase_curve,
    phase_optimize,
    phase_shift_gap,
    phase_sweep,
    rdf_curve,
    rdf_sync,
)
from ..config import GateSettings, SpectrumSettings
from ..exceptions import ConfigurationError, DomainError
from ..sampling import block_covariance, resolve_plan
from ..waterfill import finite_block_rdf


def test_rdf_sync_two_phase(two_phase_model: AfModel, small_spectrum: SpectrumSettings):
    plan = resolve_plan(two_phase_model, 2, "pi/7", 1)
    point = rdf_sync(two_phase_model, plan, 1.0, small_spectrum)
    assert point.R == pytest.approx(0.25 * math.log2(9.0), abs=1e-9)


def test_rdf_curve_shares_field(pulse_model: AfModel, small_spectrum: SpectrumSettings):
    plan = resolve_plan(pulse_model, 2, "pi/7", 3)
    curve = rdf_curve(pulse_model, plan, [0.1, 0.15, 0.2], small_spectrum)
    for D, point in zip([0.1, 0.15, 0.2], curve):
        assert point.R == rdf_sync(pulse_model, plan, D, small_spectrum).R


def test_phase_optimize_two_phase(two_phase_model: AfModel, small_spectrum: SpectrumSettings):
    plan = resolve_plan(two_phase_model, 2, "pi/7", 1)
    curve = phase_optimize(two_phase_model, plan, 1.0, 8, small_spectrum)
    assert len(curve.points) == 8
    assert [point.phi_tilde for point in curve.points] == [k / 8 for k in range(8)]
    assert curve.R_min == min(point.R for point in curve.points)
    assert curve.phi_opt == pytest.approx(curve.phi_tilde_opt * two_phase_model.T_c)
    # Both samples can avoid the high-variance part of the period.
    assert curve.R_min == pytest.approx(0.0, abs=1e-12)
    assert curve.spread > 0.0


def test_phase_optimize_ties_take_first_phase(
    stationary_model: AfModel, small_spectrum: SpectrumSettings
):
    plan = resolve_plan(stationary_model, 2, "pi/7", 1)
    curve = phase_optimize(stationary_model, plan, 1.0, 4, small_spectrum)
    assert curve.phi_tilde_opt == 0.0
    assert curve.spread == pytest.approx(0.0, abs=1e-12)


def test_phase_optimize_grid_size(two_phase_model: AfModel):
    plan = resolve_plan(two_phase_model, 2, "pi/7", 1)
    with pytest.raises(ConfigurationError):
        phase_optimize(two_phase_model, plan, 1.0, 1)


def test_phase_curve_accepts_phases_above_one(
    pulse_model: AfModel, small_spectrum: SpectrumSettings
):
    plan = resolve_plan(pulse_model, 2, "pi/7", 1)
    curve = phase_curve(pulse_model, plan, 0.15, [0.25, 1.25], small_spectrum)
    assert curve.points[0].R == pytest.approx(curve.points[1].R, rel=1e-9)


def test_phase_shift_gap_is_finite(pulse_model: AfModel, small_spectrum: SpectrumSettings):
    plan = resolve_plan(pulse_model, 2, "pi/7", 3, phi_s=0.2e-6)
    assert math.isfinite(phase_shift_gap(pulse_model, plan, 0.15, small_spectrum))


@pytest.mark.parametrize(
    ("D", "verdict"),
    [
        pytest.param(1.0, PASS, id="below-variance"),
        pytest.param(4.0, PASS, id="at-variance"),
        pytest.param(5.0, FAIL, id="above-variance"),
    ],
)
def test_gate_memoryless(stationary_model: AfModel, small_gate: GateSettings, D, verdict):
    gate = gate_check(stationary_model, 2, D, small_gate)
    assert gate.verdict == verdict
    assert gate.label == ("certified" if verdict == PASS else "heuristic")
    report = gate.to_report()
    assert report["gamma_c_estimate"] == 4.0
    assert report["verdict"] == verdict
    assert report["t_grid_size"] == 128


def test_gate_pulse_model_fails(pulse_model: AfModel, small_gate: GateSettings):
    gate = gate_check(pulse_model, 2, 0.15, small_gate)
    assert gate.verdict == FAIL
    assert not gate.passed


@pytest.mark.parametrize(
    ("rates", "fraction", "expected", "size"),
    [
        pytest.param([3.0, 2.0, 1.0], 0.2, 1.0, 1, id="last-only"),
        pytest.param([1.0, 2.0, 3.0, None, 5.0], 0.4, 5.0, 2, id="skips-missing"),
        pytest.param([1.0, 4.0, 2.0, 3.0], 1.0, 4.0, 4, id="whole-range"),
        pytest.param([1.0, 2.0, None], 0.3, None, 1, id="all-missing"),
        pytest.param([], 0.2, None, 0, id="empty"),
    ],
)
def test_limsup_estimate(rates, fraction, expected, size):
    assert limsup_estimate(rates, fraction) == (expected, size)


def test_limsup_estimate_fraction_range():
    with pytest.raises(ConfigurationError):
        limsup_estimate([1.0], 0.0)


def test_sweep_result_ordering():
    points = [SweepPoint(axis_value=2.0, R=1.0), SweepPoint(axis_value=1.0, R=1.0)]
    with pytest.raises(ValueError):
        SweepResult(axis="n", points=points)


def test_sweep_result_limsup_only_for_n():
    with pytest.raises(ValueError):
        SweepResult(axis="D", points=[SweepPoint(axis_value=0.1, R=1.0)], limsup_estimate=1.0)


def test_n_sweep(two_phase_model: AfModel, small_spectrum: SpectrumSettings):
    result = n_sweep(
        two_phase_model,
        2,
        "pi/7",
        1.0,
        [1, 2, 3],
        window_fraction=0.5,
        phase_grid_size=4,
        spectrum=small_spectrum,
    )
    assert result.axis == "n"
    assert result.axis_values == [1.0, 2.0, 3.0]
    assert not result.partial
    assert [point.p_n for point in result.points] == [2, 4, 7]
    assert result.window == [2.0, 3.0]
    assert result.limsup_estimate == max(result.rates[1:])
    assert result.label == "heuristic"
    for point in result.points:
        assert point.ok
        assert 0.0 <= point.phi_tilde_opt < 1.0


def test_n_sweep_fixed_phase(two_phase_model: AfModel, small_spectrum: SpectrumSettings):
    result = n_sweep(
        two_phase_model, 2, "pi/7", 1.0, [1], phase=0.0, spectrum=small_spectrum
    )
    (point,) = result.points
    assert point.R == pytest.approx(0.25 * math.log2(9.0), abs=1e-9)
    assert point.phi_opt == 0.0
    assert point.quad_error is not None


def test_n_sweep_cost_guard(pulse_model: AfModel, small_spectrum: SpectrumSettings):
    result = n_sweep(
        pulse_model,
        2,
        "pi/7",
        0.15,
        [1, 100],
        phase=0.0,
        spectrum=small_spectrum,
        max_cost=1000,
    )
    assert result.partial
    assert result.points[0].ok
    failed = result.points[1]
    assert failed.status == "failed"
    assert failed.p_n == 244
    assert "max_cost" in failed.error
    # The estimate skips the failed point.
    assert result.limsup_estimate is None


def test_n_sweep_rejects_unordered(two_phase_model: AfModel):
    with pytest.raises(ConfigurationError):
        n_sweep(two_phase_model, 2, "pi/7", 1.0, [3, 1])
    with pytest.raises(ConfigurationError):
        n_sweep(two_phase_model, 2, "pi/7", 1.0, [])


def test_n_sweep_jobs_do_not_change_result(
    pulse_model: AfModel, small_spectrum: SpectrumSettings
):
    kwargs = dict(phase_grid_size=2, spectrum=small_spectrum)
    serial = n_sweep(pulse_model, 2, "pi/7", 0.15, [1, 2, 3], jobs=1, **kwargs)
    parallel = n_sweep(pulse_model, 2, "pi/7", 0.15, [1, 2, 3], jobs=2, **kwargs)
    assert serial.rates == parallel.rates


def test_rate_grows_with_duty(small_spectrum: SpectrumSettings):
    rates = {}
    for t_dc in (0.4, 0.7):
        model = AfModel(t_dc=t_dc)
        result = n_sweep(
            model, 2, "pi/7", 0.15, [1, 2, 3], phase_grid_size=8, spectrum=small_spectrum
        )
        rates[t_dc] = result.rates
    assert all(high > low for low, high in zip(rates[0.4], rates[0.7]))


def test_phase_sensitivity_shrinks_with_n(
    pulse_model: AfModel, small_spectrum: SpectrumSettings
):
    phases = np.arange(8) / 8
    spreads = {}
    for n in (1, 10):
        plan = resolve_plan(pulse_model, 2, "pi/7", n)
        result = phase_sweep(pulse_model, plan, 0.15, phases, small_spectrum)
        spreads[n] = max(result.rates) - min(result.rates)
    assert spreads[10] < spreads[1]


def test_phase_sweep_points(pulse_model: AfModel, small_spectrum: SpectrumSettings):
    plan = resolve_plan(pulse_model, 2, "pi/7", 1)
    result = phase_sweep(pulse_model, plan, 0.15, [0.5, 0.0, 1.5], small_spectrum)
    assert result.axis == "phi"
    assert result.axis_values == [0.0, 0.5, 1.5]
    assert result.limsup_estimate is None
    assert result.points[1].R == pytest.approx(result.points[2].R, rel=1e-9)


def test_distortion_sweep_shape(pulse_model: AfModel, small_spectrum: SpectrumSettings):
    plan = resolve_plan(pulse_model, 2, "pi/7", 3, phi_s=math.pi / 5 * 5e-6)
    D_values = np.linspace(0.02, 0.3, 15)
    result = distortion_sweep(pulse_model, plan, D_values, small_spectrum)
    rates = np.array(result.rates)
    assert np.all(np.diff(rates) < 0.0)
    assert np.all(np.diff(rates, 2) >= -1e-6)


@pytest.mark.slow
@pytest.mark.parametrize(
    "phi_tilde",
    [pytest.param(0.0, id="phase-0"), pytest.param(math.pi / 5, id="phase-pi-over-5")],
)
def test_rate_grows_with_duty_at_fixed_phase(phi_tilde: float):
    spectrum = SpectrumSettings(grid_size=64)
    n_values = list(range(1, 41))
    rates = {}
    for t_dc in (0.4, 0.7):
        result = n_sweep(
            AfModel(t_dc=t_dc), 2, "pi/7", 0.15, n_values, phase=phi_tilde, spectrum=spectrum
        )
        assert not result.partial
        rates[t_dc] = result.rates
    violations = [
        n for n, low, high in zip(n_values, rates[0.4], rates[0.7]) if not high > low
    ]
    assert violations == []


@pytest.mark.slow
def test_phase_sensitivity_at_n_100(pulse_model: AfModel):
    spectrum = SpectrumSettings(grid_size=64)
    phases = np.arange(64) / 64
    spreads = {}
    for n in (1, 100):
        plan = resolve_plan(pulse_model, 2, "pi/7", n)
        assert plan.p_n == {1: 2, 100: 244}[n]
        result = phase_sweep(pulse_model, plan, 0.15, phases, spectrum)
        assert not result.partial
        spreads[n] = max(result.rates) - min(result.rates)
    assert spreads[100] < spreads[1]


@pytest.mark.slow
def test_distortion_sweep_shape_at_n_100(pulse_model: AfModel):
    plan = resolve_plan(pulse_model, 2, "pi/7", 100, phi_s=math.pi / 5 * pulse_model.T_c)
    D_values = np.linspace(0.02, 0.3, 15)
    result = distortion_sweep(pulse_model, plan, D_values, SpectrumSettings(grid_size=64))
    assert not result.partial
    rates = np.array(result.rates)
    assert np.all(np.diff(rates) < 0.0)
    assert np.all(np.diff(rates, 2) >= -1e-6)


@pytest.mark.slow
@pytest.mark.parametrize(
    "phi_tilde",
    [pytest.param(0.0, id="phase-0"), pytest.param(math.pi / 5, id="phase-pi-over-5")],
)
def test_finite_block_matches_spectral_rate(pulse_model: AfModel, phi_tilde: float):
    plan = resolve_plan(pulse_model, 2, "pi/7", 1, phi_s=phi_tilde * pulse_model.T_c)
    cov = block_covariance(pulse_model, plan, 64 * plan.p_n)
    block = finite_block_rdf(cov, 0.15)
    spectral = rdf_sync(pulse_model, plan, 0.15, SpectrumSettings(grid_size=256))
    assert spectral.R > 0.0
    assert abs(block.R - spectral.R) < 0.02 * spectral.R


def test_async_block_rdf(stationary_model: AfModel):
    rate, phase = async_block_rdf(stationary_model, 2, "pi/7", 6, 1.0, [0.0, 0.5])
    assert rate == pytest.approx(1.0, abs=1e-9)
    assert phase == 0.0


def test_guard_plan():
    model = AfModel(T_c=1.0, lambda_c=0.8, decay_rate=1.0)
    plan = resolve_plan(model, 2, 0.0, 1)
    # T_s = 1/2, tau_c = ceil(3 * 0.8) = 3
    assert plan.T_s == 0.5
    assert plan.tau_c == 3

    guard = guard_plan(model, plan, 4, 0.0)
    # (4 + 3) * 0.5 = 3.5 -> phase 0.5, so 0.5 more to re-synchronize.
    assert guard.delta_g_prime == pytest.approx(0.5)
    assert guard.delta_g == pytest.approx(0.5)
    assert guard.rate_factor == pytest.approx(4 / 8)
    assert guard.distortion_penalty == pytest.approx(3 * 10.0 / 4)
    assert guard.max_delay == pytest.approx(3 * 0.5 + 1.0)
    assert guard.overall_rate(2.0) == pytest.approx(1.0)
    assert max_delay(model, plan) == guard.max_delay


def test_guard_plan_aligned_block():
    model = AfModel(T_c=1.0, lambda_c=0.8, decay_rate=1.0)
    plan = resolve_plan(model, 2, 0.0, 1)
    guard = guard_plan(model, plan, 3, 0.25)
    # (3 + 3) * 0.5 = 3 whole periods: no extra gap.
    assert guard.delta_g_prime == pytest.approx(0.25)
    assert guard.delta_g == pytest.approx(0.0)
    assert guard.rate_factor == pytest.approx(0.5)


def test_guard_plan_phase_behind():
    model = AfModel(T_c=1.0, lambda_c=0.8, decay_rate=1.0)
    plan = resolve_plan(model, 2, 0.0, 1)
    guard = guard_plan(model, plan, 4, 0.75)
    # End phase (0.75 + 3.5) mod 1 = 0.25 <= 0.75: wait 0.5.
    assert guard.delta_g_prime == pytest.approx(0.25)
    assert guard.delta_g == pytest.approx(0.5)


def test_guard_plan_invalid_length(pulse_model: AfModel):
    plan = resolve_plan(pulse_model, 2, "pi/7", 1)
    with pytest.raises(DomainError):
        guard_plan(pulse_model, plan, 0, 0.0)


def test_guard_plan_uses_exact_offset():
    model = AfModel(T_c=1.0, lambda_c=0.8, decay_rate=1.0)
    plan = resolve_plan(model, 2, 0.25, 1)
    # eps_1 = 0 samples at 1/2, the sampler itself runs at 1/2.25.
    assert plan.T_s == 0.5
    assert exact_interval(model, plan) == pytest.approx(1 / 2.25)

    guard = guard_plan(model, plan, 4, 0.0)
    # 7 / 2.25 = 3 + 1/9 periods: wait 8/9, which is 2 sampling intervals.
    assert guard.delta_g_prime == pytest.approx(1 / 9)
    assert guard.delta_g == pytest.approx(8 / 9)
    assert guard.rate_factor == pytest.approx(4 / 9)
    assert guard.max_delay == pytest.approx(3 / 2.25 + 1.0)


def test_guard_overhead_vanishes_with_block_length(pulse_model: AfModel):
    plan = resolve_plan(pulse_model, 2, "pi/7", 100)
    guards = [guard_plan(pulse_model, plan, l, 0.0) for l in (100, 1000, 10000)]
    assert [guard.tau_c for guard in guards] == [3, 3, 3]
    for guard in guards:
        assert 0.0 <= guard.delta_g < pulse_model.T_c
        assert 0.0 < guard.rate_factor <= 1.0
    factors = [guard.rate_factor for guard in guards]
    assert factors[0] < factors[1] < factors[2]
    assert factors[-1] > 0.999
    penalties = [guard.distortion_penalty for guard in guards]
    assert penalties == pytest.approx([0.3, 0.03, 0.003])
