"""
Unit tests for the nonlinear module.
"""

import math

import numpy as np
import pytest

from poiseuille.errors import BlowUpError, ConfigurationError, ShapeError
from poiseuille.energy import energy_ek, field_snapshot, k_integral
from poiseuille.grid import (
    Field,
    ModeState,
    diff_y,
    inner,
    stream_gradient,
    uniform_k_grid,
)
from poiseuille.multipliers import EnergyConstants
from poiseuille.nonlinear import (
    advective_time_step,
    bootstrap_experiment,
    build_generators,
    build_plan,
    nl_budget,
    nonlinear_term,
    step_nonlinear,
)
from poiseuille.profiles import gaussian_field, single_mode_field

from .utils import MockLogger, grid, random_field

CONSTANTS = EnergyConstants()


def _periodic_oracle(fld, g):
    """
    -(u . grad omega) evaluated pointwise on an x-periodic grid, fine enough
    for the product of two band-limited fields to be resolved exactly.
    """
    k = fld.k_values
    dk = fld.delta_k
    n_x = 4 * k.size
    x = 2 * np.pi * np.arange(n_x) / (n_x * dk)
    synthesis = dk * np.exp(1j * np.outer(x, k))
    analysis = np.exp(-1j * np.outer(k, x)) / (n_x * dk)

    streams = [stream_gradient(m.omega, m.k, g) for m in fld.modes]
    psi_x = synthesis @ np.array([s.dx for s in streams])
    psi_y = synthesis @ np.array([s.dy for s in streams])
    omega_x = synthesis @ (1j * k[:, None] * fld.omega)
    omega_y = synthesis @ diff_y(fld.omega, g)

    return -(analysis @ (psi_x * omega_y - psi_y * omega_x))


def test_nonlinear_term_against_periodic_products():
    """
    Compare the k-convolution with products in physical space.
    """
    g = grid(n_y=32)
    fld = random_field(uniform_k_grid(2.0, 0.5), g, 1e-2, seed=5)
    plan = build_plan(fld.k_values, dealias=1.0)

    expected = _periodic_oracle(fld, g)
    result = nonlinear_term(fld, g, plan)

    scale = np.max(np.abs(expected))
    assert scale > 0
    assert np.max(np.abs(result - expected)) < 1e-10 * scale


def test_nonlinear_term_support():
    """
    Test that two modes at +-k0 only force 0 and +-2 k0.
    """
    g = grid(n_y=32)
    k = uniform_k_grid(2.0, 0.5)
    fld = single_mode_field(k, g, 1e-2, amplitude=1.0, k0=1.0)
    nl = nonlinear_term(fld, g, build_plan(k, dealias=1.0))

    forced = np.isclose(np.abs(k), 0.0) | np.isclose(np.abs(k), 2.0)
    assert np.all(nl[~forced] == 0)


def test_nonlinear_term_of_a_shear_vanishes():
    """
    Test that a field made of the k = 0 mode alone is a steady state of the
    transport term.
    """
    g = grid(n_y=32)
    k = uniform_k_grid(1.0, 0.5)
    omega = np.zeros((k.size, g.n_y), dtype=complex)
    omega[k.size // 2] = np.exp(-(g.nodes**2) / 2.0)
    fld = Field(k_values=k, omega=omega, nu=1e-2)

    assert np.all(nonlinear_term(fld, g, build_plan(k)) == 0)


def test_nonlinear_term_properties():
    """
    Test the reality condition, the quadratic scaling and the dealiasing.
    """
    g = grid(n_y=32)
    k = uniform_k_grid(2.0, 0.5)
    fld = random_field(k, g, 1e-2, seed=2)
    plan = build_plan(k, dealias=1.0)

    nl = nonlinear_term(fld, g, plan)
    assert np.array_equal(nl, np.conj(nl[::-1]))
    assert np.allclose(
        nonlinear_term(fld.scaled(2.0), g, plan), 4 * nl, rtol=1e-12
    )

    dealiased = nonlinear_term(fld, g, build_plan(k, dealias=0.5))
    assert np.all(dealiased[np.abs(k) > 1.0] == 0)
    assert np.allclose(
        dealiased[np.abs(k) <= 1.0], nl[np.abs(k) <= 1.0], rtol=1e-12
    )


def test_plan_checks():
    """
    Test that plans refuse bad dealias fractions and mismatched fields.
    """
    g = grid(n_y=32)
    with pytest.raises(ConfigurationError):
        build_plan(uniform_k_grid(1.0, 0.5), dealias=0.0)

    fld = random_field(uniform_k_grid(1.0, 0.5), g, 1e-2)
    with pytest.raises(ShapeError):
        nonlinear_term(fld, g, build_plan(uniform_k_grid(2.0, 0.5)))


def test_advective_time_step():
    """
    Test the behaviour of the `advective_time_step` function.
    """
    g = grid(n_y=32)
    k = uniform_k_grid(1.0, 0.5)
    zero = Field(k_values=k, omega=np.zeros((k.size, g.n_y)), nu=1e-2)
    assert advective_time_step(zero, g) == pytest.approx(0.5 / 1e-12)

    fld = random_field(k, g, 1e-2)
    guard = advective_time_step(fld, g)
    assert 0 < guard < 0.5 / 1e-12
    assert math.isclose(
        advective_time_step(fld.scaled(2.0), g), guard / 2, rel_tol=1e-6
    )


def test_step_nonlinear_reduces_to_the_linear_step():
    """
    Test that a pure shear is advanced by the linear stepper alone.
    """
    g = grid(n_y=32)
    k = uniform_k_grid(1.0, 0.5)
    omega = np.zeros((k.size, g.n_y), dtype=complex)
    omega[k.size // 2, 1:-1] = np.exp(-(g.nodes[1:-1] ** 2) / 2.0)
    fld = Field(k_values=k, omega=omega, nu=1e-2)
    generators = build_generators(fld, g)

    stepped = step_nonlinear(fld, 0.1, g, build_plan(k), generators)
    expected = generators[k.size // 2].midpoint_solve(omega[k.size // 2], 0.1)

    assert math.isclose(stepped.t, 0.1)
    assert np.allclose(stepped.omega[k.size // 2], expected, rtol=1e-13)
    assert np.all(stepped.omega[: k.size // 2] == 0)


def test_step_nonlinear_checks(monkeypatch):
    """
    Test bad steps, generator counts and the blow-up detection.
    """
    g = grid(n_y=32)
    k = uniform_k_grid(1.0, 0.5)
    fld = random_field(k, g, 1e-2)
    plan = build_plan(k)
    generators = build_generators(fld, g)

    with pytest.raises(ConfigurationError):
        step_nonlinear(fld, 0.0, g, plan, generators)
    with pytest.raises(ConfigurationError):
        step_nonlinear(fld, 0.1, g, plan, generators[1:])

    logger = MockLogger()
    step_nonlinear(fld, 1e6, g, plan, generators, logger=logger)
    assert any("advective guard" in m for m in logger.warnings)

    monkeypatch.setattr(
        "poiseuille.nonlinear.nonlinear_term",
        lambda fld, *args, **kwargs: np.full(fld.omega.shape, np.nan),
    )
    with pytest.raises(BlowUpError) as error:
        step_nonlinear(fld, 0.1, g, plan, generators)
    assert error.value.time == 0.0


def test_nl_budget_shapes():
    """
    Test the behaviour of the `nl_budget` function.
    """
    g = grid(n_y=32)
    k = uniform_k_grid(1.0, 0.5)
    fld = random_field(k, g, 1e-2)
    nl = nonlinear_term(fld, g, build_plan(k))

    budget = nl_budget(fld, nl, g, CONSTANTS)
    assert budget.transfer.shape == (6,)
    assert budget.moment_transfer.shape == (k.size,)
    assert budget.stream_transfer.shape == (k.size,)
    assert math.isfinite(budget.energy_transfer)

    zero = nl_budget(fld, np.zeros_like(nl), g, CONSTANTS)
    assert zero.energy_transfer == 0.0


def test_bootstrap_experiment():
    """
    Test a short bootstrap run from small data.
    """
    g = grid(n_y=48)
    k = uniform_k_grid(1.0, 0.5)
    fld = gaussian_field(k, g, 0.1, amplitude=1e-3, k0=0.5, sigma_k=0.5)

    report = bootstrap_experiment(
        fld,
        g,
        CONSTANTS,
        horizon=0.2,
        dt=0.05,
        plan=build_plan(k),
        amplitude=1e-3,
    )

    assert report.times.size == 5
    assert math.isclose(report.final.t, 0.2)
    assert report.bound_held
    assert report.sup_ratio <= 2.0
    assert len(report.budget) == 8
    assert report.integrals.d1 > 0
    if report.empirical_c is not None:
        assert math.isclose(
            report.implied_amplitude**2 * report.energy[0],
            report.threshold * 1e-6,
            rel_tol=1e-9,
        )

    with pytest.raises(ConfigurationError):
        bootstrap_experiment(
            fld,
            g,
            CONSTANTS,
            horizon=0.2,
            dt=0.05,
            plan=build_plan(k),
            stride=0,
        )


def test_nl_budget_matches_the_variation_of_the_functionals():
    """
    Test the eight transfer terms against central differences of E_k,
    ||y omega_k||^2 and ||grad psi_k||^2 along NL, which are exact for
    quadratic functionals.
    """
    g = grid(n_y=48)
    k = uniform_k_grid(1.0, 0.5)
    fld = random_field(k, g, 1e-2, seed=9)
    nl = nonlinear_term(fld, g, build_plan(k))
    budget = nl_budget(fld, nl, g, CONSTANTS)
    weights = field_snapshot(fld, g, CONSTANTS).weights

    energy_variation = np.zeros(k.size)
    moments = np.zeros(k.size)
    streams = np.zeros(k.size)
    for i, state in enumerate(fld.modes):
        plus, minus = (
            ModeState(
                k=state.k,
                nu=state.nu,
                t=state.t,
                omega=state.omega + s * nl[i],
            )
            for s in (1.0, -1.0)
        )
        energy_variation[i] = 0.5 * (
            energy_ek(plus, g, CONSTANTS).total
            - energy_ek(minus, g, CONSTANTS).total
        )
        moments[i] = 0.25 * (
            inner(g.nodes * plus.omega, g.nodes * plus.omega, g).real
            - inner(g.nodes * minus.omega, g.nodes * minus.omega, g).real
        )
        streams[i] = 0.25 * (
            stream_gradient(plus.omega, state.k, g).norm_squared(g)
            - stream_gradient(minus.omega, state.k, g).norm_squared(g)
        )

    scale = np.max(np.abs(energy_variation)) + 1e-300
    assert len(budget.transfer) + 2 == 8
    assert math.isclose(
        budget.energy_transfer,
        k_integral(weights * energy_variation, fld.delta_k),
        rel_tol=1e-8,
        abs_tol=1e-12 * scale,
    )
    assert np.allclose(budget.moment_transfer, moments, rtol=1e-8, atol=0)
    assert np.allclose(
        budget.stream_transfer,
        streams,
        rtol=1e-8,
        atol=1e-12 * np.max(np.abs(streams)),
    )


def test_step_nonlinear_tends_to_the_linear_step():
    """
    Test that the nonlinear correction of one step shrinks like a^2 as the
    amplitude a goes to zero.
    """
    g = grid(n_y=48)
    k = uniform_k_grid(1.0, 0.5)
    base = random_field(k, g, 1e-2, seed=12)
    generators = build_generators(base, g)
    plan = build_plan(k)
    dt = 0.05

    def deviation(amplitude):
        fld = base.scaled(amplitude)
        stepped = step_nonlinear(fld, dt, g, plan, generators)
        linear = np.array(
            [
                gen.midpoint_solve(row, dt)
                for gen, row in zip(generators, fld.omega)
            ]
        )
        return np.max(np.abs(stepped.omega - linear))

    coarse, fine = deviation(1e-2), deviation(1e-3)
    assert 0 < fine < coarse
    assert fine / coarse == pytest.approx(1e-2, rel=0.05)
