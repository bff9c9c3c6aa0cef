"""
Unit tests for the energy module.
"""

import math

import numpy as np
import pytest
from scipy import integrate

from poiseuille.energy import (
    RunningIntegrals,
    _ratio,
    check_embedding_ratios,
    check_energy_inequality,
    check_equivalence,
    check_gronwall,
    energy_derivative,
    energy_ek,
    energy_rate,
    epsilon_norm,
    field_snapshot,
    global_energy,
    verify_identities,
)
from poiseuille.errors import ConfigurationError, UndefinedRatioError
from poiseuille.grid import Field, ModeState, uniform_k_grid
from poiseuille.linear import build_generator, evolve
from poiseuille.multipliers import (
    EnergyConstants,
    bracket,
    decay_rate,
    eval_multipliers,
)
from poiseuille.profiles import gaussian_mode, random_mode

from .utils import grid, random_field

CONSTANTS = EnergyConstants()


@pytest.mark.parametrize("nu", [1e-1, 1e-2, 1e-3])
@pytest.mark.parametrize("k", [0.0, 1.0, 5.0, 40.0])
def test_verify_identities(k, nu):
    """
    Test that the five balance laws hold to quadrature accuracy.
    """
    g = grid(n_y=128)
    gen = build_generator(k, nu, g)
    rng = np.random.default_rng(7)

    for _ in range(3):
        residuals = verify_identities(random_mode(k, nu, g, rng), gen)
        assert residuals.worst < 1e-7


def test_identities_of_the_zero_mode():
    """
    Test that every residual of the zero state is 0 rather than 0/0.
    """
    g = grid()
    gen = build_generator(2.0, 0.1, g)
    zero = ModeState(k=2.0, nu=0.1, t=0.0, omega=np.zeros(g.n_y, complex))

    assert verify_identities(zero, gen).worst == 0.0


@pytest.mark.parametrize("k", [0.0, 0.5, 20.0])
def test_energy_derivative_is_the_variation(k):
    """
    Test `energy_derivative` against a central difference of `energy_ek`,
    which is exact for a quadratic form.
    """
    g = grid()
    nu = 1e-2
    rng = np.random.default_rng(3)
    state = random_mode(k, nu, g, rng)
    direction = random_mode(k, nu, g, rng).omega

    eps = 1e-3
    plus = ModeState(k=k, nu=nu, t=0.0, omega=state.omega + eps * direction)
    minus = ModeState(k=k, nu=nu, t=0.0, omega=state.omega - eps * direction)
    numeric = (
        energy_ek(plus, g, CONSTANTS).total
        - energy_ek(minus, g, CONSTANTS).total
    ) / (2 * eps)

    variation = energy_derivative(state, direction, g, CONSTANTS)
    assert math.isclose(variation.total, numeric, rel_tol=1e-7)
    assert len(variation.terms) == 6


def test_energy_rate_matches_the_flow():
    """
    Test that the spatial dE_k/dt matches the energy change over one step.
    """
    g = grid()
    k, nu, dt = 2.0, 0.1, 1e-4
    gen = build_generator(k, nu, g)
    state = gaussian_mode(k, nu, g)

    trajectory = evolve(state, gen, 2 * dt, dt)
    energies = [
        energy_ek(s, g, CONSTANTS).total for s in trajectory.samples
    ]
    middle = trajectory.samples[1]
    numeric = (energies[2] - energies[0]) / (2 * dt)

    assert math.isclose(
        energy_rate(middle, gen, CONSTANTS), numeric, rel_tol=1e-4
    )


def test_check_equivalence():
    """
    Test that E_k stays within the band of the reference quadratic form and
    that the cross term is absorbed by the diagonal terms.
    """
    g = grid()
    rng = np.random.default_rng(11)

    for nu in (1e-1, 1e-3):
        for k in (0.0, 1.0, 5.0, 40.0):
            ratio, diagonal = check_equivalence(
                random_mode(k, nu, g, rng), g, CONSTANTS
            )
            assert 0.02 < ratio < 10.0
            assert 0.55 <= diagonal <= 1.45

    with pytest.raises(UndefinedRatioError):
        check_equivalence(
            ModeState(k=1.0, nu=0.1, t=0.0, omega=np.zeros(g.n_y)),
            g,
            CONSTANTS,
        )


def test_check_energy_inequality():
    """
    Test the behaviour of the `check_energy_inequality` function.
    """
    g = grid()
    gen = build_generator(5.0, 1e-2, g)
    trajectory = evolve(gaussian_mode(5.0, 1e-2, g), gen, 1.0, 0.1)

    check = check_energy_inequality(trajectory.samples, gen, CONSTANTS)
    assert check.times.size == len(trajectory.samples)
    assert check.energy.size == check.rate.size == check.dissipation.size
    assert check.c_star > 0
    assert np.all(check.energy > 0)

    zero = ModeState(k=5.0, nu=1e-2, t=0.0, omega=np.zeros(g.n_y))
    with pytest.raises(UndefinedRatioError):
        check_energy_inequality([zero], gen, CONSTANTS)


def test_check_gronwall():
    """
    Test the behaviour of the `check_gronwall` function.
    """
    times = np.linspace(0.0, 5.0, 51)
    energy = np.exp(-2.0 * times)

    assert check_gronwall(times, energy, 1.0, 0.25)
    assert check_gronwall(times, energy, 1.0, 0.5)
    assert not check_gronwall(times, energy, 1.0, 1.0)


def test_running_integrals():
    """
    Test the trapezoid accumulation of `RunningIntegrals`.
    """
    running = RunningIntegrals(n_k=2)
    running.add(0.0, 1.0, np.array([1.0, 2.0]), np.array([1.0, 1.0]))
    assert running.dissipation == 0.0

    running.add(2.0, 3.0, np.array([3.0, 2.0]), np.array([2.0, 0.0]))
    assert running.d1 == 4.0
    assert np.allclose(running.heat, [4.0, 4.0])
    assert np.allclose(running.stream_sup, [5.0, 1.0])
    assert running.d2 == 4.0
    assert running.dissipation == 8.0
    assert len(running.budget) == 8

    with pytest.raises(ConfigurationError):
        running.add(1.0, 0.0, np.zeros(2), np.zeros(2))


def test_global_energy_is_quadratic():
    """
    Test that E, D~ scale quadratically and the stability norm linearly.
    """
    g = grid(n_y=64)
    fld = random_field(uniform_k_grid(1.0, 0.5), g, 1e-2)
    double = fld.scaled(2.0)

    once = global_energy(fld, g, CONSTANTS)
    twice = global_energy(double, g, CONSTANTS)
    assert math.isclose(twice.energy, 4 * once.energy, rel_tol=1e-12)
    assert math.isclose(twice.d_tilde, 4 * once.d_tilde, rel_tol=1e-12)
    assert once.energy > 0

    assert math.isclose(
        epsilon_norm(double, g, CONSTANTS).total,
        2 * epsilon_norm(fld, g, CONSTANTS).total,
        rel_tol=1e-12,
    )


def test_field_snapshot_weights():
    """
    Test that the time weight reduces to <k>^(2m) at t = 0.
    """
    g = grid(n_y=64)
    k = uniform_k_grid(1.0, 0.5)
    snapshot = field_snapshot(random_field(k, g, 1e-2), g, CONSTANTS)

    expected = [bracket(kk) ** (2 * CONSTANTS.m) for kk in k]
    assert np.allclose(snapshot.weights, expected)
    assert np.allclose(snapshot.energies, snapshot.energies[::-1])


def test_ratio():
    """
    Test the conventions of `_ratio` for vanishing denominators.
    """
    assert _ratio(1.0, 2.0) == (0.5, False)
    assert _ratio(0.0, 0.0) == (0.0, True)
    assert _ratio(1.0, 0.0) == (math.inf, True)


def test_embedding_ratios():
    """
    Test the embedding ratios of a zero field and of a random field.
    """
    g = grid(n_y=64)
    k = uniform_k_grid(1.0, 0.5)
    zero = Field(k_values=k, omega=np.zeros((k.size, g.n_y)), nu=1e-2)

    ratios = check_embedding_ratios(zero, g, CONSTANTS)
    assert all(ratios.flagged)
    assert ratios.gradient_sup == 0.0

    ratios = check_embedding_ratios(random_field(k, g, 1e-2), g, CONSTANTS)
    assert ratios.flagged == (False, False, True, False)
    assert ratios.gradient_sup > 0
    assert ratios.stream_sup > 0
    assert ratios.stream_time == 0.0


@pytest.mark.parametrize("nu", [1e-1, 1e-2, 1e-3])
@pytest.mark.parametrize("k", [0.0, 1.0, 5.0, 40.0, 200.0])
def test_energy_inequality_constant_is_positive(k, nu):
    """
    Test that the inequality constant stays positive from the heat regime to
    strong shear.
    """
    g = grid()
    gen = build_generator(k, nu, g)
    horizon = min(1.0, 0.5 / max(k, 1.0))
    trajectory = evolve(gaussian_mode(k, nu, g), gen, horizon, horizon / 5)

    check = check_energy_inequality(trajectory.samples, gen, CONSTANTS)
    assert check.times.size == 6
    assert check.c_star > 0


def test_energy_of_a_gaussian_against_quadrature():
    """
    Compare E_k of exp(-y^2/2) with adaptive quadrature of its addends on
    the whole line; the stream part is taken on the Fourier side.
    """
    g = grid()
    k, nu = 2.0, 1e-2
    mult = eval_multipliers(k, nu)

    def line(f):
        return integrate.quad(f, -np.inf, np.inf, epsabs=1e-13)[0]

    norm = line(lambda y: np.exp(-(y**2)))
    slope = line(lambda y: y**2 * np.exp(-(y**2)))
    stream = line(lambda s: np.exp(-(s**2)) / (s**2 + k**2))

    expected = (
        0.5 * norm
        + 0.5 * CONSTANTS.c_alpha * mult.alpha * (k**2 * norm + slope)
        + 0.5 * CONSTANTS.c_gamma * mult.gamma * (slope + 2.0 * stream)
    )
    terms = energy_ek(gaussian_mode(k, nu, g), g, CONSTANTS, mult)

    assert terms.cross == pytest.approx(0.0, abs=1e-12)
    assert math.isclose(terms.total, expected, rel_tol=1e-6)


def test_gronwall_along_a_trajectory():
    """
    Test the exponential bound with the measured constant, for the plain and
    the heat-compensated evolution of the same mode.
    """
    g = grid(6.0, 160)
    k, nu, horizon, dt = 5.0, 5e-2, 4.0, 0.02
    lam = decay_rate(k, nu)
    gen = build_generator(k, nu, g)
    compensated = build_generator(k, nu, g, heat_compensated=True)
    state = gaussian_mode(k, nu, g)

    plain = check_energy_inequality(
        evolve(state, gen, horizon, dt, stride=10).samples, gen, CONSTANTS
    )
    shifted = check_energy_inequality(
        evolve(state, compensated, horizon, dt, stride=10).samples,
        gen,
        CONSTANTS,
    )

    assert plain.c_star > 0
    assert check_gronwall(plain.times, plain.energy, lam, 0.5 * plain.c_star)
    assert check_gronwall(
        shifted.times,
        shifted.energy,
        lam,
        0.5 * shifted.c_star,
        heat_rate=compensated.heat_rate,
    )
    assert np.allclose(
        shifted.energy * np.exp(-2.0 * compensated.heat_rate * shifted.times),
        plain.energy,
        rtol=1e-2,
    )
    assert not check_gronwall(
        plain.times, plain.energy, lam, 10.0 * plain.c_star + 10.0
    )
