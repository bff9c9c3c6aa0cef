"""
Initial data: Gaussian-localised vorticity in y, shaped in k.
"""

from typing import Optional

import numpy as np

from .errors import ConfigurationError
from .grid import Field, Grid1D, ModeState, RealArray, vanish_at_boundary

PROFILES = ("gaussian", "single-mode", "random")


def gaussian_envelope(grid: Grid1D, width: float = 1.0) -> RealArray:
    """exp(-y^2 / (2 width^2)) at the nodes."""
    return np.exp(-(grid.nodes**2) / (2.0 * width**2))


def gaussian_mode(
    k: float, nu: float, grid: Grid1D, amplitude: float = 1.0
) -> ModeState:
    """The mode a exp(-y^2/2) at frequency k, time 0."""
    omega = vanish_at_boundary(amplitude * gaussian_envelope(grid))
    return ModeState(k=float(k), nu=nu, t=0.0, omega=omega)


def random_mode(
    k: float,
    nu: float,
    grid: Grid1D,
    rng: np.random.Generator,
    *,
    degree: int = 3,
    width: float = 1.0,
) -> ModeState:
    """
    A Gaussian envelope times a polynomial with random complex coefficients.

    The boundary samples are zeroed, so the state is admissible for the
    balance-law checks whenever the envelope is resolved.
    """
    coefficients = rng.standard_normal(degree + 1) + 1j * rng.standard_normal(
        degree + 1
    )
    scaled = grid.nodes / width
    polynomial = np.polynomial.polynomial.polyval(scaled, coefficients)
    omega = vanish_at_boundary(polynomial * gaussian_envelope(grid, width))
    return ModeState(k=float(k), nu=nu, t=0.0, omega=omega)


def _empty(k_values: RealArray, grid: Grid1D) -> np.ndarray:
    return np.zeros((np.asarray(k_values).size, grid.n_y), dtype=np.complex128)


def gaussian_field(
    k_values: RealArray,
    grid: Grid1D,
    nu: float,
    *,
    amplitude: float,
    k0: float,
    sigma_k: float,
) -> Field:
    """
    a exp(-y^2/2) [g(k - k0) + g(k + k0)] with g(s) = exp(-s^2 / 2 sigma^2).

    The two bumps make the profile even in k, hence real in x. For k0 = 0
    only one bump is used.
    """
    if not sigma_k > 0:
        raise ConfigurationError(f"sigma_k must be positive, got {sigma_k}")

    k = np.asarray(k_values, dtype=float)
    bumps = np.exp(-((k - k0) ** 2) / (2.0 * sigma_k**2))
    if k0 != 0:
        bumps = bumps + np.exp(-((k + k0) ** 2) / (2.0 * sigma_k**2))

    envelope = vanish_at_boundary(gaussian_envelope(grid))
    omega = amplitude * bumps[:, None] * envelope[None, :]
    return Field(k_values=k, omega=omega.astype(np.complex128), nu=nu)


def single_mode_field(
    k_values: RealArray,
    grid: Grid1D,
    nu: float,
    *,
    amplitude: float,
    k0: float,
) -> Field:
    """
    a exp(-y^2/2) on the rows at +-k0, zero elsewhere.

    Raises:
        ConfigurationError: k0 is not a grid wavenumber
    """
    k = np.asarray(k_values, dtype=float)
    matches = np.flatnonzero(np.isclose(np.abs(k), abs(k0), atol=1e-12))
    if matches.size == 0:
        raise ConfigurationError(f"k0={k0} is not on the k-grid")

    omega = _empty(k, grid)
    envelope = vanish_at_boundary(gaussian_envelope(grid))
    omega[matches] = amplitude * envelope
    return Field(k_values=k, omega=omega, nu=nu)


def random_field(
    k_values: RealArray,
    grid: Grid1D,
    nu: float,
    rng: np.random.Generator,
    *,
    amplitude: float,
    sigma_k: float = 1.0,
) -> Field:
    """
    Random localised modes on k >= 0, mirrored to k < 0 by conjugation and
    tapered by exp(-k^2 / 2 sigma^2).
    """
    k = np.asarray(k_values, dtype=float)
    omega = _empty(k, grid)
    centre = k.size // 2
    for i in range(centre, k.size):
        taper = np.exp(-(k[i] ** 2) / (2.0 * sigma_k**2))
        omega[i] = amplitude * taper * random_mode(k[i], nu, grid, rng).omega
    omega[centre] = omega[centre].real
    omega[:centre] = np.conj(omega[centre + 1 :][::-1])
    return Field(k_values=k, omega=omega, nu=nu)


def initial_field(
    profile: str,
    k_values: RealArray,
    grid: Grid1D,
    nu: float,
    *,
    amplitude: float,
    k0: float,
    sigma_k: float,
    rng: Optional[np.random.Generator] = None,
) -> Field:
    """
    Build one of the named initial profiles.

    Raises:
        ConfigurationError: unknown profile name
    """
    if profile == "gaussian":
        return gaussian_field(
            k_values, grid, nu, amplitude=amplitude, k0=k0, sigma_k=sigma_k
        )
    if profile == "single-mode":
        return single_mode_field(
            k_values, grid, nu, amplitude=amplitude, k0=k0
        )
    if profile == "random":
        return random_field(
            k_values,
            grid,
            nu,
            rng if rng is not None else np.random.default_rng(0),
            amplitude=amplitude,
            sigma_k=sigma_k,
        )

    raise ConfigurationError(
        f"Unknown profile {profile!r}; expected one of {', '.join(PROFILES)}"
    )
