"""
Fourier-side weights: the piecewise multipliers of the linear energy, the
decay rate lambda_k, the time weight M_k(t) and the norm weights of the
stability statement.

The frequency threshold between the two branches is |k| = nu^(-1/3).
"""

import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, Tuple

from .errors import ConfigurationError, DomainError


@dataclass(frozen=True)
class MultiplierSet:
    """Weights alpha_k, beta_k, gamma_k and the rate lambda_k."""

    alpha: float
    beta: float
    gamma: float
    lam: float


@dataclass(frozen=True)
class EnergyConstants:
    """
    Tunable constants of the energy functionals.

    Raises:
        ConfigurationError: the constants violate c_beta > c_alpha^2,
          c_gamma > 8 c_beta^2 / c_alpha, J >= 1 or 3/4 < m < 1
    """

    c_alpha: float = 0.1
    c_beta: float = 0.05
    c_gamma: float = 0.5
    c: float = 0.01
    J: float = 1.0
    m: float = 0.8

    def __post_init__(self: "EnergyConstants") -> None:
        if min(self.c_alpha, self.c_beta, self.c_gamma, self.c) <= 0:
            raise ConfigurationError("Energy constants must be positive")
        if not self.c_beta - self.c_alpha**2 > 0:
            raise ConfigurationError(
                f"c_beta - c_alpha^2 = {self.c_beta - self.c_alpha**2:.3g} "
                "must be positive"
            )
        gamma_margin = self.c_gamma - 8 * self.c_beta**2 / self.c_alpha
        if not gamma_margin > 0:
            raise ConfigurationError(
                f"c_gamma - 8 c_beta^2 / c_alpha = {gamma_margin:.3g} must "
                "be positive"
            )
        if self.J < 1:
            raise ConfigurationError(f"J must be at least 1, got {self.J}")
        _check_regularity(self.m)

    def to_dict(self: "EnergyConstants") -> Dict[str, Any]:
        return asdict(self)


def _check_viscosity(nu: float) -> None:
    if not 0 < nu < 1:
        raise DomainError(f"nu must lie in (0, 1), got {nu}")


def _check_regularity(m: float) -> None:
    if not 0.75 < m < 1:
        raise DomainError(f"m must lie in (3/4, 1), got {m}")


def threshold_frequency(nu: float) -> float:
    """The branch point nu^(-1/3)."""
    _check_viscosity(nu)
    return float(nu ** (-1.0 / 3.0))


def is_enhanced(k: float, nu: float) -> bool:
    """Whether k lies in the enhanced-dissipation regime |k| >= nu^(-1/3)."""
    return abs(k) >= threshold_frequency(nu)


def decay_rate(k: float, nu: float) -> float:
    """lambda_k: nu^(1/2)|k|^(1/2) above the threshold, nu k^2 below."""
    if is_enhanced(k, nu):
        return math.sqrt(nu) * math.sqrt(abs(k))
    return nu * k**2


def eval_multipliers(k: float, nu: float) -> MultiplierSet:
    """
    Evaluate the piecewise weights of the linear energy at one frequency.

    Args:
        k (float): x-wavenumber
        nu (float): viscosity in (0, 1)

    Raises:
        DomainError: nu outside (0, 1)

    Returns:
        MultiplierSet: alpha_k, beta_k, gamma_k and lambda_k
    """
    _check_viscosity(nu)
    abs_k = abs(k)

    if is_enhanced(k, nu):
        return MultiplierSet(
            alpha=math.sqrt(nu) / math.sqrt(abs_k),
            beta=1.0 / abs_k,
            gamma=math.sqrt(abs_k) / math.sqrt(nu),
            lam=decay_rate(k, nu),
        )

    return MultiplierSet(
        alpha=nu ** (2.0 / 3.0),
        beta=nu ** (1.0 / 3.0),
        gamma=nu ** (-2.0 / 3.0),
        lam=decay_rate(k, nu),
    )


def bracket(x: float) -> float:
    """The Japanese bracket sqrt(1 + x^2)."""
    return math.hypot(1.0, x)


def time_weight_M(k: float, nu: float, c: float, J: float, t: float) -> float:
    """
    Closed-form solution of M' = c J^2 lambda (c lambda t)^2 / <c lambda t>^4
    M with M(0) = 1.

    With u = c lambda_k t, M = exp[(J^2 / 2)(arctan u - u / (1 + u^2))],
    which increases from 1 towards exp(pi J^2 / 4).
    """
    u = c * decay_rate(k, nu) * t
    return math.exp(0.5 * J**2 * (math.atan(u) - u / (1.0 + u**2)))


def energy_weight(
    k: float, nu: float, t: float, c: float, J: float, m: float
) -> float:
    """The factor <c lambda_k t>^(2J) <k>^(2m) / M_k(t) of the energy."""
    u = c * decay_rate(k, nu) * t
    return (
        bracket(u) ** (2 * J)
        * bracket(k) ** (2 * m)
        / time_weight_M(k, nu, c, J, t)
    )


def time_weight_rate(
    k: float, nu: float, t: float, c: float, J: float, m: float
) -> Tuple[float, float]:
    """
    Time derivative of `energy_weight` and the bound it obeys.

    Returns:
        Tuple[float, float]: (d/dt weight, c lambda_k * weight); the first
          never exceeds the second
    """
    lam = decay_rate(k, nu)
    u = c * lam * t
    weight = energy_weight(k, nu, t, c, J, m)
    growth = J * c * lam * 2 * u / bracket(u) ** 2
    damping = c * J**2 * lam * u**2 / bracket(u) ** 4
    return (growth - damping) * weight, c * lam * weight


def epsilon_weights(
    k: float, nu: float, m: float
) -> Tuple[float, float, float, float, float, float]:
    """
    The six frequency weights of the stability norm.

    They multiply, in order: omega, grad omega, y omega, d_y Delta^-1 omega,
    and the two sup-in-k terms (unit weights).

    Raises:
        DomainError: nu outside (0, 1) or m outside (3/4, 1)
    """
    _check_viscosity(nu)
    _check_regularity(m)

    nu_third = nu ** (1.0 / 3.0)
    base = bracket(k) ** m
    scaled = bracket(nu_third * k)
    moment = base * scaled**0.25 / nu_third

    return (
        base,
        nu_third * base * scaled ** (-0.25),
        moment,
        moment,
        1.0,
        1.0,
    )

