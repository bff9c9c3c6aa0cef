"""
Linearised dynamics of one x-frequency around Poiseuille flow.

    d_t omega_k = -i k y^2 omega_k + 2 i k psi_k + nu Delta_k omega_k,
    Delta_k psi_k = omega_k.

The generator is a dense matrix on the interior collocation nodes; boundary
values are held at zero. Time stepping is the implicit midpoint rule.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional

import numpy as np
import scipy.linalg
from numpy.typing import NDArray

from .errors import ConfigurationError, DomainError, NumericalError
from .grid import ComplexArray, Grid1D, ModeState, RealArray, helmholtz_inverse
from .multipliers import decay_rate

Observer = Callable[[ModeState], Any]

SHEAR_SAFETY = 4.0
DATA_FRACTION = 1e-3


@dataclass(frozen=True, eq=False)
class Generator:
    """
    The operator L_k on interior nodes, with a cache of implicit-midpoint
    factorisations keyed by time step.
    """

    k: float
    nu: float
    grid: Grid1D
    matrix: NDArray[np.complex128]
    heat_compensated: bool = False
    _factorizations: Dict[float, Any] = field(
        default_factory=dict, repr=False
    )

    @property
    def heat_rate(self: "Generator") -> float:
        """The rate nu k^2 taken out of the amplitude, 0 if none is."""
        return self.nu * self.k**2 if self.heat_compensated else 0.0

    def apply(self: "Generator", omega: ComplexArray) -> ComplexArray:
        """L_k omega, with zero boundary rows."""
        inner = self.grid.interior
        out = np.zeros(np.shape(omega), dtype=np.complex128)
        out[..., inner] = np.asarray(omega)[..., inner] @ self.matrix.T
        return out

    def implicit_factorization(self: "Generator", dt: float) -> Any:
        """LU factors of (I - dt/2 A), computed once per time step."""
        if dt not in self._factorizations:
            system = np.eye(self.matrix.shape[0]) - 0.5 * dt * self.matrix
            try:
                lu = scipy.linalg.lu_factor(system)
            except (np.linalg.LinAlgError, ValueError) as e:
                raise NumericalError(
                    f"Implicit system for k={self.k}, dt={dt} is singular"
                ) from e
            self._factorizations[dt] = lu

        return self._factorizations[dt]

    def midpoint_solve(
        self: "Generator",
        omega: ComplexArray,
        dt: float,
        forcing: Optional[ComplexArray] = None,
    ) -> ComplexArray:
        """
        Solve (I - dt/2 A) w = (I + dt/2 A) omega + dt * forcing.

        The forcing is only read on interior nodes.
        """
        inner = self.grid.interior
        current = np.asarray(omega)[inner]
        rhs = current + 0.5 * dt * (self.matrix @ current)
        if forcing is not None:
            rhs = rhs + dt * np.asarray(forcing)[inner]

        out = np.zeros(np.shape(omega), dtype=np.complex128)
        out[inner] = scipy.linalg.lu_solve(
            self.implicit_factorization(dt), rhs
        )

        if not np.all(np.isfinite(out)):
            raise NumericalError(
                f"Implicit midpoint solve for k={self.k} is not finite"
            )

        return out


def build_generator(
    k: float,
    nu: float,
    grid: Grid1D,
    *,
    allow_inviscid: bool = False,
    heat_compensated: bool = False,
) -> Generator:
    """
    Assemble the linear generator of one frequency.

    Args:
        k (float): x-wavenumber
        nu (float): viscosity in (0, 1)
        grid (Grid1D): the collocation grid
        allow_inviscid (bool): also accept nu = 0, for conservation checks
        heat_compensated (bool): leave out the -nu k^2 term; the state then
            evolves as exp(nu k^2 t) omega_k

    Raises:
        DomainError: nu outside its interval
        NumericalError: the Helmholtz matrix is singular

    Returns:
        Generator: the dense operator on interior nodes
    """
    lower_ok = nu >= 0 if allow_inviscid else nu > 0
    if not (lower_ok and nu < 1):
        raise DomainError(f"nu must lie in (0, 1), got {nu}")

    inner = grid.interior
    size = grid.n_y - 2
    laplacian = grid.d2[inner, inner]
    if not heat_compensated:
        laplacian = laplacian - k**2 * np.eye(size)

    if k == 0:
        matrix = (nu * grid.d2[inner, inner]).astype(np.complex128)
    else:
        y_squared = grid.nodes[inner] ** 2
        # Columns of Delta_k^-1, as psi at the interior nodes
        identity = np.zeros((size, grid.n_y), dtype=np.complex128)
        identity[:, inner] = np.eye(size)
        inverse = helmholtz_inverse(identity, k, grid)[:, inner].T
        matrix = (
            np.diag(-1j * k * y_squared)
            + 2j * k * inverse
            + nu * laplacian
        )

    return Generator(
        k=float(k),
        nu=float(nu),
        grid=grid,
        matrix=matrix,
        heat_compensated=heat_compensated,
    )


def step_linear(state: ModeState, gen: Generator, dt: float) -> ModeState:
    """
    Advance one mode by the implicit midpoint rule.

    Raises:
        ConfigurationError: non-positive dt or a state of another frequency
        NumericalError: the implicit solve failed
    """
    if not dt > 0:
        raise ConfigurationError(f"dt must be positive, got {dt}")
    if state.k != gen.k:
        raise ConfigurationError(
            f"State at k={state.k} stepped with generator at k={gen.k}"
        )

    return ModeState(
        k=state.k,
        nu=state.nu,
        t=state.t + dt,
        omega=gen.midpoint_solve(state.omega, dt),
    )


@dataclass(frozen=True)
class Trajectory:
    """Final state and observer samples of an evolution."""

    final: ModeState
    times: RealArray
    samples: List[Any]


def _snapshot(state: ModeState) -> ModeState:
    omega = np.array(state.omega, dtype=np.complex128)
    omega.setflags(write=False)
    return ModeState(k=state.k, nu=state.nu, t=state.t, omega=omega)


def step_count(horizon: float, dt: float) -> int:
    """Number of whole steps of size dt that fit in the horizon."""
    return int(math.floor(horizon / dt + 1e-9))


def evolve(
    state: ModeState,
    gen: Generator,
    horizon: float,
    dt: float,
    observer: Optional[Observer] = None,
    *,
    stride: int = 1,
) -> Trajectory:
    """
    Step a mode up to the horizon, sampling every `stride` steps.

    The observer sees read-only snapshots, including the initial state, and
    its return values are collected in the trajectory.

    Raises:
        ConfigurationError: negative horizon or stride below 1
        NumericalError: propagated from `step_linear`
    """
    if horizon < 0:
        raise ConfigurationError(f"Horizon must be non-negative: {horizon}")
    if stride < 1:
        raise ConfigurationError(f"Observer stride must be >= 1: {stride}")

    observe = observer if observer is not None else _snapshot
    times = [state.t]
    samples = [observe(_snapshot(state))]

    current = state
    for step in range(1, step_count(horizon, dt) + 1):
        current = step_linear(current, gen, dt)
        if step % stride == 0:
            times.append(current.t)
            samples.append(observe(_snapshot(current)))

    return Trajectory(
        final=_snapshot(current), times=np.array(times), samples=samples
    )


def default_time_step(k: float, nu: float, k_max: float) -> float:
    """
    min(0.1 / lambda', 0.05 / (nu k_max^2 + 1)) with lambda' = max(lambda, nu).
    """
    rate = max(decay_rate(k, nu), nu)
    return min(0.1 / rate, 0.05 / (nu * k_max**2 + 1.0))



def shear_time_step(
    state: ModeState,
    grid: Grid1D,
    *,
    fraction: float = DATA_FRACTION,
    safety: float = SHEAR_SAFETY,
) -> float:
    """
    Time step resolving the shear -i k y^2 over the support of the data.

    Returns safety / (|k| Y^2), with Y the largest |y| at which |omega| is at
    least `fraction` of its peak, and inf when nothing is sheared.
    """
    magnitude = np.abs(np.asarray(state.omega))
    peak = float(np.max(magnitude)) if magnitude.size else 0.0
    if state.k == 0 or peak == 0:
        return math.inf

    radius = float(np.max(np.abs(grid.nodes[magnitude >= fraction * peak])))
    if radius == 0:
        return math.inf
    return safety / (abs(state.k) * radius**2)
