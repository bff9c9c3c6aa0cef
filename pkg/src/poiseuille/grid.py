"""
Chebyshev collocation in y, and the per-frequency operators built on it.

The real line in y is truncated to [-L_y, L_y] with homogeneous Dirichlet
conditions. Every operator acts on the last axis of its input, so the same
functions serve a single mode (shape `(n_y,)`) and a whole field (shape
`(n_k, n_y)`).
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from logging import Logger
from typing import Optional, Tuple

import numpy as np
import scipy.linalg
from numpy.polynomial import chebyshev
from numpy.typing import NDArray

from .errors import ConfigurationError, NumericalError, ShapeError

_log = logging.getLogger(__name__)

ComplexArray = NDArray[np.complex128]
RealArray = NDArray[np.float64]

MIN_NODES = 8
FINE_OVERSAMPLING = 4
BOUNDARY_TOLERANCE = 1e-8
EDGE_FRACTION = 0.1
POISSON_RESIDUAL_TOLERANCE = 1e-8


@dataclass(frozen=True, eq=False)
class Grid1D:
    """
    Chebyshev-Gauss-Lobatto grid on [-half_width, half_width].

    Instances hash by identity, so they can key factorisation caches.
    """

    half_width: float
    n_y: int
    nodes: RealArray
    quad_weights: RealArray
    d1: RealArray
    d2: RealArray
    antiderivative: RealArray
    fine_interpolation: RealArray
    boundary_condition: str = "dirichlet"

    @property
    def interior(self: "Grid1D") -> slice:
        """Nodes where the equations are collocated."""
        return slice(1, self.n_y - 1)


@dataclass(frozen=True)
class ModeState:
    """Samples of the vorticity mode omega_k(y) at time t."""

    k: float
    nu: float
    t: float
    omega: ComplexArray


@dataclass(frozen=True)
class StreamGradient:
    """The Fourier-side gradient (ik psi_k, d_y psi_k) of a stream mode."""

    dx: ComplexArray
    dy: ComplexArray

    def norm_squared(self: "StreamGradient", grid: Grid1D) -> float:
        return weighted_norm(self.dx, 0, grid) ** 2 + (
            weighted_norm(self.dy, 0, grid) ** 2
        )


def _chebyshev_differentiation(x: RealArray) -> RealArray:
    n = x.size
    c = np.ones(n)
    c[0] = c[-1] = 2.0
    c *= (-1.0) ** np.arange(n)
    dx = x[:, None] - x[None, :]
    d = np.outer(c, 1.0 / c) / (dx + np.eye(n))
    return d - np.diag(d.sum(axis=1))


def _clenshaw_curtis_weights(n: int) -> RealArray:
    order = n - 1
    theta = np.pi * np.arange(n) / order
    inner_theta = theta[1:-1]
    weights = np.zeros(n)
    v = np.ones(n - 2)

    if order % 2 == 0:
        weights[0] = weights[-1] = 1.0 / (order**2 - 1)
        for j in range(1, order // 2):
            v -= 2.0 * np.cos(2 * j * inner_theta) / (4 * j**2 - 1)
        v -= np.cos(order * inner_theta) / (order**2 - 1)
    else:
        weights[0] = weights[-1] = 1.0 / order**2
        for j in range(1, (order - 1) // 2 + 1):
            v -= 2.0 * np.cos(2 * j * inner_theta) / (4 * j**2 - 1)

    weights[1:-1] = 2.0 * v / order
    return weights


def build_grid(half_width: float, n_y: int) -> Grid1D:
    """
    Build the collocation grid and every matrix derived from it.

    Args:
        half_width (float): truncation L_y of the y-line
        n_y (int): number of Chebyshev-Gauss-Lobatto nodes

    Raises:
        ConfigurationError: n_y below 8 or a non-positive half width

    Returns:
        Grid1D: the grid, with Clenshaw-Curtis weights, differentiation,
          integration and resampling matrices
    """
    if n_y < MIN_NODES:
        raise ConfigurationError(
            f"n_y must be at least {MIN_NODES}, got {n_y}"
        )
    if not half_width > 0:
        raise ConfigurationError(
            f"half_width must be positive, got {half_width}"
        )

    order = n_y - 1
    x = -np.cos(np.pi * np.arange(n_y) / order)
    # Lobatto endpoints are exact by construction
    x[0], x[-1] = -1.0, 1.0

    d1 = _chebyshev_differentiation(x) / half_width

    # Cardinal functions in the Chebyshev basis
    coefficients = np.linalg.solve(
        chebyshev.chebvander(x, order), np.eye(n_y)
    )
    integrated = chebyshev.chebint(coefficients, lbnd=-1.0, axis=0)
    antiderivative = (
        chebyshev.chebvander(x, order + 1) @ integrated * half_width
    )
    fine_x = np.linspace(-1.0, 1.0, FINE_OVERSAMPLING * n_y)
    fine_interpolation = chebyshev.chebvander(fine_x, order) @ coefficients

    return Grid1D(
        half_width=float(half_width),
        n_y=int(n_y),
        nodes=half_width * x,
        quad_weights=half_width * _clenshaw_curtis_weights(n_y),
        d1=d1,
        d2=d1 @ d1,
        antiderivative=antiderivative,
        fine_interpolation=fine_interpolation,
    )


def _check_shape(f: NDArray[np.generic], grid: Grid1D) -> None:
    if np.shape(f)[-1:] != (grid.n_y,):
        raise ShapeError(
            f"Expected samples on {grid.n_y} nodes, got shape {np.shape(f)}"
        )


def diff_y(f: ComplexArray, grid: Grid1D) -> ComplexArray:
    """Spectral collocation derivative along y."""
    _check_shape(f, grid)
    return np.asarray(f) @ grid.d1.T


def laplacian_k(f: ComplexArray, k: float, grid: Grid1D) -> ComplexArray:
    """Apply Delta_k = d_y^2 - k^2."""
    _check_shape(f, grid)
    return np.asarray(f) @ grid.d2.T - k**2 * np.asarray(f)


@lru_cache(maxsize=2048)
def _helmholtz_factorization(
    grid: Grid1D, k: float
) -> Tuple[NDArray[np.float64], NDArray[np.int32]]:
    inner = grid.interior
    matrix = grid.d2[inner, inner] - k**2 * np.eye(grid.n_y - 2)
    try:
        return scipy.linalg.lu_factor(matrix)  # type: ignore[no-any-return]
    except (np.linalg.LinAlgError, ValueError) as e:
        raise NumericalError(
            f"Helmholtz factorisation failed for k={k}: {e}",
            condition=float(np.linalg.cond(matrix)),
        ) from e


def helmholtz_inverse(
    omega: ComplexArray, k: float, grid: Grid1D
) -> ComplexArray:
    """
    Solve Delta_k psi = omega on the interior with psi(+-L_y) = 0.

    Unlike `solve_poisson` this accepts k = 0, where it returns the Dirichlet
    solution on the truncated interval.
    """
    _check_shape(omega, grid)
    inner = grid.interior
    psi = np.zeros(np.shape(omega), dtype=np.complex128)
    psi[..., inner] = scipy.linalg.lu_solve(
        _helmholtz_factorization(grid, float(k)),
        np.asarray(omega, dtype=np.complex128)[..., inner].T,
    ).T

    if not np.all(np.isfinite(psi)):
        inner_matrix = grid.d2[inner, inner] - k**2 * np.eye(grid.n_y - 2)
        raise NumericalError(
            f"Helmholtz solve for k={k} produced non-finite values",
            condition=float(np.linalg.cond(inner_matrix)),
        )

    return psi


def solve_poisson(
    omega: ComplexArray,
    k: float,
    grid: Grid1D,
    *,
    tolerance: float = POISSON_RESIDUAL_TOLERANCE,
) -> ComplexArray:
    """
    Recover the stream mode psi_k from Delta_k psi_k = omega_k.

    Args:
        omega (ComplexArray): vorticity samples, decaying at the boundary
        k (float): non-zero x-wavenumber
        grid (Grid1D): the collocation grid
        tolerance (float): relative residual above which a warning is logged

    Raises:
        ConfigurationError: k = 0, where `antiderivative_stream` applies
        NumericalError: the Helmholtz matrix is singular

    Returns:
        ComplexArray: psi_k, vanishing at both ends
    """
    if k == 0:
        raise ConfigurationError(
            "The k = 0 stream function is not defined by a Poisson solve; "
            "use antiderivative_stream"
        )

    psi = helmholtz_inverse(omega, k, grid)

    inner = grid.interior
    scale = np.linalg.norm(np.asarray(omega)[..., inner])
    if scale > 0:
        residual = np.linalg.norm(
            laplacian_k(psi, k, grid)[..., inner]
            - np.asarray(omega)[..., inner]
        )
        if residual / scale > tolerance:
            _log.warning(
                f"Poisson residual {residual / scale:.2e} above "
                f"{tolerance:.0e} for k={k}"
            )

    return psi


def antiderivative_stream(
    omega0: ComplexArray,
    grid: Grid1D,
    *,
    mean_tolerance: float = 1e-8,
    logger: Optional[Logger] = None,
) -> ComplexArray:
    """
    Integrate the k = 0 vorticity from the lower endpoint.

    Returns d_y psi_0(y), the integral of omega_0 over [-L_y, y], so that
    d_y psi_0(-L_y) = 0. When the total integral of omega_0 is not small the
    result does not decay at +L_y; this is logged as a warning.
    """
    _check_shape(omega0, grid)
    log = logger if logger is not None else _log

    velocity = np.asarray(omega0, dtype=np.complex128) @ grid.antiderivative.T

    total = np.max(np.abs(np.atleast_1d(velocity[..., -1])))
    reference = max(
        float(np.max(np.abs(omega0), initial=0.0)) * grid.half_width, 1e-300
    )
    if total > mean_tolerance * reference:
        log.warning(
            f"k=0 vorticity has total integral {total:.2e}; its velocity "
            "will not decay at +L_y"
        )

    return velocity


def stream_gradient(
    omega: ComplexArray, k: float, grid: Grid1D
) -> StreamGradient:
    """
    Compute (ik psi_k, d_y psi_k) for one mode.

    The Poisson solve is used for k != 0 and the antiderivative for k = 0,
    where ik psi_0 vanishes.
    """
    if k == 0:
        return StreamGradient(
            dx=np.zeros(np.shape(omega), dtype=np.complex128),
            dy=antiderivative_stream(
                omega, grid, mean_tolerance=np.inf, logger=_log
            ),
        )

    psi = solve_poisson(omega, k, grid)
    return StreamGradient(dx=1j * k * psi, dy=diff_y(psi, grid))


def weighted_norm(f: ComplexArray, weight_power: int, grid: Grid1D) -> float:
    """
    The L^2 norm of y^a f for a in {0, 1}.

    Raises:
        ConfigurationError: weight power other than 0 or 1
    """
    if weight_power not in (0, 1):
        raise ConfigurationError(
            f"weight_power must be 0 or 1, got {weight_power}"
        )
    _check_shape(f, grid)

    weights = grid.quad_weights * grid.nodes ** (2 * weight_power)
    return float(np.sqrt(np.sum(weights * np.abs(f) ** 2)))


def inner(f: ComplexArray, g: ComplexArray, grid: Grid1D) -> complex:
    """The quadrature pairing sum_i w_i f_i conj(g_i)."""
    _check_shape(f, grid)
    _check_shape(g, grid)
    if np.shape(f) != np.shape(g):
        raise ShapeError(f"Shapes {np.shape(f)} and {np.shape(g)} differ")

    return complex(np.sum(grid.quad_weights * f * np.conj(g)))


def sup_norm(f: ComplexArray, grid: Grid1D) -> float:
    """Sup of |f| over a dense resampling of its Chebyshev interpolant."""
    _check_shape(f, grid)
    return float(np.max(np.abs(grid.fine_interpolation @ np.asarray(f))))


def check_localization(
    state: ModeState,
    grid: Grid1D,
    *,
    tolerance: float = BOUNDARY_TOLERANCE,
    logger: Optional[Logger] = None,
) -> bool:
    """
    Check that the mode has decayed near both ends of the interval.

    The boundary samples are held at zero, so the outer tenth of the
    interval on each side is inspected instead.

    Returns:
        bool: whether max |omega| over |y| >= 0.9 L_y is at most
          tolerance * max |omega|
    """
    _check_shape(state.omega, grid)
    log = logger if logger is not None else _log

    magnitude = np.abs(state.omega)
    peak = float(np.max(magnitude))
    outer = np.abs(grid.nodes) >= (1.0 - EDGE_FRACTION) * grid.half_width
    edge = float(np.max(magnitude[outer]))
    if peak > 0 and edge > tolerance * peak:
        log.warning(
            f"Mode k={state.k} is {edge / peak:.1e} of its peak at the "
            "boundary: domain too small"
        )
        return False

    return True


def vanish_at_boundary(f: ComplexArray) -> ComplexArray:
    """Return a copy of f with its two boundary samples set to zero."""
    out = np.array(f, dtype=np.complex128)
    out[..., 0] = 0.0
    out[..., -1] = 0.0
    return out


def uniform_k_grid(k_max: float, delta_k: float) -> RealArray:
    """
    Symmetric uniform grid {-K_max, ..., K_max} with spacing delta_k.

    Raises:
        ConfigurationError: K_max is not a positive multiple of delta_k
    """
    if not (delta_k > 0 and k_max > 0):
        raise ConfigurationError("K_max and delta_k must be positive")

    half = int(round(k_max / delta_k))
    if abs(half * delta_k - k_max) > 1e-9 * k_max:
        raise ConfigurationError(
            f"K_max={k_max} is not a multiple of delta_k={delta_k}"
        )

    return np.arange(-half, half + 1) * float(delta_k)


@dataclass(frozen=True, eq=False)
class Field:
    """
    A family of modes on a uniform symmetric k-grid.

    `omega` has shape `(n_k, n_y)`; row i holds the mode at `k_values[i]`.
    """

    k_values: RealArray
    omega: ComplexArray
    nu: float
    t: float = 0.0
    reality: bool = True

    def __post_init__(self: "Field") -> None:
        k = np.asarray(self.k_values)
        if k.ndim != 1 or k.size % 2 != 1:
            raise ShapeError("k_values must be a 1-D grid of odd length")
        if not np.allclose(k, -k[::-1], rtol=0.0, atol=1e-12):
            raise ConfigurationError("k_values must be symmetric about 0")
        if k.size > 1 and not np.allclose(
            np.diff(k), k[1] - k[0], rtol=1e-9, atol=0.0
        ):
            raise ConfigurationError("k_values must be uniformly spaced")
        if np.shape(self.omega)[0] != k.size or np.ndim(self.omega) != 2:
            raise ShapeError(
                f"omega of shape {np.shape(self.omega)} does not match "
                f"{k.size} wavenumbers"
            )
        if self.reality:
            defect = np.max(
                np.abs(self.omega - np.conj(self.omega[::-1])), initial=0.0
            )
            scale = max(float(np.max(np.abs(self.omega), initial=0.0)), 1.0)
            if defect > 1e-12 * scale:
                raise ConfigurationError(
                    f"Field violates the reality condition by {defect:.2e}"
                )

    @property
    def delta_k(self: "Field") -> float:
        return float(self.k_values[1] - self.k_values[0])

    @property
    def k_max(self: "Field") -> float:
        return float(self.k_values[-1])

    @property
    def zero_index(self: "Field") -> int:
        return int(self.k_values.size // 2)

    def mode(self: "Field", index: int) -> ModeState:
        return ModeState(
            k=float(self.k_values[index]),
            nu=self.nu,
            t=self.t,
            omega=self.omega[index],
        )

    @property
    def modes(self: "Field") -> Tuple[ModeState, ...]:
        return tuple(self.mode(i) for i in range(self.k_values.size))

    def evolved(self: "Field", omega: ComplexArray, t: float) -> "Field":
        return Field(
            k_values=self.k_values,
            omega=omega,
            nu=self.nu,
            t=t,
            reality=self.reality,
        )

    def scaled(self: "Field", factor: float) -> "Field":
        return self.evolved(factor * self.omega, self.t)


def enforce_reality(omega: ComplexArray) -> ComplexArray:
    """
    Impose omega_{-k} = conj(omega_k), taking positive k as reference.
    """
    out = np.array(omega, dtype=np.complex128)
    centre = out.shape[0] // 2
    out[centre] = out[centre].real
    out[:centre] = np.conj(out[centre + 1 :][::-1])
    return out
