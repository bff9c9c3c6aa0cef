"""
The nonlinear transfer between x-frequencies and the full per-mode system

    d_t omega_k = L_k omega_k + NL_k,
    NL_k = -int (grad^perp psi)_{k-k'} . (grad omega)_{k'} dk'.

On the uniform k-grid the integral becomes a discrete convolution scaled by
delta_k, which is the Fourier series of an x-periodic problem with period
2 pi / delta_k.
"""

import logging
import math
from dataclasses import dataclass
from logging import Logger
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .energy import (
    FieldSnapshot,
    RunningIntegrals,
    aggregate,
    energy_derivative,
    field_snapshot,
    k_integral,
)
from .errors import (
    BlowUpError,
    ConfigurationError,
    NumericalError,
    ShapeError,
)
from .grid import (
    ComplexArray,
    Field,
    Grid1D,
    RealArray,
    StreamGradient,
    diff_y,
    enforce_reality,
    inner,
    stream_gradient,
)
from .linear import Generator, build_generator, step_count
from .multipliers import EnergyConstants, eval_multipliers

_log = logging.getLogger(__name__)

DEFAULT_DEALIAS = 2.0 / 3.0
ADVECTIVE_SAFETY = 0.5


@dataclass(frozen=True)
class ConvolutionPlan:
    """
    Index bookkeeping for the k-convolution on a uniform symmetric grid.

    Row i of a field sits at k = (i - zero_index) delta_k, so k_i - k_j sits
    at row i - j + zero_index whenever that row exists. `mask` keeps the rows
    with |k| <= dealias * K_max.
    """

    k_values: RealArray
    delta_k: float
    zero_index: int
    dealias: float
    mask: RealArray

    @property
    def size(self: "ConvolutionPlan") -> int:
        return int(self.k_values.size)

    def pairs(
        self: "ConvolutionPlan", j: int
    ) -> Tuple[slice, slice]:
        """Output rows i and the rows of k_i - k_j, for input row j."""
        shift = self.zero_index - j
        lo = max(0, -shift)
        hi = min(self.size, self.size - shift)
        return slice(lo, hi), slice(lo + shift, hi + shift)


def build_plan(
    k_values: RealArray, dealias: float = DEFAULT_DEALIAS
) -> ConvolutionPlan:
    """
    Raises:
        ConfigurationError: dealias outside (0, 1]
    """
    if not 0 < dealias <= 1:
        raise ConfigurationError(
            f"Dealias fraction must lie in (0, 1], got {dealias}"
        )

    k = np.asarray(k_values, dtype=float)
    k_max = float(k[-1])
    return ConvolutionPlan(
        k_values=k,
        delta_k=float(k[1] - k[0]) if k.size > 1 else 1.0,
        zero_index=int(k.size // 2),
        dealias=float(dealias),
        mask=(np.abs(k) <= dealias * k_max * (1 + 1e-12)).astype(float),
    )


def _check_plan(fld: Field, plan: ConvolutionPlan) -> None:
    if fld.k_values.size != plan.size or not np.allclose(
        fld.k_values, plan.k_values, rtol=0.0, atol=1e-12
    ):
        raise ShapeError(
            f"Field on {fld.k_values.size} wavenumbers does not match a plan "
            f"for {plan.size}"
        )


def field_streams(fld: Field, grid: Grid1D) -> List[StreamGradient]:
    return [stream_gradient(m.omega, m.k, grid) for m in fld.modes]


def nonlinear_term(
    fld: Field,
    grid: Grid1D,
    plan: ConvolutionPlan,
    *,
    streams: Optional[Sequence[StreamGradient]] = None,
) -> ComplexArray:
    """
    NL_k = -delta_k sum_k' [i(k-k') psi_{k-k'} d_y omega_k'
                            - d_y psi_{k-k'} i k' omega_k'].

    Pairs whose difference leaves the grid are dropped; the result is
    dealiased and made to satisfy the reality condition.

    Args:
        fld (Field): the vorticity field
        grid (Grid1D): the collocation grid of every mode
        plan (ConvolutionPlan): index maps for the field's k-grid
        streams (Optional[Sequence[StreamGradient]]): precomputed
          (ik psi, d_y psi) per mode

    Raises:
        ShapeError: field and plan disagree on the k-grid

    Returns:
        ComplexArray: NL_k, with the field's shape
    """
    _check_plan(fld, plan)
    if streams is None:
        streams = field_streams(fld, grid)

    omega = np.asarray(fld.omega, dtype=np.complex128)
    stream_x = np.array([s.dx for s in streams])
    stream_y = np.array([s.dy for s in streams])
    omega_x = 1j * plan.k_values[:, None] * omega
    omega_y = diff_y(omega, grid)

    out = np.zeros_like(omega)
    for j in range(plan.size):
        rows, shifted = plan.pairs(j)
        out[rows] += (
            stream_x[shifted] * omega_y[j] - stream_y[shifted] * omega_x[j]
        )

    out *= -plan.delta_k * plan.mask[:, None]
    if fld.reality:
        out = enforce_reality(out)

    return out


def velocity_bound(
    fld: Field, grid: Grid1D, streams: Optional[Sequence[StreamGradient]]
) -> float:
    """delta_k sum_k sup_y |grad psi_k|, a bound on the physical velocity."""
    if streams is None:
        streams = field_streams(fld, grid)
    fine = grid.fine_interpolation
    sups = [
        float(
            np.sqrt(
                np.max(np.abs(fine @ s.dx) ** 2 + np.abs(fine @ s.dy) ** 2)
            )
        )
        for s in streams
    ]
    return fld.delta_k * float(sum(sups))


def advective_time_step(
    fld: Field,
    grid: Grid1D,
    *,
    streams: Optional[Sequence[StreamGradient]] = None,
    epsilon: float = 1e-12,
) -> float:
    """The explicit-step guard 0.5 / (K_max max|grad psi| + epsilon)."""
    speed = velocity_bound(fld, grid, streams)
    return ADVECTIVE_SAFETY / (fld.k_max * speed + epsilon)


def build_generators(
    fld: Field, grid: Grid1D, *, allow_inviscid: bool = False
) -> List[Generator]:
    """One linear generator per row of the field."""
    return [
        build_generator(
            float(k), fld.nu, grid, allow_inviscid=allow_inviscid
        )
        for k in fld.k_values
    ]


def _advance(
    fld: Field,
    generators: Sequence[Generator],
    dt: float,
    forcing: ComplexArray,
) -> ComplexArray:
    out = np.empty_like(np.asarray(fld.omega, dtype=np.complex128))
    for i, gen in enumerate(generators):
        out[i] = gen.midpoint_solve(fld.omega[i], dt, forcing[i])
    return enforce_reality(out) if fld.reality else out


def step_nonlinear(
    fld: Field,
    dt: float,
    grid: Grid1D,
    plan: ConvolutionPlan,
    generators: Sequence[Generator],
    *,
    current: Optional[ComplexArray] = None,
    logger: Optional[Logger] = None,
) -> Field:
    """
    One IMEX step: implicit midpoint for L_k, Heun for NL_k.

        w*      = (I - dt/2 A)^-1 [(I + dt/2 A) w^n + dt N(w^n)]
        w^{n+1} = (I - dt/2 A)^-1 [(I + dt/2 A) w^n
                                   + dt/2 (N(w^n) + N(w*))]

    Args:
        fld (Field): state at time t
        dt (float): time step
        grid (Grid1D): the collocation grid
        plan (ConvolutionPlan): convolution plan for the field's k-grid
        generators (Sequence[Generator]): one linear generator per row
        current (Optional[ComplexArray]): NL of `fld`, when already known
        logger (Optional[Logger]): receives the advective-guard warning

    Raises:
        ConfigurationError: non-positive dt or a generator list of the
          wrong length
        BlowUpError: the step produced non-finite values

    Returns:
        Field: the state at t + dt, with the reality condition imposed
    """
    log = logger if logger is not None else _log
    if not dt > 0:
        raise ConfigurationError(f"dt must be positive, got {dt}")
    if len(generators) != fld.k_values.size:
        raise ConfigurationError(
            f"{len(generators)} generators for {fld.k_values.size} modes"
        )

    streams = field_streams(fld, grid)
    guard = advective_time_step(fld, grid, streams=streams)
    if dt > guard:
        log.warning(
            f"dt={dt:.3g} exceeds the advective guard {guard:.3g} at "
            f"t={fld.t:.6g}"
        )

    try:
        first = (
            nonlinear_term(fld, grid, plan, streams=streams)
            if current is None
            else current
        )
        if not np.all(np.isfinite(first)):
            raise BlowUpError(fld.t)

        predictor = fld.evolved(_advance(fld, generators, dt, first), fld.t)
        second = nonlinear_term(predictor, grid, plan)
        if not np.all(np.isfinite(second)):
            raise BlowUpError(fld.t)

        omega = _advance(fld, generators, dt, 0.5 * (first + second))
    except BlowUpError:
        raise
    except (NumericalError, FloatingPointError, OverflowError) as e:
        raise BlowUpError(fld.t) from e

    return fld.evolved(omega, fld.t + dt)


@dataclass(frozen=True)
class NLBudget:
    """
    Instantaneous integrands of the nonlinear transfer.

    `transfer` holds the six k-integrated, time-weighted pairings of the
    energy E_1 with NL; `moment_transfer` and `stream_transfer` are the
    per-k Re <y omega, y NL> and Re <grad psi, grad Delta^-1 NL>.
    """

    t: float
    transfer: RealArray
    moment_transfer: RealArray
    stream_transfer: RealArray

    @property
    def energy_transfer(self: "NLBudget") -> float:
        """The integrand of the E_1 part of the nonlinear budget."""
        return float(np.sum(self.transfer))


def nl_budget(
    fld: Field,
    nonlinear: ComplexArray,
    grid: Grid1D,
    constants: EnergyConstants,
    *,
    snapshot: Optional[FieldSnapshot] = None,
) -> NLBudget:
    """
    Evaluate the eight transfer integrands at the field's time.

    Time integration and the sup over k of the last two are left to
    `RunningIntegrals`.
    """
    if snapshot is None:
        snapshot = field_snapshot(fld, grid, constants)

    size = fld.k_values.size
    weighted = np.zeros((6, size))
    moment_transfer = np.zeros(size)
    stream_transfer = np.zeros(size)
    y = grid.nodes

    for i, state in enumerate(fld.modes):
        stream = snapshot.streams[i]
        variation = energy_derivative(
            state,
            nonlinear[i],
            grid,
            constants,
            eval_multipliers(state.k, fld.nu),
            stream=stream,
        )
        weighted[:, i] = snapshot.weights[i] * np.array(variation.terms)

        response = stream_gradient(nonlinear[i], state.k, grid)
        moment_transfer[i] = inner(
            y * state.omega, y * nonlinear[i], grid
        ).real
        stream_transfer[i] = (
            inner(stream.dx, response.dx, grid).real
            + inner(stream.dy, response.dy, grid).real
        )

    return NLBudget(
        t=fld.t,
        transfer=np.array([k_integral(row, fld.delta_k) for row in weighted]),
        moment_transfer=moment_transfer,
        stream_transfer=stream_transfer,
    )


@dataclass(frozen=True)
class BootstrapReport:
    """
    Monitored quantities of a nonlinear run.

    `empirical_c` is None when its denominator never left zero, which is
    always the case for zero data. The bound is only checked on the finite
    horizon.
    """

    times: RealArray
    energy: RealArray
    dissipation: RealArray
    nonlinear: RealArray
    budget: Tuple[float, ...]
    bound_held: bool
    sup_ratio: float
    empirical_c: Optional[float]
    threshold: Optional[float]
    implied_amplitude: Optional[float]
    amplitude: float
    final: Field
    integrals: RunningIntegrals


def bootstrap_experiment(
    initial: Field,
    grid: Grid1D,
    constants: EnergyConstants,
    *,
    horizon: float,
    dt: float,
    plan: ConvolutionPlan,
    amplitude: float = 1.0,
    stride: int = 1,
    logger: Optional[Logger] = None,
) -> BootstrapReport:
    """
    Evolve the truncated nonlinear system and monitor the energy bound.

    Records E(t) = E_1 + E_2, D(t) = D_1 + D_2 and the accumulated
    nonlinear budget NL(t), checks E(t) <= 2 E(0), and measures

        C = sup_t |NL(t)| / (nu^(-7/6) D(t) sup_{s<=t} E(s)^(1/2)),

    with the admissible energy c^2 C^-2 nu^(7/3) and the amplitude that
    would put E(0) at it.

    Args:
        initial (Field): the initial vorticity
        grid (Grid1D): the collocation grid
        constants (EnergyConstants): tunables of the energies
        horizon (float): final time
        dt (float): time step
        plan (ConvolutionPlan): convolution plan for the field's k-grid
        amplitude (float): amplitude the initial field was built with
        stride (int): record every `stride` steps
        logger (Optional[Logger]): run logger

    Raises:
        BlowUpError: propagated from `step_nonlinear`

    Returns:
        BootstrapReport: series and measured constants
    """
    log = logger if logger is not None else _log
    if stride < 1:
        raise ConfigurationError(f"Observer stride must be >= 1: {stride}")

    nu = initial.nu
    generators = build_generators(initial, grid)
    running = RunningIntegrals(n_k=initial.k_values.size)

    times: List[float] = []
    energy: List[float] = []
    dissipation: List[float] = []
    nonlinear: List[float] = []
    constant = 0.0
    sup_energy = 0.0

    fld = initial
    n_steps = step_count(horizon, dt)
    log.debug(f"Bootstrap run: {n_steps} steps of dt={dt:.3g}")

    for step in range(n_steps + 1):
        snapshot = field_snapshot(fld, grid, constants)
        current = nonlinear_term(fld, grid, plan, streams=snapshot.streams)
        budget = nl_budget(fld, current, grid, constants, snapshot=snapshot)
        instant = aggregate(snapshot, fld.delta_k)
        running.add(
            fld.t,
            instant.d_tilde,
            snapshot.heat,
            snapshot.stream_sup,
            budget.transfer,
            budget.moment_transfer,
            budget.stream_transfer,
        )

        total_energy = instant.energy
        total_dissipation = running.dissipation
        total_nl = float(sum(running.budget))
        sup_energy = max(sup_energy, total_energy)

        denominator = (
            nu ** (-7.0 / 6.0) * total_dissipation * math.sqrt(sup_energy)
        )
        if denominator > 0:
            constant = max(constant, abs(total_nl) / denominator)

        if step % stride == 0 or step == n_steps:
            times.append(fld.t)
            energy.append(total_energy)
            dissipation.append(total_dissipation)
            nonlinear.append(total_nl)

        if step < n_steps:
            fld = step_nonlinear(
                fld, dt, grid, plan, generators, current=current, logger=log
            )

    initial_energy = energy[0]
    energy_series = np.array(energy)
    bound_held = bool(
        np.all(energy_series <= 2.0 * initial_energy * (1 + 1e-12))
    )
    sup_ratio = (
        float(np.max(energy_series) / initial_energy)
        if initial_energy > 0
        else 1.0
    )

    empirical: Optional[float] = constant if constant > 0 else None
    threshold: Optional[float] = None
    implied: Optional[float] = None
    if empirical is not None:
        threshold = constants.c**2 * empirical ** (-2) * nu ** (7.0 / 3.0)
        implied = amplitude * math.sqrt(threshold / initial_energy)
    else:
        log.warning("Empirical bootstrap constant is undefined for this run")

    return BootstrapReport(
        times=np.array(times),
        energy=energy_series,
        dissipation=np.array(dissipation),
        nonlinear=np.array(nonlinear),
        budget=running.budget,
        bound_held=bound_held,
        sup_ratio=sup_ratio,
        empirical_c=empirical,
        threshold=threshold,
        implied_amplitude=implied,
        amplitude=amplitude,
        final=fld,
        integrals=running,
    )
