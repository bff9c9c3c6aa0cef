"""
Energy functionals of one mode and of a whole field.

Per mode: the energy E_k, the dissipation D_k, their first variation, the
spatial form of the balance identities and the empirical constant of the
differential inequality dE_k/dt <= -4c D_k - 4c lambda_k E_k.

Per field: the global energies E_1, E_2, the instantaneous dissipation
D~, time-accumulated dissipations, the stability norm and the embedding
ratios used by the nonlinear estimates.

Time derivatives are always taken spatially, by substituting L_k omega for
d_t omega; no time series is differenced.
"""

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Tuple

import numpy as np
from scipy.integrate import trapezoid

from .errors import ConfigurationError, UndefinedRatioError
from .grid import (
    ComplexArray,
    Field,
    Grid1D,
    ModeState,
    RealArray,
    StreamGradient,
    diff_y,
    inner,
    laplacian_k,
    stream_gradient,
    weighted_norm,
)
from .linear import Generator
from .multipliers import (
    EnergyConstants,
    MultiplierSet,
    bracket,
    decay_rate,
    energy_weight,
    epsilon_weights,
    eval_multipliers,
)

PLANCHEREL = 2.0 * math.pi


def _norm2(f: ComplexArray, grid: Grid1D, weight_power: int = 0) -> float:
    return weighted_norm(f, weight_power, grid) ** 2


def _re(f: ComplexArray, g: ComplexArray, grid: Grid1D) -> float:
    return inner(f, g, grid).real


@dataclass(frozen=True)
class ModeNorms:
    """The quadratic quantities every functional of a mode is built from."""

    omega: float
    gradient: float
    cross: float
    moment: float
    stream: float
    stream_dy: float
    laplacian: float
    moment_gradient: float


def mode_norms(
    state: ModeState, grid: Grid1D, stream: Optional[StreamGradient] = None
) -> ModeNorms:
    """
    Evaluate ||omega||^2, ||grad_k omega||^2, Re <iky omega, d_y omega>,
    ||y omega||^2, ||grad_k psi||^2, ||d_y psi||^2, ||Delta_k omega||^2 and
    ||y grad_k omega||^2.
    """
    k, omega = state.k, state.omega
    if stream is None:
        stream = stream_gradient(omega, k, grid)

    y = grid.nodes
    derivative = diff_y(omega, grid)
    omega2 = _norm2(omega, grid)
    moment = _norm2(omega, grid, 1)

    return ModeNorms(
        omega=omega2,
        gradient=k**2 * omega2 + _norm2(derivative, grid),
        cross=_re(1j * k * y * omega, derivative, grid),
        moment=moment,
        stream=stream.norm_squared(grid),
        stream_dy=_norm2(stream.dy, grid),
        laplacian=_norm2(laplacian_k(omega, k, grid), grid),
        moment_gradient=k**2 * moment + _norm2(derivative, grid, 1),
    )


@dataclass(frozen=True)
class EnergyTerms:
    """The four addends of E_k."""

    norm: float
    gradient: float
    cross: float
    moment: float

    @property
    def total(self: "EnergyTerms") -> float:
        return self.norm + self.gradient + self.cross + self.moment


@dataclass(frozen=True)
class DissipationTerms:
    """The six addends of D_k."""

    heat: float
    gradient: float
    laplacian: float
    shear: float
    moment_gradient: float
    stream: float

    @property
    def total(self: "DissipationTerms") -> float:
        return (
            self.heat
            + self.gradient
            + self.laplacian
            + self.shear
            + self.moment_gradient
            + self.stream
        )


@dataclass(frozen=True)
class EnergyBreakdown:
    energy: EnergyTerms
    dissipation: DissipationTerms


def _resolve(
    state: ModeState, multipliers: Optional[MultiplierSet]
) -> MultiplierSet:
    if multipliers is None:
        return eval_multipliers(state.k, state.nu)
    return multipliers


def energy_ek(
    state: ModeState,
    grid: Grid1D,
    constants: EnergyConstants,
    multipliers: Optional[MultiplierSet] = None,
    *,
    norms: Optional[ModeNorms] = None,
) -> EnergyTerms:
    """
    E_k = 1/2 ||omega||^2 + 1/2 c_a a ||grad omega||^2
        + 2 c_b b Re <iky omega, d_y omega>
        + 1/2 c_g g (||y omega||^2 + 2 ||grad psi||^2).
    """
    mult = _resolve(state, multipliers)
    n = norms if norms is not None else mode_norms(state, grid)

    return EnergyTerms(
        norm=0.5 * n.omega,
        gradient=0.5 * constants.c_alpha * mult.alpha * n.gradient,
        cross=2.0 * constants.c_beta * mult.beta * n.cross,
        moment=0.5
        * constants.c_gamma
        * mult.gamma
        * (n.moment + 2.0 * n.stream),
    )


def dissipation_dk(
    state: ModeState,
    grid: Grid1D,
    constants: EnergyConstants,
    multipliers: Optional[MultiplierSet] = None,
    *,
    norms: Optional[ModeNorms] = None,
) -> DissipationTerms:
    """The companion dissipation D_k, addend by addend."""
    mult = _resolve(state, multipliers)
    n = norms if norms is not None else mode_norms(state, grid)
    nu, k2 = state.nu, state.k**2

    return DissipationTerms(
        heat=constants.c_gamma * mult.gamma * nu * n.omega,
        gradient=nu * n.gradient,
        laplacian=constants.c_alpha * mult.alpha * nu * n.laplacian,
        shear=4.0 * constants.c_beta * mult.beta * k2 * n.moment,
        moment_gradient=(
            constants.c_gamma * mult.gamma * nu * n.moment_gradient
        ),
        stream=8.0 * constants.c_beta * mult.beta * k2 * n.stream_dy,
    )


def breakdown(
    state: ModeState,
    grid: Grid1D,
    constants: EnergyConstants,
    multipliers: Optional[MultiplierSet] = None,
) -> EnergyBreakdown:
    norms = mode_norms(state, grid)
    return EnergyBreakdown(
        energy=energy_ek(state, grid, constants, multipliers, norms=norms),
        dissipation=dissipation_dk(
            state, grid, constants, multipliers, norms=norms
        ),
    )


@dataclass(frozen=True)
class EnergyVariation:
    """
    First variation of E_k in a direction delta, split like E_k.

    `terms` holds, in order, Re <omega, delta>, the gradient pairing, the two
    halves of the cross term, the moment pairing and the stream pairing, each
    with its multiplier.
    """

    terms: Tuple[float, float, float, float, float, float]

    @property
    def total(self: "EnergyVariation") -> float:
        return float(sum(self.terms))


def energy_derivative(
    state: ModeState,
    direction: ComplexArray,
    grid: Grid1D,
    constants: EnergyConstants,
    multipliers: Optional[MultiplierSet] = None,
    *,
    stream: Optional[StreamGradient] = None,
) -> EnergyVariation:
    """
    Derivative of E_k at omega along delta.

    With delta = L_k omega this is dE_k/dt; with delta = NL_k its terms are
    the integrands of the nonlinear transfer.
    """
    mult = _resolve(state, multipliers)
    k, omega = state.k, state.omega
    y = grid.nodes
    if stream is None:
        stream = stream_gradient(omega, k, grid)
    response = stream_gradient(direction, k, grid)

    d_omega = diff_y(omega, grid)
    d_delta = diff_y(direction, grid)
    gradient_pairing = k**2 * _re(omega, direction, grid) + _re(
        d_omega, d_delta, grid
    )
    stream_pairing = _re(stream.dx, response.dx, grid) + _re(
        stream.dy, response.dy, grid
    )
    cross_weight = 2.0 * constants.c_beta * mult.beta
    moment_weight = constants.c_gamma * mult.gamma

    return EnergyVariation(
        terms=(
            _re(omega, direction, grid),
            constants.c_alpha * mult.alpha * gradient_pairing,
            cross_weight * _re(1j * k * y * direction, d_omega, grid),
            cross_weight * _re(1j * k * y * omega, d_delta, grid),
            moment_weight * _re(y * omega, y * direction, grid),
            2.0 * moment_weight * stream_pairing,
        )
    )


def energy_rate(
    state: ModeState,
    gen: Generator,
    constants: EnergyConstants,
    multipliers: Optional[MultiplierSet] = None,
) -> float:
    """dE_k/dt along the linear flow, evaluated spatially."""
    return energy_derivative(
        state, gen.apply(state.omega), gen.grid, constants, multipliers
    ).total


def check_equivalence(
    state: ModeState,
    grid: Grid1D,
    constants: EnergyConstants,
    multipliers: Optional[MultiplierSet] = None,
) -> Tuple[float, float]:
    """
    Compare E_k with the two reference quadratic forms.

    Returns:
        Tuple[float, float]: E_k over ||omega||^2 + a ||grad omega||^2
          + g ||y omega||^2 + g ||d_y psi||^2, and E_k over the same energy
          without its cross term

    Raises:
        UndefinedRatioError: the state is zero
    """
    mult = _resolve(state, multipliers)
    norms = mode_norms(state, grid)
    terms = energy_ek(state, grid, constants, mult, norms=norms)

    reference = (
        norms.omega
        + mult.alpha * norms.gradient
        + mult.gamma * norms.moment
        + mult.gamma * norms.stream_dy
    )
    diagonal = terms.total - terms.cross
    if reference == 0 or diagonal == 0:
        raise UndefinedRatioError(
            f"Equivalence ratio undefined for the zero mode at k={state.k}"
        )

    return terms.total / reference, terms.total / diagonal


def _residual(lhs: float, rhs: Iterable[float]) -> float:
    parts = list(rhs)
    scale = abs(lhs) + sum(abs(p) for p in parts)
    if scale == 0:
        return 0.0
    return abs(lhs - sum(parts)) / scale


@dataclass(frozen=True)
class IdentityResiduals:
    """
    Relative residuals of the five balance laws and of the combined
    moment-stream law, each |LHS - RHS| over the sum of absolute terms.
    """

    l2: float
    gradient: float
    cross: float
    moment: float
    stream: float
    combined: float

    @property
    def worst(self: "IdentityResiduals") -> float:
        return max(
            self.l2,
            self.gradient,
            self.cross,
            self.moment,
            self.stream,
            self.combined,
        )


def verify_identities(state: ModeState, gen: Generator) -> IdentityResiduals:
    """
    Evaluate the balance laws of the linear flow with d_t omega = L_k omega.

        d/dt ||omega||^2        = -2 nu ||grad omega||^2
        d/dt ||grad omega||^2   = -2 nu ||Delta omega||^2
                                  - 4 Re <iky omega, d_y omega>
        d/dt Re <iky omega, d_y omega>
                                = -2 k^2 ||y omega||^2 - 4 k^2 ||d_y psi||^2
                                  - 2 nu Re <Delta omega, iky d_y omega>
        d/dt ||y omega||^2      = 2 nu ||omega||^2 - 2 nu ||y grad omega||^2
                                  - 8 Re <iky psi, d_y psi>
        d/dt ||grad psi||^2     = -2 nu ||omega||^2 + 4 Re <iky psi, d_y psi>
    """
    grid = gen.grid
    k, nu, omega = state.k, gen.nu, state.omega
    y = grid.nodes

    rate = gen.apply(omega)
    d_omega = diff_y(omega, grid)
    d_rate = diff_y(rate, grid)
    lap = laplacian_k(omega, k, grid)
    stream = stream_gradient(omega, k, grid)
    stream_rate = stream_gradient(rate, k, grid)
    norms = mode_norms(state, grid, stream)

    # psi itself only enters through ik psi = stream.dx; at k = 0 it is unused
    shear_stream = _re(y * stream.dx, stream.dy, grid)
    shear_vorticity = _re(1j * k * y * omega, d_omega, grid)

    l2_lhs = 2.0 * _re(rate, omega, grid)
    l2_rhs = [-2.0 * nu * norms.gradient]

    gradient_lhs = 2.0 * k**2 * _re(rate, omega, grid) + 2.0 * _re(
        d_rate, d_omega, grid
    )
    gradient_rhs = [-2.0 * nu * norms.laplacian, -4.0 * shear_vorticity]

    cross_lhs = _re(1j * k * y * rate, d_omega, grid) + _re(
        1j * k * y * omega, d_rate, grid
    )
    cross_rhs = [
        -2.0 * k**2 * norms.moment,
        -4.0 * k**2 * norms.stream_dy,
        -2.0 * nu * _re(lap, 1j * k * y * d_omega, grid),
    ]

    moment_lhs = 2.0 * _re(y * rate, y * omega, grid)
    moment_rhs = [
        2.0 * nu * norms.omega,
        -2.0 * nu * norms.moment_gradient,
        -8.0 * shear_stream,
    ]

    stream_lhs = 2.0 * (
        _re(stream_rate.dx, stream.dx, grid)
        + _re(stream_rate.dy, stream.dy, grid)
    )
    stream_rhs = [-2.0 * nu * norms.omega, 4.0 * shear_stream]

    combined_lhs = moment_lhs + 2.0 * stream_lhs
    combined_rhs = [-2.0 * nu * norms.omega, -2.0 * nu * norms.moment_gradient]

    return IdentityResiduals(
        l2=_residual(l2_lhs, l2_rhs),
        gradient=_residual(gradient_lhs, gradient_rhs),
        cross=_residual(cross_lhs, cross_rhs),
        moment=_residual(moment_lhs, moment_rhs),
        stream=_residual(stream_lhs, stream_rhs),
        combined=_residual(combined_lhs, combined_rhs),
    )


@dataclass(frozen=True)
class InequalityCheck:
    """
    Samples of E_k, D_k and dE_k/dt along a trajectory, and the largest c
    for which dE_k/dt <= -4c (D_k + lambda_k E_k) held at every sample.
    """

    c_star: float
    times: RealArray
    energy: RealArray
    dissipation: RealArray
    rate: RealArray


def check_energy_inequality(
    states: Iterable[ModeState],
    gen: Generator,
    constants: EnergyConstants,
    multipliers: Optional[MultiplierSet] = None,
) -> InequalityCheck:
    """
    Measure the empirical constant c* of the energy inequality.

    Zero states are skipped.

    Raises:
        UndefinedRatioError: no sample has a non-zero denominator
    """
    grid = gen.grid
    times, energies, dissipations, rates = [], [], [], []
    c_star = math.inf
    lam = None

    for state in states:
        mult = _resolve(state, multipliers)
        lam = mult.lam
        norms = mode_norms(state, grid)
        energy = energy_ek(state, grid, constants, mult, norms=norms).total
        dissipation = dissipation_dk(
            state, grid, constants, mult, norms=norms
        ).total
        rate = energy_rate(state, gen, constants, mult)

        times.append(state.t)
        energies.append(energy)
        dissipations.append(dissipation)
        rates.append(rate)

        denominator = 4.0 * dissipation + 4.0 * lam * energy
        if denominator > 0:
            c_star = min(c_star, -rate / denominator)

    if math.isinf(c_star):
        raise UndefinedRatioError(
            "No non-zero sample to measure the inequality constant on"
        )

    return InequalityCheck(
        c_star=c_star,
        times=np.array(times),
        energy=np.array(energies),
        dissipation=np.array(dissipations),
        rate=np.array(rates),
    )


def check_gronwall(
    times: RealArray,
    energy: RealArray,
    lam: float,
    c: float,
    *,
    tolerance: float = 1e-6,
    heat_rate: float = 0.0,
) -> bool:
    """
    Whether E(t) <= exp(-4 c lambda t) E(0) (1 + tolerance) throughout.

    With a heat rate h the samples are of exp(2 h t) E(t), as produced by a
    heat-compensated generator. The comparison is made on logarithms so that
    neither side under- or overflows.
    """
    times = np.asarray(times, dtype=float)
    energy = np.asarray(energy, dtype=float)
    if not energy[0] > 0:
        return bool(np.all(energy <= 0))

    elapsed = times - times[0]
    with np.errstate(divide="ignore"):
        growth = np.log(np.maximum(energy, 0.0)) - math.log(energy[0])
    exponent = 4.0 * c * lam - 2.0 * heat_rate
    bound = math.log1p(tolerance) - exponent * elapsed
    return bool(np.all(growth <= bound))


def _vector_sup(dx: ComplexArray, dy: ComplexArray, grid: Grid1D) -> float:
    fine = grid.fine_interpolation
    magnitude = np.abs(fine @ dx) ** 2 + np.abs(fine @ dy) ** 2
    return float(np.sqrt(np.max(magnitude)))


@dataclass(frozen=True)
class FieldSnapshot:
    """
    Per-frequency ingredients of the global functionals at one time.

    Every array is indexed like `field.k_values`.
    """

    t: float
    k_values: RealArray
    weights: RealArray
    energies: RealArray
    dissipations: RealArray
    moments: RealArray
    heat: RealArray
    gradient_sup: RealArray
    stream_sup: RealArray
    norms: Tuple[ModeNorms, ...]
    streams: Tuple[StreamGradient, ...]


def field_snapshot(
    fld: Field, grid: Grid1D, constants: EnergyConstants
) -> FieldSnapshot:
    """Evaluate every per-mode functional of a field."""
    size = fld.k_values.size
    weights = np.zeros(size)
    energies = np.zeros(size)
    dissipations = np.zeros(size)
    gradient_sup = np.zeros(size)
    stream_sup = np.zeros(size)
    norms, streams = [], []

    for i, state in enumerate(fld.modes):
        k = state.k
        stream = stream_gradient(state.omega, k, grid)
        n = mode_norms(state, grid, stream)
        mult = eval_multipliers(k, fld.nu)

        weights[i] = energy_weight(
            k, fld.nu, fld.t, constants.c, constants.J, constants.m
        )
        energies[i] = energy_ek(state, grid, constants, mult, norms=n).total
        dissipations[i] = dissipation_dk(
            state, grid, constants, mult, norms=n
        ).total
        gradient_sup[i] = _vector_sup(
            1j * k * state.omega, diff_y(state.omega, grid), grid
        )
        stream_sup[i] = _vector_sup(stream.dx, stream.dy, grid)
        norms.append(n)
        streams.append(stream)

    moments = np.array([0.5 * n.moment + n.stream for n in norms])
    heat = np.array([fld.nu * (n.omega + n.moment_gradient) for n in norms])

    return FieldSnapshot(
        t=fld.t,
        k_values=np.asarray(fld.k_values, dtype=float),
        weights=weights,
        energies=energies,
        dissipations=dissipations,
        moments=moments,
        heat=heat,
        gradient_sup=gradient_sup,
        stream_sup=stream_sup,
        norms=tuple(norms),
        streams=tuple(streams),
    )


def k_integral(values: RealArray, delta_k: float) -> float:
    """Trapezoid rule over the uniform k-grid."""
    return float(trapezoid(np.asarray(values), dx=delta_k))


@dataclass
class RunningIntegrals:
    """
    Time integrals accumulated along a run, by the trapezoid rule in time.

    `heat`, `stream_sup`, `moment_transfer` and `stream_transfer` are per-k;
    `transfer` holds the six k-integrated energy-transfer terms.
    """

    n_k: int
    t: Optional[float] = None
    d1: float = 0.0
    heat: RealArray = field(default_factory=lambda: np.zeros(0))
    stream_sup: RealArray = field(default_factory=lambda: np.zeros(0))
    transfer: RealArray = field(default_factory=lambda: np.zeros(6))
    moment_transfer: RealArray = field(default_factory=lambda: np.zeros(0))
    stream_transfer: RealArray = field(default_factory=lambda: np.zeros(0))
    _previous: Optional[Tuple[RealArray, ...]] = field(
        default=None, repr=False
    )

    def __post_init__(self: "RunningIntegrals") -> None:
        if self.heat.size == 0:
            self.heat = np.zeros(self.n_k)
            self.stream_sup = np.zeros(self.n_k)
            self.moment_transfer = np.zeros(self.n_k)
            self.stream_transfer = np.zeros(self.n_k)

    def add(
        self: "RunningIntegrals",
        t: float,
        d_tilde: float,
        heat: RealArray,
        stream_sup: RealArray,
        transfer: Optional[RealArray] = None,
        moment_transfer: Optional[RealArray] = None,
        stream_transfer: Optional[RealArray] = None,
    ) -> None:
        """Record the integrands at time t and extend every integral to t."""
        zeros = np.zeros(self.n_k)
        current = (
            np.array([d_tilde]),
            np.asarray(heat, dtype=float),
            np.asarray(stream_sup, dtype=float) ** 2,
            np.zeros(6) if transfer is None else np.asarray(transfer),
            zeros if moment_transfer is None else np.asarray(moment_transfer),
            zeros if stream_transfer is None else np.asarray(stream_transfer),
        )

        if self.t is not None and self._previous is not None:
            if t < self.t:
                raise ConfigurationError(
                    f"Samples must be added in time order: {t} < {self.t}"
                )
            half = 0.5 * (t - self.t)
            step = [half * (a + b) for a, b in zip(self._previous, current)]
            self.d1 += float(step[0][0])
            self.heat = self.heat + step[1]
            self.stream_sup = self.stream_sup + step[2]
            self.transfer = self.transfer + step[3]
            self.moment_transfer = self.moment_transfer + step[4]
            self.stream_transfer = self.stream_transfer + step[5]

        self.t = t
        self._previous = current

    @property
    def d2(self: "RunningIntegrals") -> float:
        return float(np.max(self.heat, initial=0.0))

    @property
    def dissipation(self: "RunningIntegrals") -> float:
        return self.d1 + self.d2

    @property
    def moment_budget(self: "RunningIntegrals") -> float:
        """2 sup_k of the integrated Re <y omega_k, y NL_k>."""
        return 2.0 * float(np.max(self.moment_transfer))

    @property
    def stream_budget(self: "RunningIntegrals") -> float:
        """4 sup_k of the integrated Re <grad psi_k, grad Delta^-1 NL_k>."""
        return 4.0 * float(np.max(self.stream_transfer))

    @property
    def budget(self: "RunningIntegrals") -> Tuple[float, ...]:
        """The eight accumulated transfer terms."""
        return (*(float(v) for v in self.transfer),) + (
            self.moment_budget,
            self.stream_budget,
        )


@dataclass(frozen=True)
class GlobalEnergies:
    """
    E_1, E_2 and D~ at time t, with D_1, D_2 from the running integrals.
    """

    t: float
    e1: float
    e2: float
    d_tilde: float
    d1: float = 0.0
    d2: float = 0.0

    @property
    def energy(self: "GlobalEnergies") -> float:
        return self.e1 + self.e2

    @property
    def dissipation(self: "GlobalEnergies") -> float:
        return self.d1 + self.d2


def aggregate(
    snapshot: FieldSnapshot,
    delta_k: float,
    running: Optional[RunningIntegrals] = None,
) -> GlobalEnergies:
    return GlobalEnergies(
        t=snapshot.t,
        e1=k_integral(snapshot.weights * snapshot.energies, delta_k),
        e2=float(np.max(snapshot.moments)),
        d_tilde=k_integral(snapshot.weights * snapshot.dissipations, delta_k),
        d1=0.0 if running is None else running.d1,
        d2=0.0 if running is None else running.d2,
    )


def global_energy(
    fld: Field,
    grid: Grid1D,
    constants: EnergyConstants,
    running: Optional[RunningIntegrals] = None,
) -> GlobalEnergies:
    """
    The global energies of a field at its own time.

    Args:
        fld (Field): the field, on a uniform symmetric k-grid
        grid (Grid1D): the collocation grid of every mode
        constants (EnergyConstants): tunables of E_k and of the time weight
        running (Optional[RunningIntegrals]): accumulated D_1 and D_2, when
          the caller tracks them

    Returns:
        GlobalEnergies: trapezoid k-integrals and grid maxima
    """
    return aggregate(
        field_snapshot(fld, grid, constants), fld.delta_k, running
    )


@dataclass(frozen=True)
class EpsilonNorm:
    """The six terms of the stability norm and their sum."""

    components: Tuple[float, float, float, float, float, float]

    @property
    def total(self: "EpsilonNorm") -> float:
        return float(sum(self.components))


def epsilon_norm(
    fld: Field, grid: Grid1D, constants: EnergyConstants
) -> EpsilonNorm:
    """
    The stability norm of a field.

    At t = 0 this is the size of the initial datum; for t > 0 the four
    L^2_{x,y} terms carry the time weight <c lambda_k t>^J. L^2_{x,y} norms
    use Plancherel with the 2 pi of f_k = (2 pi)^-1 int f e^{-ikx} dx.
    """
    squares = np.zeros((4, fld.k_values.size))
    moment_sup = 0.0
    stream_sup = 0.0

    for i, state in enumerate(fld.modes):
        k = state.k
        n = mode_norms(state, grid)
        weights = epsilon_weights(k, fld.nu, constants.m)
        time_weight = (
            bracket(constants.c * decay_rate(k, fld.nu) * fld.t)
            ** constants.J
        )
        quantities = (n.omega, n.gradient, n.moment, n.stream_dy)
        for row in range(4):
            squares[row, i] = (time_weight * weights[row]) ** 2 * (
                quantities[row]
            )
        moment_sup = max(moment_sup, math.sqrt(n.moment))
        stream_sup = max(stream_sup, math.sqrt(n.stream))

    l2_terms = [
        math.sqrt(PLANCHEREL * max(k_integral(row, fld.delta_k), 0.0))
        for row in squares
    ]
    return EpsilonNorm(
        components=(
            l2_terms[0],
            l2_terms[1],
            l2_terms[2],
            l2_terms[3],
            moment_sup,
            stream_sup,
        )
    )


def _ratio(numerator: float, denominator: float) -> Tuple[float, bool]:
    """numerator / denominator, with 0/0 -> 0 and x/0 -> inf, both flagged."""
    if denominator > 0:
        return numerator / denominator, False
    if numerator == 0:
        return 0.0, True
    return math.inf, True


@dataclass(frozen=True)
class EmbeddingRatios:
    """
    Measured left over right-hand sides of the sup-norm embeddings.

    `flagged` marks ratios whose denominator vanished.
    """

    gradient_sup: float
    stream_sup: float
    stream_time: float
    weighted_stream: float
    flagged: Tuple[bool, bool, bool, bool]


def check_embedding_ratios(
    fld: Field,
    grid: Grid1D,
    constants: EnergyConstants,
    running: Optional[RunningIntegrals] = None,
    *,
    snapshot: Optional[FieldSnapshot] = None,
) -> EmbeddingRatios:
    """
    Evaluate the four embedding ratios at the field's time.

      int ||grad omega_k||_inf dk                   vs nu^(-5/6) D~^(1/2)
      int ||grad psi_k||_inf dk                     vs E^(1/2)
      int (int_0^t ||grad psi_k||_inf^2 ds)^(1/2) dk vs nu^(-2/3) D^(1/2)
      int <c lam t>^(2J) <k>^(2m) |k| ||grad psi_k||_inf^2 dk
                                                     vs nu^(-1/3) D~

    Without running integrals, D and the time integral are taken as zero.
    """
    nu = fld.nu
    if snapshot is None:
        snapshot = field_snapshot(fld, grid, constants)
    totals = aggregate(snapshot, fld.delta_k, running)
    if running is None:
        running = RunningIntegrals(n_k=fld.k_values.size)

    k = snapshot.k_values
    time_weight = np.array(
        [
            bracket(constants.c * decay_rate(kk, nu) * fld.t)
            ** (2 * constants.J)
            * bracket(kk) ** (2 * constants.m)
            for kk in k
        ]
    )

    pairs = (
        (
            k_integral(snapshot.gradient_sup, fld.delta_k),
            nu ** (-5.0 / 6.0) * math.sqrt(totals.d_tilde),
        ),
        (
            k_integral(snapshot.stream_sup, fld.delta_k),
            math.sqrt(totals.energy),
        ),
        (
            k_integral(np.sqrt(running.stream_sup), fld.delta_k),
            nu ** (-2.0 / 3.0) * math.sqrt(running.dissipation),
        ),
        (
            k_integral(
                time_weight * np.abs(k) * snapshot.stream_sup**2, fld.delta_k
            ),
            nu ** (-1.0 / 3.0) * totals.d_tilde,
        ),
    )
    ratios = [_ratio(a, b) for a, b in pairs]

    return EmbeddingRatios(
        gradient_sup=ratios[0][0],
        stream_sup=ratios[1][0],
        stream_time=ratios[2][0],
        weighted_stream=ratios[3][0],
        flagged=(ratios[0][1], ratios[1][1], ratios[2][1], ratios[3][1]),
    )
