"""Planning and scoring of sequential unsharp-measurement strategies.

Alice measures along ``cos(theta) c0 +/- sin(theta) c1``. Bob number k
measures sharply along ``b0`` for input 0 and with sharpness ``gamma_k``
along ``b1`` for input 1. The sharpnesses follow the recursion in
``gamma_sequence``, which makes every finite entry beat the CHSH bound by a
factor ``1 + epsilon``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence, Union

import mpmath
import numpy as np

from . import quantum
from ._stable import ScaledComplement, half_deficit
from .errors import DomainError, HypothesisViolated, InfeasibleAtPrecision

QUARTER_PI = math.pi / 4
SMALLEST_NORMAL = 2.2250738585072014e-308
BISECTION_STEPS = 20
DEFAULT_EPSILON = 0.1
LAMBDA0_TOL = 1e-6
LAMBDA1_FLOOR = 1e-9


class Unreachable(enum.Enum):
    """Marks a position where no sharpness in (0, 1) yields a violation."""

    UNREACHABLE = "unreachable"

    def __repr__(self):
        return "UNREACHABLE"


UNREACHABLE = Unreachable.UNREACHABLE
Sharpness = Union[float, Unreachable]


def _check_theta(theta: float) -> None:
    if not (0.0 < theta <= QUARTER_PI * (1 + 1e-15)):
        raise DomainError(f"theta must lie in (0, pi/4], got {theta!r}")


def _check_lambda(name: str, value: float, allow_zero: bool) -> None:
    lo_ok = value >= 0.0 if allow_zero else value > 0.0
    if not (lo_ok and value <= 1.0 + 1e-12):
        raise DomainError(f"{name} must lie in {'[0' if allow_zero else '(0'}, 1], got {value!r}")


@dataclass(frozen=True)
class SharpnessSeq:
    gammas: tuple[Sharpness, ...]
    theta: float
    epsilon: float
    lambda0: float
    lambda1: float

    @property
    def finite(self) -> list[float]:
        return [g for g in self.gammas if g is not UNREACHABLE]

    @property
    def count(self) -> int:
        """Number of Bobs that violate, i.e. the length of the finite prefix."""
        return len(self.finite)

    def __len__(self):
        return len(self.gammas)

    def __getitem__(self, i):
        return self.gammas[i]


def _deficit_over_sin(theta: float, correlation0: float, acc: ScaledComplement) -> float:
    # (1 - t0 cos(theta) prod(1 - x_j)) / sin(theta), every term non-negative for t0 in [0, 1]
    return (1.0 - correlation0) / math.sin(theta) + correlation0 * (
        math.tan(theta / 2) + math.cos(theta) * acc.value
    )


def _iter_gammas(theta, epsilon, lambda0, lambda1, cap):
    root0 = math.sqrt(min(lambda0, 1.0))
    root1 = math.sqrt(lambda1)
    s = math.sin(theta)
    acc = ScaledComplement()
    for k in range(1, cap + 1):
        g = (1.0 + epsilon) * 2.0 ** (k - 1) * _deficit_over_sin(theta, root0, acc) / root1
        if not 0.0 < g < 1.0:
            return
        yield g
        acc.add(half_deficit(g), g * (g / s) / (2.0 * (1.0 + math.sqrt(1.0 - g * g))))


def gamma_sequence(
    theta: float, epsilon: float, n: int, lambda1: float = 1.0, lambda0: float = 1.0
) -> SharpnessSeq:
    """Sharpness sequence that makes each finite position violate CHSH.

    gamma_1 = (1 + eps) tan(theta/2) / sqrt(lambda1) and, while the previous
    entry lies in (0, 1),

        gamma_k = (1 + eps) (2^(k-1) - sqrt(lambda0) cos(theta) P_k) / (sqrt(lambda1) sin(theta))

    with P_k = prod_{j<k} (1 + sqrt(1 - gamma_j^2)). An entry outside the open
    interval (0, 1) and everything after it is ``UNREACHABLE``. The numerator
    is evaluated without cancellation, so results keep full relative accuracy
    for theta down to the smallest normal double.

    ``epsilon = 0`` is accepted; it gives the boundary sequence where each
    CHSH value equals 2.
    """
    _check_theta(theta)
    if not epsilon >= 0.0 or math.isinf(epsilon):
        raise DomainError(f"epsilon must be a non-negative real, got {epsilon!r}")
    if n < 1:
        raise DomainError(f"n must be positive, got {n!r}")
    _check_lambda("lambda1", lambda1, allow_zero=False)
    _check_lambda("lambda0", lambda0, allow_zero=False)
    finite = list(_iter_gammas(theta, epsilon, lambda0, lambda1, n))
    gammas = tuple(finite) + (UNREACHABLE,) * (n - len(finite))
    return SharpnessSeq(gammas, theta, epsilon, lambda0, lambda1)


def _validate_gammas(k: int, gammas: Sequence[float]) -> None:
    if not 1 <= k <= len(gammas):
        raise DomainError(f"k = {k} outside 1..{len(gammas)}")
    for g in gammas[:k]:
        if g is UNREACHABLE or not 0.0 <= g <= 1.0:
            raise DomainError(f"sharpness {g!r} outside [0, 1]")


def chsh_from_correlations(k: int, theta: float, gammas: Sequence[float], t0: float, t1: float) -> float:
    """CHSH value of Bob k given the initial correlations t_i = (c_i, T b_i)."""
    _validate_gammas(k, gammas)
    prod = 1.0
    for g in gammas[: k - 1]:
        prod *= 1.0 + math.sqrt(1.0 - g * g)
    return 2.0 ** (2 - k) * (gammas[k - 1] * t1 * math.sin(theta) + t0 * math.cos(theta) * prod)


def chsh_analytic(k: int, theta: float, gammas: Sequence[float], lambda0: float = 1.0, lambda1: float = 1.0) -> float:
    """S_k = 2^(2-k) (gamma_k sqrt(l1) sin(theta) + sqrt(l0) cos(theta) prod_{j<k} (1 + sqrt(1 - gamma_j^2)))."""
    _check_lambda("lambda0", lambda0, allow_zero=True)
    _check_lambda("lambda1", lambda1, allow_zero=True)
    return chsh_from_correlations(k, theta, gammas, math.sqrt(lambda0), math.sqrt(lambda1))


def chsh_excess(k: int, theta: float, gammas: Sequence[float], t0: float = 1.0, t1: float = 1.0) -> float:
    """S_k - 2 evaluated without forming S_k, so tiny violations stay visible."""
    _validate_gammas(k, gammas)
    s = math.sin(theta)
    acc = ScaledComplement()
    for g in gammas[: k - 1]:
        acc.add(half_deficit(g), g * (g / s) / (2.0 * (1.0 + math.sqrt(1.0 - g * g))))
    bracket = gammas[k - 1] * t1 - 2.0 ** (k - 1) * _deficit_over_sin(theta, t0, acc)
    return 2.0 ** (2 - k) * s * bracket


def count_violations(theta: float, epsilon: float, lambda1: float = 1.0, cap: int = 64, lambda0: float = 1.0) -> int:
    """Largest k <= cap such that gamma_k(theta) lies in (0, 1)."""
    if cap < 1:
        raise DomainError(f"cap must be positive, got {cap!r}")
    return gamma_sequence(theta, epsilon, cap, lambda1, lambda0).count


def _representable(theta, epsilon, n, lambda0, lambda1) -> bool:
    seq = gamma_sequence(theta, epsilon, n, lambda1, lambda0)
    if seq.count < n:
        return False
    gammas = seq.finite
    t0, t1 = math.sqrt(lambda0), math.sqrt(lambda1)
    return all(chsh_excess(k, theta, gammas, t0, t1) > 0.0 for k in range(1, n + 1))


def find_theta(n: int, epsilon: float, lambda1: float = 1.0, lambda0: float = 1.0) -> float:
    """Largest Alice angle found on the search grid giving ``n`` violations.

    Walks theta = pi/4 * 10^-m down until ``count_violations`` reaches n, then
    bisects (in log theta, 20 steps) between the last failing and first
    passing grid points and returns the passing end.
    """
    if n < 1:
        raise DomainError(f"n must be positive, got {n!r}")
    if not epsilon > 0.0:
        raise DomainError(f"epsilon must be positive, got {epsilon!r}")

    def passes(th):
        return count_violations(th, epsilon, lambda1, cap=n, lambda0=lambda0) >= n

    hi = None
    m = 0
    while True:
        theta = QUARTER_PI * 10.0 ** (-m)
        if theta < SMALLEST_NORMAL:
            raise InfeasibleAtPrecision(f"no theta above {SMALLEST_NORMAL:.3e} gives {n} violations")
        if passes(theta):
            break
        hi = theta
        m += 1

    lo = theta
    if hi is not None:
        log_lo, log_hi = math.log(lo), math.log(hi)
        for _ in range(BISECTION_STEPS):
            mid = math.exp((log_lo + log_hi) / 2)
            if passes(mid):
                log_lo, lo = math.log(mid), mid
            else:
                log_hi = math.log(mid)
    if not _representable(lo, epsilon, n, lambda0, lambda1):
        raise InfeasibleAtPrecision(
            f"violations for n = {n} at theta = {lo:.3e} are below double precision"
        )
    return lo


def _unit(v, name) -> tuple[float, float, float]:
    v = tuple(float(x) for x in v)
    if len(v) != 3 or abs(math.sqrt(sum(x * x for x in v)) - 1.0) > 1e-9:
        raise DomainError(f"{name} must be a unit 3-vector, got {v!r}")
    return v


@dataclass(frozen=True)
class MeasurementPlan:
    """Everything needed to run or score a strategy for ``n`` Bobs."""

    theta: float
    epsilon: float
    gammas: tuple[float, ...]
    alice_axes: tuple[tuple[float, float, float], tuple[float, float, float]]
    bob_axes: tuple[tuple[float, float, float], tuple[float, float, float]]
    lambda0: float = 1.0
    lambda1: float = 1.0

    def __post_init__(self):
        _check_theta(self.theta)
        gammas = tuple(float(g) for g in self.gammas)
        if not gammas:
            raise DomainError("a plan needs at least one Bob")
        for g in gammas:
            if not 0.0 <= g <= 1.0:
                raise DomainError(f"sharpness {g!r} outside [0, 1]")
        c0, c1 = (_unit(v, "Alice axis") for v in self.alice_axes)
        b0, b1 = (_unit(v, "Bob axis") for v in self.bob_axes)
        if abs(np.dot(c0, c1)) > 1e-9 or abs(np.dot(b0, b1)) > 1e-9:
            raise DomainError("axes of each party must be orthogonal")
        object.__setattr__(self, "gammas", gammas)
        object.__setattr__(self, "alice_axes", (c0, c1))
        object.__setattr__(self, "bob_axes", (b0, b1))

    @property
    def n(self) -> int:
        return len(self.gammas)

    @classmethod
    def standard(cls, theta: float, gammas: Sequence[float], epsilon: float = 0.0) -> "MeasurementPlan":
        """Plan in the computational frame: c0 = b0 = e3 and c1 = b1 = e1."""
        z, x = (0.0, 0.0, 1.0), (1.0, 0.0, 0.0)
        return cls(theta, epsilon, tuple(gammas), (z, x), (z, x))

    def alice_effects(self, exact: bool = False):
        """Alice's two measurements along cos(theta) c0 +/- sin(theta) c1.

        With ``exact`` the effects are mpmath matrices built from the
        working-precision cosine and sine, so that the sharp projectors stay
        sharp beyond double precision.
        """
        if exact:
            th = mpmath.mpf(self.theta)
            c, s = mpmath.cos(th), mpmath.sin(th)
            eye = np.array([[1, 0], [0, 1]], dtype=object)
            sig0, sig1 = (quantum.exact_pauli(v) for v in self.alice_axes)
            out = []
            for sgn in (1, -1):
                e = (eye + c * sig0 + sgn * s * sig1) / 2
                out.append((e, eye - e))
            return tuple(out)
        c0, c1 = (np.array(v) for v in self.alice_axes)
        c, s = math.cos(self.theta), math.sin(self.theta)
        return tuple(
            quantum.effect_pair(1.0, c * c0 + sgn * s * c1) for sgn in (1.0, -1.0)
        )

    def bob_effects(self, k: int):
        """Measurements of Bob ``k`` (1-based)."""
        b0, b1 = self.bob_axes
        return quantum.effect_pair(1.0, b0), quantum.effect_pair(self.gammas[k - 1], b1)


def build_plan(state: quantum.TwoQubitState, n: int, epsilon: float = DEFAULT_EPSILON) -> MeasurementPlan:
    """Plan for ``n`` violating Bobs adapted to the correlations of ``state``.

    Requires the largest eigenvalue of T T^T to equal 1 and the second to be
    positive; other states raise ``HypothesisViolated``.
    """
    spec = quantum.correlation_spectrum(state)
    if spec.lambda0 < 1.0 - LAMBDA0_TOL:
        raise HypothesisViolated(f"largest correlation eigenvalue lambda0 = {spec.lambda0:.9g} is not 1")
    if spec.lambda1 <= LAMBDA1_FLOOR or spec.b1_fallback:
        raise HypothesisViolated(f"second correlation eigenvalue lambda1 = {spec.lambda1:.3g} is not positive")
    lambda0 = min(spec.lambda0, 1.0)
    theta = find_theta(n, epsilon, spec.lambda1, lambda0)
    seq = gamma_sequence(theta, epsilon, n, spec.lambda1, lambda0)
    return MeasurementPlan(
        theta=theta,
        epsilon=epsilon,
        gammas=tuple(seq.finite),
        alice_axes=(spec.c0, spec.c1),
        bob_axes=(spec.b0, spec.b1),
        lambda0=lambda0,
        lambda1=spec.lambda1,
    )


@dataclass(frozen=True)
class ReportRow:
    k: int
    gamma: float
    s_analytic: float
    s_simulated: float
    excess_analytic: float
    excess_simulated: float
    violates: bool
    bound_ok: bool


@dataclass(frozen=True)
class ViolationReport:
    theta: float
    rows: tuple[ReportRow, ...]

    @property
    def max_discrepancy(self) -> float:
        return max((abs(r.s_analytic - r.s_simulated) for r in self.rows), default=0.0)

    def consistent(self, tol: float = 1e-9) -> bool:
        return self.max_discrepancy <= tol

    @property
    def n_violations(self) -> int:
        return sum(r.violates for r in self.rows)


def required_dps(theta: float) -> int:
    """Decimal digits needed to resolve violations of size ~theta^2 around 2."""
    return 30 + 2 * math.ceil(max(0.0, -math.log10(theta)))


def simulate_sequence(state: quantum.TwoQubitState, plan: MeasurementPlan, dps: int | None = None) -> ViolationReport:
    """Run the plan on ``state`` and score every Bob two ways.

    The simulated value comes from the Born rule on the density matrix,
    updated after each Bob by the averaged Lüders channel. The analytic value
    uses the closed-form recursion with the initial correlations of ``state``
    along the plan axes. With ``dps`` set, the simulation runs in mpmath at
    that many digits; otherwise in double precision.
    """
    t = quantum.t_matrix(state)
    (c0, c1), (b0, b1) = plan.alice_axes, plan.bob_axes
    t0 = float(np.dot(c0, t @ np.array(b0)))
    t1 = float(np.dot(c1, t @ np.array(b1)))
    def run(rho_state):
        alice = plan.alice_effects(exact=rho_state.exact)
        out = []
        for k in range(1, plan.n + 1):
            bob = plan.bob_effects(k)
            s = quantum.chsh_value(quantum.joint_distribution(rho_state, alice, bob))
            out.append((float(s), float(s - 2)))
            if k < plan.n:
                rho_state = quantum.luders_update(rho_state, bob)
        return out

    if dps is None:
        simulated = run(state)
    else:
        with mpmath.workdps(dps):
            simulated = run(quantum.lift_state(state, dps))

    rows = []
    for k, (s_sim, ex_sim) in enumerate(simulated, start=1):
        s_an = chsh_from_correlations(k, plan.theta, plan.gammas, t0, t1)
        ex_an = chsh_excess(k, plan.theta, plan.gammas, t0, t1)
        limit = 2.0 ** (2 - k) * plan.theta + 1e-12
        rows.append(
            ReportRow(
                k=k,
                gamma=plan.gammas[k - 1],
                s_analytic=s_an,
                s_simulated=s_sim,
                excess_analytic=ex_an,
                excess_simulated=ex_sim,
                violates=ex_an > 0.0 and ex_sim > 0.0,
                bound_ok=max(ex_an, ex_sim) <= limit,
            )
        )
    return ViolationReport(plan.theta, tuple(rows))
