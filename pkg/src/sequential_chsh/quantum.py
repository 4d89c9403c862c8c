"""Two-qubit states, unsharp qubit effects and the sequential update channel.

Alice holds qubit A, the current Bob holds qubit B; operators on the pair are
ordered ``A (x) B``. All Born-rule quantities are exact traces, no sampling.

Functions that evolve or score a state (``luders_update``,
``joint_distribution``, ``chsh_value``) work both on complex128 matrices and
on ``dtype=object`` matrices of mpmath numbers (see ``lift_state``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import mpmath
import numpy as np

from .errors import (
    DomainError,
    InvalidInstrument,
    NonRealCorrelation,
    NotImplementing,
)
from .linalg import (
    I2,
    PAULIS,
    canonical_sign,
    eig_sym3,
    is_exact,
    kron,
    pinv_sqrt2,
    sqrt_psd2,
)

STATE_TOL = 1e-12
PSD_FLOOR = -1e-10
COMPLETENESS_TOL = 1e-12
KRAUS_TOL = 1e-10

E1 = np.array([1.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])


def pauli(axis: Sequence[float]) -> np.ndarray:
    """sigma_r = r1 X + r2 Y + r3 Z."""
    r = np.asarray(axis, dtype=float)
    return r[0] * PAULIS[0] + r[1] * PAULIS[1] + r[2] * PAULIS[2]


def exact_pauli(axis) -> np.ndarray:
    """sigma_r as an mpmath object matrix; ``axis`` is renormalized at working precision."""
    r = [mpmath.mpf(x) for x in axis]
    norm = mpmath.sqrt(r[0] ** 2 + r[1] ** 2 + r[2] ** 2)
    r1, r2, r3 = (x / norm for x in r)
    return np.array([[r3, mpmath.mpc(r1, -r2)], [mpmath.mpc(r1, r2), -r3]], dtype=object)


def to_exact(m: np.ndarray) -> np.ndarray:
    """Copy a complex matrix into an object array of mpmath numbers (exactly)."""
    m = np.asarray(m, dtype=complex)
    out = np.empty(m.shape, dtype=object)
    for idx, x in np.ndenumerate(m):
        out[idx] = mpmath.mpc(x.real, x.imag)
    return out


def _as_complex(m: np.ndarray) -> np.ndarray:
    if is_exact(m):
        return np.vectorize(complex, otypes=[complex])(m)
    return np.asarray(m, dtype=complex)


@dataclass(frozen=True, eq=False)
class TwoQubitState:
    """A validated 4x4 density matrix shared by Alice and the current Bob."""

    rho: np.ndarray

    def __post_init__(self):
        rho = self.rho if is_exact(self.rho) else np.array(self.rho, dtype=complex)
        if rho.shape != (4, 4):
            raise DomainError(f"density matrix must be 4x4, got {rho.shape}")
        check = _as_complex(rho)
        if np.max(np.abs(check - check.conj().T)) > STATE_TOL:
            raise DomainError("density matrix is not Hermitian")
        tr = np.trace(check)
        if abs(tr - 1) > STATE_TOL:
            raise DomainError(f"trace {tr.real!r} differs from 1")
        lo = np.linalg.eigvalsh((check + check.conj().T) / 2)[0]
        if lo < PSD_FLOOR:
            raise DomainError(f"density matrix has eigenvalue {lo:.3e}")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    @property
    def exact(self) -> bool:
        return is_exact(self.rho)

    @classmethod
    def from_vector(cls, psi: Sequence[complex]) -> "TwoQubitState":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))


def lift_state(state: TwoQubitState, dps: int) -> TwoQubitState:
    """Return ``state`` with entries converted exactly to mpmath numbers.

    Subsequent arithmetic happens at the ambient ``mpmath.mp.dps``; callers
    are expected to set it (see ``strategy.simulate_sequence``).
    """
    with mpmath.workdps(dps):
        return TwoQubitState(to_exact(_as_complex(state.rho)))


def make_bell_state() -> TwoQubitState:
    """Projector onto (|00> + |11>)/sqrt(2)."""
    rho = np.zeros((4, 4), dtype=complex)
    rho[np.ix_([0, 3], [0, 3])] = 0.5
    return TwoQubitState(rho)


def make_maximally_mixed() -> TwoQubitState:
    return TwoQubitState(np.eye(4, dtype=complex) / 4)


def make_schmidt_state(phi: float) -> TwoQubitState:
    """cos(phi)|00> + sin(phi)|11> for phi in (0, pi/4]."""
    if not 0 < phi <= math.pi / 4 + 1e-15:
        raise DomainError(f"Schmidt angle must lie in (0, pi/4], got {phi!r}")
    if abs(phi - math.pi / 4) <= 1e-15:
        return make_bell_state()
    return TwoQubitState.from_vector([math.cos(phi), 0, 0, math.sin(phi)])


def make_family_state(alpha: float, beta: complex) -> TwoQubitState:
    """The X-shaped family with alpha, beta, beta*, 1-alpha in the corners."""
    if not 0 <= alpha <= 1:
        raise DomainError(f"alpha must lie in [0, 1], got {alpha!r}")
    if abs(beta) ** 2 > alpha * (1 - alpha) + 1e-12:
        raise DomainError(f"|beta|^2 = {abs(beta) ** 2!r} exceeds alpha(1-alpha)")
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = alpha
    rho[0, 3] = beta
    rho[3, 0] = np.conj(beta)
    rho[3, 3] = 1 - alpha
    return TwoQubitState(rho)


@dataclass(frozen=True)
class Effect:
    """POVM element (I + sign * gamma * sigma_axis) / 2."""

    gamma: float
    axis: tuple[float, float, float]
    sign: int = 1

    def __post_init__(self):
        axis = tuple(float(x) for x in self.axis)
        if len(axis) != 3 or abs(math.sqrt(sum(x * x for x in axis)) - 1) > 1e-12:
            raise DomainError(f"axis must be a unit 3-vector, got {axis!r}")
        if not 0 <= self.gamma <= 1:
            raise DomainError(f"sharpness must lie in [0, 1], got {self.gamma!r}")
        if self.sign not in (1, -1):
            raise DomainError("sign must be +1 or -1")
        object.__setattr__(self, "axis", axis)

    @property
    def matrix(self) -> np.ndarray:
        return (I2 + self.sign * self.gamma * pauli(self.axis)) / 2

    def exact_matrix(self) -> np.ndarray:
        eye = np.array([[1, 0], [0, 1]], dtype=object)
        return (eye + self.sign * mpmath.mpf(self.gamma) * exact_pauli(self.axis)) / 2

    def complement(self) -> "Effect":
        return Effect(self.gamma, self.axis, -self.sign)


def effect(gamma: float, axis: Sequence[float], sign: int = 1) -> Effect:
    return Effect(gamma, tuple(axis), sign)


def effect_pair(gamma: float, axis: Sequence[float]) -> tuple[Effect, Effect]:
    """The two-outcome measurement {E, I - E} with E = (I + gamma sigma_axis)/2."""
    e = effect(gamma, axis)
    return e, e.complement()


def _operator(e, exact: bool) -> np.ndarray:
    if isinstance(e, Effect):
        return e.exact_matrix() if exact else e.matrix
    m = np.asarray(e)
    if exact and not is_exact(m):
        return to_exact(m)
    return m if exact else np.asarray(m, dtype=complex)


def _check_pairs(pairs, exact: bool) -> list[tuple[np.ndarray, np.ndarray]]:
    out = []
    for y, pair in enumerate(pairs):
        if len(pair) != 2:
            raise InvalidInstrument(f"measurement {y} must have exactly two effects")
        ops = tuple(_operator(e, exact) for e in pair)
        total = _as_complex(ops[0] + ops[1])
        if np.max(np.abs(total - I2)) > COMPLETENESS_TOL:
            raise InvalidInstrument(f"effects of measurement {y} do not sum to the identity")
        out.append(ops)
    return out


def _dagger(m: np.ndarray) -> np.ndarray:
    return m.conj().T


def luders_update(state: TwoQubitState, bob_effects) -> TwoQubitState:
    """State handed to the next Bob, averaged over Bob's uniform input and outcome.

    ``bob_effects[y][b]`` is the effect for outcome ``b`` of input ``y``; each
    effect is applied through the Lüders instrument ``I (x) sqrt(E)``.
    """
    exact = state.exact
    pairs = _check_pairs(bob_effects, exact)
    eye = np.array([[1, 0], [0, 1]], dtype=object) if exact else I2
    rho = state.rho
    out = rho * 0
    for pair in pairs:
        for e in pair:
            k = kron(eye, sqrt_psd2(e))
            out = out + k @ rho @ _dagger(k)
    return TwoQubitState(out / 2)


def orthogonal_axes_update(
    state: TwoQubitState, sharp_axis: Sequence[float], unsharp_axis: Sequence[float], gamma: float
) -> TwoQubitState:
    """Closed-form update for a sharp measurement plus an orthogonal unsharp one.

    rho' = (2 + r)/4 rho + 1/4 Z rho Z + (1 - r)/4 X rho X with r = sqrt(1 - gamma^2),
    where Z, X are Bob's Paulis along ``sharp_axis`` and ``unsharp_axis``.
    """
    r = math.sqrt(1 - gamma * gamma)
    z = kron(I2, pauli(sharp_axis))
    x = kron(I2, pauli(unsharp_axis))
    rho = np.asarray(state.rho, dtype=complex)
    out = (2 + r) / 4 * rho + z @ rho @ z / 4 + (1 - r) / 4 * (x @ rho @ x)
    return TwoQubitState(out)


@dataclass(frozen=True, eq=False)
class JointDistribution:
    """``p[a, b, x, y]`` = P(A=a, B=b | X=x, Y=y)."""

    p: np.ndarray

    def __post_init__(self):
        p = self.p
        if p.shape != (2, 2, 2, 2):
            raise DomainError(f"distribution must have shape (2, 2, 2, 2), got {p.shape}")
        check = np.asarray(p, dtype=float)
        if np.min(check) < -1e-12 or np.max(check) > 1 + 1e-12:
            raise DomainError("probabilities outside [0, 1]")
        sums = check.sum(axis=(0, 1))
        if np.max(np.abs(sums - 1)) > 1e-12:
            raise DomainError("conditional distributions are not normalized")

    def prob_equal(self, x: int, y: int):
        return self.p[0, 0, x, y] + self.p[1, 1, x, y]


def joint_distribution(state: TwoQubitState, alice_effects, bob_effects) -> JointDistribution:
    """Born-rule table p(a, b | x, y) = tr(rho (A_a|x (x) B_b|y))."""
    exact = state.exact
    alice = _check_pairs(alice_effects, exact)
    bob = _check_pairs(bob_effects, exact)
    p = np.empty((2, 2, 2, 2), dtype=object if exact else float)
    for x, a_pair in enumerate(alice):
        for y, b_pair in enumerate(bob):
            for a, ea in enumerate(a_pair):
                for b, eb in enumerate(b_pair):
                    val = np.trace(state.rho @ kron(ea, eb))
                    p[a, b, x, y] = val.real
    return JointDistribution(p)


def chsh_value(dist: JointDistribution):
    """2 [p(A=B|00) + p(A=B|01) + p(A=B|10) + p(A!=B|11) - 2]."""
    eq = dist.prob_equal
    return 2 * (eq(0, 0) + eq(0, 1) + eq(1, 0) + (1 - eq(1, 1)) - 2)


def chsh_expectation_form(state: TwoQubitState, alice_effects, bob_effects) -> float:
    """CHSH value via observables A_x = A_0|x - A_1|x and B_y likewise."""
    alice = _check_pairs(alice_effects, False)
    bob = _check_pairs(bob_effects, False)
    a0, a1 = (p[0] - p[1] for p in alice)
    b0, b1 = (p[0] - p[1] for p in bob)
    rho = _as_complex(state.rho)
    val = np.trace(rho @ kron(a0 + a1, b0)) + np.trace(rho @ kron(a0 - a1, b1))
    return float(val.real)


def t_matrix(state: TwoQubitState) -> np.ndarray:
    """Correlation matrix T_ij = tr(rho (sigma_i (x) sigma_j))."""
    rho = _as_complex(state.rho)
    t = np.empty((3, 3), dtype=complex)
    for i, si in enumerate(PAULIS):
        for j, sj in enumerate(PAULIS):
            t[i, j] = np.trace(rho @ kron(si, sj))
    if np.max(np.abs(t.imag)) > 1e-10:
        raise NonRealCorrelation(f"imaginary correlation {np.max(np.abs(t.imag)):.3e}")
    return t.real.copy()


@dataclass(frozen=True, eq=False)
class CorrelationSpectrum:
    """Two largest eigenvalues of T T^T with Alice (c) and Bob (b) axes.

    ``b1_fallback`` is set when T^T c1 vanishes and ``b1`` had to be chosen
    by convention rather than derived from the state.
    """

    lambda0: float
    lambda1: float
    c0: np.ndarray
    c1: np.ndarray
    b0: np.ndarray
    b1: np.ndarray
    b0_fallback: bool = False
    b1_fallback: bool = False
    t: np.ndarray = field(default=None, repr=False)


def _completing_axis(taken: list[np.ndarray]) -> np.ndarray:
    for axis in (E3, E1, E2):
        w = axis.copy()
        for u in taken:
            w = w - (u @ w) * u
        norm = np.linalg.norm(w)
        if norm > 1e-6:
            return canonical_sign(w / norm)
    raise AssertionError("unreachable: three axes always complete a basis")


def correlation_spectrum(state: TwoQubitState) -> CorrelationSpectrum:
    t = t_matrix(state)
    basis = eig_sym3(t @ t.T)
    lam = [min(max(v, 0.0), 1.0) for v in basis.values[:2]]
    cs = [basis.vectors[0], basis.vectors[1]]
    bs: list[np.ndarray] = []
    flags = []
    for i, c in enumerate(cs):
        w = t.T @ c
        norm = np.linalg.norm(w)
        if norm < 1e-12:
            lam[i] = 0.0
            bs.append(_completing_axis(bs))
            flags.append(True)
        else:
            bs.append(w / norm)
            flags.append(False)
    return CorrelationSpectrum(
        lambda0=lam[0],
        lambda1=lam[1],
        c0=cs[0],
        c1=cs[1],
        b0=bs[0],
        b1=bs[1],
        b0_fallback=flags[0],
        b1_fallback=flags[1],
        t=t,
    )


@dataclass(frozen=True, eq=False)
class Instrument:
    """Outcome-labelled Kraus operators with sum K^dagger K = I.

    A plain channel is an instrument whose operators all carry label 0.
    """

    kraus: tuple
    labels: tuple = None

    def __post_init__(self):
        kraus = tuple(np.asarray(k, dtype=complex) for k in self.kraus)
        labels = tuple(self.labels) if self.labels is not None else (0,) * len(kraus)
        if len(labels) != len(kraus):
            raise InvalidInstrument("one label per Kraus operator required")
        total = sum((_dagger(k) @ k for k in kraus), np.zeros((2, 2), dtype=complex))
        if np.max(np.abs(total - I2)) > KRAUS_TOL:
            raise InvalidInstrument("Kraus operators are not complete")
        object.__setattr__(self, "kraus", kraus)
        object.__setattr__(self, "labels", labels)

    def operators(self, outcome: int) -> list[np.ndarray]:
        return [k for k, lab in zip(self.kraus, self.labels) if lab == outcome]

    def effect(self, outcome: int) -> np.ndarray:
        return sum((_dagger(k) @ k for k in self.operators(outcome)), np.zeros((2, 2), dtype=complex))

    def apply(self, rho: np.ndarray, outcome: int | None = None) -> np.ndarray:
        ops = self.kraus if outcome is None else self.operators(outcome)
        return apply_kraus(ops, rho)


def apply_kraus(ops: Sequence[np.ndarray], rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    return sum((k @ rho @ _dagger(k) for k in ops), np.zeros_like(rho))


def residual_decomposition(instr: Instrument, e, outcome: int = 0) -> Instrument:
    """Channel that turns the Lüders measurement of ``e`` into ``instr``.

    Returns the Kraus set {K E^(-1/2)} plus {I - Pi_E}; applying it after
    rho -> sqrt(E) rho sqrt(E) reproduces sum_K K rho K^dagger for the
    operators of ``outcome``.
    """
    em = _operator(e, False)
    ops = instr.operators(outcome)
    implemented = sum((_dagger(k) @ k for k in ops), np.zeros((2, 2), dtype=complex))
    if np.max(np.abs(implemented - em)) > KRAUS_TOL:
        raise NotImplementing(f"outcome {outcome} does not implement the given effect")
    inv_root = pinv_sqrt2(em)
    support = inv_root @ em @ inv_root
    residual = [k @ inv_root for k in ops] + [I2 - support]
    return Instrument(tuple(residual))


def luders_then(residual: Instrument, e, rho: np.ndarray) -> np.ndarray:
    """Apply the Lüders map of ``e`` and then the channel ``residual``."""
    root = sqrt_psd2(_operator(e, False))
    return residual.apply(root @ np.asarray(rho, dtype=complex) @ root)
