"""Seeded property suites behind ``sequential-chsh verify``.

Each suite draws ``trials`` random cases from a shared numpy Generator and
checks one family of invariants. A failing suite keeps its first
counterexample so the CLI can print it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import bounds, quantum, strategy
from .linalg import I2, PAULIS

DEFAULT_TOLERANCES = {
    "oracle_equivalence": 1e-9,
    "luders_residual": 1e-10,
    "correlation_recursion": 1e-10,
    "envelope_sandwich": 1e-12,
    "closed_forms": 1e-9,
}


@dataclass
class SuiteResult:
    name: str
    checked: int = 0
    failed: int = 0
    counterexample: str | None = field(default=None)

    @property
    def passed(self) -> bool:
        return self.failed == 0

    def record(self, ok: bool, detail: Callable[[], str]) -> None:
        self.checked += 1
        if not ok:
            self.failed += 1
            if self.counterexample is None:
                self.counterexample = detail()


def random_unit(rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def random_orthonormal_pair(rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    a = random_unit(rng)
    b = rng.normal(size=3)
    b -= (a @ b) * a
    return a, b / np.linalg.norm(b)


def random_density_matrix(rng: np.random.Generator, dim: int = 4) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_family_state(rng: np.random.Generator) -> quantum.TwoQubitState:
    alpha = rng.uniform(0.05, 0.95)
    radius = rng.uniform(0.1, 1.0) * math.sqrt(alpha * (1 - alpha))
    beta = radius * np.exp(1j * rng.uniform(0, 2 * math.pi))
    return quantum.make_family_state(alpha, complex(beta))


def random_instrument_for(rng: np.random.Generator, e: np.ndarray, n_kraus: int = 2) -> list[np.ndarray]:
    """Kraus operators V_j sqrt(E) with sum V_j^dagger V_j = I."""
    g = rng.normal(size=(2 * n_kraus, 2)) + 1j * rng.normal(size=(2 * n_kraus, 2))
    q, _ = np.linalg.qr(g)
    root = quantum.sqrt_psd2(e)
    return [q[2 * j : 2 * j + 2] @ root for j in range(n_kraus)]


def _log_uniform(rng, lo, hi):
    return math.exp(rng.uniform(math.log(lo), math.log(hi)))


def suite_oracle_equivalence(rng, trials, tol):
    res = SuiteResult("oracle_equivalence")
    for _ in range(trials):
        state = random_family_state(rng)
        spec = quantum.correlation_spectrum(state)
        theta = _log_uniform(rng, 1e-3, strategy.QUARTER_PI)
        n = int(rng.integers(1, 7))
        gammas = tuple(float(g) for g in rng.uniform(0, 1, size=n))
        plan = strategy.MeasurementPlan(
            theta, 0.0, gammas, (spec.c0, spec.c1), (spec.b0, spec.b1), spec.lambda0, spec.lambda1
        )
        report = strategy.simulate_sequence(state, plan)
        for row in report.rows:
            s_an = strategy.chsh_analytic(row.k, theta, gammas, spec.lambda0, spec.lambda1)
            diff = abs(s_an - row.s_simulated)
            res.record(diff <= tol, lambda: f"theta={theta!r} gammas={gammas!r} k={row.k} |diff|={diff:.3e}")
    return res


def suite_lemma1(rng, trials, tol):
    res = SuiteResult("lemma1_increasing")
    for _ in range(trials):
        theta = _log_uniform(rng, 1e-8, strategy.QUARTER_PI)
        eps = _log_uniform(rng, 1e-3, 10.0)
        lam1 = rng.uniform(0.05, 1.0)
        seq = strategy.gamma_sequence(theta, eps, 24, lam1)
        g = seq.finite
        ok = all(0 < x < 1 for x in g) and all(b > a and b / a > 2 for a, b in zip(g, g[1:]))
        res.record(ok, lambda: f"theta={theta!r} eps={eps!r} lambda1={lam1!r} gammas={g!r}")
    return res


def lemma2_trend(n: int, eps: float, exponents=range(1, 25)) -> list[float | None]:
    """gamma_n(10^-m) along the exponents; ``None`` where unreachable."""
    out = []
    for m in exponents:
        g = strategy.gamma_sequence(10.0**-m, eps, n)[n - 1]
        out.append(None if g is strategy.UNREACHABLE else g)
    return out


def lemma2_holds(trend: list[float | None]) -> bool:
    if trend[-1] is None:
        return False
    first = next(i for i, g in enumerate(trend) if g is not None)
    tail = trend[first:]
    return all(g is not None for g in tail) and all(b < a for a, b in zip(tail, tail[1:]))


def suite_lemma2(rng, trials, tol):
    res = SuiteResult("lemma2_vanishing")
    for _ in range(trials):
        n = int(rng.integers(1, 7))
        eps = float(rng.choice([0.01, 0.1, 1.0]))
        trend = lemma2_trend(n, eps)
        res.record(lemma2_holds(trend), lambda: f"n={n} eps={eps} trend={trend!r}")
    return res


def channel_distance(f, g) -> float:
    """Largest entrywise gap of two qubit maps on the basis {I, X, Y, Z}."""
    return max(float(np.max(np.abs(f(b) - g(b)))) for b in (I2,) + PAULIS)


def suite_luders_residual(rng, trials, tol):
    res = SuiteResult("luders_residual")
    for _ in range(trials):
        gamma = float(rng.choice([rng.uniform(0, 1), 1.0]))
        e = quantum.effect(gamma, random_unit(rng)).matrix
        kraus = random_instrument_for(rng, e, int(rng.integers(1, 4)))
        rest = quantum.sqrt_psd2(I2 - e)
        instr = quantum.Instrument(tuple(kraus) + (rest,), (0,) * len(kraus) + (1,))
        residual = quantum.residual_decomposition(instr, e, outcome=0)
        dist = channel_distance(
            lambda x: quantum.luders_then(residual, e, x), lambda x: instr.apply(x, outcome=0)
        )
        res.record(dist <= tol, lambda: f"gamma={gamma!r} distance={dist:.3e}")
    return res


def suite_correlation_recursion(rng, trials, tol):
    res = SuiteResult("correlation_recursion")
    for _ in range(trials):
        state = quantum.TwoQubitState(random_density_matrix(rng))
        b0, b1 = random_orthonormal_pair(rng)
        c0, c1 = random_unit(rng), random_unit(rng)
        gamma = rng.uniform(0, 1)
        bob = (quantum.effect_pair(1.0, b0), quantum.effect_pair(gamma, b1))
        after = quantum.luders_update(state, bob)
        closed = quantum.orthogonal_axes_update(state, b0, b1, gamma)
        t, t2 = quantum.t_matrix(state), quantum.t_matrix(after)
        gaps = [
            float(np.max(np.abs(after.rho - closed.rho))),
            abs(c0 @ t2 @ b0 - (1 + math.sqrt(1 - gamma**2)) / 2 * (c0 @ t @ b0)),
            abs(c1 @ t2 @ b1 - 0.5 * (c1 @ t @ b1)),
        ]
        res.record(max(gaps) <= tol, lambda: f"gamma={gamma!r} gaps={gaps!r}")
    return res


def suite_sandwich(rng, trials, tol):
    res = SuiteResult("envelope_sandwich")
    for _ in range(trials):
        theta = _log_uniform(rng, 1e-6, strategy.QUARTER_PI)
        eps = _log_uniform(rng, 1e-3, 2.0)
        env = bounds.envelopes(theta, eps, 10)
        seq = strategy.gamma_sequence(theta, eps, 10)
        for k in range(1, 11):
            g = seq[k - 1]
            if not env.valid(k) or g is strategy.UNREACHABLE:
                continue
            lo, hi = env.lower[k - 1], env.upper[k - 1]
            ok = lo <= g * (1 + tol) and g <= hi * (1 + tol)
            res.record(ok, lambda: f"theta={theta!r} eps={eps!r} k={k} {lo!r} <= {g!r} <= {hi!r}")
    return res


def suite_closed_forms(rng, trials, tol):
    res = SuiteResult("closed_forms")
    for _ in range(trials):
        eps = _log_uniform(rng, 1e-3, 10.0)
        lower, upper = bounds.d_sequences(eps, 40)
        for k in range(1, 41):
            lo_c, up_c = bounds.d_closed_forms(eps, k)
            rel = abs(upper[k - 1].log2_value - up_c.log2_value) / max(1.0, abs(up_c.log2_value))
            if lo_c is not None:
                rel = max(rel, abs(lower[k - 1].log2_value - lo_c.log2_value) / max(1.0, abs(lo_c.log2_value)))
            res.record(rel <= tol, lambda: f"eps={eps!r} k={k} relative gap {rel:.3e}")
        c_lo, c_up = bounds.coeff_sequences(eps, 20)
        for k in range(1, 21):
            ok = c_up[k - 1].log2_value <= upper[k - 1].log2_value + tol
            if k >= 4:
                ok = ok and lower[k - 1].log2_value <= c_lo[k - 1].log2_value + tol
            res.record(ok, lambda: f"eps={eps!r} k={k} coefficient ordering")
        k0 = int(rng.integers(1, 10))
        k = k0 + int(rng.integers(0, 21))
        b, t, c = rng.normal(size=3)
        closed, direct = bounds.bk_closed_form(k, k0, b, t, c), bounds.bk_iterate(k, k0, b, t, c)
        rel = abs(closed - direct) / max(1.0, abs(direct))
        res.record(rel <= tol, lambda: f"b_k closed form k={k} k0={k0} gap {rel:.3e}")
    return res


SUITES = {
    "oracle_equivalence": suite_oracle_equivalence,
    "lemma1_increasing": suite_lemma1,
    "lemma2_vanishing": suite_lemma2,
    "luders_residual": suite_luders_residual,
    "correlation_recursion": suite_correlation_recursion,
    "envelope_sandwich": suite_sandwich,
    "closed_forms": suite_closed_forms,
}


def run_all(trials: int = 200, seed: int = 0, tol: float | None = None) -> list[SuiteResult]:
    rng = np.random.default_rng(seed)
    results = []
    for name, suite in SUITES.items():
        suite_tol = tol if tol is not None else DEFAULT_TOLERANCES.get(name, 0.0)
        results.append(suite(rng, trials, suite_tol))
    return results
