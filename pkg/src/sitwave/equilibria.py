"""Homogeneous equilibria, the SIT threshold and bistability checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .kinetics import jacobian, kinetics, offspring_number
from .linalg import is_irreducible, stability_modulus
from .params import ZERO, ModelError, ModelParams, State

# relative half-width of the band labelled "at_threshold"
THRESHOLD_BAND = 1e-12


def basic_offspring_number(p: ModelParams) -> float:
    return offspring_number(p)


def threshold_coefficient(p: ModelParams) -> float:
    return p.mu_a2 * p.mu_m / ((p.gamma + p.mu_a1) * (1 - p.r) * p.gamma)


def sit_threshold(p: ModelParams) -> tuple[float, float]:
    """Return ``(Q, MT1)``: sterile levels above MT1 eliminate the population."""
    R = basic_offspring_number(p)
    if R <= 1:
        raise ModelError(f"threshold undefined for offspring number {R:.6g} <= 1")
    Q = threshold_coefficient(p)
    return Q, (math.sqrt(R) - 1) ** 2 / Q


def wild_equilibrium(p: ModelParams) -> State:
    R = basic_offspring_number(p)
    if R <= 1:
        raise ModelError(f"no positive equilibrium for offspring number {R:.6g} <= 1")
    A = (R - 1) * (p.gamma + p.mu_a1) / p.mu_a2
    M = (1 - p.r) * p.gamma * A / p.mu_m
    F = p.r * p.gamma * A / p.mu_f
    return State(A, M, F)


def relative_residual(p: ModelParams, s: State, mt: float = 0.0) -> float:
    """Kinetics residual scaled by the magnitude of the balancing terms."""
    A, M, F = s
    d = kinetics(p, s, mt)
    ratio = M / (M + mt) if M + mt > 0 else 0.0
    scales = (
        p.phi * F + (p.gamma + p.mu_a1 + p.mu_a2 * A) * A,
        (1 - p.r) * p.gamma * A + p.mu_m * M,
        p.r * p.gamma * A * ratio + p.mu_f * F,
    )
    return max(abs(di) / sc if sc > 0 else abs(di) for di, sc in zip(d, scales))


@dataclass(frozen=True)
class Discriminant:
    delta: float
    alpha_plus: float
    alpha_minus: float

    def quadratic_residual(self, p: ModelParams, mt: float) -> float:
        """Both alphas are roots of a^2 - (R - 1 - Q mt) a + Q mt."""
        R = basic_offspring_number(p)
        q = threshold_coefficient(p) * mt
        b = R - 1 - q
        return max(abs(a * a - b * a + q) / max(1.0, a * a + abs(b * a) + q)
                   for a in (self.alpha_plus, self.alpha_minus))


def discriminant(p: ModelParams, mt: float) -> Discriminant:
    R = basic_offspring_number(p)
    q = threshold_coefficient(p) * mt
    sr = math.sqrt(R)
    delta = ((sr - 1) ** 2 - q) * ((sr + 1) ** 2 - q)
    b = R - 1 - q
    root = math.sqrt(max(delta, 0.0))
    ap = (b + root) / 2
    # product of the roots is q; avoids cancellation when mt is small
    am = q / ap if ap != 0 else (b - root) / 2
    return Discriminant(delta, ap, am)


def _state_from_males(p: ModelParams, M: float) -> State:
    A = p.mu_m * M / ((1 - p.r) * p.gamma)
    F = (p.gamma + p.mu_a1 + p.mu_a2 * A) * A / p.phi
    return State(A, M, F)


@dataclass(frozen=True)
class Equilibrium:
    label: str
    state: State
    modulus: float

    @property
    def stable(self) -> bool:
        return self.modulus < 0


@dataclass
class EquilibriumReport:
    R: float
    Q: float
    MT1: float | None
    mt: float
    regime: str
    equilibria: list[Equilibrium] = field(default_factory=list)

    def get(self, label: str) -> Equilibrium:
        for e in self.equilibria:
            if e.label == label:
                return e
        raise KeyError(label)

    def labels(self) -> list[str]:
        return [e.label for e in self.equilibria]


def _make(p: ModelParams, label: str, s: State, mt: float) -> Equilibrium:
    return Equilibrium(label, s, stability_modulus(jacobian(p, s, mt)))


def classify_regime(p: ModelParams, mt: float) -> str:
    R = basic_offspring_number(p)
    if R <= 1:
        return "R_le_1"
    if mt == 0:
        return "no_control"
    _, MT1 = sit_threshold(p)
    if abs(mt - MT1) <= THRESHOLD_BAND * MT1:
        return "at_threshold"
    return "below_threshold" if mt < MT1 else "above_threshold"


def sit_equilibria(p: ModelParams, mt: float = 0.0) -> EquilibriumReport:
    """All homogeneous equilibria at sterile level ``mt`` with their stability moduli."""
    if mt < 0:
        raise ModelError("sterile level must be >= 0")
    R = basic_offspring_number(p)
    Q = threshold_coefficient(p)
    regime = classify_regime(p, mt)
    MT1 = sit_threshold(p)[1] if R > 1 else None
    eqs = [_make(p, "zero", ZERO, mt)]
    if regime == "no_control":
        eqs.append(_make(p, "Estar", wild_equilibrium(p), mt))
    elif regime == "below_threshold":
        d = discriminant(p, mt)
        eqs.append(_make(p, "E1", _state_from_males(p, mt / d.alpha_plus), mt))
        eqs.append(_make(p, "E2", _state_from_males(p, mt / d.alpha_minus), mt))
    elif regime == "at_threshold":
        alpha = (R - 1 - Q * mt) / 2
        eqs.append(_make(p, "Edagger", _state_from_males(p, mt / alpha), mt))
    return EquilibriumReport(R, Q, MT1, mt, regime, eqs)


def unstable_equilibrium(p: ModelParams, mt: float) -> State:
    """E1 at sterile level ``mt``; the basin boundary of elimination."""
    rep = sit_equilibria(p, mt)
    if rep.regime != "below_threshold":
        raise ModelError(f"E1 exists only for 0 < mt < MT1 (regime {rep.regime})")
    return rep.get("E1").state


@dataclass
class HypothesisReport:
    """Named boolean checks plus the numbers behind them."""

    checks: dict[str, bool] = field(default_factory=dict)
    values: dict[str, object] = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(self.checks.values()) and not self.failures

    def record(self, name: str, passed: bool, note: str = "") -> None:
        self.checks[name] = bool(passed)
        if not passed:
            self.failures.append(f"{name}: {note}" if note else name)


def zero_eigenvector(p: ModelParams) -> np.ndarray:
    """Unit positive eigenvector of the Jacobian at 0 for eigenvalue -mu_F.

    Only defined when mu_F < min(mu_M, gamma + mu_A1).
    """
    if not p.tech_assumption:
        raise ModelError("tech_assumption violated: mu_F < min(mu_M, gamma + mu_A1) fails")
    k = p.gamma + p.mu_a1 - p.mu_f
    u = np.array([p.phi / k, p.phi * (1 - p.r) * p.gamma / (k * (p.mu_m - p.mu_f)), 1.0])
    return u / np.linalg.norm(u)


def check_bistable_hypotheses(p: ModelParams, mt: float) -> HypothesisReport:
    """Numerically verify the bistable traveling-wave hypotheses at level ``mt``."""
    if basic_offspring_number(p) <= 1:
        raise ModelError("bistable analysis needs offspring number > 1")
    _, MT1 = sit_threshold(p)
    if not 0 < mt < MT1:
        raise ModelError(f"bistable analysis needs 0 < mt < MT1 = {MT1:.6g} (got {mt})")
    rep = sit_equilibria(p, mt)
    out = HypothesisReport()
    z, e1, e2 = rep.get("zero"), rep.get("E1"), rep.get("E2")
    out.values.update(s_zero=z.modulus, s_E1=e1.modulus, s_E2=e2.modulus)
    out.record("zero_stable", z.modulus < 0, f"s(H'(0)) = {z.modulus:.6g}")
    out.record("E2_stable", e2.modulus < 0, f"s(H'(E2)) = {e2.modulus:.6g}")
    out.record("E1_unstable", e1.modulus > 0, f"s(H'(E1)) = {e1.modulus:.6g}")
    out.record("ordered", ZERO.lt(e1.state) and e1.state.lt(e2.state), "0 < E1 < E2 fails")
    if p.tech_assumption:
        e0 = zero_eigenvector(p)
        out.values["e0"] = e0
        J0 = jacobian(p, ZERO, mt)
        resid = float(np.linalg.norm(J0 @ e0 + p.mu_f * e0))
        out.values["e0_residual"] = resid
        out.record("tech_assumption", True)
        out.record("e0_positive", bool(np.all(e0 > 0)) and resid < 1e-9, f"e0 = {e0}")
    else:
        out.record("tech_assumption", False, "mu_F < min(mu_M, gamma + mu_A1) fails; e0 undefined")
    out.record("E1_irreducible", is_irreducible(jacobian(p, e1.state, mt)))
    out.record("E2_irreducible", is_irreducible(jacobian(p, e2.state, mt)))
    return out
