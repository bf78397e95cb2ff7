"""Minimal speed of the sterile-free (monostable) invasion front.

The linearization of the normalized system at the origin, shifted by the
decay rate ``mu`` of an exponential ansatz, has a principal eigenvalue
``sigma2(mu)``. The minimal speed is the minimum of ``sigma2(mu) / mu``,
located through the positive root of a cubic in ``x = mu^2 d_F`` and
cross-checked by a direct golden-section search.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .equilibria import HypothesisReport
from .kinetics import normalized_kinetics, normalized_linearization, offspring_number
from .linalg import _derivative, bisect_newton, golden_section_min, polyval
from .params import ModelError, ModelParams

ORACLE_RTOL = 1e-6


class SpeedConsistencyError(RuntimeError):
    """Cubic-root path and direct minimization disagree."""


@dataclass(frozen=True)
class SpectrumAtMu:
    mu: float
    sigma1: float
    sigma2: float
    sigma3: float
    v: np.ndarray
    ordering_guaranteed: bool

    def omega(self, p: ModelParams) -> np.ndarray:
        return shifted_linearization(p, self.mu)


def shifted_linearization(p: ModelParams, mu: float) -> np.ndarray:
    """mu^2 D + h0'(0) with D = diag(0, d_M, d_F)."""
    return normalized_linearization(p) + mu * mu * np.diag([0.0, p.d_m, p.d_f])


def _require_growth(p: ModelParams) -> float:
    R = offspring_number(p)
    if R <= 1:
        raise ModelError(f"wave speed analysis needs offspring number > 1 (got {R:.6g})")
    return R


def _sigmas(p: ModelParams, mu: float, R: float) -> tuple[float, float]:
    k = p.mu_a1 + p.gamma
    x = mu * mu * p.d_f
    b = -x + p.mu_f + k
    delta = b * b + 4 * p.mu_f * k * (R - 1) + 4 * k * x
    sq = math.sqrt(delta)
    # product of the roots is c = mu_F k (1 - R) - k x; take the
    # cancellation-free root first and recover the other from c
    c = p.mu_f * k * (1 - R) - k * x
    if b >= 0:
        s1 = (-b - sq) / 2
        s2 = c / s1
    else:
        s2 = (-b + sq) / 2
        s1 = c / s2
    return s1, s2


def principal_eigenvalue(p: ModelParams, mu: float) -> float:
    R = _require_growth(p)
    return _sigmas(p, mu, R)[1]


def spectrum_at(p: ModelParams, mu: float) -> SpectrumAtMu:
    if not mu > 0:
        raise ModelError("mu must be > 0")
    R = _require_growth(p)
    guaranteed = p.female_diffuses_faster and p.mu_f < p.mu_m
    if not guaranteed:
        warnings.warn(
            "d_F >= d_M and mu_F < mu_M not both satisfied; sigma2 > sigma3 is not guaranteed",
            stacklevel=2,
        )
    s1, s2 = _sigmas(p, mu, R)
    s3 = -p.mu_m + mu * mu * p.d_m
    v0 = np.array(
        [
            1.0,
            p.mu_m / (s2 - s3),
            p.mu_f / (s2 + p.mu_f - mu * mu * p.d_f),
        ]
    )
    return SpectrumAtMu(mu, s1, s2, s3, v0 / np.linalg.norm(v0), guaranteed)


def speed_cubic(p: ModelParams) -> list[float]:
    """Coefficients (highest first) of the cubic whose positive root is mu_bar^2 d_F."""
    R = _require_growth(p)
    a1 = p.mu_a1 + p.gamma
    a2 = p.mu_f + a1
    a3 = p.mu_f * (R - 1)
    return [1.0, 3 * a3 + 2 * a2, 2 * a2 * a3 + a2 * a2, -(a3 * a2 * a2 + 4 * a1 * a3 * a3)]


def speed_function(p: ModelParams, mu: float) -> float:
    """sigma2(mu) / mu."""
    return principal_eigenvalue(p, mu) / mu


def golden_section_speed(p: ModelParams, lo: float = 1e-4, hi: float = 1e4) -> tuple[float, float]:
    """Direct minimization of sigma2(mu)/mu over log mu; returns (mu_bar, c_bar)."""
    R = _require_growth(p)

    def f(logmu):
        mu = math.exp(logmu)
        return _sigmas(p, mu, R)[1] / mu

    logmu, c = golden_section_min(f, math.log(lo), math.log(hi), tol=1e-14)
    return math.exp(logmu), c


@dataclass
class SpeedResult:
    mu_bar: float
    c_bar: float
    cubic_root: float
    cubic_coeffs: list[float]
    sigma2: float
    v: np.ndarray
    oracle_mu_bar: float
    oracle_c_bar: float
    phi_profile: np.ndarray = field(repr=False)

    @property
    def cubic_residual(self) -> float:
        c = self.cubic_coeffs
        x = self.cubic_root
        scale = sum(abs(ci) * x ** (3 - i) for i, ci in enumerate(c))
        return abs(polyval(c, x)) / scale

    @property
    def oracle_gap(self) -> float:
        return abs(self.c_bar - self.oracle_c_bar) / self.c_bar


def minimal_speed(p: ModelParams, check: bool = True) -> SpeedResult:
    """Minimal monostable wave speed (km/day) without sterile releases."""
    _require_growth(p)
    if not p.d_f > 0:
        raise ModelError("d_F must be > 0")
    coeffs = speed_cubic(p)
    dcoeffs = _derivative(coeffs)
    x_hi = max(1.0, -coeffs[3])
    x = bisect_newton(lambda t: polyval(coeffs, t), lambda t: polyval(dcoeffs, t), 0.0, x_hi)
    mu_bar = math.sqrt(x / p.d_f)
    sp = spectrum_at(p, mu_bar)
    c_bar = sp.sigma2 / mu_bar
    mu_o, c_o = golden_section_speed(p)
    mus = mu_bar * np.logspace(-3, 3, 121)
    profile = np.column_stack([mus, [speed_function(p, m) for m in mus]])
    res = SpeedResult(mu_bar, c_bar, x, coeffs, sp.sigma2, sp.v, mu_o, c_o, profile)
    if check and res.oracle_gap > ORACLE_RTOL:
        raise SpeedConsistencyError(
            f"cubic root gives c = {c_bar!r}, direct minimization gives {c_o!r}"
        )
    return res


def gamma_lower_bound(p: ModelParams) -> float:
    """Smallest maturation rate keeping the offspring number above 1."""
    return p.mu_a1 * p.mu_f / (p.r * p.phi - p.mu_f)


def speed_vs_params(p: ModelParams, gamma_grid, d_f_grid) -> list[dict]:
    """Minimal speed over a (gamma, d_F) grid; points with offspring number <= 1 are marked."""
    rows = []
    for g in gamma_grid:
        for d in d_f_grid:
            q = p.with_(gamma=float(g), d_f=float(d))
            row = {"gamma": float(g), "d_f": float(d), "c_bar": None, "note": ""}
            if g <= gamma_lower_bound(p) or offspring_number(q) <= 1:
                row["note"] = "skipped: offspring number <= 1"
            else:
                row["c_bar"] = minimal_speed(q).c_bar
            rows.append(row)
    return rows


def k4_slack(p: ModelParams, u) -> np.ndarray:
    """h0(u) - [h0'(0) u - a |u|^2 1]; non-negative where the bound holds."""
    R = offspring_number(p)
    a = (R - 1) * (p.mu_a1 + p.gamma)
    u = np.asarray(u, dtype=float)
    lin = normalized_linearization(p) @ u
    return normalized_kinetics(p, u) - (lin - a * float(u @ u))


def k5_slack(p: ModelParams, rho: float, v) -> np.ndarray:
    """rho h0'(0) v - h0(rho v); non-negative where the domination holds."""
    v = np.asarray(v, dtype=float)
    return rho * (normalized_linearization(p) @ v) - normalized_kinetics(p, rho * v)


def check_monostable_hypotheses(
    p: ModelParams, samples: int = 10_000, seed: int = 0
) -> HypothesisReport:
    """Sampled verification of the monostable spreading-speed hypotheses."""
    _require_growth(p)
    out = HypothesisReport()
    rng = np.random.default_rng(seed)
    scale = max(1.0, offspring_number(p)) * (p.mu_a1 + p.gamma)
    tol = 1e-12 * scale

    us = rng.random((samples, 3))
    us[0] = 0.0
    us[1] = 1.0
    worst, witness = math.inf, None
    for u in us:
        m = float(np.min(k4_slack(p, u)))
        if m < worst:
            worst, witness = m, u
    out.values["k4_min_slack"] = worst
    out.record("k4_quadratic_bound", worst >= -tol, f"violated at u = {witness}")

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        mu_bar = minimal_speed(p).mu_bar
        n_mu = max(10, int(math.sqrt(samples)))
        mus = mu_bar * np.linspace(1.0 / n_mu, 1.0, n_mu)
        rhos = np.logspace(-3, 3, max(10, samples // n_mu))
        worst, witness = math.inf, None
        margin = math.inf
        for mu in mus:
            sp = spectrum_at(p, mu)
            margin = min(margin, sp.sigma2 - max(sp.sigma1, sp.sigma3))
            for rho in rhos:
                m = float(np.min(k5_slack(p, rho, sp.v) / max(1.0, rho)))
                if m < worst:
                    worst, witness = m, (rho, mu)
    out.values["k5_min_slack"] = worst
    out.values["k5_points"] = len(mus) * len(rhos)
    out.record("k5_linear_domination", worst >= -tol, f"violated at (rho, mu) = {witness}")
    out.values["simplicity_margin"] = margin
    out.record("principal_simple", margin > 0, f"sigma2 - max(sigma1, sigma3) = {margin:.6g}")
    out.record(
        "ordering_verified",
        p.female_diffuses_faster and p.mu_f < p.mu_m,
        "sigma2 > sigma3 unverified: needs d_F >= d_M and mu_F < mu_M",
    )
    return out
