"""Reaction terms of the SIT system, their Jacobian and the normalized form."""

from __future__ import annotations

import numpy as np

from .params import ModelError, ModelParams, State


def mating_ratio(M, MT):
    """Fraction M / (M + MT) of matings with wild males; 0 when both vanish.

    Works elementwise on arrays.
    """
    M = np.asarray(M, dtype=float)
    den = M + MT
    out = np.zeros(np.broadcast(M, den).shape)
    np.divide(M, den, out=out, where=den > 0)
    return out if out.ndim else float(out)


def kinetics(p: ModelParams, s: State, mt: float = 0.0) -> State:
    """Time derivative (dA/dt, dM/dt, dF/dt) of the homogeneous system."""
    A, M, F = s
    if mt < 0:
        raise ModelError("sterile level must be >= 0")
    dA = p.phi * F - (p.gamma + p.mu_a1 + p.mu_a2 * A) * A
    dM = (1 - p.r) * p.gamma * A - p.mu_m * M
    dF = p.r * p.gamma * A * mating_ratio(M, mt) - p.mu_f * F
    return State(float(dA), float(dM), float(dF))


def kinetics_array(p: ModelParams, A, M, F, MT):
    """Vectorized kinetics over fields; returns three arrays."""
    dA = p.phi * F - (p.gamma + p.mu_a1 + p.mu_a2 * A) * A
    dM = (1 - p.r) * p.gamma * A - p.mu_m * M
    dF = p.r * p.gamma * A * mating_ratio(M, MT) - p.mu_f * F
    return dA, dM, dF


def jacobian(p: ModelParams, s: State, mt: float = 0.0) -> np.ndarray:
    """Jacobian of the kinetics at ``s``.

    With ``mt == 0`` the sterile-free limit is taken first, so the mating
    ratio is identically 1 and the (F, A) entry equals r*gamma even at M = 0.
    """
    A, M, F = s
    rg = p.r * p.gamma
    if mt == 0:
        dFdA, dFdM = rg, 0.0
    else:
        den = M + mt
        dFdA = rg * M / den
        dFdM = rg * A * mt / den**2
    return np.array(
        [
            [-(p.gamma + p.mu_a1) - 2 * p.mu_a2 * A, 0.0, p.phi],
            [(1 - p.r) * p.gamma, -p.mu_m, 0.0],
            [dFdA, dFdM, -p.mu_f],
        ]
    )


def offspring_number(p: ModelParams) -> float:
    return p.r * p.gamma * p.phi / (p.mu_f * (p.gamma + p.mu_a1))


def normalized_kinetics(p: ModelParams, u) -> np.ndarray:
    """Sterile-free kinetics rescaled by the wild equilibrium.

    ``u = (a, m, f)`` holds A/A*, M/M*, F/F*. The rescaled field has fixed
    points exactly at 0 and 1. Requires offspring number > 1.
    """
    R = offspring_number(p)
    if R <= 1:
        raise ModelError(f"normalization needs offspring number > 1 (got {R:.6g})")
    a, m, f = (np.asarray(c, dtype=float) for c in u)
    k = p.gamma + p.mu_a1
    return np.array(
        [
            k * (R * f - a - (R - 1) * a * a),
            p.mu_m * (a - m),
            p.mu_f * (a - f),
        ]
    )


def normalized_linearization(p: ModelParams) -> np.ndarray:
    """Jacobian of :func:`normalized_kinetics` at the origin."""
    R = offspring_number(p)
    k = p.gamma + p.mu_a1
    return np.array(
        [
            [-k, 0.0, R * k],
            [p.mu_m, -p.mu_m, 0.0],
            [p.mu_f, 0.0, -p.mu_f],
        ]
    )
