"""Model parameters and population states."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace
from typing import NamedTuple

import numpy as np


class ModelError(ValueError):
    """A model operation was called outside its mathematical domain."""


@dataclass(frozen=True)
class ModelParams:
    """Entomological and dispersal constants.

    Rates are per day, diffusion coefficients in km^2/day. ``mu_a2`` is the
    density-dependent larval mortality per individual. ``mu_t`` and ``d_t``
    describe the released sterile males.
    """

    phi: float = 10.0
    gamma: float = 0.08
    mu_a1: float = 0.05
    mu_a2: float = 2e-4
    r: float = 0.49
    mu_f: float = 0.1
    mu_m: float = 1.0 / 7.0
    mu_t: float = 0.14
    d_f: float = 0.1
    d_m: float = 0.05
    d_t: float = 0.05

    def with_(self, **changes) -> "ModelParams":
        return replace(self, **changes)

    def as_dict(self) -> dict[str, float]:
        return asdict(self)

    @classmethod
    def names(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    # Basic structural checks; everything else is reported, not enforced.
    def problems(self) -> list[str]:
        out = []
        for name in self.names():
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v)):
                out.append(f"{name} must be a finite number")
            elif v <= 0:
                out.append(f"{name} must be > 0")
        if not 0.0 < self.r < 1.0:
            out.append("r must lie in (0, 1)")
        return out

    def validate(self) -> "ModelParams":
        probs = self.problems()
        if probs:
            raise ModelError("; ".join(probs))
        return self

    @property
    def tech_assumption(self) -> bool:
        """mu_F < min(mu_M, gamma + mu_A1), needed by the wave analysis."""
        return self.mu_f < min(self.mu_m, self.gamma + self.mu_a1)

    @property
    def female_diffuses_faster(self) -> bool:
        return self.d_f >= self.d_m

    def validity_report(self) -> dict[str, bool]:
        return {
            "positive": not self.problems(),
            "tech_assumption": self.tech_assumption,
            "d_f_ge_d_m": self.female_diffuses_faster,
        }


def reference_params(**overrides) -> ModelParams:
    """Aedes albopictus values used for the reproduction runs.

    Male mortality is 1/7 per day, which the tabulated 0.14 rounds.
    """
    return ModelParams(**overrides)


class State(NamedTuple):
    """Immature, male and fertilized-female counts at one location."""

    A: float
    M: float
    F: float

    def as_array(self) -> np.ndarray:
        return np.array([self.A, self.M, self.F], dtype=float)

    @classmethod
    def from_array(cls, v) -> "State":
        return cls(float(v[0]), float(v[1]), float(v[2]))

    def scaled(self, k: float) -> "State":
        return State(k * self.A, k * self.M, k * self.F)

    def is_valid(self) -> bool:
        return all(math.isfinite(c) and c >= 0 for c in self)

    def lt(self, other: "State") -> bool:
        """Strict componentwise ordering."""
        return all(a < b for a, b in zip(self, other))

    def le(self, other: "State") -> bool:
        return all(a <= b for a, b in zip(self, other))


ZERO = State(0.0, 0.0, 0.0)


def release_rate(mt: float, p: ModelParams) -> float:
    """Effective release rate keeping a sterile population ``mt`` at equilibrium."""
    return mt * p.mu_t


def sterile_level(rate: float, p: ModelParams) -> float:
    return rate / p.mu_t
