"""Shared CFT parameter derivations.

Central charge and Kac weights from the x parametrization, the loop weight and
quantum-group phase, the Fermi velocity fixing relativistic normalization, and
the ground-state energy density integral.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.integrate

from .errors import DomainError, QuadratureFailure

__all__ = ["CftParams", "derive_params", "kac_weight", "e_infinity", "x_from_c"]


@dataclass(frozen=True)
class CftParams:
    x: float
    c: float
    gamma: float
    m: float
    beta_sq: float
    v_f: float
    e_inf: float

    @property
    def q(self) -> complex:
        return complex(math.cos(self.gamma), math.sin(self.gamma))


def derive_params(x: float) -> CftParams:
    """All shared parameters from x > 0: c, gamma, m = 2 cos gamma, v_F, e_inf."""
    if not x > 0:
        raise DomainError(f"x must be positive, got {x}")
    c = 1.0 - 6.0 / (x * (x + 1.0))
    gamma = math.pi / (x + 1.0)
    m = 2.0 * math.cos(gamma)
    beta_sq = x / (x + 1.0)
    v_f = math.pi * math.sin(gamma) / gamma
    return CftParams(x, c, gamma, m, beta_sq, v_f, e_infinity(gamma))


def kac_weight(r: float, s: float, x: float) -> float:
    """h_rs = ((r(x+1) - s x)^2 - 1) / (4 x (x+1)); symmetric under (r,s) -> (-r,-s)."""
    return ((r * (x + 1.0) - s * x) ** 2 - 1.0) / (4.0 * x * (x + 1.0))


def _e_inf_integrand(t: float, gamma: float) -> float:
    if t == 0.0:
        return (math.pi - gamma) / math.pi
    if t > 20.0:
        # overflow-safe tail: multiply through by exp(-(pi+gamma) t)
        return (
            4.0
            * (math.exp(-2.0 * gamma * t) - math.exp(-2.0 * math.pi * t))
            / ((1.0 - math.exp(-2.0 * math.pi * t)) * (1.0 + math.exp(-2.0 * gamma * t)))
        )
    return math.sinh((math.pi - gamma) * t) / (math.sinh(math.pi * t) * math.cosh(gamma * t))


@lru_cache(maxsize=None)
def e_infinity(gamma: float) -> float:
    """sin(gamma) * integral over the real line of sinh((pi-g)t)/(sinh(pi t) cosh(g t)).

    The integrand is even with a removable singularity at t = 0 (value
    (pi-gamma)/pi) and decays like exp(-gamma |t|).
    """
    if not 0.0 < gamma < math.pi:
        raise DomainError(f"gamma must lie in (0, pi), got {gamma}")
    val, err = scipy.integrate.quad(
        _e_inf_integrand, 0.0, np.inf, args=(gamma,), epsabs=1e-13, epsrel=1e-13, limit=400
    )
    if err > 1e-10:
        raise QuadratureFailure(f"e_infinity quadrature error {err:.2e} too large")
    return math.sin(gamma) * 2.0 * val


def x_from_c(c: float) -> float:
    """Positive branch inverse of c = 1 - 6/(x(x+1))."""
    if c >= 1.0:
        raise DomainError("the parametrization covers c < 1")
    disc = math.sqrt((1.0 - c) * (25.0 - c))
    return -(1.0 - c - disc) / (2.0 * (1.0 - c))
