"""Closed-form dynamic power schemes and the fixed baselines.

Both optimizers work on *estimated* distances and minimize the COP with the
order-error term dropped (the BS does not know P_e^1):

* DPA (downlink): minimize 1 - exp(-(lam2 A + lam1 max(A, B))) over beta.
* DPC (uplink): minimize 1 - lam2/(lam2 + k lam1) exp(-lam1 C - (lam2 + k lam1) B)
  over 0 < rho1 <= Omega1, 0 < rho2 <= Omega2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .analysis import DownlinkPower, PairScenario, UplinkPower, downlink_cop, uplink_cop

_TIE_RTOL = 1e-12


@dataclass(frozen=True)
class DpaSolution:
    beta_star: float
    predicted_cop: float
    method: str = "closed_form"


@dataclass(frozen=True)
class DpcSolution:
    rho1_star: float
    rho2_star: float
    rho2_plus: float
    predicted_cop: float


def dpa_roots(lam1: float, lam2: float, eps0: float):
    """Stationary points of lam2 A + lam1 B in beta.

    Returns ``(beta_plus, beta_minus, (a, b, c))`` where a beta^2 + b beta + c is
    the numerator of the derivative. ``beta_minus`` is ``nan`` when a == 0.
    """
    s = math.sqrt(1.0 + eps0)
    a = (1.0 + eps0) * (lam1 * (1.0 + eps0) - lam2)
    b = 2.0 * (1.0 + eps0) * (lam2 - eps0 * lam1)
    c = eps0 ** 2 * lam1 - lam2 - eps0 * lam2
    den = s * (lam1 * (1.0 + eps0) - lam2)
    if den == 0:
        return -c / b, math.nan, (a, b, c)
    root = math.sqrt(lam1 * lam2)
    return (s * (eps0 * lam1 - lam2) + root) / den, (s * (eps0 * lam1 - lam2) - root) / den, (a, b, c)


def dpa_beta_closed_form(lam1, lam2, eps0):
    """Vectorized optimal PA factor for near/far rates lam1 <= lam2."""
    lam1 = np.asarray(lam1, dtype=float)
    lam2 = np.asarray(lam2, dtype=float)
    s = np.sqrt(1.0 + eps0)
    den = s * (lam1 * (1.0 + eps0) - lam2)
    num = s * (eps0 * lam1 - lam2) + np.sqrt(lam1 * lam2)
    b = 2.0 * (1.0 + eps0) * (lam2 - eps0 * lam1)
    c = eps0 ** 2 * lam1 - lam2 - eps0 * lam2
    # vanishing quadratic coefficient: the stationarity condition is linear
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(den == 0, -c / b, num / den)
    return float(out) if out.ndim == 0 else out


def _downlink_objective(beta: float, lam1: float, lam2: float, rho: float, eps0: float) -> float:
    margin = beta - (1.0 - beta) * eps0
    if margin <= 0:
        return 1.0
    a = eps0 / (rho * margin)
    b = eps0 / (rho * (1.0 - beta))
    return 1.0 - math.exp(-(lam2 * a + lam1 * max(a, b)))


def _exponent(beta: float, lam1: float, lam2: float, eps0: float) -> float:
    # rho-free exponent rho * (lam2 A + lam1 zeta), smooth to minimize
    a = eps0 / (beta - (1.0 - beta) * eps0)
    b = eps0 / (1.0 - beta)
    return lam2 * a + lam1 * max(a, b)


def dpa_optimal_beta(sc_est: PairScenario, rho: float, eps0: float | None = None) -> DpaSolution:
    """Optimal downlink PA factor from estimated distances.

    Ties (lam1 == lam2 to 1e-12 relative) and a vanishing denominator are
    handled by bounded scalar minimization of the same objective.
    """
    if eps0 is None:
        eps0 = sc_est.link.target_snr
    if not eps0 > 0:
        raise ValueError("eps0 must be positive")
    lam1, lam2 = sorted((sc_est.lam1, sc_est.lam2))
    denom = lam1 * (1.0 + eps0) - lam2
    lower = (eps0 + 1.0) / (eps0 + 2.0)
    if abs(lam2 - lam1) <= _TIE_RTOL * lam2 or abs(denom) <= _TIE_RTOL * lam2:
        res = optimize.minimize_scalar(_exponent, bounds=(lower, 1.0 - 1e-15),
                                       args=(lam1, lam2, eps0), method="bounded",
                                       options={"xatol": 1e-12})
        beta, method = float(res.x), "numerical"
    else:
        beta, method = dpa_beta_closed_form(lam1, lam2, eps0), "closed_form"
    cop = downlink_cop(sc_est, DownlinkPower(rho, beta), pe1=0.0, eps0=eps0)
    return DpaSolution(beta, cop, method)


def dpc_rho2_plus(lam1, lam2, omega1, eps0):
    """Positive root of lam1 x^2 - eps0 lam1 lam2 x - omega1 lam2^2 (vectorized)."""
    lam1 = np.asarray(lam1, dtype=float)
    lam2 = np.asarray(lam2, dtype=float)
    out = (eps0 * lam1 * lam2 + lam2 * np.sqrt(4.0 * omega1 * lam1 + (eps0 * lam1) ** 2)) / (2.0 * lam1)
    return float(out) if out.ndim == 0 else out


def dpc_optimal_power(sc_est: PairScenario, omega1: float, omega2: float,
                      eps0: float | None = None) -> DpcSolution:
    """Optimal uplink SNRs: the near user at full power, the far user at
    min(Omega2, rho2+)."""
    if eps0 is None:
        eps0 = sc_est.link.target_snr
    if not (omega1 > 0 and omega2 > 0):
        raise ValueError("power caps must be positive")
    lam1, lam2 = sorted((sc_est.lam1, sc_est.lam2))
    plus = dpc_rho2_plus(lam1, lam2, omega1, eps0)
    rho2 = min(omega2, plus)
    cop = uplink_cop(sc_est, UplinkPower(omega1, rho2, omega1, omega2), pe1=0.0, eps0=eps0)
    return DpcSolution(omega1, rho2, plus, cop)


def fixed_downlink_beta(beta: float, rho: float) -> DownlinkPower:
    """Fixed allocation: the far user must get the larger share."""
    if not 0.5 < beta < 1.0:
        raise ValueError(f"fixed PA factor must lie in (0.5, 1), got {beta}")
    return DownlinkPower(rho, beta)


def fixed_uplink_power(omega1: float, omega2: float) -> UplinkPower:
    """Both users transmit at their caps."""
    return UplinkPower(omega1, omega2, omega1, omega2)
