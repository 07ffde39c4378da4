"""Closed-form performance of a two-user distance-ordered NOMA pair.

Conventions
-----------
User 1 is the truly nearer user (d1 <= d2). ``lam1, lam2`` are the path-loss
rates d_k^alpha, so the gain |r_k|^2 is exponential with rate lam_k. The
noncentralities d_k^2 drive the position-error statistics and are kept apart
from the path-loss rates.

``pe1`` always means the fading-free decoding-order error probability
Pr{dh1 > dh2}. The COP formulas take it as an explicit argument so that a caller
can plug in 0, the series value, or an empirical estimate.

Downlink: the user ranked farther by *estimated* distance receives the larger
power fraction ``beta``. Uplink: the user ranked nearer by estimate transmits
with SNR ``rho1`` and is decoded first; the other uses ``rho2``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .channel import LinkConfig
from .specfun import (
    DEFAULT_TOL,
    EULER_GAMMA,
    SeriesTolerance,
    exp1_scaled,
    poisson_pmf,
    poisson_window,
)

LN2 = math.log(2.0)
# below this relative gap the 0/0 divided differences switch to a midpoint
# expansion; the neglected fourth-order term is about 1e-12 relative
_EQUAL_RATE_RTOL = 1e-3
_ROW_CHUNK = 512


def clamp_probability(p: float, slack: float = 1e-12) -> float:
    """Clip a probability to [0, 1]; excursions beyond ``slack`` are bugs."""
    assert -slack <= p <= 1.0 + slack, f"probability excursion {p}"
    return min(max(p, 0.0), 1.0)


@dataclass(frozen=True)
class PairScenario:
    """Two paired users at distances d1 <= d2 from the BS."""

    d1: float
    d2: float
    link: LinkConfig = LinkConfig()

    def __post_init__(self):
        if self.d1 < 0 or self.d2 < 0:
            raise ValueError("distances must be nonnegative")
        if self.d1 > self.d2:
            raise ValueError(f"need d1 <= d2, got d1={self.d1}, d2={self.d2}")

    @classmethod
    def from_positions(cls, p1, p2, link: LinkConfig = LinkConfig()) -> "PairScenario":
        """Build from two (x, y) positions, ordering them by distance."""
        da, db = math.hypot(*p1), math.hypot(*p2)
        return cls(min(da, db), max(da, db), link)

    @property
    def lam1(self) -> float:
        return self.d1 ** self.link.alpha

    @property
    def lam2(self) -> float:
        return self.d2 ** self.link.alpha

    @property
    def lam(self) -> float:
        return self.lam1 + self.lam2

    @property
    def D(self) -> float:
        return self.lam2 / self.lam1

    @property
    def chi1(self) -> float:
        return self.d1 ** 2

    @property
    def chi2(self) -> float:
        return self.d2 ** 2

    def rate(self, k: int) -> float:
        if k == 1:
            return self.lam1
        if k == 2:
            return self.lam2
        raise ValueError(f"user index must be 1 or 2, got {k}")


@dataclass(frozen=True)
class DownlinkPower:
    rho: float
    beta: float

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError("rho must be positive")
        if not 0 < self.beta < 1:
            raise ValueError("beta must lie in (0, 1)")


@dataclass(frozen=True)
class UplinkPower:
    rho1: float
    rho2: float
    omega1: float = math.inf
    omega2: float = math.inf

    def __post_init__(self):
        if not (self.rho1 > 0 and self.rho2 > 0):
            raise ValueError("uplink SNRs must be positive")
        if self.rho1 > self.omega1 or self.rho2 > self.omega2:
            raise ValueError("uplink SNR exceeds its cap")


# ---------------------------------------------------------------------------
# Ergodic-rate building blocks
# ---------------------------------------------------------------------------

def mean_log2_rate(rate: float, snr: float) -> float:
    """E[log2(1 + snr X)] for X ~ Exp(rate): e^{rate/snr} E1(rate/snr) / ln 2."""
    return exp1_scaled(rate / snr) / LN2


def phi(k: int, phiarg: float, sc: PairScenario) -> float:
    """varphi(k, phi) = -(lam_k / (lam ln2)) e^{lam/phi} Ei(-lam/phi)."""
    if not phiarg > 0:
        raise ValueError("phi argument must be positive")
    return sc.rate(k) / sc.lam * mean_log2_rate(sc.lam, phiarg)


def phi_prime(k: int, phiarg: float, sc: PairScenario) -> float:
    """varphi'(k, phi) = -(1/ln2) e^{lam_k/phi} Ei(-lam_k/phi)."""
    if not phiarg > 0:
        raise ValueError("phi argument must be positive")
    return mean_log2_rate(sc.rate(k), phiarg)


def phi_high_snr(k: int, phiarg: float, sc: PairScenario) -> float:
    return -sc.rate(k) / (sc.lam * LN2) * (EULER_GAMMA + math.log(sc.lam / phiarg))


def phi_prime_high_snr(k: int, phiarg: float, sc: PairScenario) -> float:
    return -(EULER_GAMMA + math.log(sc.rate(k) / phiarg)) / LN2


# ---------------------------------------------------------------------------
# Decoding-order error
# ---------------------------------------------------------------------------

@functools.lru_cache(maxsize=4096)
def _pe1_cached(chi1: float, chi2: float, sigma_ob2: float, tol: SeriesTolerance) -> float:
    rate = 1.0 / (2.0 * sigma_ob2)

    def weights(chi):
        m = chi * rate
        if m == 0:
            return np.array([0]), np.array([1.0])
        lo, hi = poisson_window(m, tol.tail_mass)
        idx = np.arange(lo, hi + 1)
        return idx, poisson_pmf(idx, m)

    i_idx, w1 = weights(chi1)
    j_idx, w2 = weights(chi2)
    total = 0.0
    for start in range(0, len(i_idx), _ROW_CHUNK):
        rows = slice(start, start + _ROW_CHUNK)
        # I_{i,j} as the regularized incomplete beta I_{1/2}(j+1, i+1); same value as
        # gamma_order_prob but O(1) per entry instead of an O(i+j) series
        order = special.betainc(j_idx[None, :] + 1.0, i_idx[rows, None] + 1.0, 0.5)
        total += float(w1[rows] @ order @ w2)
    return total


def decoding_error_prob_fading_free(sc: PairScenario,
                                    tol: SeriesTolerance = DEFAULT_TOL) -> float:
    """P_e^1 = Pr{dh1 > dh2} as the Poisson-weighted double sum of I_{i,j}.

    Exactly 0.5 for d1 == d2 and 0 when the positions are noise free.
    """
    if sc.d1 == sc.d2:
        return 0.5
    if sc.link.sigma_ob2 == 0:
        return 0.0
    p = _pe1_cached(sc.chi1, sc.chi2, sc.link.sigma_ob2, tol)
    return clamp_probability(p, slack=1e-9)


def decoding_error_prob_rayleigh(sc: PairScenario, pe1: float | None = None) -> float:
    """P_e^2 = (D-1)/(D+1) P_e^1 + 1/(D+1) (order error including fading)."""
    if pe1 is None:
        pe1 = decoding_error_prob_fading_free(sc)
    D = sc.D
    return (D - 1.0) / (D + 1.0) * pe1 + 1.0 / (D + 1.0)


# ---------------------------------------------------------------------------
# Downlink
# ---------------------------------------------------------------------------

def downlink_avg_sum_rate(sc: PairScenario, power: DownlinkPower,
                          pe1: float | None = None) -> float:
    """Average sum rate of the downlink pair (bit/channel use)."""
    if pe1 is None:
        pe1 = decoding_error_prob_fading_free(sc)
    rho, weak = power.rho, power.rho * (1.0 - power.beta)
    return ((1.0 - pe1) * phi_prime(1, weak, sc) + pe1 * phi_prime(2, weak, sc)
            + phi(1, rho, sc) + phi(2, rho, sc) - phi(1, weak, sc) - phi(2, weak, sc))


def downlink_sum_rate_high_snr(sc: PairScenario, power: DownlinkPower,
                               pe1: float | None = None) -> float:
    """log2(rho/lam1) - P_e^1 log2(lam2/lam1) - C/ln2."""
    if pe1 is None:
        pe1 = decoding_error_prob_fading_free(sc)
    return (math.log2(power.rho / sc.lam1) - pe1 * math.log2(sc.lam2 / sc.lam1)
            - EULER_GAMMA / LN2)


def downlink_thresholds(power: DownlinkPower, eps0: float) -> tuple[float, float]:
    """(A, B): gain thresholds for decoding the strong and the weak signal.

    A is infinite when beta <= (1 - beta) eps0, i.e. the high-power signal can
    never be decoded.
    """
    beta, rho = power.beta, power.rho
    margin = beta - (1.0 - beta) * eps0
    a = eps0 / (rho * margin) if margin > 0 else math.inf
    b = eps0 / (rho * (1.0 - beta))
    return a, b


def downlink_cop(sc: PairScenario, power: DownlinkPower, pe1: float,
                 eps0: float | None = None) -> float:
    """Common outage probability of the downlink pair."""
    if eps0 is None:
        eps0 = sc.link.target_snr
    a, b = downlink_thresholds(power, eps0)
    if math.isinf(a):
        return 1.0
    zeta = max(a, b)
    ok_right = math.exp(-(sc.lam2 * a + sc.lam1 * zeta))
    ok_wrong = math.exp(-(sc.lam1 * a + sc.lam2 * zeta))
    return clamp_probability(1.0 - (1.0 - pe1) * ok_right - pe1 * ok_wrong)


def downlink_user_outage(sc: PairScenario, power: DownlinkPower, pe1: float,
                         eps0: float | None = None) -> tuple[float, float]:
    """Outage probabilities of the true near and far user.

    The user ranked nearer fails unless its gain clears max(A, B). The user
    ranked farther owns the high-power signal, which both users must decode,
    so it fails whenever the smaller of the two gains is below A.
    """
    if eps0 is None:
        eps0 = sc.link.target_snr
    a, b = downlink_thresholds(power, eps0)
    if math.isinf(a):
        return 1.0, 1.0
    zeta = max(a, b)
    shared = 1.0 - math.exp(-sc.lam * a)
    out1 = (1.0 - pe1) * (1.0 - math.exp(-sc.lam1 * zeta)) + pe1 * shared
    out2 = (1.0 - pe1) * shared + pe1 * (1.0 - math.exp(-sc.lam2 * zeta))
    return clamp_probability(out1), clamp_probability(out2)


# ---------------------------------------------------------------------------
# Uplink
# ---------------------------------------------------------------------------

def _mixture_sum_rate(a: float, b: float) -> float:
    # E[log2(1 + Y1 + Y2)], Y1 ~ Exp(a), Y2 ~ Exp(b)
    if abs(a - b) <= _EQUAL_RATE_RTOL * max(a, b):
        # (b g(a) - a g(b)) / (b - a) with g(x) = e^x E1(x), expanded about the
        # midpoint: g - m g' + h^2 (g'' / 8 - m g''' / 24)
        m, h = 0.5 * (a + b), b - a
        g = exp1_scaled(m)
        g2 = g - 1.0 / m + 1.0 / m ** 2
        g3 = g2 - 2.0 / m ** 3
        return ((1.0 - m) * g + 1.0 + h * h * (g2 / 8.0 - m * g3 / 24.0)) / LN2
    ga, gb = exp1_scaled(a) / LN2, exp1_scaled(b) / LN2
    return (b * ga - a * gb) / (b - a)


def uplink_avg_sum_rate(sc: PairScenario, power: UplinkPower) -> float:
    """Average uplink sum rate; ``power.rho_k`` is the SNR of true user k.

    Equal ``lam1/rho1`` and ``lam2/rho2`` make the closed form 0/0; the analytic
    limit is used there.
    """
    return _mixture_sum_rate(sc.lam1 / power.rho1, sc.lam2 / power.rho2)


def uplink_sum_rate_high_snr(sc: PairScenario, power: UplinkPower) -> float:
    a, b = sc.lam1 / power.rho1, sc.lam2 / power.rho2
    if abs(a - b) <= _EQUAL_RATE_RTOL * max(a, b):
        m, h = 0.5 * (a + b), b - a
        core = 1.0 / LN2 - math.log2(m) + 5.0 * h * h / (24.0 * m * m * LN2)
    else:
        core = (a * math.log2(b) - b * math.log2(a)) / (b - a)
    return core - EULER_GAMMA / LN2


def uplink_sum_rate_ordered(sc: PairScenario, power: UplinkPower, pe1: float) -> float:
    """Average uplink sum rate when the SNRs follow the estimated order.

    The user ranked nearer transmits with ``rho1`` and the other with ``rho2``,
    so with probability ``pe1`` the true users swap SNRs. Equal to
    :func:`uplink_avg_sum_rate` when rho1 == rho2 or pe1 == 0.
    """
    right = _mixture_sum_rate(sc.lam1 / power.rho1, sc.lam2 / power.rho2)
    if pe1 == 0:
        return right
    wrong = _mixture_sum_rate(sc.lam1 / power.rho2, sc.lam2 / power.rho1)
    return (1.0 - pe1) * right + pe1 * wrong


def _uplink_success(lam_first, lam_second, rho1, rho2, eps0):
    # Pr{X_first > k X_second + C, X_second > B}
    k = eps0 * rho2 / rho1
    b = eps0 / rho2
    c = eps0 / rho1
    return (lam_second / (lam_second + k * lam_first)
            * np.exp(-lam_first * c - (lam_second + k * lam_first) * b))


def uplink_cop_rates(lam1, lam2, rho1, rho2, eps0: float, pe1=0.0):
    """Array form of the uplink COP for rates lam1 <= lam2 (broadcasting)."""
    right = _uplink_success(lam1, lam2, rho1, rho2, eps0)
    wrong = _uplink_success(lam2, lam1, rho1, rho2, eps0)
    return np.clip(1.0 - (1.0 - pe1) * right - pe1 * wrong, 0.0, 1.0)


def uplink_cop(sc: PairScenario, power: UplinkPower, pe1: float,
               eps0: float | None = None) -> float:
    """Common outage probability of the uplink pair."""
    if eps0 is None:
        eps0 = sc.link.target_snr
    right = float(_uplink_success(sc.lam1, sc.lam2, power.rho1, power.rho2, eps0))
    wrong = float(_uplink_success(sc.lam2, sc.lam1, power.rho1, power.rho2, eps0))
    return clamp_probability(1.0 - (1.0 - pe1) * right - pe1 * wrong)


def uplink_cop_floor(sc: PairScenario, rho2_over_rho1: float, pe1: float,
                     eps0: float | None = None) -> float:
    """Limit of the uplink COP as both SNRs grow with a fixed ratio."""
    if eps0 is None:
        eps0 = sc.link.target_snr
    k = eps0 * rho2_over_rho1
    l1, l2 = sc.lam1, sc.lam2
    return clamp_probability(1.0 - (1.0 - pe1) * l2 / (l2 + k * l1) - pe1 * l1 / (l1 + k * l2))


# ---------------------------------------------------------------------------
# OMA baseline
# ---------------------------------------------------------------------------

def oma_cop(sc: PairScenario, rho: float) -> float:
    """1 - exp(-eps0' (lam1 + lam2) / rho) with eps0' = 2^(2 R0) - 1."""
    if not rho > 0:
        raise ValueError("rho must be positive")
    return clamp_probability(1.0 - math.exp(-sc.link.oma_target_snr * sc.lam / rho))


def oma_avg_sum_rate(sc: PairScenario, rho: float) -> float:
    """Two orthogonal half-resource links: 1/2 sum_k E[log2(1 + rho |r_k|^2)].

    The OMA sum-rate baseline has no closed form in the source model; this is
    the natural orthogonal counterpart and is used only for comparison plots.
    """
    return 0.5 * (phi_prime(1, rho, sc) + phi_prime(2, rho, sc))
