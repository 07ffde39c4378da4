"""Special functions behind the closed-form NOMA expressions.

Everything here works on negative-argument exponential integrals, integer
Gamma shapes and Poisson weights, which is all the analysis layer needs.
Large Poisson means (d^2 / (2 sigma^2) can run into the thousands) are handled
in log space throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special, stats

EULER_GAMMA = 0.57721566490153286061
_LN2 = math.log(2.0)
_TINY = 1e-300


@dataclass(frozen=True)
class SeriesTolerance:
    """Truncation controls for the infinite sums."""

    rel_tol: float = 1e-12
    max_terms: int = 10_000
    tail_mass: float = 1e-12

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")
        if not 0 < self.tail_mass < 1:
            raise ValueError("tail_mass must lie in (0, 1)")


DEFAULT_TOL = SeriesTolerance()


# ---------------------------------------------------------------------------
# Exponential integral
# ---------------------------------------------------------------------------

def _e1_series(z: float) -> float:
    # E1(z) = -gamma - ln z - sum_{k>=1} (-z)^k / (k k!)
    total = 0.0
    term = 1.0
    k = 1
    while True:
        term *= -z / k
        contrib = term / k
        total += contrib
        if abs(contrib) < 1e-17 * abs(total) or k > 200:
            break
        k += 1
    return -EULER_GAMMA - math.log(z) - total


def _scaled_e1_cf(z: float) -> float:
    # e^z E1(z) by modified Lentz on the continued fraction, z > 1
    b = z + 1.0
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, 1000):
        an = -float(i * i)
        b += 2.0
        d = 1.0 / (an * d + b)
        c = b + an / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return h


def exp1_scaled(z: float) -> float:
    """Return ``exp(z) * E1(z)`` for ``z > 0`` without overflow."""
    z = float(z)
    if not z > 0:
        raise ValueError(f"exp1_scaled needs z > 0, got {z}")
    if z <= 1.0:
        return math.exp(z) * _e1_series(z)
    return _scaled_e1_cf(z)


def exp_integral_ei(x: float) -> float:
    """Exponential integral Ei(x) for negative x.

    Ei(x) = -E1(-x). Arguments below about -745 underflow to -0.0.
    """
    x = float(x)
    if not x < 0:
        raise ValueError(f"exp_integral_ei is defined here for x < 0 only, got {x}")
    z = -x
    if z <= 1.0:
        return -_e1_series(z)
    return -_scaled_e1_cf(z) * math.exp(-z)


def exp_integral_ei_small(x: float) -> float:
    """Small-|x| approximation Ei(x) ~ ln(-x) + Euler's constant."""
    x = float(x)
    if not x < 0:
        raise ValueError(f"x must be negative, got {x}")
    return math.log(-x) + EULER_GAMMA


# ---------------------------------------------------------------------------
# Gamma family
# ---------------------------------------------------------------------------

def regularized_gamma_p(shape, x):
    """Lower regularized incomplete gamma P(shape, x) = gamma(shape, x) / Gamma(shape)."""
    shape_a = np.asarray(shape, dtype=float)
    x_a = np.asarray(x, dtype=float)
    if np.any(shape_a <= 0):
        raise ValueError("shape must be positive")
    if np.any(x_a < 0):
        raise ValueError("x must be nonnegative")
    out = special.gammainc(shape_a, x_a)
    return float(out) if out.ndim == 0 else out


def log_hyp2f1_at_half(b, c, tol: SeriesTolerance = DEFAULT_TOL):
    """Natural log of F(1, b; c; 1/2) for integer b, c >= 1 (vectorized).

    Forward series with term ratio (b + n) / (2 (c + n)); terms can grow before
    they shrink when b > 2c, so the sum is carried with a running log scale.
    """
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    if np.any(b < 1) or np.any(c < 1):
        raise ValueError("hyp2f1_at_half needs b >= 1 and c >= 1")
    b, c = np.broadcast_arrays(b, c)
    log_term = np.zeros(b.shape)
    scale = np.zeros(b.shape)  # log of the running scale
    acc = np.ones(b.shape)  # sum / exp(scale)
    active = np.ones(b.shape, dtype=bool)
    n = 0
    while active.any():
        if n >= tol.max_terms:
            raise RuntimeError("hypergeometric series did not converge within max_terms")
        ratio = (b + n) / (2.0 * (c + n))
        log_term = log_term + np.log(ratio)
        grow = active & (log_term > scale)
        acc = np.where(grow, acc * np.exp(scale - log_term) + 1.0,
                       np.where(active, acc + np.exp(log_term - scale), acc))
        scale = np.where(grow, log_term, scale)
        n += 1
        # past the peak the ratio keeps falling, so the tail is bounded by a
        # geometric series at the current ratio
        rel = np.exp(log_term - scale) / acc
        with np.errstate(divide="ignore"):
            tail = np.where(ratio < 1.0, rel * ratio / (1.0 - ratio), np.inf)
        active = active & ~(tail < tol.rel_tol * 1e-2)
    out = scale + np.log(acc)
    return float(out) if out.ndim == 0 else out


def hyp2f1_at_half(b, c, tol: SeriesTolerance = DEFAULT_TOL):
    """Gauss hypergeometric F(1, b; c; 1/2) for positive integers b, c."""
    out = np.exp(log_hyp2f1_at_half(b, c, tol))
    return float(out) if np.ndim(out) == 0 else out


def gamma_order_prob(i, j, tol: SeriesTolerance = DEFAULT_TOL):
    """Pr{Gamma(i+1, beta) > Gamma(j+1, beta)} for independent Gamma variables.

    Uses (1/2)^(a+b) * C(a+b-1, b) * F(1, a+b; b+1; 1/2) with a = i+1, b = j+1,
    evaluated in log space. Broadcasts over array arguments.
    """
    i = np.asarray(i)
    j = np.asarray(j)
    if np.any(i < 0) or np.any(j < 0):
        raise ValueError("indices must be nonnegative")
    a = i.astype(float) + 1.0
    b = j.astype(float) + 1.0
    n = a + b
    log_binom = special.gammaln(n) - special.gammaln(b + 1.0) - special.gammaln(a)
    log_val = -n * _LN2 + log_binom + log_hyp2f1_at_half(n, b + 1.0, tol)
    out = np.minimum(np.exp(log_val), 1.0)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Poisson weights and the noncentral chi-squared (2 d.o.f.) mixture
# ---------------------------------------------------------------------------

def poisson_pmf(k, lam):
    """Poisson PMF evaluated as exp(k ln lam - lam - ln k!)."""
    k_a = np.asarray(k, dtype=float)
    lam = float(lam)
    if not lam > 0:
        raise ValueError("lam must be positive")
    out = np.exp(k_a * math.log(lam) - lam - special.gammaln(k_a + 1.0))
    return float(out) if out.ndim == 0 else out


def poisson_window(lam: float, tail_mass: float = DEFAULT_TOL.tail_mass) -> tuple[int, int]:
    """Index range [lo, hi] holding all but ``tail_mass`` of a Poisson(lam) law.

    At most ``tail_mass / 2`` of the mass is dropped from each side.
    """
    if lam <= 0:
        return 0, 0
    half = tail_mass / 2.0
    lo = int(stats.poisson.ppf(half, lam))
    hi = int(stats.poisson.isf(half, lam))
    return lo, max(hi, lo)


def _mixture_weights(noncentrality: float, sigma2: float, tol: SeriesTolerance):
    rate = 1.0 / (2.0 * sigma2)
    lam = noncentrality * rate
    if lam == 0:
        return np.array([0]), np.array([1.0]), rate
    # the window starts at zero: low-order components dominate the left tail,
    # so dropping them would cost relative accuracy there
    _, hi = poisson_window(lam, tol.tail_mass)
    idx = np.arange(0, hi + 1)
    return idx, poisson_pmf(idx, lam), rate


def noncentral_chisq2_pdf(x, noncentrality: float, sigma2: float):
    """Density of xh^2 + yh^2 with xh ~ N(x0, sigma2), yh ~ N(y0, sigma2).

    ``noncentrality`` is x0^2 + y0^2. The Poisson-weighted sum of
    Gamma(i+1, 1/(2 sigma2)) densities collapses to the Bessel form
    rate exp(-rate (x + nc)) I0(2 rate sqrt(nc x)), evaluated with the
    exponentially scaled I0 so it neither overflows nor truncates.
    """
    x_a = np.asarray(x, dtype=float)
    if np.any(x_a < 0) or noncentrality < 0 or not sigma2 > 0:
        raise ValueError("need x >= 0, noncentrality >= 0 and sigma2 > 0")
    rate = 1.0 / (2.0 * sigma2)
    root_x = np.sqrt(x_a)
    root_nc = math.sqrt(noncentrality)
    out = rate * np.exp(-rate * (root_x - root_nc) ** 2) * special.i0e(2.0 * rate * root_nc * root_x)
    return float(out) if out.ndim == 0 else out


def noncentral_chisq2_cdf(x, noncentrality: float, sigma2: float,
                          tol: SeriesTolerance = DEFAULT_TOL):
    """CDF matching :func:`noncentral_chisq2_pdf` (mixture of regularized gammas)."""
    x_a = np.asarray(x, dtype=float)
    if np.any(x_a < 0) or noncentrality < 0 or not sigma2 > 0:
        raise ValueError("need x >= 0, noncentrality >= 0 and sigma2 > 0")
    idx, w, rate = _mixture_weights(noncentrality, sigma2, tol)
    out = np.sum(w * special.gammainc(idx + 1.0, rate * x_a[..., None]), axis=-1)
    out = np.clip(out, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out
