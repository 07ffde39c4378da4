"""Geometry, path loss, Rayleigh fading and position-observation noise.

The BS sits at the origin. A user at distance d sees the channel gain
|h|^2 d^(-alpha) with |h|^2 ~ Exp(1); no reference-distance constant is used.
All randomness comes from a caller-supplied ``numpy.random.Generator``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MIN_DISTANCE = 0.5  # meters; deployments closer than this are redrawn


@dataclass(frozen=True)
class UserGeometry:
    x: float
    y: float

    @property
    def distance(self) -> float:
        return math.hypot(self.x, self.y)


@dataclass(frozen=True)
class ObservedGeometry:
    x_hat: float
    y_hat: float

    @property
    def distance(self) -> float:
        return math.hypot(self.x_hat, self.y_hat)


@dataclass(frozen=True)
class LinkConfig:
    """Link-level parameters shared by the analysis and the simulator.

    alpha: path-loss exponent.
    noise_power_dbm: receiver noise power sigma_n^2 in dBm.
    sigma_ob2: per-axis variance of the position observation noise (m^2).
    target_rate_bpcu: target rate R0 of every signal, bit per channel use.
    """

    alpha: float = 2.0
    noise_power_dbm: float = -50.0
    sigma_ob2: float = 9.0
    target_rate_bpcu: float = 0.5

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.sigma_ob2 < 0:
            raise ValueError("sigma_ob2 must be nonnegative")
        if not self.target_rate_bpcu > 0:
            raise ValueError("target_rate_bpcu must be positive")

    @property
    def target_snr(self) -> float:
        """eps0 = 2^R0 - 1."""
        return 2.0 ** self.target_rate_bpcu - 1.0

    @property
    def oma_target_snr(self) -> float:
        """OMA needs twice the rate on half the resource: 2^(2 R0) - 1."""
        return 2.0 ** (2.0 * self.target_rate_bpcu) - 1.0

    def snr(self, power_dbm: float) -> float:
        return snr_of(power_dbm, self.noise_power_dbm)


def path_loss_rate(distance, alpha: float):
    """d^alpha, the exponential rate of the gain |h|^2 d^(-alpha)."""
    return np.asarray(distance, dtype=float) ** alpha


def dbm_to_linear(p_dbm):
    """dBm to milliwatts."""
    return 10.0 ** (np.asarray(p_dbm, dtype=float) / 10.0)


def snr_of(power_dbm, noise_dbm):
    """Transmit SNR rho = P / sigma_n^2 from two dBm figures."""
    out = 10.0 ** ((np.asarray(power_dbm, dtype=float) - noise_dbm) / 10.0)
    return float(out) if out.ndim == 0 else out


def deploy_positions(count: int, disc_radius: float, rng: np.random.Generator,
                     min_distance: float = MIN_DISTANCE) -> np.ndarray:
    """Area-uniform positions in the disc, shape (count, 2).

    Points closer to the BS than ``min_distance`` are redrawn.
    """
    if not disc_radius > 0:
        raise ValueError("disc_radius must be positive")
    if min_distance >= disc_radius:
        raise ValueError("min_distance must be smaller than disc_radius")
    out = np.empty((count, 2))
    filled = 0
    while filled < count:
        need = count - filled
        r = disc_radius * np.sqrt(rng.random(need))
        theta = 2.0 * np.pi * rng.random(need)
        keep = r >= min_distance
        k = int(keep.sum())
        out[filled:filled + k, 0] = (r * np.cos(theta))[keep]
        out[filled:filled + k, 1] = (r * np.sin(theta))[keep]
        filled += k
    return out


def deploy_users(count: int, disc_radius: float, rng_seed: int,
                 min_distance: float = MIN_DISTANCE) -> list[UserGeometry]:
    rng = np.random.default_rng(rng_seed)
    pos = deploy_positions(count, disc_radius, rng, min_distance)
    return [UserGeometry(float(x), float(y)) for x, y in pos]


def observe_positions(positions, sigma_ob2: float, rng: np.random.Generator) -> np.ndarray:
    """Add i.i.d. N(0, sigma_ob2) noise to each coordinate of an (..., 2) array."""
    if sigma_ob2 < 0:
        raise ValueError("sigma_ob2 must be nonnegative")
    positions = np.asarray(positions, dtype=float)
    if sigma_ob2 == 0:
        return positions.copy()
    return positions + math.sqrt(sigma_ob2) * rng.standard_normal(positions.shape)


def observe_position(true: UserGeometry, sigma_ob2: float,
                     rng: np.random.Generator) -> ObservedGeometry:
    x_hat, y_hat = observe_positions([true.x, true.y], sigma_ob2, rng)
    return ObservedGeometry(float(x_hat), float(y_hat))


def sample_fading(rng: np.random.Generator, size=None):
    """|h|^2 ~ Exp(1) draws."""
    return rng.exponential(1.0, size)


def channel_gains(distances, alpha: float, fading) -> np.ndarray:
    """|r|^2 = |h|^2 d^(-alpha), broadcasting ``distances`` against ``fading``."""
    return np.asarray(fading, dtype=float) * np.asarray(distances, dtype=float) ** (-alpha)
