"""Kalman-filter position tracking and prediction under sparse feedback.

All filter functions accept either one user (s_hat of shape (4,), P of shape
(4, 4)) or a batch (shapes (n, 4) and (n, 4, 4)); batched users never share
state.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .mobility import StateSpaceModel

PREDICTED = "predicted"
UPDATED = "updated"
_POS = [0, 2]


@dataclass
class FilterState:
    s_hat: np.ndarray
    P: np.ndarray
    phase: str = PREDICTED


def kf_init(n: int | None = None) -> FilterState:
    """Zero state, identity covariance, ready for the first update."""
    if n is None:
        return FilterState(np.zeros(4), np.eye(4), PREDICTED)
    return FilterState(np.zeros((n, 4)), np.tile(np.eye(4), (n, 1, 1)), PREDICTED)


def _sym(P: np.ndarray) -> np.ndarray:
    return 0.5 * (P + np.swapaxes(P, -1, -2))


def kf_update(fs: FilterState, z, model: StateSpaceModel) -> FilterState:
    """Measurement update with gain K = P H^T (H P H^T + R)^-1.

    The covariance uses the plain (I - K H) P form followed by symmetrization.
    With sigma_ob2 == 0 the innovation covariance may be singular; the
    pseudo-inverse is used and the position components are pinned to z.
    """
    if fs.phase != PREDICTED:
        raise ValueError("kf_update expects a predicted filter state")
    z = np.asarray(z, dtype=float)
    P, s = fs.P, fs.s_hat
    PHt = P[..., :, _POS]
    S = P[..., _POS, :][..., :, _POS] + model.R
    if model.sigma_ob2 > 0:
        gain = np.swapaxes(np.linalg.solve(S, np.swapaxes(PHt, -1, -2)), -1, -2)
    else:
        gain = PHt @ np.linalg.pinv(S)
    innov = z - s[..., _POS]
    s_new = s + np.einsum("...ij,...j->...i", gain, innov)
    KH = np.zeros(P.shape)
    KH[..., :, _POS] = gain
    P_new = _sym((np.eye(4) - KH) @ P)
    if model.sigma_ob2 == 0:
        s_new[..., _POS] = z
    return FilterState(s_new, P_new, UPDATED)


def kf_predict(fs: FilterState, model: StateSpaceModel) -> FilterState:
    """Time update s <- A s, P <- A P A^T + Q (from either phase)."""
    A = model.A
    s_new = fs.s_hat @ A.T
    P_new = A @ fs.P @ A.T + model.Q
    return FilterState(s_new, P_new, PREDICTED)


def estimated_distance(fs: FilterState):
    """Distance sqrt(x_hat^2 + y_hat^2) from the current state estimate."""
    out = np.hypot(fs.s_hat[..., 0], fs.s_hat[..., 2])
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class FeedbackSchedule:
    """Per-slot measurement availability, shape (K,) or (n, K)."""

    mask: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mask, dtype=bool)
        if not m.any(axis=-1).all():
            raise ValueError("schedule needs at least one available slot per user")
        object.__setattr__(self, "mask", m)

    @classmethod
    def full(cls, K: int) -> "FeedbackSchedule":
        return cls(np.ones(K, dtype=bool))

    @classmethod
    def periodic(cls, K: int, rate: float) -> "FeedbackSchedule":
        """Every round(1/rate)-th slot carries a measurement, starting at slot 0."""
        if not 0 < rate <= 1:
            raise ValueError("rate must lie in (0, 1]")
        period = max(int(round(1.0 / rate)), 1)
        return cls(np.arange(K) % period == 0)

    @classmethod
    def random(cls, K: int, rate: float, rng: np.random.Generator, n: int | None = None):
        shape = (K,) if n is None else (n, K)
        m = rng.random(shape) < rate
        m[..., 0] = True
        return cls(m)

    @property
    def rate(self) -> float:
        return float(self.mask.mean())


@dataclass
class TrackResult:
    positions: np.ndarray  # (n, K, 2) estimate used at each slot
    distances: np.ndarray  # (n, K)
    trace_P: np.ndarray  # (n, K)
    measured: np.ndarray  # (n, K) bool


def _as_batch(measurements):
    z = np.asarray(measurements, dtype=float)
    single = z.ndim == 2
    return (z[None] if single else z), single


def _squeeze(res: TrackResult, single: bool) -> TrackResult:
    if not single:
        return res
    return TrackResult(res.positions[0], res.distances[0], res.trace_P[0], res.measured[0])


def track_full(measurements, model: StateSpaceModel) -> TrackResult:
    """Position tracking with a measurement in every slot.

    Each slot: update with z_k, read the estimate from s_{k|k}, then predict.
    ``measurements`` has shape (K, 2) or (n, K, 2).
    """
    z, single = _as_batch(measurements)
    n, K, _ = z.shape
    pos = np.empty((n, K, 2))
    tr = np.empty((n, K))
    fs = kf_init(n)
    for k in range(K):
        fs = kf_update(fs, z[:, k], model)
        pos[:, k] = fs.s_hat[:, _POS]
        tr[:, k] = np.trace(fs.P, axis1=-2, axis2=-1)
        fs = kf_predict(fs, model)
    res = TrackResult(pos, np.hypot(pos[..., 0], pos[..., 1]), tr, np.ones((n, K), dtype=bool))
    return _squeeze(res, single)


def track_trajectory(measurements, model: StateSpaceModel,
                     schedule: FeedbackSchedule | None = None) -> TrackResult:
    """Position prediction with intermittent feedback.

    Slots with a measurement run the full update/predict cycle. Slots without
    one report the predicted estimate s_{k|k-1} and only run the prediction.
    Entries of ``measurements`` in unavailable slots are ignored (may be NaN).
    """
    z, single = _as_batch(measurements)
    n, K, _ = z.shape
    if schedule is None:
        schedule = FeedbackSchedule.full(K)
    mask = np.broadcast_to(schedule.mask, (n, K))
    pos = np.empty((n, K, 2))
    tr = np.empty((n, K))
    fs = kf_init(n)
    for k in range(K):
        avail = mask[:, k]
        if avail.all():
            cur = kf_update(fs, z[:, k], model)
        elif avail.any():
            upd = kf_update(fs, np.where(avail[:, None], z[:, k], 0.0), model)
            cur = FilterState(np.where(avail[:, None], upd.s_hat, fs.s_hat),
                              np.where(avail[:, None, None], upd.P, fs.P), UPDATED)
        else:
            cur = fs
        pos[:, k] = cur.s_hat[:, _POS]
        tr[:, k] = np.trace(cur.P, axis1=-2, axis2=-1)
        fs = kf_predict(FilterState(cur.s_hat, cur.P, UPDATED), model)
    res = TrackResult(pos, np.hypot(pos[..., 0], pos[..., 1]), tr, mask.copy())
    return _squeeze(res, single)


def position_rmse(estimates, truth, skip: int = 25) -> float:
    """Root mean squared 2-D position error, ignoring the first ``skip`` slots."""
    est = np.asarray(estimates, dtype=float)[..., skip:, :]
    ref = np.asarray(truth, dtype=float)[..., skip:, :]
    return float(np.sqrt(np.mean(np.sum((est - ref) ** 2, axis=-1))))


ESTIMATE_COLUMNS = ("user_id", "k", "x_hat", "y_hat", "d_hat", "trace_P", "measured_flag")


def write_estimates_csv(path, res: TrackResult) -> None:
    pos = np.asarray(res.positions)
    if pos.ndim == 2:
        res = TrackResult(pos[None], np.asarray(res.distances)[None],
                          np.asarray(res.trace_P)[None], np.asarray(res.measured)[None])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(ESTIMATE_COLUMNS)
        n, K = res.distances.shape
        for u in range(n):
            for k in range(K):
                w.writerow([u, k, repr(float(res.positions[u, k, 0])),
                            repr(float(res.positions[u, k, 1])), repr(float(res.distances[u, k])),
                            repr(float(res.trace_P[u, k])), int(res.measured[u, k])])


# Process-noise intensities calibrated per mobility model by minimizing the
# mean full-feedback RMSE over sigma_ob^2 in {25, 50} on a held-out seed.
DEFAULT_SIGMA_W2 = {"rw": 4.1, "rwp": 8.3, "gm": 3.9}


def calibrate_sigma_w2(truth, observations, sigma_ob2_values, T: float = 0.2,
                       skip: int = 25, bounds=(0.1, 100.0)) -> float:
    """Process-noise intensity that minimizes the mean tracking RMSE.

    ``truth`` has shape (n, K, 2); ``observations`` is a sequence of arrays of
    the same shape, one per entry of ``sigma_ob2_values``. The search runs on
    log(sigma_w2) with bounded scalar minimization.
    """
    from scipy import optimize

    def objective(log_w):
        w = math.exp(log_w)
        return float(np.mean([
            position_rmse(track_full(z, StateSpaceModel(T, w, s2)).positions, truth, skip)
            for z, s2 in zip(observations, sigma_ob2_values)
        ]))

    lo, hi = math.log(bounds[0]), math.log(bounds[1])
    res = optimize.minimize_scalar(objective, bounds=(lo, hi), method="bounded",
                                   options={"xatol": 0.02})
    return math.exp(res.x)
