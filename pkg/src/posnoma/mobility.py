"""User motion: the filter's linear-Gaussian model and three mobility generators.

Trajectories are arrays of shape (n_users, K, 4) holding [x, vx, y, vy] per
sample. The velocity stored at sample k is the one applied over [k, k+1), so
p[k+1] = p[k] + v[k] * T except where a boundary reflection occurs.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .channel import deploy_positions

SAMPLE_INTERVAL = 0.2  # seconds
HORIZON = 300  # samples


@dataclass(frozen=True)
class MobileState:
    x: float
    vx: float
    y: float
    vy: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.vx, self.y, self.vy])

    @classmethod
    def from_array(cls, s) -> "MobileState":
        return cls(*(float(v) for v in s))


@dataclass(frozen=True)
class StateSpaceModel:
    """Discrete velocity-sensor model s[k+1] = A s[k] + w[k], z[k] = H s[k] + n[k].

    sigma_w2 is the intensity of the white noise driving the position
    components; sigma_ob2 is the per-axis observation noise variance.
    """

    T: float = SAMPLE_INTERVAL
    sigma_w2: float = 1.0
    sigma_ob2: float = 25.0

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("T must be positive")
        if self.sigma_w2 < 0 or self.sigma_ob2 < 0:
            raise ValueError("noise variances must be nonnegative")

    @property
    def A_tilde(self) -> np.ndarray:
        a = np.zeros((4, 4))
        a[0, 1] = a[2, 3] = 1.0
        return a

    @property
    def B_tilde(self) -> np.ndarray:
        b = np.zeros((4, 2))
        b[0, 0] = b[2, 1] = 1.0
        return b

    @property
    def A(self) -> np.ndarray:
        a = np.eye(4)
        a[0, 1] = a[2, 3] = self.T
        return a

    @property
    def Q(self) -> np.ndarray:
        return np.diag([self.T * self.sigma_w2, 0.0, self.T * self.sigma_w2, 0.0])

    @property
    def H(self) -> np.ndarray:
        h = np.zeros((2, 4))
        h[0, 0] = h[1, 2] = 1.0
        return h

    @property
    def R(self) -> np.ndarray:
        return self.sigma_ob2 * np.eye(2)


def linear_step(state, model: StateSpaceModel, rng: np.random.Generator) -> np.ndarray:
    """One transition of the linear-Gaussian model for a (..., 4) state array."""
    state = np.asarray(state, dtype=float)
    nxt = state @ model.A.T
    if model.sigma_w2 > 0:
        sd = math.sqrt(model.T * model.sigma_w2)
        noise = sd * rng.standard_normal(state.shape[:-1] + (2,))
        nxt[..., 0] += noise[..., 0]
        nxt[..., 2] += noise[..., 1]
    return nxt


def observe_state(state, model: StateSpaceModel, rng: np.random.Generator) -> np.ndarray:
    """Noisy position measurement H s + n for a (..., 4) state array."""
    state = np.asarray(state, dtype=float)
    z = state[..., [0, 2]].copy()
    if model.sigma_ob2 > 0:
        z += math.sqrt(model.sigma_ob2) * rng.standard_normal(z.shape)
    return z


def linear_trajectories(model: StateSpaceModel, K: int, n: int, rng: np.random.Generator,
                        start=None) -> np.ndarray:
    """Ground truth drawn from the filter's own model, shape (n, K, 4)."""
    out = np.empty((n, K, 4))
    out[:, 0] = np.zeros(4) if start is None else start
    for k in range(1, K):
        out[:, k] = linear_step(out[:, k - 1], model, rng)
    return out


# ---------------------------------------------------------------------------
# Empirical mobility models
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RandomWalkParams:
    min_speed: float = 0.0
    max_speed: float = 2.0
    interval: int = 30  # samples between velocity redraws
    disc_radius: float = 30.0

    def __post_init__(self):
        if not 0 <= self.min_speed <= self.max_speed:
            raise ValueError("need 0 <= min_speed <= max_speed")
        if self.interval < 1:
            raise ValueError("interval must be >= 1")
        if not self.disc_radius > 0:
            raise ValueError("disc_radius must be positive")


@dataclass(frozen=True)
class RandomWaypointParams:
    min_speed: float = 1.0
    max_speed: float = 3.0
    max_pause: int = 5  # samples
    disc_radius: float = 50.0

    def __post_init__(self):
        if not 0 < self.min_speed <= self.max_speed:
            raise ValueError("random waypoint needs 0 < min_speed <= max_speed")
        if self.max_pause < 0:
            raise ValueError("max_pause must be nonnegative")
        if not self.disc_radius > 0:
            raise ValueError("disc_radius must be positive")


@dataclass(frozen=True)
class GaussMarkovParams:
    """Gauss-Markov speed/direction recursion.

    x[k] = a x[k-1] + (1 - a) mean + sqrt(1 - a^2) std * N(0, 1) for both the
    speed and the direction, with a = ``tuning``.
    """

    speed_var: float = 2.0
    tuning: float = 0.5
    mean_speed: float = 1.0
    direction_std: float = math.pi / 4
    disc_radius: float = 30.0

    def __post_init__(self):
        if self.speed_var < 0 or self.direction_std < 0:
            raise ValueError("variances must be nonnegative")
        if not 0 <= self.tuning <= 1:
            raise ValueError("tuning must lie in [0, 1]")
        if not self.disc_radius > 0:
            raise ValueError("disc_radius must be positive")


MobilityParams = Union[RandomWalkParams, RandomWaypointParams, GaussMarkovParams]

TABLE_I = {
    "rw": RandomWalkParams(),
    "rwp": RandomWaypointParams(),
    "gm": GaussMarkovParams(),
}


def _reflect(vec: np.ndarray, normal: np.ndarray) -> np.ndarray:
    return vec - 2.0 * np.sum(vec * normal, axis=-1, keepdims=True) * normal


def _advance(pos: np.ndarray, vel: np.ndarray, T: float, radius: float):
    """Move (n, 2) positions by vel*T, reflecting specularly off the disc edge.

    Returns the new positions, the (possibly reflected) velocities and a mask
    of users that hit the boundary.
    """
    new = pos + vel * T
    vel = vel.copy()
    hit = np.zeros(len(pos), dtype=bool)
    start = pos.copy()
    move = vel * T
    for _ in range(8):
        out = np.einsum("ij,ij->i", new, new) > radius ** 2
        if not out.any():
            break
        hit |= out
        p, u = start[out], move[out]
        uu = np.einsum("ij,ij->i", u, u)
        pu = np.einsum("ij,ij->i", p, u)
        pp = np.einsum("ij,ij->i", p, p)
        disc = np.maximum(pu ** 2 - uu * (pp - radius ** 2), 0.0)
        t = np.clip((-pu + np.sqrt(disc)) / uu, 0.0, 1.0)
        cross = p + t[:, None] * u
        normal = cross / np.linalg.norm(cross, axis=1, keepdims=True)
        u_ref = _reflect(u, normal)
        new[out] = cross + (1.0 - t)[:, None] * u_ref
        vel[out] = _reflect(vel[out], normal)
        start[out] = cross
        move[out] = (1.0 - t)[:, None] * u_ref
    r = np.linalg.norm(new, axis=1)
    stuck = r > radius
    if stuck.any():
        new[stuck] *= (radius / r[stuck])[:, None]
    return new, vel, hit


def _pack(pos: np.ndarray, vel: np.ndarray) -> np.ndarray:
    return np.stack([pos[..., 0], vel[..., 0], pos[..., 1], vel[..., 1]], axis=-1)


def rw_trajectories(params: RandomWalkParams, K: int, n: int, rng: np.random.Generator,
                    T: float = SAMPLE_INTERVAL, start=None) -> np.ndarray:
    """Random walk: speed and heading redrawn every ``params.interval`` samples."""
    pos = deploy_positions(n, params.disc_radius, rng) if start is None else np.array(start, float)
    out = np.empty((n, K, 4))
    vel = np.zeros((n, 2))
    for k in range(K):
        if k > 0:
            pos, vel, _ = _advance(pos, vel, T, params.disc_radius)
        if k % params.interval == 0:
            speed = rng.uniform(params.min_speed, params.max_speed, n)
            heading = rng.uniform(0.0, 2.0 * np.pi, n)
            vel = speed[:, None] * np.stack([np.cos(heading), np.sin(heading)], axis=1)
        out[:, k] = _pack(pos, vel)
    return out


def rwp_trajectories(params: RandomWaypointParams, K: int, n: int, rng: np.random.Generator,
                     T: float = SAMPLE_INTERVAL, start=None) -> np.ndarray:
    """Random waypoint: travel to a uniform point in the disc, pause, repeat."""
    radius = params.disc_radius
    pos = deploy_positions(n, radius, rng) if start is None else np.array(start, float)
    target = deploy_positions(n, radius, rng)
    speed = rng.uniform(params.min_speed, params.max_speed, n)
    pause = np.zeros(n, dtype=int)
    out = np.empty((n, K, 4))
    for k in range(K):
        vel = np.zeros((n, 2))
        moving = pause == 0
        gap = target - pos
        dist = np.linalg.norm(gap, axis=1)
        step = speed * T
        arrive = moving & (step >= dist)
        cruise = moving & ~arrive
        vel[cruise] = gap[cruise] * (speed[cruise] / dist[cruise])[:, None]
        vel[arrive] = gap[arrive] / T
        out[:, k] = _pack(pos, vel)
        pos = pos + vel * T
        pos[arrive] = target[arrive]
        # bookkeeping for the next sample
        resting = ~moving
        pause[resting] -= 1
        if arrive.any():
            pause[arrive] = rng.integers(0, params.max_pause + 1, int(arrive.sum()))
        renew = (arrive | resting) & (pause == 0)
        if renew.any():
            m = int(renew.sum())
            target[renew] = deploy_positions(m, radius, rng)
            speed[renew] = rng.uniform(params.min_speed, params.max_speed, m)
    return out


def gm_trajectories(params: GaussMarkovParams, K: int, n: int, rng: np.random.Generator,
                    T: float = SAMPLE_INTERVAL, start=None) -> np.ndarray:
    """Gauss-Markov: speed and heading follow AR(1) recursions with memory ``tuning``.

    Hitting the edge reflects both the current and the mean heading so the user
    does not keep drifting back into the wall.
    """
    a = params.tuning
    speed_sd = math.sqrt(params.speed_var)
    innov = math.sqrt(max(1.0 - a * a, 0.0))
    pos = deploy_positions(n, params.disc_radius, rng) if start is None else np.array(start, float)
    speed = params.mean_speed + speed_sd * rng.standard_normal(n)
    heading = rng.uniform(0.0, 2.0 * np.pi, n)
    mean_heading = heading.copy()
    out = np.empty((n, K, 4))
    for k in range(K):
        if k > 0:
            speed = (a * speed + (1.0 - a) * params.mean_speed
                     + innov * speed_sd * rng.standard_normal(n))
            heading = (a * heading + (1.0 - a) * mean_heading
                       + innov * params.direction_std * rng.standard_normal(n))
        unit = np.stack([np.cos(heading), np.sin(heading)], axis=1)
        vel = speed[:, None] * unit
        out[:, k, :] = _pack(pos, vel)
        pos, new_vel, hit = _advance(pos, vel, T, params.disc_radius)
        if hit.any():
            # recover the reflected heading; speed sign is kept
            sgn = np.where(speed[hit] >= 0, 1.0, -1.0)
            ref = new_vel[hit] * sgn[:, None]
            new_heading = np.arctan2(ref[:, 1], ref[:, 0])
            turn = new_heading - heading[hit]
            heading[hit] = new_heading
            mean_heading[hit] = mean_heading[hit] + turn
    return out


def generate_trajectories(params: MobilityParams, K: int, n: int, rng: np.random.Generator,
                          T: float = SAMPLE_INTERVAL) -> np.ndarray:
    if isinstance(params, RandomWalkParams):
        return rw_trajectories(params, K, n, rng, T)
    if isinstance(params, RandomWaypointParams):
        return rwp_trajectories(params, K, n, rng, T)
    if isinstance(params, GaussMarkovParams):
        return gm_trajectories(params, K, n, rng, T)
    raise TypeError(f"unknown mobility parameters {params!r}")


def rw_trajectory(params: RandomWalkParams, K: int, rng: np.random.Generator,
                  T: float = SAMPLE_INTERVAL) -> np.ndarray:
    return rw_trajectories(params, K, 1, rng, T)[0]


def rwp_trajectory(params: RandomWaypointParams, K: int, rng: np.random.Generator,
                   T: float = SAMPLE_INTERVAL) -> np.ndarray:
    return rwp_trajectories(params, K, 1, rng, T)[0]


def gm_trajectory(params: GaussMarkovParams, K: int, rng: np.random.Generator,
                  T: float = SAMPLE_INTERVAL) -> np.ndarray:
    return gm_trajectories(params, K, 1, rng, T)[0]


TRAJECTORY_COLUMNS = ("user_id", "k", "t_seconds", "x", "y", "vx", "vy")


def write_trajectories_csv(path, traj: np.ndarray, T: float = SAMPLE_INTERVAL) -> None:
    traj = np.asarray(traj)
    if traj.ndim == 2:
        traj = traj[None]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRAJECTORY_COLUMNS)
        for u, user in enumerate(traj):
            for k, (x, vx, y, vy) in enumerate(user):
                w.writerow([u, k, repr(k * T), repr(float(x)), repr(float(y)),
                            repr(float(vx)), repr(float(vy))])


def read_trajectories_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    n = max(int(r["user_id"]) for r in rows) + 1
    K = max(int(r["k"]) for r in rows) + 1
    out = np.empty((n, K, 4))
    for r in rows:
        out[int(r["user_id"]), int(r["k"])] = [float(r["x"]), float(r["vx"]),
                                                float(r["y"]), float(r["vy"])]
    return out
