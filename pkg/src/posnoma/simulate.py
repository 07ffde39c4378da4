"""Monte Carlo engine for distance-ordered NOMA pairs.

Static runs keep both users at fixed positions and draw fresh observation noise
and Rayleigh fading per trial. Mobile runs draw whole trajectories, feed the
observations through the tracker, and evaluate every slot with each
distance-estimation scheme on the same fading draws.

Randomness is organised in blocks of trials. Block ``b`` of a run with master
seed ``s`` draws from ``SeedSequence(s, spawn_key=(b,))`` regardless of which
thread executes it, and block partial sums are reduced in block order, so the
result does not depend on the thread count.
"""

from __future__ import annotations

import csv
import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .analysis import (
    DownlinkPower,
    PairScenario,
    UplinkPower,
    decoding_error_prob_fading_free,
    decoding_error_prob_rayleigh,
    downlink_avg_sum_rate,
    downlink_cop,
    downlink_user_outage,
    oma_avg_sum_rate,
    oma_cop,
    uplink_cop,
    uplink_cop_rates,
    uplink_sum_rate_ordered,
)
from .channel import MIN_DISTANCE, LinkConfig
from .mobility import SAMPLE_INTERVAL, HORIZON, TABLE_I, StateSpaceModel, generate_trajectories
from .power import dpa_beta_closed_form, dpc_rho2_plus
from .tracking import DEFAULT_SIGMA_W2, FeedbackSchedule, track_full, track_trajectory

LN2 = math.log(2.0)


class ConfigError(ValueError):
    """Invalid experiment configuration."""


class AccessScheme(enum.Enum):
    NOMA = "noma"
    OMA = "oma"


# ---------------------------------------------------------------------------
# Per-trial evaluation
# ---------------------------------------------------------------------------

@dataclass
class TrialOutcome:
    """Vectorized outcome of a batch of trials.

    ``per_user_outage`` has a trailing axis of length 2 in the column order of
    the gains that were passed in. ``order_error`` flags trials whose
    estimated order disagrees with the instantaneous gain order.
    ``chosen_scheme`` is 1 where OMA served the pair, 0 for NOMA.
    """

    sum_rate_bpcu: np.ndarray
    per_user_outage: np.ndarray
    order_error: np.ndarray
    chosen_scheme: np.ndarray | None = None

    @property
    def common_outage(self) -> np.ndarray:
        return self.per_user_outage.any(axis=-1)


def _log2_1p(x):
    return np.log1p(x) / LN2


def _downlink_roles(x_ne, x_fe, beta, rho, eps0):
    # the estimated-far user owns the high-power signal, decoded by both users
    beta = np.asarray(beta, dtype=float)
    weak = rho * (1.0 - beta)
    margin = beta - (1.0 - beta) * eps0
    with np.errstate(divide="ignore"):
        a = np.where(margin > 0, eps0 / (rho * np.where(margin > 0, margin, 1.0)), np.inf)
        b = eps0 / weak
    zeta = np.maximum(a, b)
    m = np.minimum(x_ne, x_fe)
    rate = _log2_1p(rho * m) - _log2_1p(weak * m) + _log2_1p(weak * x_ne)
    return rate, x_ne < zeta, m < a


def _uplink_roles(x_ne, x_fe, rho1, rho2, eps0):
    # the estimated-near user is decoded first with the other as interference
    first = rho1 * x_ne >= eps0 * (rho2 * x_fe + 1.0)
    second = rho2 * x_fe >= eps0
    rate = _log2_1p(rho1 * x_ne + rho2 * x_fe)
    return rate, ~first, ~(first & second)


def _oma_users(x_a, x_b, rho, eps0_oma):
    rate = 0.5 * (_log2_1p(rho * x_a) + _log2_1p(rho * x_b))
    return rate, rho * x_a < eps0_oma, rho * x_b < eps0_oma


def _split(gains, near_est):
    gains = np.asarray(gains, dtype=float)
    near_est = np.asarray(near_est, dtype=int)
    x_ne = np.take_along_axis(gains, near_est[..., None], axis=-1)[..., 0]
    x_fe = np.take_along_axis(gains, (1 - near_est)[..., None], axis=-1)[..., 0]
    return x_ne, x_fe, near_est


def _to_columns(out_ne, out_fe, near_est):
    col0 = np.where(near_est == 0, out_ne, out_fe)
    col1 = np.where(near_est == 0, out_fe, out_ne)
    return np.stack([col0, col1], axis=-1)


def downlink_trial(gains, near_est, beta, rho: float, eps0: float) -> TrialOutcome:
    """Downlink pair with superposition coding and SIC.

    ``gains`` holds |r|^2 for the two users along the last axis and
    ``near_est`` the column index of the user ranked nearer by estimate. The
    signal of the farther-ranked user (power fraction ``beta``) is decoded by
    both users, so its rate is set by the smaller gain; the other signal is
    decoded after SIC by the nearer-ranked user only.
    """
    x_ne, x_fe, near_est = _split(gains, near_est)
    rate, out_ne, out_fe = _downlink_roles(x_ne, x_fe, beta, rho, eps0)
    return TrialOutcome(rate, _to_columns(out_ne, out_fe, near_est), x_ne < x_fe)


def uplink_trial(gains, near_est, rho1, rho2, eps0: float) -> TrialOutcome:
    """Uplink pair decoded at the BS in estimated-distance order.

    The nearer-ranked user transmits at SNR ``rho1`` and is decoded first; a
    failure there also takes down the second user. The sum rate is the sum of
    the two stage rates and does not depend on the decoding order.
    """
    x_ne, x_fe, near_est = _split(gains, near_est)
    rate, out_ne, out_fe = _uplink_roles(x_ne, x_fe, rho1, rho2, eps0)
    return TrialOutcome(rate, _to_columns(out_ne, out_fe, near_est), x_ne < x_fe)


def oma_trial(gains, rho: float, eps0_oma: float) -> TrialOutcome:
    """Each user alone on half of the resource."""
    gains = np.asarray(gains, dtype=float)
    rate, out_a, out_b = _oma_users(gains[..., 0], gains[..., 1], rho, eps0_oma)
    return TrialOutcome(rate, np.stack([out_a, out_b], axis=-1),
                        np.zeros(rate.shape, dtype=bool), np.ones(rate.shape, dtype=np.int8))


def pair_users(estimated_distances) -> tuple[list[tuple[int, int]], int | None]:
    """Pair nearest with farthest by estimated distance.

    Returns the index pairs (nearer, farther) and the unpaired median user for
    odd counts (``None`` otherwise). Ties are broken by user index.
    """
    d = np.asarray(estimated_distances, dtype=float)
    if d.ndim != 1 or d.size < 2:
        raise ValueError("need a 1-D array of at least two distances")
    order = np.argsort(d, kind="stable")
    m = d.size
    pairs = [(int(order[i]), int(order[m - 1 - i])) for i in range(m // 2)]
    leftover = int(order[m // 2]) if m % 2 else None
    return pairs, leftover


def hybrid_uplink_select(sc_est: PairScenario, power: UplinkPower, pe1_est: float = 0.0,
                         oma_rho: float | None = None) -> tuple[AccessScheme, float]:
    """Pick NOMA or OMA by the smaller predicted COP on estimated distances.

    OMA uses SNR ``oma_rho`` (default ``power.rho1``). Equal predictions go
    to NOMA.
    """
    rho = power.rho1 if oma_rho is None else oma_rho
    noma = uplink_cop(sc_est, power, pe1_est)
    oma = oma_cop(sc_est, rho)
    if oma < noma:
        return AccessScheme.OMA, oma
    return AccessScheme.NOMA, noma


def _hybrid_choose_oma(lam_ne, lam_fe, rho1, rho2, rho_oma, link: LinkConfig, pe1_est):
    lo, hi = np.minimum(lam_ne, lam_fe), np.maximum(lam_ne, lam_fe)
    noma = uplink_cop_rates(lo, hi, rho1, rho2, link.target_snr, pe1_est)
    oma = 1.0 - np.exp(-link.oma_target_snr * (lam_ne + lam_fe) / rho_oma)
    return oma < noma


def _merge(choose_oma, noma_rate, noma_out, oma_rate, oma_out):
    rate = np.where(choose_oma, oma_rate, noma_rate)
    out = [np.where(choose_oma, o, n) for n, o in zip(noma_out, oma_out)]
    return rate, out


# ---------------------------------------------------------------------------
# Aggregation
# ---------------------------------------------------------------------------

_STAT_FIELDS = ("n", "rate_sum", "rate_sq", "cop", "out1", "out2", "pe_distance",
                "pe_gain", "oma")


def _partial(rate, out1, out2, pe_distance, pe_gain, oma, axis=None):
    """Sums of the per-trial statistics (over ``axis``)."""
    common = out1 | out2
    vals = [np.sum(np.ones_like(rate), axis=axis), np.sum(rate, axis=axis),
            np.sum(rate * rate, axis=axis), np.sum(common, axis=axis),
            np.sum(out1, axis=axis), np.sum(out2, axis=axis),
            np.sum(pe_distance, axis=axis), np.sum(pe_gain, axis=axis), np.sum(oma, axis=axis)]
    return np.stack([np.asarray(v, dtype=float) for v in vals])


PROBABILITY_METRICS = ("cop", "outage_user1", "outage_user2", "pe_distance", "pe_gain",
                       "oma_fraction")
METRICS = ("sum_rate",) + PROBABILITY_METRICS


@dataclass(frozen=True)
class MetricsReport:
    """Aggregated Monte Carlo statistics.

    ``outage_user1/2`` refer to the truly nearer and farther user.
    ``pe_distance`` is the estimated order disagreeing with the true distance
    order, ``pe_gain`` with the instantaneous gain order. Standard errors are
    binomial for probabilities and sample-based for the sum rate.
    """

    trials: int
    sum_rate: float
    sum_rate_std: float
    cop: float
    outage_user1: float
    outage_user2: float
    pe_distance: float
    pe_gain: float
    oma_fraction: float

    @classmethod
    def from_sums(cls, s) -> "MetricsReport":
        n = float(s[0])
        if n <= 0:
            raise ValueError("no trials to report")
        mean = s[1] / n
        var = max(s[2] / n - mean * mean, 0.0) * n / max(n - 1.0, 1.0)
        return cls(int(n), float(mean), math.sqrt(var), float(s[3] / n), float(s[4] / n),
                   float(s[5] / n), float(s[6] / n), float(s[7] / n), float(s[8] / n))

    def value(self, metric: str) -> float:
        if metric not in METRICS:
            raise KeyError(metric)
        return getattr(self, metric)

    def stderr(self, metric: str) -> float:
        if metric == "sum_rate":
            return self.sum_rate_std / math.sqrt(self.trials)
        p = self.value(metric)
        return math.sqrt(p * (1.0 - p) / self.trials)

    def half_width(self, metric: str, z: float = 1.96) -> float:
        return z * self.stderr(metric)


def _run_blocks(fn, n_blocks: int, threads: int):
    if threads <= 1 or n_blocks <= 1:
        results = [fn(b) for b in range(n_blocks)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(fn, range(n_blocks)))
    total = results[0]
    for r in results[1:]:
        total = total + r
    return total


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(block,)))


# ---------------------------------------------------------------------------
# Static experiments
# ---------------------------------------------------------------------------

DOWNLINK_SCHEMES = ("fixed", "dpa", "oma")
UPLINK_SCHEMES = ("fixed", "dpc", "oma", "hybrid")


@dataclass(frozen=True)
class StaticConfig:
    """Two users at fixed positions.

    Downlink: ``power_dbm`` is the BS transmit power. Uplink: ``power_dbm``
    applies to the user ranked nearer and ``power2_dbm`` (default equal) to the
    other; with DPC they are the caps. OMA serves each user at ``power_dbm``.
    The hybrid scheme picks per trial between DPC NOMA and OMA.
    """

    direction: str = "downlink"
    u1: tuple[float, float] = (3.0, 3.0)
    u2: tuple[float, float] = (7.0, 7.0)
    link: LinkConfig = LinkConfig()
    power_dbm: float = 30.0
    power2_dbm: float | None = None
    scheme: str = "fixed"
    beta: float = 0.8
    pe1_est: float = 0.0
    trials: int = 1_000_000
    seed: int = 0
    threads: int = 1
    block_size: int = 1 << 16

    def __post_init__(self):
        _validate_common(self.direction, self.scheme, self.beta, self.trials, self.threads,
                         self.block_size, self.pe1_est)
        if math.hypot(*self.u1) > math.hypot(*self.u2):
            raise ConfigError("u1 must be the user nearer to the BS")
        if min(math.hypot(*self.u1), math.hypot(*self.u2)) <= 0:
            raise ConfigError("users may not sit at the BS")

    @property
    def rho(self) -> float:
        return self.link.snr(self.power_dbm)

    @property
    def rho2(self) -> float:
        return self.link.snr(self.power_dbm if self.power2_dbm is None else self.power2_dbm)

    @property
    def scenario(self) -> PairScenario:
        return PairScenario.from_positions(self.u1, self.u2, self.link)


def _validate_common(direction, scheme, beta, trials, threads, block_size, pe1_est):
    if direction not in ("downlink", "uplink"):
        raise ConfigError(f"direction must be downlink or uplink, got {direction!r}")
    allowed = DOWNLINK_SCHEMES if direction == "downlink" else UPLINK_SCHEMES
    if scheme not in allowed:
        raise ConfigError(f"scheme {scheme!r} not available for {direction}; use one of {allowed}")
    if direction == "downlink" and scheme == "fixed" and not 0.5 < beta < 1.0:
        raise ConfigError(f"infeasible power allocation factor beta={beta}; need 0.5 < beta < 1")
    if trials < 1:
        raise ConfigError("trials must be positive")
    if threads < 1:
        raise ConfigError("threads must be positive")
    if block_size < 1:
        raise ConfigError("block_size must be positive")
    if not 0.0 <= pe1_est <= 1.0:
        raise ConfigError("pe1_est must lie in [0, 1]")


def _rates_from_distance(d, alpha):
    return np.maximum(d, MIN_DISTANCE) ** alpha


def _evaluate(direction, scheme, x_ne, x_fe, lam_ne, lam_fe, link: LinkConfig,
              rho, rho2, beta, pe1_est):
    """Role-based evaluation shared by static and mobile runs.

    Returns (rate, out_ne, out_fe, oma_flag).
    """
    eps0 = link.target_snr
    if scheme == "oma":
        rate, o_ne, o_fe = _oma_users(x_ne, x_fe, rho, link.oma_target_snr)
        return rate, o_ne, o_fe, np.ones(rate.shape, dtype=bool)
    if direction == "downlink":
        if scheme == "dpa":
            beta = dpa_beta_closed_form(np.minimum(lam_ne, lam_fe), np.maximum(lam_ne, lam_fe), eps0)
        rate, o_ne, o_fe = _downlink_roles(x_ne, x_fe, beta, rho, eps0)
        return rate, o_ne, o_fe, np.zeros(rate.shape, dtype=bool)
    if scheme == "fixed":
        rate, o_ne, o_fe = _uplink_roles(x_ne, x_fe, rho, rho2, eps0)
        return rate, o_ne, o_fe, np.zeros(rate.shape, dtype=bool)
    # DPC: estimated-near user at its cap, the other at min(cap, rho2+)
    r2 = np.minimum(rho2, dpc_rho2_plus(lam_ne, lam_fe, rho, eps0))
    rate, o_ne, o_fe = _uplink_roles(x_ne, x_fe, rho, r2, eps0)
    if scheme == "dpc":
        return rate, o_ne, o_fe, np.zeros(rate.shape, dtype=bool)
    choose = _hybrid_choose_oma(lam_ne, lam_fe, rho, r2, rho, link, pe1_est)
    o_rate, oo_ne, oo_fe = _oma_users(x_ne, x_fe, rho, link.oma_target_snr)
    rate, (o_ne, o_fe) = _merge(choose, rate, (o_ne, o_fe), o_rate, (oo_ne, oo_fe))
    return rate, o_ne, o_fe, choose


def _static_block(cfg: StaticConfig, block: int):
    start = block * cfg.block_size
    n = min(cfg.block_size, cfg.trials - start)
    rng = block_rng(cfg.seed, block)
    pos = np.array([cfg.u1, cfg.u2], dtype=float)
    d = np.hypot(pos[:, 0], pos[:, 1])
    noise = rng.standard_normal((n, 2, 2))
    fading = rng.exponential(1.0, (n, 2))
    est = pos + math.sqrt(cfg.link.sigma_ob2) * noise
    d_hat = np.hypot(est[..., 0], est[..., 1])
    near_est = (d_hat[:, 1] < d_hat[:, 0]).astype(int)
    gains = fading * d ** (-cfg.link.alpha)
    lam_hat = _rates_from_distance(d_hat, cfg.link.alpha)
    x_ne, x_fe, _ = _split(gains, near_est)
    lam_ne, lam_fe, _ = _split(lam_hat, near_est)
    rate, o_ne, o_fe, oma = _evaluate(cfg.direction, cfg.scheme, x_ne, x_fe, lam_ne, lam_fe,
                                      cfg.link, cfg.rho, cfg.rho2, cfg.beta, cfg.pe1_est)
    cols = _to_columns(o_ne, o_fe, near_est)
    return _partial(rate, cols[:, 0], cols[:, 1], near_est == 1, (x_ne < x_fe) & ~oma, oma)


def run_static_experiment(cfg: StaticConfig) -> MetricsReport:
    n_blocks = -(-cfg.trials // cfg.block_size)
    sums = _run_blocks(lambda b: _static_block(cfg, b), n_blocks, cfg.threads)
    return MetricsReport.from_sums(sums)


def static_analytic(cfg: StaticConfig) -> dict[str, float]:
    """Closed-form counterparts of the static metrics (nan where none exists)."""
    sc = cfg.scenario
    pe1 = decoding_error_prob_fading_free(sc)
    out = {m: math.nan for m in METRICS}
    out["pe_distance"] = pe1
    if cfg.scheme == "oma":
        out["pe_distance"] = math.nan
        out["cop"] = oma_cop(sc, cfg.rho)
        out["sum_rate"] = oma_avg_sum_rate(sc, cfg.rho)
        out["oma_fraction"] = 1.0
        eps = sc.link.oma_target_snr
        out["outage_user1"] = 1.0 - math.exp(-eps * sc.lam1 / cfg.rho)
        out["outage_user2"] = 1.0 - math.exp(-eps * sc.lam2 / cfg.rho)
        return out
    out["pe_gain"] = decoding_error_prob_rayleigh(sc, pe1)
    out["oma_fraction"] = 0.0 if cfg.scheme != "hybrid" else math.nan
    if cfg.direction == "downlink":
        if cfg.scheme == "fixed":
            power = DownlinkPower(cfg.rho, cfg.beta)
            out["sum_rate"] = downlink_avg_sum_rate(sc, power, pe1)
            out["cop"] = downlink_cop(sc, power, pe1)
            out["outage_user1"], out["outage_user2"] = downlink_user_outage(sc, power, pe1)
    elif cfg.scheme == "fixed":
        power = UplinkPower(cfg.rho, cfg.rho2)
        out["sum_rate"] = uplink_sum_rate_ordered(sc, power, pe1)
        out["cop"] = uplink_cop(sc, power, pe1)
    return out


# ---------------------------------------------------------------------------
# Mobile experiments
# ---------------------------------------------------------------------------

ESTIMATORS = ("perfect", "observed", "tracking", "prediction")
SWEEP_VARS = ("power_dbm", "target_rate")


@dataclass(frozen=True)
class MobileConfig:
    """M users moving in the cell, re-paired and re-allocated every slot.

    Every point of ``values`` (transmit power in dBm or target rate) is
    evaluated on the same trajectories and fading draws. Uplink caps are
    equal to the swept power. Schemes reported: the four distance estimators,
    OMA on the tracking-based pairs, and for the uplink the hybrid scheme.
    """

    direction: str = "downlink"
    mobility: str = "gm"
    users: int = 2
    link: LinkConfig = LinkConfig(sigma_ob2=50.0)
    scheme: str = "fixed"
    beta: float = 0.75
    sweep_var: str = "power_dbm"
    values: tuple[float, ...] = (10.0, 20.0, 30.0, 40.0)
    power_dbm: float = 15.0
    feedback_rate: float = 0.25
    sigma_w2: float | None = None
    slots: int = HORIZON
    T: float = SAMPLE_INTERVAL
    skip: int = 25
    trials: int = 200
    seed: int = 0
    threads: int = 1
    block_size: int = 50
    pe1_est: float = 0.0

    def __post_init__(self):
        if self.scheme in ("oma", "hybrid"):
            raise ConfigError("OMA and hybrid results are always reported; pick the NOMA scheme")
        _validate_common(self.direction, self.scheme, self.beta, self.trials, self.threads,
                         self.block_size, self.pe1_est)
        if self.mobility not in TABLE_I:
            raise ConfigError(f"unknown mobility model {self.mobility!r}")
        if self.users < 2:
            raise ConfigError("need at least two users")
        if self.sweep_var not in SWEEP_VARS:
            raise ConfigError(f"sweep_var must be one of {SWEEP_VARS}")
        if not self.values:
            raise ConfigError("empty sweep")
        if not 0.0 < self.feedback_rate <= 1.0:
            raise ConfigError("feedback_rate must lie in (0, 1]")
        if not 0 <= self.skip < self.slots:
            raise ConfigError("skip must be smaller than the number of slots")
        if self.sigma_w2 is not None and self.sigma_w2 < 0:
            raise ConfigError("sigma_w2 must be nonnegative")

    @property
    def filter_model(self) -> StateSpaceModel:
        w = DEFAULT_SIGMA_W2[self.mobility] if self.sigma_w2 is None else self.sigma_w2
        return StateSpaceModel(self.T, w, self.link.sigma_ob2)

    @property
    def schemes(self) -> tuple[str, ...]:
        extra = ("oma", "hybrid") if self.direction == "uplink" else ("oma",)
        return ESTIMATORS + extra

    def point(self, value: float) -> tuple[LinkConfig, float]:
        """Link config and transmit SNR at one sweep point."""
        if self.sweep_var == "power_dbm":
            return self.link, self.link.snr(value)
        if not value > 0:
            raise ConfigError("target rate must be positive")
        return replace(self.link, target_rate_bpcu=value), self.link.snr(self.power_dbm)


@dataclass
class MobileResult:
    config: MobileConfig
    sums: np.ndarray  # (values, schemes, stats, slots)

    def _index(self, value, scheme):
        return self.config.values.index(value), self.config.schemes.index(scheme)

    def report(self, value: float, scheme: str) -> MetricsReport:
        """Statistics pooled over pairs, trajectories and slots after warm-up."""
        i, j = self._index(value, scheme)
        return MetricsReport.from_sums(self.sums[i, j, :, self.config.skip:].sum(axis=-1))

    def per_slot(self, value: float, scheme: str) -> list[MetricsReport]:
        i, j = self._index(value, scheme)
        return [MetricsReport.from_sums(self.sums[i, j, :, k]) for k in range(self.config.slots)]


def _mobile_block(cfg: MobileConfig, block: int):
    start = block * cfg.block_size
    n = min(cfg.block_size, cfg.trials - start)
    M, K, alpha = cfg.users, cfg.slots, cfg.link.alpha
    rng = block_rng(cfg.seed, block)
    traj = generate_trajectories(TABLE_I[cfg.mobility], K, n * M, rng, cfg.T)
    pos = traj[..., [0, 2]]
    z = pos + math.sqrt(cfg.link.sigma_ob2) * rng.standard_normal(pos.shape)
    fading = rng.exponential(1.0, (n, K, M))

    model = cfg.filter_model
    schedule = FeedbackSchedule.periodic(K, cfg.feedback_rate)
    est_pos = {
        "perfect": pos,
        "observed": z,
        "tracking": track_full(z, model).positions,
        "prediction": track_trajectory(z, model, schedule).positions,
    }

    def to_bkm(a):  # (n*M, K) -> (n, K, M)
        return a.reshape(n, M, K).transpose(0, 2, 1)

    d_true = to_bkm(np.hypot(pos[..., 0], pos[..., 1]))
    gains = fading * np.maximum(d_true, MIN_DISTANCE) ** (-alpha)
    d_hat = {k: to_bkm(np.hypot(v[..., 0], v[..., 1])) for k, v in est_pos.items()}

    P = M // 2
    idx = np.arange(P)
    views = {}
    for name, dh in d_hat.items():
        order = np.argsort(dh, axis=-1, kind="stable")
        ne, fe = order[..., idx], order[..., M - 1 - idx]

        views[name] = dict(
            x_ne=np.take_along_axis(gains, ne, -1), x_fe=np.take_along_axis(gains, fe, -1),
            lam_ne=_rates_from_distance(np.take_along_axis(dh, ne, -1), alpha),
            lam_fe=_rates_from_distance(np.take_along_axis(dh, fe, -1), alpha),
            true_order=np.take_along_axis(d_true, ne, -1) <= np.take_along_axis(d_true, fe, -1),
        )

    out = np.zeros((len(cfg.values), len(cfg.schemes), len(_STAT_FIELDS), K))
    for i, value in enumerate(cfg.values):
        link, rho = cfg.point(value)
        for j, scheme in enumerate(cfg.schemes):
            v = views["tracking" if scheme in ("oma", "hybrid") else scheme]
            mode = scheme if scheme in ("oma", "hybrid") else cfg.scheme
            rate, o_ne, o_fe, oma = _evaluate(cfg.direction, mode, v["x_ne"], v["x_fe"],
                                              v["lam_ne"], v["lam_fe"], link, rho, rho,
                                              cfg.beta, cfg.pe1_est)
            right = v["true_order"]
            out1 = np.where(right, o_ne, o_fe)
            out2 = np.where(right, o_fe, o_ne)
            pe_gain = (v["x_ne"] < v["x_fe"]) & ~oma
            out[i, j] = _partial(rate, out1, out2, ~right, pe_gain, oma, axis=(0, 2))
    return out


def run_mobile_experiment(cfg: MobileConfig) -> MobileResult:
    """Mobile scenario over ``cfg.slots`` slots per trajectory set."""
    n_blocks = -(-cfg.trials // cfg.block_size)
    sums = _run_blocks(lambda b: _mobile_block(cfg, b), n_blocks, cfg.threads)
    return MobileResult(cfg, sums)


# ---------------------------------------------------------------------------
# Results CSV
# ---------------------------------------------------------------------------

RESULT_COLUMNS = ("sweep_var", "value", "metric", "analytic_value", "empirical_value",
                  "stderr", "trials", "seed")


@dataclass(frozen=True)
class ResultRow:
    sweep_var: str
    value: float
    metric: str
    analytic_value: float
    empirical_value: float
    stderr: float
    trials: int
    seed: int

    def same_as(self, other: "ResultRow") -> bool:
        """Equality that treats nan fields as equal."""
        for name in RESULT_COLUMNS:
            a, b = getattr(self, name), getattr(other, name)
            if isinstance(a, float) and math.isnan(a):
                if not (isinstance(b, float) and math.isnan(b)):
                    return False
            elif a != b:
                return False
        return True


def report_rows(report: MetricsReport | None, sweep_var: str, value: float, seed: int,
                analytic: dict[str, float] | None = None, prefix: str = "",
                metrics=METRICS) -> list[ResultRow]:
    """One row per metric; a missing report yields analytic-only rows."""
    analytic = analytic or {}
    rows = []
    for m in metrics:
        emp = report.value(m) if report else math.nan
        se = report.stderr(m) if report else math.nan
        trials = report.trials if report else 0
        rows.append(ResultRow(sweep_var, float(value), prefix + m,
                              float(analytic.get(m, math.nan)), float(emp), float(se),
                              int(trials), int(seed)))
    return rows


def _fmt(x: float) -> str:
    return repr(float(x))


def write_results_csv(path_or_file, rows) -> None:
    """Write result rows; floats use the shortest round-trip representation."""
    def emit(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_COLUMNS)
        for r in rows:
            w.writerow([r.sweep_var, _fmt(r.value), r.metric, _fmt(r.analytic_value),
                        _fmt(r.empirical_value), _fmt(r.stderr), r.trials, r.seed])

    if hasattr(path_or_file, "write"):
        emit(path_or_file)
    else:
        with open(path_or_file, "w", newline="") as fh:
            emit(fh)


def read_results_csv(path) -> list[ResultRow]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != RESULT_COLUMNS:
            raise ValueError(f"unexpected columns {reader.fieldnames}")
        return [ResultRow(r["sweep_var"], float(r["value"]), r["metric"],
                          float(r["analytic_value"]), float(r["empirical_value"]),
                          float(r["stderr"]), int(r["trials"]), int(r["seed"]))
                for r in reader]
