import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose
from scipy import stats

from posnoma.channel import (
    MIN_DISTANCE,
    LinkConfig,
    UserGeometry,
    channel_gains,
    dbm_to_linear,
    deploy_positions,
    deploy_users,
    observe_position,
    observe_positions,
    sample_fading,
    snr_of,
)
from posnoma.specfun import noncentral_chisq2_cdf


def test_deploy_moment_and_containment():
    users = deploy_users(1000, 30.0, rng_seed=3)
    d = np.array([u.distance for u in users])
    assert abs(np.mean(d ** 2) / 450.0 - 1) < 0.05
    assert d.max() <= 30.0 and d.min() >= MIN_DISTANCE


def test_deploy_empty_and_deterministic():
    assert deploy_users(0, 30.0, 1) == []
    assert deploy_users(10, 30.0, 9) == deploy_users(10, 30.0, 9)
    with pytest.raises(ValueError):
        deploy_positions(3, 0.0, np.random.default_rng(0))


def test_observation_noise():
    rng = np.random.default_rng(5)
    u = UserGeometry(3.0, 4.0)
    assert observe_position(u, 0.0, rng).distance == u.distance
    z = observe_positions(np.tile([3.0, 4.0], (1_000_000, 1)), 9.0, rng)
    assert abs(np.var(z[:, 0] - 3.0) / 9.0 - 1) < 0.01
    assert abs(np.var(z[:, 1] - 4.0) / 9.0 - 1) < 0.01


def test_observed_squared_distance_is_noncentral_chisq():
    rng = np.random.default_rng(11)
    z = observe_positions(np.tile([3.0, 3.0], (100_000, 1)), 9.0, rng)
    d2 = np.sum(z ** 2, axis=1)
    res = stats.kstest(d2, lambda x: noncentral_chisq2_cdf(x, 18.0, 9.0))
    assert res.pvalue > 0.01


def test_fading_mean_and_order_probability():
    rng = np.random.default_rng(2)
    h = sample_fading(rng, (1_000_000, 2))
    assert abs(h.mean() - 1) < 0.005
    d1, d2, alpha = math.hypot(3, 3), math.hypot(7, 7), 2.0
    g = channel_gains(np.array([d1, d2]), alpha, h)
    D = (d2 / d1) ** alpha
    p = np.mean(g[:, 0] > g[:, 1])
    se = math.sqrt(p * (1 - p) / len(g))
    assert abs(p - D / (D + 1)) < 4 * se
    assert np.array_equal(sample_fading(np.random.default_rng(4), 5),
                          sample_fading(np.random.default_rng(4), 5))


def test_gain_mean_is_inverse_path_loss():
    rng = np.random.default_rng(8)
    g = channel_gains(5.0, 3.0, sample_fading(rng, 1_000_000))
    assert abs(g.mean() * 125.0 - 1) < 0.005


def test_snr_conversion():
    assert snr_of(0, 0) == 1.0
    assert_allclose(snr_of(20, -50), 1e7, rtol=1e-14)
    assert_allclose(snr_of(15, -50), 3.1622776601683795e6, rtol=1e-12)
    assert_allclose(dbm_to_linear(30), 1000.0)
    assert LinkConfig(noise_power_dbm=-50).snr(20) == snr_of(20, -50)


def test_link_config():
    link = LinkConfig(target_rate_bpcu=1.5)
    assert_allclose(link.target_snr, 2 ** 1.5 - 1)
    assert_allclose(link.oma_target_snr, 7.0)
    assert link.oma_target_snr > link.target_snr
    for bad in (dict(alpha=0), dict(sigma_ob2=-1), dict(target_rate_bpcu=0)):
        with pytest.raises(ValueError):
            LinkConfig(**bad)


@given(st.floats(-50, 50), st.floats(-50, 50), st.floats(-50, 50), st.floats(-50, 50),
       st.floats(0, 2 * math.pi))
def test_distance_order_invariant_under_rotation(x1, y1, x2, y2, theta):
    c, s = math.cos(theta), math.sin(theta)
    rot = lambda x, y: UserGeometry(c * x - s * y, s * x + c * y)
    a, b = UserGeometry(x1, y1), UserGeometry(x2, y2)
    ra, rb = rot(x1, y1), rot(x2, y2)
    if abs(a.distance - b.distance) > 1e-9 * max(1.0, a.distance):
        assert (a.distance < b.distance) == (ra.distance < rb.distance)
