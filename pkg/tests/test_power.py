import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose
from scipy import optimize

from posnoma.analysis import DownlinkPower, PairScenario, UplinkPower, downlink_cop, uplink_cop
from posnoma.channel import LinkConfig
from posnoma.power import (
    dpa_beta_closed_form,
    dpa_optimal_beta,
    dpa_roots,
    dpc_optimal_power,
    dpc_rho2_plus,
    fixed_downlink_beta,
    fixed_uplink_power,
)


def scenario_from_rates(lam1, lam2, alpha=2.0, rate=0.5):
    return PairScenario(lam1 ** (1 / alpha), lam2 ** (1 / alpha),
                        LinkConfig(alpha=alpha, target_rate_bpcu=rate))


def cop_exponent(beta, lam1, lam2, eps0):
    # rho * (lam2 A + lam1 max(A, B)) written out directly
    margin = beta - (1 - beta) * eps0
    if margin <= 0:
        return math.inf
    a = eps0 / margin
    b = eps0 / (1 - beta)
    return lam2 * a + lam1 * max(a, b)


def test_dpa_small_target_limit():
    lam1, lam2, eps0 = 18.0, 98.0, 1e-6
    lower = (eps0 + 1) / (eps0 + 2)
    res = optimize.minimize_scalar(cop_exponent, bracket=(lower + 1e-3, 0.68, 1 - 1e-6),
                                   args=(lam1, lam2, eps0), method="golden", tol=1e-12)
    limit = math.sqrt(lam2) / (math.sqrt(lam1) + math.sqrt(lam2))
    assert_allclose(dpa_beta_closed_form(lam1, lam2, eps0), limit, atol=1e-5)
    assert_allclose(res.x, limit, atol=1e-5)


def test_dpa_generic_case_matches_grid():
    sc = scenario_from_rates(18.0, 98.0, rate=1.0)  # eps0 = 1
    sol = dpa_optimal_beta(sc, rho=1e3)
    grid = np.linspace(0.5, 1.0, 100_001)[1:-1]
    cop = [downlink_cop(sc, DownlinkPower(1e3, b), 0.0) for b in grid]
    assert abs(sol.beta_star - grid[int(np.argmin(cop))]) < 1e-4
    assert_allclose(sol.beta_star, 0.8113148, atol=1e-6)
    assert sol.method == "closed_form"


@given(st.floats(0.5, 40.0), st.floats(1.05, 30.0), st.floats(0.05, 3.0),
       st.sampled_from([2.0, 3.0, 3.5, 4.0]))
@settings(max_examples=100)
def test_dpa_root_in_feasible_band(d1, ratio, rate, alpha):
    link = LinkConfig(alpha=alpha, target_rate_bpcu=rate)
    sc = PairScenario(d1, d1 * ratio, link)
    eps0 = link.target_snr
    beta = dpa_optimal_beta(sc, rho=1e6).beta_star
    assert (eps0 + 1) / (eps0 + 2) < beta < 1
    assert beta > (1 - beta) * eps0


@given(st.floats(1.0, 1e4), st.floats(1.001, 100.0), st.floats(0.01, 10.0))
@settings(max_examples=100)
def test_dpa_minus_root_is_rejected(lam1, ratio, eps0):
    lam2 = lam1 * ratio
    _, minus, (a, b, c) = dpa_roots(lam1, lam2, eps0)
    if a > 0:
        assert minus < (eps0 + 1) / (eps0 + 2)
    elif a < 0:
        assert minus > 1


def test_dpa_tie_falls_back_to_numerical():
    sc = PairScenario(5.0, 5.0, LinkConfig(alpha=2, target_rate_bpcu=1.0))
    sol = dpa_optimal_beta(sc, rho=1e3)
    assert sol.method == "numerical"
    grid = np.linspace(0.67, 0.999, 20_000)
    best = min(cop_exponent(b, 25.0, 25.0, 1.0) for b in grid)
    assert cop_exponent(sol.beta_star, 25.0, 25.0, 1.0) <= best + 1e-9


def test_dpc_cap_binds():
    sc = scenario_from_rates(18.0, 98.0)
    sol = dpc_optimal_power(sc, omega1=1e3, omega2=1e-9)
    assert sol.rho2_star == 1e-9 and sol.rho1_star == 1e3


def test_dpc_equal_rates_matches_grid():
    lam, eps0, omega1 = 10.0, 1.0, 100.0
    sc = PairScenario(math.sqrt(lam), math.sqrt(lam), LinkConfig(alpha=2, target_rate_bpcu=1.0))
    sol = dpc_optimal_power(sc, omega1, math.inf)
    assert_allclose(sol.rho2_star, (lam + math.sqrt(400 * lam + lam ** 2)) / 2, rtol=1e-12)
    r1 = np.linspace(omega1 / 200, omega1, 200)
    r2 = np.linspace(sol.rho2_star / 100, 5 * sol.rho2_star, 2000)
    grid_min = min(uplink_cop(sc, UplinkPower(a, b), 0.0) for a in r1[-5:] for b in r2)
    assert sol.predicted_cop <= grid_min * (1 + 1e-3)


@pytest.mark.parametrize("seed", range(5))
def test_dpc_beats_feasible_grid(seed):
    rng = np.random.default_rng(seed)
    d1 = rng.uniform(1, 20)
    sc = PairScenario(d1, d1 * rng.uniform(1.1, 5), LinkConfig(alpha=3, target_rate_bpcu=0.5))
    om1, om2 = 10 ** rng.uniform(3, 7, 2)
    sol = dpc_optimal_power(sc, om1, om2)
    r1 = np.linspace(om1 / 200, om1, 200)
    r2 = np.linspace(om2 / 200, om2, 200)
    grid = [uplink_cop(sc, UplinkPower(a, b), 0.0) for a in r1 for b in r2]
    assert sol.predicted_cop <= min(grid) + 1e-12


@given(st.floats(1.0, 1e4), st.floats(1.0, 100.0), st.floats(1.0, 1e8), st.floats(0.01, 10.0))
def test_dpc_quadratic_residual(lam1, ratio, omega1, eps0):
    lam2 = lam1 * ratio
    x = dpc_rho2_plus(lam1, lam2, omega1, eps0)
    resid = lam1 * x * x - eps0 * lam1 * lam2 * x - omega1 * lam2 ** 2
    scale = lam1 * x * x + eps0 * lam1 * lam2 * x + omega1 * lam2 ** 2
    assert x > 0 and abs(resid) < 1e-9 * scale


@given(st.floats(1.0, 20.0), st.floats(1.1, 5.0), st.floats(0.2, 5.0))
def test_optimizers_scale_consistently(d1, ratio, s):
    link = LinkConfig(alpha=3, target_rate_bpcu=0.7)
    base = PairScenario(d1, d1 * ratio, link)
    scaled = PairScenario(d1 * s, d1 * ratio * s, link)
    eps0 = link.target_snr
    # DPA depends only on lam2 / lam1, which scaling leaves unchanged
    assert_allclose(dpa_optimal_beta(scaled, 1e4).beta_star,
                    dpa_optimal_beta(base, 1e4).beta_star, rtol=1e-9)
    p = dpc_optimal_power(scaled, 1e4, math.inf).rho2_plus
    assert_allclose(p, dpc_rho2_plus(scaled.lam1, scaled.lam2, 1e4, eps0), rtol=1e-14)
    # with the cap scaled by s^alpha, rho2+ scales by s^alpha as well
    q = dpc_rho2_plus(base.lam1 * s ** 3, base.lam2 * s ** 3, 1e4 * s ** 3, eps0)
    assert_allclose(q, s ** 3 * dpc_rho2_plus(base.lam1, base.lam2, 1e4, eps0), rtol=1e-9)


def test_fixed_schemes():
    assert fixed_downlink_beta(0.75, 10.0) == DownlinkPower(10.0, 0.75)
    with pytest.raises(ValueError):
        fixed_downlink_beta(0.4, 10.0)
    pw = fixed_uplink_power(5.0, 7.0)
    assert (pw.rho1, pw.rho2) == (5.0, 7.0)
