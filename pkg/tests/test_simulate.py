import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from posnoma.analysis import PairScenario, UplinkPower
from posnoma.channel import LinkConfig
from posnoma.simulate import (
    METRICS,
    AccessScheme,
    ConfigError,
    MetricsReport,
    MobileConfig,
    ResultRow,
    StaticConfig,
    downlink_trial,
    hybrid_uplink_select,
    oma_trial,
    pair_users,
    read_results_csv,
    report_rows,
    run_mobile_experiment,
    run_static_experiment,
    static_analytic,
    uplink_trial,
    write_results_csv,
)


def test_downlink_trial_infeasible_beta_always_fails():
    rng = np.random.default_rng(0)
    gains = rng.exponential(1.0, (1000, 2)) * 1e6
    eps0 = 2 ** 1.5 - 1
    out = downlink_trial(gains, rng.integers(0, 2, 1000), eps0 / (1 + eps0), 1e6, eps0)
    assert out.common_outage.all()


def test_downlink_trial_deterministic_plug_in():
    gains = np.array([[2.0, 0.5]])
    beta, rho, eps0 = 0.8, 100.0, 0.1
    out = downlink_trial(gains, np.array([0]), beta, rho, eps0)
    w = rho * (1 - beta)
    expected = math.log2(1 + beta * rho * 0.5 / (w * 0.5 + 1)) + math.log2(1 + w * 2.0)
    assert_allclose(out.sum_rate_bpcu, [expected], rtol=1e-14)
    assert not out.common_outage[0]
    assert not out.order_error[0]


def test_uplink_trial_no_target_never_fails():
    rng = np.random.default_rng(1)
    gains = rng.exponential(1.0, (10_000, 2))
    out = uplink_trial(gains, rng.integers(0, 2, 10_000), 10.0, 3.0, 0.0)
    assert not out.common_outage.any()


@given(st.floats(1e-4, 1e3), st.floats(1e-4, 1e3), st.floats(0.1, 1e5))
def test_uplink_sum_rate_independent_of_order(g1, g2, rho):
    gains = np.array([[g1, g2], [g1, g2]])
    out = uplink_trial(gains, np.array([0, 1]), rho, rho, 0.5)
    assert_allclose(out.sum_rate_bpcu[0], out.sum_rate_bpcu[1], rtol=1e-14)
    assert_allclose(out.sum_rate_bpcu[0], math.log1p(rho * (g1 + g2)) / math.log(2), rtol=1e-12)


def test_oma_trial():
    out = oma_trial(np.array([[1.0, 0.01]]), 100.0, 3.0)
    assert_allclose(out.sum_rate_bpcu, [0.5 * (math.log2(101) + math.log2(2))])
    assert out.per_user_outage.tolist() == [[False, True]]


def test_pair_users():
    assert pair_users([5.0, 2.0]) == ([(1, 0)], None)
    d = [10.0, 3.0, 7.0, 1.0, 12.0]
    pairs, left = pair_users(d)
    assert pairs == [(3, 4), (1, 0)]
    assert left == 2
    assert pair_users([4.0, 4.0, 4.0, 4.0]) == ([(0, 3), (1, 2)], None)
    with pytest.raises(ValueError):
        pair_users([1.0])


def test_hybrid_selection_regions():
    link = LinkConfig(alpha=3.5, target_rate_bpcu=0.1)
    sc = PairScenario(math.hypot(3, 3), math.hypot(15, 15), link)
    low = link.snr(-10)
    high = link.snr(40)
    scheme, cop = hybrid_uplink_select(sc, UplinkPower(low, low))
    assert scheme is AccessScheme.NOMA
    scheme, _ = hybrid_uplink_select(sc, UplinkPower(high, high))
    assert scheme is AccessScheme.OMA


def test_hybrid_tie_goes_to_noma(monkeypatch):
    import posnoma.simulate as sim
    monkeypatch.setattr(sim, "uplink_cop", lambda *a, **k: 0.25)
    monkeypatch.setattr(sim, "oma_cop", lambda *a, **k: 0.25)
    sc = PairScenario(3.0, 5.0)
    assert hybrid_uplink_select(sc, UplinkPower(1.0, 1.0))[0] is AccessScheme.NOMA


def small_cfg(**kw):
    base = dict(direction="downlink", link=LinkConfig(alpha=2, sigma_ob2=9, target_rate_bpcu=1.5),
                power_dbm=-20.0, trials=40_000, seed=5, block_size=4096)
    base.update(kw)
    return StaticConfig(**base)


def test_static_run_is_deterministic_and_thread_invariant():
    a = run_static_experiment(small_cfg())
    b = run_static_experiment(small_cfg())
    c = run_static_experiment(small_cfg(threads=4))
    assert a == b == c


def test_static_run_matches_analytic():
    cfg = small_cfg(trials=400_000)
    rep = run_static_experiment(cfg)
    ref = static_analytic(cfg)
    for m in ("cop", "outage_user1", "outage_user2", "pe_distance", "pe_gain"):
        assert abs(rep.value(m) - ref[m]) <= 3 * math.sqrt(ref[m] * (1 - ref[m]) / rep.trials)
    assert abs(rep.sum_rate / ref["sum_rate"] - 1) < 0.01


def test_correct_order_beats_swapped_order():
    rng = np.random.default_rng(2)
    gains = rng.exponential(1.0, (200_000, 2)) / np.array([18.0, 98.0])
    right = downlink_trial(gains, np.zeros(len(gains), int), 0.8, 1e4, 1.0)
    wrong = downlink_trial(gains, np.ones(len(gains), int), 0.8, 1e4, 1.0)
    assert right.sum_rate_bpcu.mean() >= wrong.sum_rate_bpcu.mean()


def test_static_config_validation():
    with pytest.raises(ConfigError):
        small_cfg(beta=0.4)
    with pytest.raises(ConfigError):
        small_cfg(u1=(9.0, 9.0), u2=(1.0, 1.0))
    with pytest.raises(ConfigError):
        small_cfg(scheme="dpc")
    with pytest.raises(ConfigError):
        small_cfg(trials=0)


def test_metrics_report_stderr():
    rep = MetricsReport(100, 2.0, 0.5, 0.1, 0.05, 0.08, 0.2, 0.3, 0.0)
    assert_allclose(rep.stderr("cop"), math.sqrt(0.09 / 100))
    assert_allclose(rep.stderr("sum_rate"), 0.05)
    assert_allclose(rep.half_width("cop"), 1.96 * 0.03)
    with pytest.raises(KeyError):
        rep.value("nope")


def tiny_mobile(**kw):
    base = dict(direction="uplink", mobility="gm", users=3, scheme="dpc",
                link=LinkConfig(alpha=3.5, sigma_ob2=50.0, target_rate_bpcu=0.5),
                values=(0.0, 30.0), slots=60, skip=10, trials=8, block_size=4, seed=3)
    base.update(kw)
    return MobileConfig(**base)


def test_mobile_run_deterministic_and_thread_invariant():
    a = run_mobile_experiment(tiny_mobile())
    b = run_mobile_experiment(tiny_mobile(threads=3))
    assert np.array_equal(a.sums, b.sums)
    rep = a.report(30.0, "hybrid")
    assert rep.trials == 8 * 50  # one pair per slot for M = 3
    assert set(a.config.schemes) == {"perfect", "observed", "tracking", "prediction", "oma", "hybrid"}


def test_mobile_perfect_positions_have_no_distance_error():
    res = run_mobile_experiment(tiny_mobile(direction="downlink", scheme="fixed", users=2))
    assert res.report(0.0, "perfect").pe_distance == 0.0
    assert res.report(0.0, "observed").pe_distance > 0.0


def test_mobile_config_validation():
    with pytest.raises(ConfigError):
        tiny_mobile(scheme="hybrid")
    with pytest.raises(ConfigError):
        tiny_mobile(users=1)
    with pytest.raises(ConfigError):
        tiny_mobile(mobility="brownian")
    with pytest.raises(ConfigError):
        tiny_mobile(feedback_rate=0.0)


def test_results_csv_round_trip(tmp_path):
    rep = run_static_experiment(small_cfg(trials=5000))
    rows = report_rows(rep, "power_dbm", -20.0, 5, static_analytic(small_cfg()))
    rows.append(ResultRow("beta", 0.1 + 0.2, "cop", math.nan, 1 / 3, 0.0, 7, 1))
    path = tmp_path / "r.csv"
    write_results_csv(path, rows)
    back = read_results_csv(path)
    assert len(back) == len(rows)
    assert all(a.same_as(b) for a, b in zip(rows, back))
    assert [r.metric for r in back[:len(METRICS)]] == list(METRICS)
    buf = io.StringIO()
    write_results_csv(buf, back)
    assert buf.getvalue() == path.read_text()
