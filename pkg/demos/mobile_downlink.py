"""Sum rate of a mobile downlink pair under four ways of knowing positions.

Users follow Gauss-Markov paths and report positions in one slot out of four.
The base station orders them by perfect positions, by the latest raw report,
by a Kalman filter fed every report, or by a filter that predicts through the
silent slots.
"""

from posnoma.channel import LinkConfig
from posnoma.simulate import MobileConfig, run_mobile_experiment

cfg = MobileConfig(users=2, link=LinkConfig(alpha=2.0, sigma_ob2=50.0), beta=0.75,
                   values=(-40.0, -30.0, -20.0, -10.0, 0.0), trials=40, seed=4)
res = run_mobile_experiment(cfg)
print("power dBm " + "".join(f"{s:>12}" for s in ("perfect", "observed", "tracking", "prediction")))
for v in cfg.values:
    print(f"{v:9.0f} " + "".join(f"{res.report(v, s).sum_rate:12.3f}"
                                 for s in ("perfect", "observed", "tracking", "prediction")))
