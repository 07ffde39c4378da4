"""Position-aided power-domain NOMA: closed-form analysis, power control,
mobility and tracking, and a Monte Carlo engine."""

from .analysis import (
    DownlinkPower,
    PairScenario,
    UplinkPower,
    decoding_error_prob_fading_free,
    decoding_error_prob_rayleigh,
    downlink_avg_sum_rate,
    downlink_cop,
    oma_cop,
    uplink_avg_sum_rate,
    uplink_cop,
)
from .channel import LinkConfig
from .power import dpa_optimal_beta, dpc_optimal_power
from .simulate import MobileConfig, StaticConfig, run_mobile_experiment, run_static_experiment

__version__ = "0.1.0"

__all__ = [
    "DownlinkPower",
    "LinkConfig",
    "MobileConfig",
    "PairScenario",
    "StaticConfig",
    "UplinkPower",
    "decoding_error_prob_fading_free",
    "decoding_error_prob_rayleigh",
    "downlink_avg_sum_rate",
    "downlink_cop",
    "dpa_optimal_beta",
    "dpc_optimal_power",
    "oma_cop",
    "run_mobile_experiment",
    "run_static_experiment",
    "uplink_avg_sum_rate",
    "uplink_cop",
]
