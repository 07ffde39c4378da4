"""Command-line front end.

Subcommands: analyze, simulate, sweep, track, reproduce. Settings come from
built-in defaults, then an optional INI file (``--config``), then flags.
Exit status: 0 on success, 2 on a configuration error, 3 when a reproduce
recipe misses an acceptance target.

Config file schema (all keys optional)::

    [scenario]
    direction = downlink        ; downlink | uplink
    u1 = 3, 3                   ; static user positions (m)
    u2 = 7, 7
    mobile = false              ; simulate/sweep a mobile scenario instead
    mobility = gm               ; rw | rwp | gm
    users = 2
    slots = 300
    feedback_rate = 0.25
    sigma_w2 =                  ; empty: calibrated default per model

    [link]
    alpha = 2
    noise_dbm = -50
    sigma_ob2 = 9
    target_rate = 0.5           ; bit per channel use
    power_dbm = 30
    power2_dbm =                ; uplink second user; empty: same as power_dbm
    scheme = fixed              ; fixed | dpa | dpc | oma | hybrid
    beta = 0.8
    pe1_est = 0

    [run]
    trials = 1000000
    seed = 1
    threads = 1
    out = results.csv

The default output directory is taken from ``POSNOMA_OUTPUT_DIR`` (else the
working directory).
"""

from __future__ import annotations

import argparse
import configparser
import math
import os
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import recipes
from .analysis import (
    DownlinkPower,
    PairScenario,
    UplinkPower,
    decoding_error_prob_fading_free,
    decoding_error_prob_rayleigh,
    downlink_avg_sum_rate,
    downlink_cop,
    downlink_sum_rate_high_snr,
    oma_cop,
    uplink_avg_sum_rate,
    uplink_cop,
)
from .channel import LinkConfig
from .mobility import TABLE_I, generate_trajectories
from .power import dpa_optimal_beta, dpc_optimal_power
from .simulate import (
    ConfigError,
    MobileConfig,
    StaticConfig,
    block_rng,
    report_rows,
    run_mobile_experiment,
    run_static_experiment,
    static_analytic,
    write_results_csv,
)
from .tracking import (
    DEFAULT_SIGMA_W2,
    FeedbackSchedule,
    StateSpaceModel,
    position_rmse,
    track_trajectory,
    write_estimates_csv,
)

EXIT_OK, EXIT_CONFIG, EXIT_ACCEPTANCE = 0, 2, 3
OUTPUT_ENV = "POSNOMA_OUTPUT_DIR"


def _pair(text: str) -> tuple[float, float]:
    parts = [p for p in text.replace(",", " ").split() if p]
    if len(parts) != 2:
        raise ConfigError(f"expected 'x, y', got {text!r}")
    return float(parts[0]), float(parts[1])


def _bool(text: str) -> bool:
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _opt_float(text: str):
    return None if str(text).strip() == "" else float(text)


@dataclass
class ExperimentConfig:
    """Merged settings for one CLI invocation."""

    direction: str = "downlink"
    u1: tuple[float, float] = (3.0, 3.0)
    u2: tuple[float, float] = (7.0, 7.0)
    mobile: bool = False
    mobility: str = "gm"
    users: int = 2
    slots: int = 300
    feedback_rate: float = 0.25
    sigma_w2: float | None = None
    alpha: float = 2.0
    noise_dbm: float = -50.0
    sigma_ob2: float = 9.0
    target_rate: float = 0.5
    power_dbm: float = 30.0
    power2_dbm: float | None = None
    scheme: str = "fixed"
    beta: float = 0.8
    pe1_est: float = 0.0
    trials: int = 1_000_000
    seed: int | None = None
    threads: int = 1
    out: str | None = None

    @property
    def link(self) -> LinkConfig:
        try:
            return LinkConfig(self.alpha, self.noise_dbm, self.sigma_ob2, self.target_rate)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def static(self) -> StaticConfig:
        return StaticConfig(direction=self.direction, u1=self.u1, u2=self.u2, link=self.link,
                            power_dbm=self.power_dbm, power2_dbm=self.power2_dbm,
                            scheme=self.scheme, beta=self.beta, pe1_est=self.pe1_est,
                            trials=self.trials, seed=self.seed or 0, threads=self.threads)

    def mobile_config(self, sweep_var: str = "power_dbm", values=None) -> MobileConfig:
        if values is None:
            values = (self.power_dbm,) if sweep_var == "power_dbm" else (self.target_rate,)
        return MobileConfig(direction=self.direction, mobility=self.mobility, users=self.users,
                            link=self.link, scheme=self.scheme, beta=self.beta,
                            sweep_var=sweep_var, values=tuple(float(v) for v in values),
                            power_dbm=self.power_dbm, feedback_rate=self.feedback_rate,
                            sigma_w2=self.sigma_w2, slots=self.slots, trials=self.trials,
                            seed=self.seed or 0, threads=self.threads, pe1_est=self.pe1_est)


_PARSERS = {
    "direction": str, "u1": _pair, "u2": _pair, "mobile": _bool, "mobility": str, "users": int,
    "slots": int, "feedback_rate": float, "sigma_w2": _opt_float, "alpha": float,
    "noise_dbm": float, "sigma_ob2": float, "target_rate": float, "power_dbm": float,
    "power2_dbm": _opt_float, "scheme": str, "beta": float, "pe1_est": float, "trials": int,
    "seed": int, "threads": int, "out": str,
}
_SECTIONS = {
    "scenario": ("direction", "u1", "u2", "mobile", "mobility", "users", "slots",
                 "feedback_rate", "sigma_w2"),
    "link": ("alpha", "noise_dbm", "sigma_ob2", "target_rate", "power_dbm", "power2_dbm",
             "scheme", "beta", "pe1_est"),
    "run": ("trials", "seed", "threads", "out"),
}
assert set(_PARSERS) == {f.name for f in fields(ExperimentConfig)}


def load_config_file(path) -> dict:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file: {exc}") from exc
    values = {}
    for section in cp.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown config section [{section}]")
        for key, raw in cp.items(section):
            if key not in _SECTIONS[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            try:
                values[key] = _PARSERS[key](raw)
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {raw!r}") from exc
    return values


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    values = load_config_file(args.config) if getattr(args, "config", None) else {}
    for key in _PARSERS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    sigma_ob = getattr(args, "sigma_ob", None)
    if sigma_ob is not None:
        values["sigma_ob2"] = sigma_ob ** 2
    return ExperimentConfig(**values)


def output_path(cfg_out: str | None, default_name: str) -> Path:
    if cfg_out:
        return Path(cfg_out)
    return Path(os.environ.get(OUTPUT_ENV, ".")) / default_name


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def analytic_quantities(cfg: ExperimentConfig) -> list[tuple[str, float]]:
    """Closed-form values for the configured pair (flat name/value list)."""
    link = cfg.link
    try:
        sc = PairScenario.from_positions(cfg.u1, cfg.u2, link)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if not 0.5 < cfg.beta < 1.0:
        raise ConfigError(f"infeasible power allocation factor beta={cfg.beta}; need 0.5 < beta < 1")
    rho = link.snr(cfg.power_dbm)
    rho2 = link.snr(cfg.power_dbm if cfg.power2_dbm is None else cfg.power2_dbm)
    pe1 = decoding_error_prob_fading_free(sc)
    dl = DownlinkPower(rho, cfg.beta)
    ul = UplinkPower(rho, rho2)
    dpa = dpa_optimal_beta(sc, rho)
    dpc = dpc_optimal_power(sc, rho, rho2)
    return [
        ("pe_fading_free", pe1),
        ("pe_rayleigh", decoding_error_prob_rayleigh(sc, pe1)),
        ("downlink_sum_rate", downlink_avg_sum_rate(sc, dl, pe1)),
        ("downlink_sum_rate_high_snr", downlink_sum_rate_high_snr(sc, dl, pe1)),
        ("downlink_cop", downlink_cop(sc, dl, pe1)),
        ("uplink_sum_rate", uplink_avg_sum_rate(sc, ul)),
        ("uplink_cop", uplink_cop(sc, ul, pe1)),
        ("oma_cop", oma_cop(sc, rho)),
        ("dpa_beta", dpa.beta_star),
        ("dpa_cop", downlink_cop(sc, DownlinkPower(rho, dpa.beta_star), pe1)),
        ("dpc_rho1", dpc.rho1_star),
        ("dpc_rho2", dpc.rho2_star),
        ("dpc_cop", uplink_cop(sc, UplinkPower(dpc.rho1_star, dpc.rho2_star), pe1)),
    ]


def cmd_analyze(args) -> int:
    cfg = build_config(args)
    lines = ["quantity,value"] + [f"{k},{v!r}" for k, v in analytic_quantities(cfg)]
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if cfg.out:
        Path(cfg.out).write_text(text)
    return EXIT_OK


def _require_seed(cfg: ExperimentConfig, mode: str):
    if cfg.seed is None:
        raise ConfigError(f"--seed is required for {mode}")


def _static_rows(cfg: ExperimentConfig, var: str, values):
    rows = []
    for v in values:
        c = _with_value(cfg, var, v)
        sc = c.static()
        rows += report_rows(run_static_experiment(sc), var, v, sc.seed, static_analytic(sc))
    return rows


def _with_value(cfg: ExperimentConfig, var: str, v: float) -> ExperimentConfig:
    if var == "sigma_ob":
        return replace(cfg, sigma_ob2=v * v)
    return replace(cfg, **{var: v})


def _mobile_rows(cfg: ExperimentConfig, var: str, values):
    mc = cfg.mobile_config(var, values)
    res = run_mobile_experiment(mc)
    rows = []
    for v in mc.values:
        for s in mc.schemes:
            rows += report_rows(res.report(v, s), var, v, mc.seed, None, prefix=f"{s}.")
    return rows


def _emit(rows, path: Path):
    path.parent.mkdir(parents=True, exist_ok=True)
    write_results_csv(path, rows)
    print(f"wrote {len(rows)} rows to {path}")


def cmd_simulate(args) -> int:
    cfg = build_config(args)
    _require_seed(cfg, "simulate")
    if cfg.mobile:
        rows = _mobile_rows(cfg, "power_dbm", (cfg.power_dbm,))
    else:
        rows = _static_rows(cfg, "power_dbm", (cfg.power_dbm,))
    _emit(rows, output_path(cfg.out, "simulate.csv"))
    return EXIT_OK


STATIC_SWEEP_VARS = ("power_dbm", "power2_dbm", "sigma_ob", "sigma_ob2", "beta", "target_rate",
                     "alpha")
MOBILE_SWEEP_VARS = ("power_dbm", "target_rate")


def parse_values(values: str | None, grid: str | None) -> list[float]:
    if (values is None) == (grid is None):
        raise ConfigError("give exactly one of --values or --range")
    if values is not None:
        try:
            out = [float(v) for v in values.replace(",", " ").split()]
        except ValueError as exc:
            raise ConfigError(f"bad --values {values!r}") from exc
    else:
        try:
            start, stop, num = grid.split(":")
            out = [float(v) for v in np.linspace(float(start), float(stop), int(num))]
        except ValueError as exc:
            raise ConfigError(f"bad --range {grid!r}; use start:stop:count") from exc
    if not out:
        raise ConfigError("empty sweep")
    return out


def cmd_sweep(args) -> int:
    cfg = build_config(args)
    _require_seed(cfg, "sweep")
    values = parse_values(args.values, args.range)
    allowed = MOBILE_SWEEP_VARS if cfg.mobile else STATIC_SWEEP_VARS
    if args.var not in allowed:
        raise ConfigError(f"cannot sweep {args.var!r}; choose from {allowed}")
    rows = (_mobile_rows if cfg.mobile else _static_rows)(cfg, args.var, values)
    _emit(rows, output_path(cfg.out, f"sweep_{args.var}.csv"))
    return EXIT_OK


def cmd_track(args) -> int:
    cfg = build_config(args)
    if cfg.mobility not in TABLE_I:
        raise ConfigError(f"unknown mobility model {cfg.mobility!r}")
    if not 0 < cfg.feedback_rate <= 1:
        raise ConfigError("feedback_rate must lie in (0, 1]")
    seed = cfg.seed or 0
    rng = block_rng(seed, 0)
    traj = generate_trajectories(TABLE_I[cfg.mobility], cfg.slots, cfg.users, rng)
    pos = traj[..., [0, 2]]
    z = pos + math.sqrt(cfg.sigma_ob2) * rng.standard_normal(pos.shape)
    w = DEFAULT_SIGMA_W2[cfg.mobility] if cfg.sigma_w2 is None else cfg.sigma_w2
    model = StateSpaceModel(0.2, w, cfg.sigma_ob2)
    res = track_trajectory(z, model, FeedbackSchedule.periodic(cfg.slots, cfg.feedback_rate))
    path = output_path(cfg.out, "track.csv")
    path.parent.mkdir(parents=True, exist_ok=True)
    write_estimates_csv(path, res)
    skip = min(25, cfg.slots - 1)
    print(f"model={cfg.mobility} users={cfg.users} slots={cfg.slots} sigma_ob2={cfg.sigma_ob2:g} "
          f"sigma_w2={w:g} feedback={cfg.feedback_rate:g}")
    print(f"raw RMSE {position_rmse(z, pos, skip):.4f} m, "
          f"filtered RMSE {position_rmse(res.positions, pos, skip):.4f} m")
    print(f"wrote estimates to {path}")
    return EXIT_OK


def cmd_reproduce(args) -> int:
    opt = recipes.RecipeOptions(seed=args.seed if args.seed is not None else 1,
                                threads=args.threads or 1, trials=args.trials,
                                trajectories=args.trajectories)
    figures = recipes.FIGURES if args.figure == "all" else (args.figure,)
    out_dir = Path(args.out) if args.out else Path(os.environ.get(OUTPUT_ENV, "."))
    ok = True
    for fig in figures:
        result = recipes.reproduce(fig, opt)
        path = out_dir / f"{fig}.csv"
        _emit(result.rows, path)
        if not result.checks:
            print(f"{fig}: no acceptance targets")
        for check in result.checks:
            print(check.line())
        ok &= result.passed
    print("ALL TARGETS MET" if ok else "SOME TARGETS MISSED")
    return EXIT_OK if ok else EXIT_ACCEPTANCE


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser):
    g = p.add_argument_group("experiment settings (override the config file)")
    g.add_argument("--config", help="INI config file")
    g.add_argument("--direction", choices=("downlink", "uplink"))
    g.add_argument("--u1", type=_pair, help="near user position 'x,y'")
    g.add_argument("--u2", type=_pair, help="far user position 'x,y'")
    g.add_argument("--mobile", action="store_const", const=True, default=None,
                   help="mobile scenario instead of fixed positions")
    g.add_argument("--mobility", choices=tuple(TABLE_I))
    g.add_argument("--users", type=int)
    g.add_argument("--slots", type=int)
    g.add_argument("--feedback-rate", dest="feedback_rate", type=float)
    g.add_argument("--sigma-w2", dest="sigma_w2", type=float)
    g.add_argument("--alpha", type=float)
    g.add_argument("--noise-dbm", dest="noise_dbm", type=float)
    g.add_argument("--sigma-ob2", dest="sigma_ob2", type=float)
    g.add_argument("--sigma-ob", dest="sigma_ob", type=float)
    g.add_argument("--target-rate", dest="target_rate", type=float)
    g.add_argument("--power-dbm", dest="power_dbm", type=float)
    g.add_argument("--power2-dbm", dest="power2_dbm", type=float)
    g.add_argument("--scheme", choices=("fixed", "dpa", "dpc", "oma", "hybrid"))
    g.add_argument("--beta", type=float)
    g.add_argument("--pe1-est", dest="pe1_est", type=float)
    g.add_argument("--trials", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--threads", type=int)
    g.add_argument("--out", help="output file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="posnoma",
                                     description="Position-aided NOMA analysis and simulation")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="closed-form metrics for one pair")
    _add_common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="Monte Carlo run at one operating point")
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="Monte Carlo sweep over one parameter")
    _add_common(p)
    p.add_argument("--var", required=True, help="parameter to sweep")
    p.add_argument("--values", help="explicit values, comma separated")
    p.add_argument("--range", help="start:stop:count (inclusive linspace)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("track", help="track mobile users and export estimates")
    _add_common(p)
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("reproduce", help="rerun a figure or table recipe")
    p.add_argument("figure", choices=recipes.FIGURES + ("all",))
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--trials", type=int, help="override the per-point trial count")
    p.add_argument("--trajectories", type=int, help="override the trajectory count")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
