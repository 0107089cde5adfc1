"""Configuration-driven command line front end.

Subcommands: solve, simulate, stability, thresholds, compare. A YAML config
describes the system (channel, sensors, budget, truncation), policy
parameters, simulation parameters and the output directory. Every output
CSV starts with a provenance comment carrying the config hash; numbers are
printed with 12 significant digits so reruns diff cleanly.

Exit codes: 0 success, 2 configuration/validation error, 1 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from . import decomposed, mdp, policies as pol, sim, stability
from .model import (
    BernoulliArrival,
    ChannelSpec,
    ConvergenceError,
    EstimationTracePenalty,
    ExponentialPenalty,
    MarkovArrival,
    SensorSpec,
    SystemSpec,
    solve_steady_state_covariance,
)

DEFAULT_MAX_STATES = 2_000_000


class ConfigError(ValueError):
    """Schema or range violation in the config file or flags."""


def _fmt(value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{value:.12g}"
    if isinstance(value, (np.integer,)):
        return str(int(value))
    return str(value)


class _Writer:
    """csv.writer wrapper printing floats with 12 significant digits."""

    def __init__(self, fh):
        self._w = csv.writer(fh)

    def writerow(self, row) -> None:
        self._w.writerow([_fmt(c) for c in row])


def _open_output(out_dir: Path, name: str, config_hash: str):
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    fh = path.open("w", newline="")
    fh.write(f"# config_sha256={config_hash}\n")
    return fh, _Writer(fh)


def _reject_unknown(section: dict, allowed, path: str) -> None:
    if not isinstance(section, dict):
        raise ConfigError(f"{path}: expected a mapping")
    unknown = set(section) - set(allowed)
    if unknown:
        raise ConfigError(f"{path}: unknown key(s) {sorted(unknown)}")


def _need(section: dict, key: str, path: str):
    if not isinstance(section, dict) or key not in section:
        raise ConfigError(f"{path}: missing required key '{key}'")
    return section[key]


def _prob(value, path: str, strict: bool = False) -> float:
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{path}: expected a number, got {value!r}") from None
    lo = 0.0 < v if strict else 0.0 <= v
    hi = v < 1.0 if strict else v <= 1.0
    if not (lo and hi):
        rng = "(0,1)" if strict else "[0,1]"
        raise ConfigError(f"{path}: probability must lie in {rng}, got {v}")
    return v


def _posint(value, path: str, minimum: int = 1) -> int:
    if not isinstance(value, int) or isinstance(value, bool) or value < minimum:
        raise ConfigError(f"{path}: expected an integer >= {minimum}, got {value!r}")
    return value


def _matrix(value, path: str) -> np.ndarray:
    try:
        m = np.array(value, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(f"{path}: expected a numeric matrix") from None
    if m.ndim != 2:
        raise ConfigError(f"{path}: expected a 2-D matrix, got shape {m.shape}")
    return m


def _parse_arrival(section, path: str):
    if not isinstance(section, dict):
        raise ConfigError(f"{path}: expected a mapping with a 'kind' key")
    kind = _need(section, "kind", path)
    if kind == "bernoulli":
        _reject_unknown(section, {"kind", "rate"}, path)
        return BernoulliArrival(_prob(_need(section, "rate", path), f"{path}.rate"))
    if kind == "markov":
        _reject_unknown(section, {"kind", "stay_empty", "stay_active"}, path)
        return MarkovArrival(
            _prob(_need(section, "stay_empty", path), f"{path}.stay_empty"),
            _prob(_need(section, "stay_active", path), f"{path}.stay_active"),
        )
    raise ConfigError(f"{path}.kind: must be 'bernoulli' or 'markov', got {kind!r}")


def _parse_penalty(section, path: str):
    if not isinstance(section, dict):
        raise ConfigError(f"{path}: expected a mapping with a 'kind' key")
    kind = _need(section, "kind", path)
    if kind == "exponential":
        _reject_unknown(section, {"kind", "r"}, path)
        r = _need(section, "r", path)
        try:
            return ExponentialPenalty(float(r))
        except ValueError as exc:
            raise ConfigError(f"{path}.r: {exc}") from None
    if kind == "estimation_trace":
        allowed = {"kind", "a", "sigma_w", "p_bar", "c", "r_meas"}
        _reject_unknown(section, allowed, path)
        a = _matrix(_need(section, "a", path), f"{path}.a")
        sigma_w = _matrix(_need(section, "sigma_w", path), f"{path}.sigma_w")
        if "p_bar" in section:
            p_bar = _matrix(section["p_bar"], f"{path}.p_bar")
        elif "c" in section and "r_meas" in section:
            c = _matrix(section["c"], f"{path}.c")
            r_meas = _matrix(section["r_meas"], f"{path}.r_meas")
            p_bar = solve_steady_state_covariance(a, c, sigma_w, r_meas)
        else:
            raise ConfigError(
                f"{path}: estimation_trace needs either p_bar or both c and r_meas"
            )
        try:
            return EstimationTracePenalty(a, sigma_w, p_bar)
        except ValueError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    raise ConfigError(
        f"{path}.kind: must be 'exponential' or 'estimation_trace', got {kind!r}"
    )


@dataclass
class LoadedConfig:
    system: SystemSpec
    p_r: Optional[tuple]
    horizon: int
    replications: int
    warmup: int
    seed: int
    out_dir: Path
    max_states: int
    config_hash: str


def load_config(path) -> LoadedConfig:
    path = Path(path)
    try:
        raw_bytes = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    config_hash = hashlib.sha256(raw_bytes).hexdigest()
    try:
        raw = yaml.safe_load(raw_bytes)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    _reject_unknown(
        raw,
        {"channel", "budget", "truncation", "sensors", "policy", "simulation", "output"},
        str(path),
    )

    ch = _need(raw, "channel", str(path))
    _reject_unknown(ch, {"kappa00", "kappa11"}, "channel")
    channel = ChannelSpec(
        _prob(_need(ch, "kappa00", "channel"), "channel.kappa00", strict=True),
        _prob(_need(ch, "kappa11", "channel"), "channel.kappa11", strict=True),
    )

    trunc = raw.get("truncation", {})
    _reject_unknown(trunc, {"max_aori", "max_aoli", "max_states"}, "truncation")
    default_aori = trunc.get("max_aori")
    default_aoli = trunc.get("max_aoli", default_aori)
    max_states = trunc.get("max_states", DEFAULT_MAX_STATES)
    if "max_states" in trunc:
        max_states = _posint(max_states, "truncation.max_states")

    sensors_raw = _need(raw, "sensors", str(path))
    if not isinstance(sensors_raw, list) or not sensors_raw:
        raise ConfigError("sensors: expected a non-empty list")
    sensors = []
    for i, s in enumerate(sensors_raw):
        spath = f"sensors[{i}]"
        _reject_unknown(
            s, {"arrival", "penalty", "p0", "p1", "max_aori", "max_aoli"}, spath
        )
        aori = s.get("max_aori", default_aori)
        if aori is None:
            raise ConfigError(f"{spath}: max_aori missing and no truncation default")
        aoli = s.get("max_aoli", default_aoli if "max_aori" not in s else s.get("max_aori"))
        aori = _posint(aori, f"{spath}.max_aori")
        aoli = _posint(aoli, f"{spath}.max_aoli", minimum=0)
        sensors.append(
            SensorSpec(
                arrival=_parse_arrival(_need(s, "arrival", spath), f"{spath}.arrival"),
                penalty=_parse_penalty(_need(s, "penalty", spath), f"{spath}.penalty"),
                p0=_prob(_need(s, "p0", spath), f"{spath}.p0"),
                p1=_prob(_need(s, "p1", spath), f"{spath}.p1"),
                max_aoli=aoli,
                max_aori=aori,
            )
        )

    budget = _posint(_need(raw, "budget", str(path)), "budget")
    try:
        system = SystemSpec(tuple(sensors), channel, budget)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    p_r = None
    if "policy" in raw:
        _reject_unknown(raw["policy"], {"p_r"}, "policy")
        if "p_r" in raw["policy"]:
            vals = raw["policy"]["p_r"]
            if not isinstance(vals, list) or len(vals) != system.n_sensors:
                raise ConfigError("policy.p_r: expected one probability per sensor")
            p_r = tuple(
                _prob(v, f"policy.p_r[{i}]", strict=True) for i, v in enumerate(vals)
            )

    simc = raw.get("simulation", {})
    _reject_unknown(simc, {"horizon", "replications", "warmup", "seed"}, "simulation")
    horizon = _posint(simc.get("horizon", 1000), "simulation.horizon")
    replications = _posint(simc.get("replications", 500), "simulation.replications")
    warmup = _posint(simc.get("warmup", 0), "simulation.warmup", minimum=0)
    seed = simc.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigError("simulation.seed: expected an integer")
    if horizon <= warmup:
        raise ConfigError("simulation.horizon must exceed simulation.warmup")

    outc = raw.get("output", {})
    _reject_unknown(outc, {"dir"}, "output")
    out_dir = Path(outc.get("dir", "out"))

    return LoadedConfig(
        system, p_r, horizon, replications, warmup, seed, out_dir, max_states, config_hash
    )


def _check_state_budget(cfg: LoadedConfig) -> mdp.StateSpace:
    space = mdp.StateSpace(cfg.system)
    if space.n_states > cfg.max_states:
        raise ConfigError(
            f"state space too large: N={cfg.system.n_sensors}, "
            f"caps={[(s.max_aoli, s.max_aori) for s in cfg.system.sensors]}, "
            f"budget={cfg.system.m_budget}: {space.n_states} states "
            f"> max_states {cfg.max_states}"
        )
    return space


def _sisp_table(cfg: LoadedConfig, space, actions):
    values = decomposed.solve_sisp_values(cfg.system, cfg.p_r)
    table, copied = decomposed.build_policy_table_with_pruning(
        values, space, actions, cfg.system
    )
    return values, table, copied


def _build_policy(name: str, cfg: LoadedConfig, cache: dict) -> pol.Policy:
    system = cfg.system
    if name in cache:
        return cache[name]
    if name == "optimal":
        space = _check_state_budget(cfg)
        _, _, vt, pt = mdp.solve_optimal_policy(system)
        policy = pol.TablePolicy("optimal", space, pt)
    elif name == "sisp":
        space = _check_state_budget(cfg)
        actions = mdp.ActionSet(system.n_sensors, system.m_budget)
        _, table, _ = _sisp_table(cfg, space, actions)
        policy = pol.TablePolicy("sisp", space, table)
    elif name == "myopic":
        policy = pol.MyopicPolicy(pol.build_myopic_policy(system))
    elif name == "maf":
        policy = pol.MafPolicy(system.m_budget)
    elif name == "mef":
        policy = pol.MefPolicy(system)
    elif name == "rr":
        policy = pol.RoundRobinPolicy(system.n_sensors, system.m_budget)
    elif name == "rand":
        p_r = cfg.p_r or decomposed.default_randomized_probs(system)
        policy = pol.RandomizedSchedule(p_r, system.m_budget)
    elif name == "idle":
        policy = pol.IdlePolicy(system.n_sensors)
    else:
        raise ConfigError(
            f"unknown policy '{name}'; choose from {', '.join(pol.POLICY_NAMES)}"
        )
    cache[name] = policy
    return policy


def cmd_solve(args) -> int:
    cfg = load_config(args.config)
    out_dir = Path(args.out) if args.out else cfg.out_dir
    system = cfg.system
    t0 = time.perf_counter()
    if args.policy == "optimal":
        space = _check_state_budget(cfg)
        _, _, vt, pt = mdp.solve_optimal_policy(system)
        values, gain, iters = vt.values, vt.gain, vt.iterations
        extra = {}
    elif args.policy == "sisp":
        space = _check_state_budget(cfg)
        actions = mdp.ActionSet(system.n_sensors, system.m_budget)
        sensor_values, pt, copied = _sisp_table(cfg, space, actions)
        values = None
        gain = sum(v.gain for v in sensor_values)
        iters = ""
        extra = {"pruned_states": copied}
    else:  # myopic
        model = pol.build_myopic_policy(system)
        wall = time.perf_counter() - t0
        fh, w = _open_output(out_dir, "myopic_table.csv", cfg.config_hash)
        with fh:
            n = system.n_sensors
            w.writerow(["state_index"] + [f"aori_{i+1}" for i in range(n)] + ["theta", "action_bits"])
            for idx in range(model.space.n_states):
                aoris, theta = model.space.decode(idx)
                bits = "".join(str(d) for d in model.table.action_of(idx))
                w.writerow([idx, *aoris, theta, bits])
        fh, w = _open_output(out_dir, "myopic_summary.csv", cfg.config_hash)
        with fh:
            w.writerow(["policy", "states", "gain", "wall_time_s"])
            w.writerow(["myopic", model.space.n_states, model.gain, wall])
        print(f"myopic: {model.space.n_states} states, gain {_fmt(model.gain)}")
        return 0
    wall = time.perf_counter() - t0

    n = system.n_sensors
    has_markov = any(s.has_markov_arrivals for s in system.sensors)
    header = ["state_index"]
    header += [f"aoli_{i+1}" for i in range(n)]
    header += [f"aori_{i+1}" for i in range(n)]
    if has_markov:
        header += [f"arrmem_{i+1}" for i in range(n)]
    header += ["theta", "value", "action_bits"]
    fh, w = _open_output(out_dir, f"{args.policy}_table.csv", cfg.config_hash)
    with fh:
        w.writerow(header)
        for row in mdp.table_rows(space, values, pt):
            w.writerow(row)
    fh, w = _open_output(out_dir, f"{args.policy}_summary.csv", cfg.config_hash)
    with fh:
        cols = ["policy", "states", "gain", "iterations", "wall_time_s"]
        vals = [args.policy, space.n_states, gain, iters, wall]
        for k, v in extra.items():
            cols.append(k)
            vals.append(v)
        w.writerow(cols)
        w.writerow(vals)
    print(f"{args.policy}: {space.n_states} states, gain {_fmt(gain)}, {wall:.2f}s")
    return 0


def _policy_list(args, cfg) -> list:
    names = [p.strip() for p in args.policies.split(",") if p.strip()]
    if not names:
        raise ConfigError("--policies: expected a comma separated list")
    cache = {}
    return [_build_policy(name, cfg, cache) for name in names]


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    out_dir = Path(args.out) if args.out else cfg.out_dir
    seed = args.seed if args.seed is not None else cfg.seed
    horizon = args.horizon or cfg.horizon
    replications = args.replications or cfg.replications
    if args.caps:
        try:
            caps = [int(c) for c in args.caps.split(",") if c.strip()]
        except ValueError:
            raise ConfigError("--caps: expected a comma separated list of integers") from None
        if not caps or any(c < 1 for c in caps):
            raise ConfigError("--caps: need positive truncation caps")
        probe = sim.divergence_probe(
            cfg.system, caps, horizon, seed, replications, warmup=cfg.warmup
        )
        fh, w = _open_output(out_dir, "divergence.csv", cfg.config_hash)
        with fh:
            w.writerow(["cap", "mean_cost", "sd", "ci95", "replications", "horizon", "seed"])
            for r in probe:
                w.writerow([r.cap, r.mean, r.sd, r.ci95, replications, horizon, seed])
        for r in probe:
            print(f"cap {r.cap}: mean {_fmt(r.mean)} +- {_fmt(r.ci95)} (95% CI)")
        return 0
    policies = _policy_list(args, cfg)
    plan = sim.ExperimentPlan(
        cfg.system, policies, horizon, replications, seed, warmup=cfg.warmup
    )
    result = sim.monte_carlo(plan)
    fh, w = _open_output(out_dir, "results.csv", cfg.config_hash)
    with fh:
        w.writerow(["policy", "mean_cost", "sd", "ci95", "replications", "horizon", "seed"])
        for st in result.stats:
            w.writerow([st.name, st.mean, st.sd, st.ci95, replications, horizon, seed])
    for st in result.stats:
        print(f"{st.name}: mean {_fmt(st.mean)} +- {_fmt(st.ci95)} (95% CI)")
    if args.trace:
        from .dynamics import TRAJECTORY_HEADER

        for policy in policies:
            fh, w = _open_output(out_dir, f"trajectory_{policy.name}.csv", cfg.config_hash)
            with fh:
                w.writerow(TRAJECTORY_HEADER)
                sim.run_episode(
                    cfg.system, policy, horizon, seed, warmup=0, sink=w
                )
    return 0


def cmd_stability(args) -> int:
    if args.config:
        cfg = load_config(args.config)
        channel = cfg.system.channel
        out_dir = Path(args.out) if args.out else cfg.out_dir
        config_hash = cfg.config_hash
    else:
        if args.kappa00 is None or args.kappa11 is None:
            raise ConfigError("stability without --config needs --kappa00 and --kappa11")
        channel = ChannelSpec(args.kappa00, args.kappa11)
        out_dir = Path(args.out) if args.out else Path("out")
        key = f"kappa00={args.kappa00},kappa11={args.kappa11},lambda={args.lambda_hat},rho_a={args.rho_a},exp_r={args.exp_r}"
        config_hash = hashlib.sha256(key.encode()).hexdigest()

    if args.region:
        if args.lambda_hat is None:
            raise ConfigError("--region needs --lambda-hat")
        if args.rho_a is not None:
            bound = 1.0 / args.rho_a**2
        elif args.exp_r is not None:
            bound = math.exp(-args.exp_r)
        else:
            raise ConfigError("--region needs a bound: --rho-a or --exp-r")
        region = stability.feasible_region(channel, args.lambda_hat, bound, args.resolution)
        fh, w = _open_output(out_dir, "region.csv", config_hash)
        with fh:
            w.writerow(["p0", "p1", "rho", "bound", "feasible"])
            for u, p0 in enumerate(region.p0_values):
                for v, p1 in enumerate(region.p1_values):
                    w.writerow([p0, p1, region.rho[u, v], bound, int(region.feasible[u, v])])
        frac = region.feasible.mean()
        print(f"region: {args.resolution}x{args.resolution} grid, {frac:.1%} feasible")
        return 0

    if not args.config:
        raise ConfigError("single-point stability check needs --config")
    reports = stability.system_stability(cfg.system)
    fh, w = _open_output(out_dir, "stability.csv", config_hash)
    with fh:
        w.writerow(["sensor", "rho", "bound", "satisfied", "criterion"])
        for r in reports:
            w.writerow([r.sensor_index + 1, r.rho, r.bound, int(r.satisfied), r.criterion])
    for r in reports:
        verdict = "stable" if r.satisfied else "UNSTABLE"
        print(
            f"sensor {r.sensor_index + 1}: rho {_fmt(r.rho)} vs bound {_fmt(r.bound)} "
            f"-> {verdict} ({r.criterion})"
        )
    return 0


def cmd_thresholds(args) -> int:
    cfg = load_config(args.config)
    out_dir = Path(args.out) if args.out else cfg.out_dir
    values = decomposed.solve_sisp_values(cfg.system, cfg.p_r)
    table = decomposed.extract_thresholds(values, cfg.system)
    fh, w = _open_output(out_dir, "thresholds.csv", cfg.config_hash)
    with fh:
        w.writerow(["sensor", "theta", "threshold_aori"])
        for sensor, theta, thr in table.rows():
            w.writerow([sensor, theta, "inf" if math.isinf(thr) else int(thr)])
            print(f"sensor {sensor}, channel {theta}: threshold {thr}")
    return 0


def cmd_compare(args) -> int:
    cfg = load_config(args.config)
    out_dir = Path(args.out) if args.out else cfg.out_dir
    seed = args.seed if args.seed is not None else cfg.seed
    horizon = args.horizon or cfg.horizon
    replications = args.replications or cfg.replications
    system = cfg.system
    policies = _policy_list(args, cfg)

    space = _check_state_budget(cfg)
    actions = mdp.ActionSet(system.n_sensors, system.m_budget)
    kernels = mdp.build_kernels(system, space, actions)
    cost = mdp.cost_vector(space, system)
    start = space.reference_index()

    exact = {}
    for policy in policies:
        if policy.name == "rr":
            p_aug, cost_aug, start_aug = pol.round_robin_chain(
                space, kernels, cost, system.n_sensors, system.m_budget
            )
            exact[policy.name] = mdp.chain_average_cost(p_aug, cost_aug, start_aug)
        elif policy.name == "rand":
            weights = pol.randomized_action_weights(policy.p, system.m_budget, actions)
            chain = mdp.mixture_chain_matrix(weights, kernels)
            exact[policy.name] = mdp.chain_average_cost(chain, cost, start)
        else:
            table = pol.policy_to_table(policy, space, actions)
            exact[policy.name] = mdp.policy_average_cost(table, kernels, cost, start)

    plan = sim.ExperimentPlan(system, policies, horizon, replications, seed, warmup=cfg.warmup)
    result = sim.monte_carlo(plan)
    fh, w = _open_output(out_dir, "compare.csv", cfg.config_hash)
    with fh:
        w.writerow(
            ["policy", "exact_cost", "mc_mean", "mc_sd", "mc_ci95", "replications", "horizon", "seed"]
        )
        for st in result.stats:
            w.writerow(
                [st.name, exact[st.name], st.mean, st.sd, st.ci95, replications, horizon, seed]
            )
    for st in result.stats:
        print(
            f"{st.name}: exact {_fmt(exact[st.name])}, "
            f"simulated {_fmt(st.mean)} +- {_fmt(st.ci95)}"
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aoisched",
        description="Dual-age transmission scheduling: solvers, stability tests, simulation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve a scheduling policy and dump tables")
    p_solve.add_argument("--config", required=True)
    p_solve.add_argument("--policy", choices=("optimal", "sisp", "myopic"), default="optimal")
    p_solve.add_argument("--out", default=None)
    p_solve.set_defaults(func=cmd_solve)

    p_sim = sub.add_parser("simulate", help="Monte Carlo policy comparison")
    p_sim.add_argument("--config", required=True)
    p_sim.add_argument("--policies", default="sisp,maf,rr,rand")
    p_sim.add_argument("--seed", type=int, default=None)
    p_sim.add_argument("--horizon", type=int, default=None)
    p_sim.add_argument("--replications", type=int, default=None)
    p_sim.add_argument("--trace", action="store_true")
    p_sim.add_argument(
        "--caps",
        default=None,
        help="comma separated truncation caps: run the divergence probe "
        "(structure-informed policy rebuilt per cap) instead of a comparison",
    )
    p_sim.add_argument("--out", default=None)
    p_sim.set_defaults(func=cmd_simulate)

    p_stab = sub.add_parser("stability", help="spectral-radius stability checks")
    p_stab.add_argument("--config", default=None)
    p_stab.add_argument("--region", action="store_true")
    p_stab.add_argument("--resolution", type=int, default=101)
    p_stab.add_argument("--kappa00", type=float, default=None)
    p_stab.add_argument("--kappa11", type=float, default=None)
    p_stab.add_argument("--lambda-hat", dest="lambda_hat", type=float, default=None)
    p_stab.add_argument("--rho-a", dest="rho_a", type=float, default=None)
    p_stab.add_argument("--exp-r", dest="exp_r", type=float, default=None)
    p_stab.add_argument("--out", default=None)
    p_stab.set_defaults(func=cmd_stability)

    p_thr = sub.add_parser("thresholds", help="extract SISP scheduling thresholds")
    p_thr.add_argument("--config", required=True)
    p_thr.add_argument("--out", default=None)
    p_thr.set_defaults(func=cmd_thresholds)

    p_cmp = sub.add_parser("compare", help="exact and simulated policy comparison")
    p_cmp.add_argument("--config", required=True)
    p_cmp.add_argument("--policies", default="sisp,maf,rr,rand")
    p_cmp.add_argument("--seed", type=int, default=None)
    p_cmp.add_argument("--horizon", type=int, default=None)
    p_cmp.add_argument("--replications", type=int, default=None)
    p_cmp.add_argument("--out", default=None)
    p_cmp.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - single CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
