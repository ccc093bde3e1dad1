"""Scenario harness: channel generation, user pairing, batch runs, output.

Channels follow the usual macro-cell recipe: log-distance path loss
(128.1 + 37.6 log10(d_km) by default), i.i.d. log-normal shadowing and a
constant antenna gain, over a small ring of sites with wrap-around
distances.  The harness drives the two solvers over a budget sweep and
emits per-iteration traces plus one summary row per (seed, budget) in
CSV or JSON form.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import fixtures
from .network import NetworkTopology, RateDemands, achievable_rate
from .power_min import assemble_full_solution, dpc_spm
from .rate_max_network import (InfeasibleInitialPointError, dpc_srm,
                               random_feasible_start)

PAIRING_METHODS = ("SS", "SW", "SM")
ALGORITHMS = ("power-min", "rate-max")


class ConfigError(ValueError):
    """Invalid or unknown configuration content (CLI exit code 2)."""


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


@dataclass
class ScenarioConfig:
    # scenario
    seed: int = 1
    num_seeds: int = 1
    algorithm: str = "power-min"
    multistart: int = 1
    # cells
    layout: str = "paper-default"
    site_positions_m: list | None = None
    inter_site_distance_m: float = 800.0
    cell_radius_m: float | None = None
    num_cells: int = 3
    users_per_cell: int = 4
    users_per_subchannel: int = 2
    num_subchannels: int = 2
    pairing: str = "SW"
    # radio
    bandwidth_hz: float = 1.0e6
    noise_power_dbm: float = -114.0
    budget_dbm_sweep: list = field(default_factory=lambda: [30.0])
    rate_demand_bps: object = 0.3e6        # scalar, or per-user list by gain rank
    pathloss_intercept_db: float = 128.1
    pathloss_slope_db: float = 37.6
    shadowing_std_db: float = 8.0
    antenna_gain_dbi: float = 14.0
    min_distance_m: float = 10.0
    # solver
    power_tol_w: float = 1.0e-8
    max_iterations: int = 10_000
    rate_tol: float = 1.0e-3
    max_outer: int = 100

    _FLOAT_FIELDS = ("inter_site_distance_m", "bandwidth_hz",
                     "noise_power_dbm", "pathloss_intercept_db",
                     "pathloss_slope_db", "shadowing_std_db",
                     "antenna_gain_dbi", "min_distance_m", "power_tol_w",
                     "rate_tol")
    _INT_FIELDS = ("seed", "num_seeds", "multistart", "num_cells",
                   "users_per_cell", "users_per_subchannel",
                   "num_subchannels", "max_iterations", "max_outer")

    def __post_init__(self):
        # YAML 1.1 reads unsigned scientific notation (3.0e5) as a string;
        # coerce every numeric field up front
        try:
            for name in self._FLOAT_FIELDS:
                setattr(self, name, float(getattr(self, name)))
            for name in self._INT_FIELDS:
                setattr(self, name, int(getattr(self, name)))
            if self.cell_radius_m is not None:
                self.cell_radius_m = float(self.cell_radius_m)
            self.budget_dbm_sweep = [float(v) for v in self.budget_dbm_sweep]
            if isinstance(self.rate_demand_bps, (list, tuple)):
                self.rate_demand_bps = [float(v) for v in self.rate_demand_bps]
            else:
                self.rate_demand_bps = float(self.rate_demand_bps)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"non-numeric value: {exc}") from exc
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"algorithm must be one of {ALGORITHMS}")
        if self.pairing not in PAIRING_METHODS:
            raise ConfigError(f"pairing must be one of {PAIRING_METHODS}")
        if self.layout not in ("paper-default", "custom"):
            raise ConfigError("layout must be 'paper-default' or 'custom'")
        if self.layout == "custom":
            if not self.site_positions_m:
                raise ConfigError("custom layout needs site_positions_m")
            self.num_cells = len(self.site_positions_m)
        positives = ["inter_site_distance_m", "users_per_cell",
                     "users_per_subchannel", "num_subchannels", "num_cells",
                     "bandwidth_hz", "shadowing_std_db", "min_distance_m",
                     "power_tol_w", "max_iterations", "rate_tol", "max_outer",
                     "multistart", "num_seeds"]
        for name in positives:
            if getattr(self, name) is not None and getattr(self, name) <= 0:
                if name == "shadowing_std_db" and self.shadowing_std_db == 0:
                    continue
                raise ConfigError(f"{name} must be positive")
        if self.users_per_cell % self.users_per_subchannel != 0:
            raise ConfigError("users_per_subchannel must divide users_per_cell")
        if self.users_per_cell != self.users_per_subchannel * self.num_subchannels:
            raise ConfigError(
                "users_per_cell must equal users_per_subchannel * num_subchannels")
        if self.users_per_subchannel != 2:
            raise ConfigError("pairing methods are defined for 2 users per subchannel")
        if not self.budget_dbm_sweep:
            raise ConfigError("budget_dbm_sweep must not be empty")
        if isinstance(self.rate_demand_bps, (list, tuple)):
            if len(self.rate_demand_bps) != self.users_per_cell:
                raise ConfigError("per-user rate list must have users_per_cell entries")
            if any(r <= 0 for r in self.rate_demand_bps):
                raise ConfigError("rate demands must be positive")
        elif self.rate_demand_bps <= 0:
            raise ConfigError("rate_demand_bps must be positive")

    @property
    def radius(self) -> float:
        if self.cell_radius_m is not None:
            return self.cell_radius_m
        return self.inter_site_distance_m / 2.0


_SECTIONS = {
    "scenario": ["seed", "num_seeds", "algorithm", "multistart"],
    "cells": ["layout", "site_positions_m", "inter_site_distance_m",
              "cell_radius_m", "num_cells", "users_per_cell",
              "users_per_subchannel", "num_subchannels", "pairing"],
    "radio": ["bandwidth_hz", "noise_power_dbm", "budget_dbm_sweep",
              "rate_demand_bps", "pathloss_intercept_db", "pathloss_slope_db",
              "shadowing_std_db", "antenna_gain_dbi", "min_distance_m"],
    "solver": ["power_tol_w", "max_iterations", "rate_tol", "max_outer"],
}


def load_config(path) -> ScenarioConfig:
    """Parse a YAML scenario file; unknown sections or keys are errors."""
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping of sections")
    values = {}
    for section, content in raw.items():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown section {section!r}")
        if content is None:
            continue
        if not isinstance(content, dict):
            raise ConfigError(f"section {section!r} must be a mapping")
        for key, value in content.items():
            if key not in _SECTIONS[section]:
                raise ConfigError(f"unknown key {key!r} in section {section!r}")
            values[key] = value
    try:
        return ScenarioConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def pair_users(indices, method: str):
    """Group users two by two, given their indices sorted ascending by gain.

    SS pairs neighbors from the top down, SW pairs the strongest with the
    weakest, SM pairs the strongest with the upper-middle user.  Groups
    come back sorted internally (weak first) and ordered by their weakest
    member.
    """
    if method not in PAIRING_METHODS:
        raise ValueError(f"pairing must be one of {PAIRING_METHODS}")
    idx = list(indices)
    n = len(idx)
    if n % 2 != 0:
        raise ValueError(f"cannot pair {n} users")
    half = n // 2
    if method == "SS":
        pairs = [(idx[k], idx[k + 1]) for k in range(0, n, 2)]
    elif method == "SW":
        pairs = [(idx[k], idx[n - 1 - k]) for k in range(half)]
    else:   # SM
        pairs = [(idx[k], idx[k + half]) for k in range(half)]
    return pairs


def link_gain_db(config: ScenarioConfig, distance_m, shadow_db=0.0):
    """Antenna gain minus log-distance path loss minus shadowing, in dB."""
    d_km = np.asarray(distance_m, dtype=float) / 1000.0
    loss = config.pathloss_intercept_db \
        + config.pathloss_slope_db * np.log10(d_km)
    return config.antenna_gain_dbi - loss - shadow_db


def generate_channels(config: ScenarioConfig, seed: int) -> NetworkTopology:
    """Topology for one random drop; deterministic for a fixed seed."""
    rng = np.random.default_rng(seed)
    sites, wrap = _site_layout(config)
    num_cells = sites.shape[0]
    users = []
    for i in range(num_cells):
        for _ in range(config.users_per_cell):
            users.append(_drop_user(rng, sites[i], config))
    users = np.array(users)
    shadow = rng.normal(0.0, config.shadowing_std_db,
                        size=(len(users), num_cells))

    gain_db = np.empty((len(users), num_cells))
    for k in range(num_cells):
        gain_db[:, k] = link_gain_db(config, _distances(users, sites[k], wrap),
                                     shadow[:, k])
    gain = 10.0 ** (gain_db / 10.0)

    budget = dbm_to_watts(config.budget_dbm_sweep[0])
    per_cell_gains = []
    per_cell_ids = []
    for i in range(num_cells):
        rows = np.arange(i * config.users_per_cell, (i + 1) * config.users_per_cell)
        order = np.argsort(gain[rows, i], kind="stable")
        ranked = rows[order]
        groups = pair_users(range(config.users_per_cell), config.pairing)
        cell_groups = []
        cell_ids = []
        for pair in groups:
            members = ranked[list(pair)]
            cell_groups.append(gain[members].T)     # (num_cells, 2)
            cell_ids.append(members)
        per_cell_gains.append(tuple(cell_groups))
        per_cell_ids.append(tuple(cell_ids))
    return NetworkTopology(bandwidth=config.bandwidth_hz,
                           noise_power=dbm_to_watts(config.noise_power_dbm),
                           budgets=np.full(num_cells, budget),
                           gains=tuple(per_cell_gains),
                           user_ids=tuple(per_cell_ids))


def _site_layout(config):
    if config.layout == "custom":
        return np.asarray(config.site_positions_m, dtype=float), None
    d0 = config.inter_site_distance_m
    sites = np.stack([np.arange(config.num_cells) * d0,
                      np.zeros(config.num_cells)], axis=1)
    wrap = np.array([config.num_cells * d0, math.sqrt(3.0) * d0])
    return sites, wrap


def _drop_user(rng, site, config):
    radius = config.radius
    for _ in range(1000):
        pos = site + rng.uniform(-radius, radius, size=2)
        d = np.linalg.norm(pos - site)
        if config.min_distance_m <= d <= radius:
            return pos
    raise RuntimeError("could not place a user after 1000 draws")


def _distances(points, site, wrap):
    delta = np.abs(points - site[None, :])
    if wrap is not None:
        delta = np.minimum(delta, wrap[None, :] - delta)
    return np.sqrt((delta ** 2).sum(axis=1))


def build_demands(config: ScenarioConfig, topology: NetworkTopology) -> RateDemands:
    """Demands from the config; per-user lists are indexed by gain rank."""
    if not isinstance(config.rate_demand_bps, (list, tuple)):
        return RateDemands.uniform(topology, float(config.rate_demand_bps))
    table = {}
    for i in range(topology.num_cells):
        ranked = np.concatenate([topology.user_ids[i][m]
                                 for m in range(topology.num_subchannels)])
        base = i * config.users_per_cell
        for u in ranked:
            table[int(u)] = float(config.rate_demand_bps[int(u) - base])
    return RateDemands.by_user(topology, table)


@dataclass
class SummaryRow:
    seed: int
    budget_dbm: float
    algorithm: str
    pairing: str
    sum_power_w: float
    sum_rate_bps: float
    iterations: int
    converged: bool
    trace_file: str


@dataclass
class RunArtifacts:
    summary: list
    traces: dict
    allocations: dict
    validation_failures: list

    @property
    def ok(self) -> bool:
        return not self.validation_failures


def run_scenario(config: ScenarioConfig) -> RunArtifacts:
    """Solve every (seed, budget) point of the sweep and collect artifacts."""
    summary = []
    traces = {}
    allocations = {}
    failures = []
    for seed in range(config.seed, config.seed + config.num_seeds):
        for budget_dbm in config.budget_dbm_sweep:
            row, trace, allocation = _solve_point(config, seed, budget_dbm)
            summary.append(row)
            traces[row.trace_file] = trace
            if allocation is not None:
                allocations[row.trace_file] = allocation
                problem = _validate(config, seed, budget_dbm, allocation)
                if problem:
                    failures.append(f"seed {seed}, budget {budget_dbm} dBm: {problem}")
    return RunArtifacts(summary=summary, traces=traces, allocations=allocations,
                        validation_failures=failures)


def _point_topology(config, seed, budget_dbm):
    point = dataclasses.replace(config, budget_dbm_sweep=[budget_dbm])
    topology = generate_channels(point, seed)
    return topology, build_demands(point, topology)


def _solve_point(config, seed, budget_dbm):
    topology, demands = _point_topology(config, seed, budget_dbm)
    name = f"trace_{seed}_{budget_dbm:g}_{config.algorithm}.csv"
    if config.algorithm == "power-min":
        report = dpc_spm(topology, demands, tol=config.power_tol_w,
                         max_iter=config.max_iterations)
        trace = [(k + 1, float(v)) for k, v in enumerate(report.trace)]
        if not report.feasible:
            row = SummaryRow(seed, budget_dbm, config.algorithm, config.pairing,
                             float("nan"), float("nan"), report.iterations,
                             False, name)
            return row, trace, None
        allocation = assemble_full_solution(topology, demands, report.q_star)
        sum_rate = _total_rate(topology, allocation, report.q_star)
        row = SummaryRow(seed, budget_dbm, config.algorithm, config.pairing,
                         float(report.q_star.sum()), sum_rate,
                         report.iterations, True, name)
        return row, trace, allocation

    best = None
    try:
        best = dpc_srm(topology, demands, tol=config.rate_tol,
                       max_outer=config.max_outer)
        rng = np.random.default_rng(seed + 0x5EED)
        for _ in range(config.multistart - 1):
            q0, x0 = random_feasible_start(topology, demands, rng)
            candidate = dpc_srm(topology, demands, q0=q0, x0=x0,
                                tol=config.rate_tol, max_outer=config.max_outer)
            if candidate.sum_rate > best.sum_rate:
                best = candidate
    except InfeasibleInitialPointError:
        row = SummaryRow(seed, budget_dbm, config.algorithm, config.pairing,
                         float("nan"), float("nan"), 0, False, name)
        return row, [(0, float("nan"))], None
    trace = [(k, float(v)) for k, v in enumerate(best.trace)]
    row = SummaryRow(seed, budget_dbm, config.algorithm, config.pairing,
                     float(best.q.sum()), best.sum_rate,
                     best.outer_iterations, best.converged, name)
    return row, trace, best.allocation


def _total_rate(topology, allocation, q):
    total = 0.0
    for i, m in topology.groups():
        total += float(np.sum(achievable_rate(topology, allocation, q, i, m)))
    return total


def _validate(config, seed, budget_dbm, allocation):
    topology, demands = _point_topology(config, seed, budget_dbm)
    q = allocation.cell_powers()
    if np.any(q.sum(axis=1) > topology.budgets * (1.0 + 1e-9)):
        return "budget exceeded"
    for i, m in topology.groups():
        achieved = achievable_rate(topology, allocation, q, i, m)
        wanted = demands.rates[i][m]
        if np.any(achieved < wanted * (1.0 - 1e-6)):
            return f"rate demand missed in group ({i},{m})"
    return None


def write_outputs(artifacts: RunArtifacts, out_dir, fmt: str = "csv"):
    """Emit the artifacts under ``out_dir``; returns the paths written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if fmt == "json":
        payload = {
            "summary": [dataclasses.asdict(r) for r in artifacts.summary],
            "traces": {k: v for k, v in sorted(artifacts.traces.items())},
            "allocations": {
                k: [[list(map(float, p)) for p in row] for row in a.powers]
                for k, a in sorted(artifacts.allocations.items())},
        }
        path = out / "run.json"
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        return [path]
    header = ("seed,budget (dBm),algorithm,pairing,sum_power (W),"
              "sum_rate (bit/s),iterations,converged,trace_file\n")
    lines = [header]
    for r in artifacts.summary:
        lines.append(f"{r.seed},{r.budget_dbm},{r.algorithm},{r.pairing},"
                     f"{r.sum_power_w},{r.sum_rate_bps},{r.iterations},"
                     f"{r.converged},{r.trace_file}\n")
    path = out / "summary.csv"
    path.write_text("".join(lines))
    written.append(path)
    trace_dir = out / "traces"
    trace_dir.mkdir(exist_ok=True)
    for name, rows in sorted(artifacts.traces.items()):
        unit = "W" if "power-min" in name else "bit/s"
        body = [f"iteration,objective ({unit})\n"]
        body.extend(f"{k},{v}\n" for k, v in rows)
        tpath = trace_dir / name
        tpath.write_text("".join(body))
        written.append(tpath)
    return written


def run_fixture_checks(echo=print) -> bool:
    """Run the built-in analytic fixtures through the real solvers."""
    ok = True

    topology, demands = fixtures.symmetric_two_cell()
    report = dpc_spm(topology, demands)
    total = float(report.q_star.sum())
    good = report.feasible and abs(total - fixtures.SYMMETRIC_TWO_CELL_SUM_POWER) <= 1e-6
    allocation = assemble_full_solution(topology, demands, report.q_star)
    good &= bool(np.allclose(allocation.powers[0][0],
                             fixtures.SYMMETRIC_TWO_CELL_USER_POWERS, atol=1e-6))
    echo(f"{'PASS' if good else 'FAIL'}: symmetric two-cell minimum sum power "
         f"(got {total!r}, want {fixtures.SYMMETRIC_TWO_CELL_SUM_POWER})")
    ok &= good

    topology, demands = fixtures.rate_max_single_cell()
    srm = dpc_srm(topology, demands)
    want = fixtures.RATE_MAX_SINGLE_CELL_SUM_RATE
    good = abs(srm.sum_rate - want) <= 1e-6
    echo(f"{'PASS' if good else 'FAIL'}: single-cell maximum sum rate "
         f"(got {srm.sum_rate!r}, want {want!r})")
    ok &= good
    return bool(ok)
