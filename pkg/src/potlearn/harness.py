"""Experiment orchestration: configs, seeded runs, sweeps, and oracle reports.

A run is fully determined by (config, seed): all randomness flows from one
counter-based stream, robots act in index order within fixed per-iteration
phases, and CSV emission uses shortest round-trip float formatting, so
repeated invocations produce bit-identical output.
"""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Sequence

import numpy as np
import yaml

from . import coverage as cov
from . import mixtures as mix
from . import stability
from .dynamics import (
    ConstrainedActionMap,
    RevisionPolicy,
    binary_logit_weights,
    validate_constraints,
)
from .games import GameDefinition, logit_map
from .qlearning import (
    QState,
    SOQLParams,
    adaptive_step,
    best_response_indices,
    commitment_zone_active,
    constrained_draw,
    greedy_update,
    perturb_strategy,
    q_update,
    soql_update,
)
from .rng import make_rng
from .svgplot import Series, line_plot
from .worthfield import WorthField, generate_scenario

ALGORITHMS = ("lll", "blll", "psblll", "ql", "soql")
ENVIRONMENTS = ("known-field", "estimated-field")

# Normalizer floor so that a robot that has sensed nothing reads F = G = 0
# and keeps exploring.
SENSE_FLOOR = 1e-9


class ConfigError(ValueError):
    """A config file contains an unknown key or an invalid value."""


@dataclass
class ExperimentConfig:
    """Flat experiment description; every knob the runners consume."""

    algorithm: str = "psblll"
    environment: str = "known-field"
    grid_size: int = 40
    robots: int = 5
    iterations: int = 20_000
    steady_window: int = 200
    steady_tol: float = 1e-4
    seeds: tuple[int, ...] = (0,)
    scenario_seed: int = 7
    scenario_components: tuple[dict, ...] | None = None
    # shared dynamics
    temperature: float = 0.1
    cover_radius: float = 1.5
    move_cost: float = 3e-5
    # revision policy
    explore_wake: float = 1.0
    climb_wake: float = 0.5
    settle_wake: float = 0.1
    drop_rate: float = 4.0
    prob_clamp: float = 1e-6
    # q-learning
    aggregation_step: float = 0.97
    selection_step: float = 0.5
    perturbation_size: float = 0.01
    commitment_threshold: float = 0.9999
    # estimation
    repeat_factor: int = 3
    worth_percentile: float = 60.0
    model_check_period: int = 50
    em_iters: int = 10
    em_period: int = 1
    aic_tau: float | None = None
    cov_floor: float = 0.25

    def __post_init__(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}")
        if self.environment not in ENVIRONMENTS:
            raise ConfigError(f"unknown environment {self.environment!r}")
        if self.environment == "estimated-field" and self.algorithm not in (
            "psblll",
            "blll",
            "lll",
        ):
            raise ConfigError("estimated-field mode applies to log-linear learners")
        if self.robots < 1:
            raise ConfigError("need at least one robot")
        if self.iterations < 0:
            raise ConfigError("iterations must be non-negative")
        if self.steady_window < 2:
            raise ConfigError("steady_window must be at least 2")
        self.seeds = tuple(int(s) for s in self.seeds)

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        data = dict(raw)
        params = data.pop("params", {}) or {}
        scenario = data.pop("scenario", None)
        for key in list(data) + list(params):
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
        merged = {**data, **params}
        if scenario is not None:
            extra = set(scenario) - {"seed", "components"}
            if extra:
                raise ConfigError(f"unknown scenario key {extra.pop()!r}")
            if "seed" in scenario:
                merged["scenario_seed"] = int(scenario["seed"])
            if "components" in scenario:
                merged["scenario_components"] = tuple(scenario["components"])
        return cls(**merged)

    @classmethod
    def from_yaml(cls, path: str | Path) -> "ExperimentConfig":
        raw = yaml.safe_load(Path(path).read_text())
        if not isinstance(raw, dict):
            raise ConfigError("config file must hold a mapping")
        return cls.from_dict(raw)

    def scenario(self) -> WorthField:
        if self.scenario_components is not None:
            return WorthField.from_dict(
                {
                    "grid_size": self.grid_size,
                    "components": list(self.scenario_components),
                }
            )
        return generate_scenario(self.scenario_seed, self.grid_size)

    def revision_policy(self) -> RevisionPolicy:
        return RevisionPolicy(
            explore_wake=self.explore_wake,
            climb_wake=self.climb_wake,
            settle_wake=self.settle_wake,
            drop_rate=self.drop_rate,
            prob_clamp=self.prob_clamp,
        )

    def soql_params(self) -> SOQLParams:
        return SOQLParams(
            aggregation_step=self.aggregation_step,
            selection_step=self.selection_step,
            perturbation_size=self.perturbation_size,
            commitment_threshold=self.commitment_threshold,
            temperature=self.temperature,
        )


def _float_repr(v: float) -> str:
    return repr(float(v))


@dataclass
class RunRecord:
    """Per-iteration trajectory of one seeded run."""

    algorithm: str
    environment: str
    seed: int
    grid_size: int
    n: list[int]
    covered: list[float]
    potential: list[float]
    positions: list[tuple[tuple[int, int], ...]]
    diagnostics: dict[str, list[float]]
    field_total_mass: float
    wall_time: float = 0.0
    final_flags: tuple[tuple[tuple[int, int], ...], ...] = ()
    estimates: list[dict] = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.n)

    def final_covered(self) -> float:
        return self.covered[-1] if self.covered else 0.0

    def final_positions(self) -> tuple[tuple[int, int], ...]:
        return self.positions[-1] if self.positions else ()

    def columns(self) -> list[str]:
        robots = len(self.positions[0]) if self.positions else 0
        cols = ["n", "covered", "potential"]
        cols += sorted(self.diagnostics)
        for i in range(robots):
            cols += [f"x{i}", f"y{i}"]
        return cols

    def to_csv(self) -> str:
        lines = [",".join(self.columns())]
        diag_keys = sorted(self.diagnostics)
        for k in range(len(self.n)):
            row = [str(self.n[k]), _float_repr(self.covered[k]), _float_repr(self.potential[k])]
            row += [_float_repr(self.diagnostics[d][k]) for d in diag_keys]
            for x, y in self.positions[k]:
                row += [str(x), str(y)]
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"

    def write_csv(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv())

    def estimates_csv(self) -> str:
        """Mixture-estimate snapshots taken at each model-check boundary."""
        lines = ["n,robot,components,component,weight,mean_x,mean_y,cov_xx,cov_xy,cov_yy"]
        for snap in self.estimates:
            for j in range(snap["components"]):
                w = snap["weights"][j]
                mx, my = snap["means"][j]
                cxx, cxy, cyy = snap["covs"][j]
                lines.append(
                    f"{snap['n']},{snap['robot']},{snap['components']},{j},"
                    f"{_float_repr(w)},{_float_repr(mx)},{_float_repr(my)},"
                    f"{_float_repr(cxx)},{_float_repr(cxy)},{_float_repr(cyy)}"
                )
        return "\n".join(lines) + "\n"


def steady_state(covered: Sequence[float], window: int, tol: float) -> bool:
    """True when the trailing max-min spread of the series is within `tol`."""
    if window < 2:
        raise ValueError("window must be at least 2")
    if len(covered) < window:
        return False
    tail = covered[-window:]
    return max(tail) - min(tail) <= tol


def _normalized(value: float, peak: float) -> float:
    return min(value / max(peak, SENSE_FLOOR), 1.0)


def _estimate_raster(estimate: mix.GmmEstimate, field_model: WorthField) -> np.ndarray:
    L = field_model.grid_size
    return estimate.density(field_model.centroids()).reshape(L, L)


def _all_cell_utilities(
    world: cov.CoverageWorld, robot: int, values: np.ndarray | None
) -> np.ndarray:
    """Move payoff of `robot` for every destination cell (teleport evaluation).

    Coverage term from a disc-sum map, overlap corrected near other robots,
    zeroed on detectable foreign flags, minus distance cost from the current
    cell.  Matches utility() cell-for-cell.
    """
    grid = world.worth_values() if values is None else values
    L = world.grid_size
    covered_map = np.zeros((L, L))
    for dx, dy in cov._offsets_within(world.cover_radius):
        src = grid[max(0, dx) : L - max(0, -dx), max(0, dy) : L - max(0, -dy)]
        covered_map[
            max(0, -dx) : L - max(0, dx), max(0, -dy) : L - max(0, dy)
        ] += src
    overlap_map = np.zeros((L, L))
    for j in range(world.n_robots):
        if j == robot:
            continue
        for l_cell in cov.neighbor_cells(world, world.positions[j], world.cover_radius):
            for c in cov.neighbor_cells(world, l_cell, world.cover_radius):
                overlap_map[c] += grid[l_cell]
    gain = covered_map - overlap_map
    old = world.positions[robot]
    for j in range(world.n_robots):
        if j == robot:
            continue
        for c in world.flags[j]:
            if math.dist(c, old) <= world.flag_range:
                gain[c] = 0.0
    xs = np.arange(L)
    dist = np.hypot(xs[:, None] - old[0], xs[None, :] - old[1])
    return gain - world.move_costs[robot] * dist


def run_experiment(config: ExperimentConfig, seed: int) -> RunRecord:
    """Execute one seeded run of the configured algorithm."""
    if config.algorithm in ("lll", "blll", "psblll"):
        return _run_loglinear(config, seed)
    return _run_qlearning(config, seed)


def _run_loglinear(config: ExperimentConfig, seed: int) -> RunRecord:
    start = time.perf_counter()
    rng = make_rng(seed, 0)
    field_model = config.scenario()
    world = cov.CoverageWorld.create(
        field_model,
        config.robots,
        rng,
        cover_radius=config.cover_radius,
        move_cost=config.move_cost,
        repeat_factor=config.repeat_factor,
        worth_percentile=config.worth_percentile,
    )
    policy = config.revision_policy()
    estimated = config.environment == "estimated-field"
    n_robots = config.robots
    estimates: list[mix.GmmEstimate | None] = [None] * n_robots
    rasters: list[np.ndarray | None] = [None] * n_robots
    aic_states = [
        mix.AICState(
            period=config.model_check_period,
            tau=config.aic_tau if config.aic_tau is not None else config.temperature,
        )
        for _ in range(n_robots)
    ]
    adoption_count = [0] * n_robots
    if estimated:
        for i in range(n_robots):
            cov.lay_flag_and_observe(world, i)
            estimates[i] = mix.em_iterate(
                world.logs[i],
                mix.initial_estimate(world.logs[i], 1),
                config.em_iters,
                cov_floor=config.cov_floor,
            )
            rasters[i] = _estimate_raster(estimates[i], field_model)
    else:
        for i in range(n_robots):
            cov.lay_flag(world, i)
    max_f = [0.0] * n_robots
    max_g = [0.0] * n_robots
    tol_abs = config.steady_tol * field_model.total_mass()

    diagnostics = {"awake": []} | ({"potential_est": []} if estimated else {})
    diagnostics |= {f"flags{i}": [] for i in range(n_robots)}
    rec = RunRecord(
        algorithm=config.algorithm,
        environment=config.environment,
        seed=seed,
        grid_size=config.grid_size,
        n=[],
        covered=[],
        potential=[],
        positions=[],
        diagnostics=diagnostics,
        field_total_mass=field_model.total_mass(),
    )

    for n in range(1, config.iterations + 1):
        if estimated and config.model_check_period and n % config.model_check_period == 0:
            for i in range(n_robots):
                estimates[i] = _aic_round(
                    estimates[i], world.logs[i], aic_states[i], rng, config
                )
                rasters[i] = _estimate_raster(estimates[i], field_model)
                rec.estimates.append(_estimate_snapshot(n, i, estimates[i]))

        if estimated or config.algorithm == "psblll":
            sensed = []
            for i in range(n_robots):
                f, g = cov.sense(world, i)
                max_f[i] = max(max_f[i], f)
                max_g[i] = max(max_g[i], g)
                sensed.append((f, g))
        if config.algorithm == "psblll":
            wake_probs = [
                policy.probability(
                    _normalized(sensed[i][0], max_f[i]),
                    _normalized(sensed[i][1], max_g[i]),
                )
                for i in range(n_robots)
            ]
            awake = [i for i in range(n_robots) if rng.random() < wake_probs[i]]
        else:
            awake = [int(rng.integers(n_robots))]

        new_positions = list(world.positions)
        adopted = [False] * n_robots
        if config.algorithm == "lll":
            i = awake[0]
            utilities = _all_cell_utilities(world, i, rasters[i] if estimated else None)
            probs = logit_map(utilities.ravel(), config.temperature)
            choice = int(rng.choice(probs.size, p=probs))
            target = cov.index_cell(world, choice)
            adopted[i] = target != world.positions[i]
            new_positions[i] = target
        else:
            trials = {}
            for i in awake:
                moves = cov.constrained_moves(world, world.positions[i])
                trials[i] = moves[int(rng.integers(len(moves)))]
            for i in awake:
                values = rasters[i] if estimated else None
                u_keep = cov.utility(world, i, world.positions[i], world.positions[i], values)
                u_trial = cov.utility(world, i, trials[i], world.positions[i], values)
                keep, _ = binary_logit_weights(u_keep, u_trial, config.temperature)
                if rng.random() >= keep:
                    new_positions[i] = trials[i]
                    adopted[i] = True

        phi = cov.potential(world, new_positions, world.positions, None, False)
        if estimated:
            phi_est = sum(
                cov.utility(world, i, new_positions[i], world.positions[i], rasters[i], False)
                for i in range(n_robots)
            )
        cov.commit_positions(world, new_positions)
        for i in range(n_robots):
            if estimated and adopted[i]:
                cov.lay_flag_and_observe(world, i)
                adoption_count[i] += 1
                if adoption_count[i] % config.em_period == 0:
                    estimates[i] = mix.em_iterate(
                        world.logs[i], estimates[i], config.em_iters, cov_floor=config.cov_floor
                    )
                    rasters[i] = _estimate_raster(estimates[i], field_model)
            else:
                cov.lay_flag(world, i)

        rec.n.append(n)
        rec.covered.append(cov.total_covered_worth(world))
        rec.potential.append(phi)
        rec.positions.append(tuple(world.positions))
        rec.diagnostics["awake"].append(float(len(awake)))
        for i in range(n_robots):
            rec.diagnostics[f"flags{i}"].append(float(len(world.flags[i])))
        if estimated:
            rec.diagnostics["potential_est"].append(float(phi_est))
        if steady_state(rec.covered, config.steady_window, tol_abs):
            break

    rec.final_flags = tuple(tuple(sorted(f)) for f in world.flags)
    rec.wall_time = time.perf_counter() - start
    return rec


def _estimate_snapshot(n: int, robot: int, estimate: mix.GmmEstimate) -> dict:
    return {
        "n": n,
        "robot": robot,
        "components": estimate.n_components,
        "weights": [float(w) for w in estimate.weights],
        "means": [[float(v) for v in m] for m in estimate.means],
        "covs": [
            [float(c[0, 0]), float(c[0, 1]), float(c[1, 1])] for c in estimate.covs
        ],
    }


def _aic_round(
    estimate: mix.GmmEstimate,
    log: mix.ObservationLog,
    state: mix.AICState,
    rng: np.random.Generator,
    config: ExperimentConfig,
) -> mix.GmmEstimate:
    """One component-count proposal: split or merge, refine, accept or keep."""
    m = estimate.n_components
    if m == 1:
        target = 2
    elif rng.random() < 0.5:
        target = m + 1
    else:
        target = m - 1
    try:
        if target > m:
            cand = mix.split_component(
                estimate, mix.split_select(estimate, log), log, cov_floor=config.cov_floor
            )
        else:
            cand = mix.merge_components(
                estimate, mix.merge_select(estimate, log), log, cov_floor=config.cov_floor
            )
        cand = mix.em_iterate(log, cand, config.em_iters, cov_floor=config.cov_floor)
    except (ValueError, np.linalg.LinAlgError):
        return estimate
    chosen = mix.propose_component_count(state, estimate, cand, log, rng)
    return cand if chosen == cand.n_components else estimate


def _run_qlearning(config: ExperimentConfig, seed: int) -> RunRecord:
    start = time.perf_counter()
    rng = make_rng(seed, 0)
    field_model = config.scenario()
    world = cov.CoverageWorld.create(
        field_model,
        config.robots,
        rng,
        cover_radius=config.cover_radius,
        move_cost=config.move_cost,
    )
    params = config.soql_params()
    n_robots = config.robots
    n_cells = config.grid_size**2
    state = QState.initial(
        [n_cells] * n_robots,
        [cov.cell_index(world, p) for p in world.positions],
    )
    for i in range(n_robots):
        cov.lay_flag(world, i)
    tol_abs = config.steady_tol * field_model.total_mass()
    second_order = config.algorithm == "soql"

    diagnostics = {f"commit{i}": [] for i in range(n_robots)}
    diagnostics |= {f"flags{i}": [] for i in range(n_robots)}
    rec = RunRecord(
        algorithm=config.algorithm,
        environment=config.environment,
        seed=seed,
        grid_size=config.grid_size,
        n=[],
        covered=[],
        potential=[],
        positions=[],
        diagnostics=diagnostics,
        field_total_mass=field_model.total_mass(),
    )

    for n in range(1, config.iterations + 1):
        zone = second_order and commitment_zone_active(state, params)
        token_available = True
        draws: list[int] = []
        draw_strategies: list[np.ndarray] = []
        for i in range(n_robots):
            allowed = [
                cov.cell_index(world, c)
                for c in cov.constrained_moves(world, world.positions[i])
            ]
            if second_order:
                if zone and token_available:
                    x_draw = perturb_strategy(state.strategies[i], params, True)
                else:
                    x_draw = state.strategies[i]
            else:
                x_draw = logit_map(state.q_values[i], params.temperature)
            a = constrained_draw(x_draw, allowed, rng)
            if zone and a not in best_response_indices(state.q_values[i]):
                token_available = False
            draws.append(a)
            draw_strategies.append(x_draw)

        new_positions = [cov.index_cell(world, a) for a in draws]
        phi = cov.potential(world, new_positions, world.positions, None, False)
        old_positions = list(world.positions)
        cov.commit_positions(world, new_positions)
        for i in range(n_robots):
            payoff = cov.utility(world, i, new_positions[i], old_positions[i])
            if second_order:
                step = (
                    adaptive_step(draw_strategies[i], draws[i])
                    if zone
                    else params.aggregation_step
                )
                if step > 0.0:
                    soql_update(state, i, draws[i], payoff, step)
                greedy_update(state, i, params.selection_step, rng)
            else:
                q_update(state, i, draws[i], payoff, params.aggregation_step)
            cov.lay_flag(world, i)
        state.n += 1
        state.actions = list(draws)

        rec.n.append(n)
        rec.covered.append(cov.total_covered_worth(world))
        rec.potential.append(phi)
        rec.positions.append(tuple(world.positions))
        for i in range(n_robots):
            rec.diagnostics[f"commit{i}"].append(float(state.strategies[i].max()))
            rec.diagnostics[f"flags{i}"].append(float(len(world.flags[i])))
        if steady_state(rec.covered, config.steady_window, tol_abs):
            break

    rec.final_flags = tuple(tuple(sorted(f)) for f in world.flags)
    rec.wall_time = time.perf_counter() - start
    return rec


@dataclass
class SweepCell:
    config_index: int
    seed: int
    record: RunRecord | None
    error: str | None = None


@dataclass
class SweepReport:
    """Per-config mean and min/max band of covered worth across seeds."""

    labels: list[str]
    cells: list[SweepCell]
    bands: list[dict]  # {"n": [...], "mean": [...], "lo": [...], "hi": [...]}

    def failures(self) -> list[SweepCell]:
        return [c for c in self.cells if c.error is not None]


def sweep(
    configs: Sequence[ExperimentConfig],
    seeds: Sequence[int] | None = None,
    labels: Sequence[str] | None = None,
) -> SweepReport:
    """Run every (config, seed) cell sequentially and aggregate bands.

    Cell failures are recorded and do not stop the sweep.  Trajectories
    shorter than the longest in their config (early steady state) are padded
    by holding their final value.
    """
    cells: list[SweepCell] = []
    bands: list[dict] = []
    names = list(labels) if labels else [c.algorithm for c in configs]
    for ci, config in enumerate(configs):
        use_seeds = tuple(seeds) if seeds is not None else config.seeds
        records = []
        for seed in use_seeds:
            try:
                record = run_experiment(config, seed)
                cells.append(SweepCell(ci, seed, record))
                records.append(record)
            except Exception as exc:  # noqa: BLE001 - cell isolation is the contract
                cells.append(SweepCell(ci, seed, None, f"{type(exc).__name__}: {exc}"))
        if not records:
            bands.append({"n": [], "mean": [], "lo": [], "hi": []})
            continue
        horizon = max(r.iterations for r in records)
        padded = np.vstack(
            [
                np.pad(r.covered, (0, horizon - r.iterations), mode="edge")
                for r in records
            ]
        )
        bands.append(
            {
                "n": list(range(1, horizon + 1)),
                "mean": padded.mean(axis=0).tolist(),
                "lo": padded.min(axis=0).tolist(),
                "hi": padded.max(axis=0).tolist(),
            }
        )
    return SweepReport(labels=names, cells=cells, bands=bands)


def sweep_csv(report: SweepReport) -> str:
    lines = ["config,label,n,mean,lo,hi"]
    for ci, band in enumerate(report.bands):
        label = report.labels[ci]
        for k in range(len(band["n"])):
            lines.append(
                f"{ci},{label},{band['n'][k]},"
                f"{_float_repr(band['mean'][k])},"
                f"{_float_repr(band['lo'][k])},"
                f"{_float_repr(band['hi'][k])}"
            )
    return "\n".join(lines) + "\n"


def sweep_svg(report: SweepReport, title: str = "covered worth") -> str:
    series = [
        Series(
            label=report.labels[ci],
            x=band["n"],
            y=band["mean"],
            band=(band["lo"], band["hi"]),
        )
        for ci, band in enumerate(report.bands)
        if band["n"]
    ]
    return line_plot(series, title=title, xlabel="iteration", ylabel="covered worth")


@dataclass
class OracleReport:
    """Stability analysis artifacts for a small game."""

    states: tuple
    resistances: list[tuple]          # (source, target, deviators, resistance)
    noise_levels: tuple[float, ...]
    stationary: np.ndarray            # (n_levels, n_states)
    stable: tuple
    identity_report: stability.ResistanceIdentityReport | None
    separability_note: str | None

    def to_text(self) -> str:
        lines = ["stability oracle report", "======================="]
        lines.append(f"states: {len(self.states)}")
        lines.append(
            "stochastically stable: "
            + (", ".join(str(s) for s in self.stable) if self.stable else "(none found)")
        )
        lines.append("")
        lines.append("stationary mass by noise level:")
        header = "state      " + "  ".join(f"eps={e:g}" for e in self.noise_levels)
        lines.append(header)
        for k, s in enumerate(self.states):
            masses = "  ".join(f"{self.stationary[j, k]:.6f}" for j in range(len(self.noise_levels)))
            lines.append(f"{str(s):10s} {masses}")
        lines.append("")
        if self.identity_report is not None:
            rep = self.identity_report
            lines.append(
                f"resistance identity: {rep.pairs_checked} pairs checked, "
                f"max residual {rep.max_residual:.3e}, violations {len(rep.violations)}"
            )
        elif self.separability_note:
            lines.append(self.separability_note)
        lines.append(
            "note: guarantees for non-separable payoffs rest on homogeneity and "
            "monotone-potential hypotheses that this report does not test."
        )
        return "\n".join(lines) + "\n"

    def resistances_csv(self) -> str:
        lines = ["source,target,deviators,resistance"]
        for source, target, deviators, r in self.resistances:
            lines.append(
                f"\"{source}\",\"{target}\",\"{deviators}\",{_float_repr(r)}"
            )
        return "\n".join(lines) + "\n"

    def stationary_csv(self) -> str:
        header = "state," + ",".join(f"eps_{e:g}" for e in self.noise_levels)
        lines = [header]
        for k, s in enumerate(self.states):
            masses = ",".join(
                _float_repr(self.stationary[j, k]) for j in range(len(self.noise_levels))
            )
            lines.append(f"\"{s}\",{masses}")
        return "\n".join(lines) + "\n"


def oracle_report(
    game: GameDefinition,
    constraints: ConstrainedActionMap | None = None,
    wake: float = 0.5,
    noise_levels: Sequence[float] = (1e-1, 1e-2, 1e-3),
    mass_threshold: float = 0.05,
) -> OracleReport:
    """Full stability analysis of a small game: resistances, stationary masses,
    stable set, and the separable-case resistance identity check."""
    if constraints is None:
        constraints = ConstrainedActionMap.complete(game)
    report = validate_constraints(constraints)
    if not report.ok:
        raise ValueError("constraint map must be connected and symmetric for the oracle")
    stable = stability.stochastically_stable_states(
        game, wake, constraints, noise_levels, mass_threshold
    )
    resistances = []
    for a in game.joint_actions():
        for b in game.joint_actions():
            if a == b:
                continue
            try:
                r = stability.resistance(game, a, b, constraints)
            except stability.InfeasibleTransitionError:
                continue
            resistances.append((a, b, r.deviators, r.resistance))
    identity: stability.ResistanceIdentityReport | None = None
    note: str | None = None
    try:
        identity = stability.verify_resistance_identity(game, constraints)
    except stability.SeparabilityError as exc:
        note = f"resistance identity skipped: {exc}"
    return OracleReport(
        states=stable.states,
        resistances=resistances,
        noise_levels=stable.noise_levels,
        stationary=stable.masses,
        stable=stable.stable,
        identity_report=identity,
        separability_note=note,
    )


def load_game_spec(path: str | Path) -> tuple[GameDefinition, ConstrainedActionMap]:
    """Load a game description for the oracle from a YAML file.

    Either an explicit matrix game (`actions` counts or label lists plus one
    row-major `utilities` list per player) or a built-in (`builtin: coverage`
    with grid/robot parameters).  Unknown keys are rejected by name.
    """
    raw = yaml.safe_load(Path(path).read_text())
    if not isinstance(raw, dict):
        raise ConfigError("game spec must hold a mapping")
    if "builtin" in raw:
        return _builtin_game(raw)
    known = {"players", "actions", "utilities"}
    for key in raw:
        if key not in known:
            raise ConfigError(f"unknown game spec key {key!r}")
    if "actions" not in raw or "utilities" not in raw:
        raise ConfigError("game spec needs 'actions' and 'utilities'")
    actions = raw["actions"]
    if all(isinstance(a, int) for a in actions):
        labels = [[f"a{j}" for j in range(n)] for n in actions]
    else:
        labels = [list(a) for a in actions]
    shape = tuple(len(l) for l in labels)
    utilities = raw["utilities"]
    if len(utilities) != len(shape):
        raise ConfigError("need one utility table per player")
    tables = []
    for row in utilities:
        flat = np.asarray(row, dtype=float)
        if flat.size != math.prod(shape):
            raise ConfigError(
                f"utility table length {flat.size} does not match joint space {math.prod(shape)}"
            )
        tables.append(flat.reshape(shape))
    players = raw.get("players")
    if isinstance(players, int):
        players = [f"p{i}" for i in range(players)]
    game = GameDefinition.from_tables(tables, players=players, action_labels=labels)
    return game, ConstrainedActionMap.complete(game)


def _builtin_game(raw: dict) -> tuple[GameDefinition, ConstrainedActionMap]:
    known = {
        "builtin",
        "grid_size",
        "robots",
        "scenario_seed",
        "placement_seed",
        "cover_radius",
        "move_cost",
    }
    for key in raw:
        if key not in known:
            raise ConfigError(f"unknown game spec key {key!r}")
    name = raw["builtin"]
    if name != "coverage":
        raise ConfigError(f"unknown builtin game {name!r}")
    grid = int(raw.get("grid_size", 4))
    robots = int(raw.get("robots", 2))
    world = cov.CoverageWorld.create(
        oracle_scale_field(int(raw.get("scenario_seed", 7)), grid),
        robots,
        make_rng(int(raw.get("placement_seed", 0)), 99),
        cover_radius=float(raw.get("cover_radius", 1.5)),
        move_cost=float(raw.get("move_cost", 3e-5)),
    )
    return cov.as_game(world), cov.moves_constraint_map(world)


def oracle_scale_field(seed: int, grid: int, n_components: int | None = None) -> WorthField:
    """Small random worth field for oracle-sized grids (no minimum size)."""
    from .worthfield import GaussianComponent

    rng = make_rng(seed, 0xC0FFEE)
    m = n_components if n_components is not None else int(rng.integers(1, 4))
    means = rng.uniform(0.15 * grid, 0.85 * grid, size=(m, 2))
    weights = rng.dirichlet(np.ones(m))
    sigma = rng.uniform(grid / 8.0, grid / 4.0, size=(m, 2))
    comps = [
        GaussianComponent(float(weights[j]), means[j], np.diag(sigma[j] ** 2))
        for j in range(m)
    ]
    return WorthField(comps, grid)


def config_snapshot(config: ExperimentConfig) -> dict:
    d = asdict(config)
    d["seeds"] = list(config.seeds)
    return d
