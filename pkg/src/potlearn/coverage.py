"""Multi-robot coverage game on a worth-field grid.

Robots occupy cells of an L x L grid and sense the worth within a covering
radius.  A robot's payoff for a move is the worth it alone covers at the
destination (overlap with every other robot's sensing disc is deducted,
counted once per other robot) minus a movement-energy cost proportional to
the Euclidean step length.  Cells a robot has visited carry its flag;
moving onto a foreign flag the robot can see (flags are detectable out to
twice the covering radius) earns no coverage reward at all.

Payoffs are evaluated against a frozen snapshot of the other robots'
positions and all flags -- a deciding robot knows where the others stand now,
not where they are simultaneously moving.  Under this convention each
robot's payoff depends only on its own move, so the sum of all payoffs is an
exact potential of the per-step game.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dynamics import ConstrainedActionMap
from .games import GameDefinition, JointAction
from .mixtures import ObservationLog, worth_weighted_multiplicity
from .worthfield import WorthField

Cell = tuple[int, int]


def _offsets_within(radius: float) -> list[tuple[int, int]]:
    r = int(math.floor(radius))
    out = []
    for dx in range(-r, r + 1):
        for dy in range(-r, r + 1):
            if dx * dx + dy * dy <= radius * radius:
                out.append((dx, dy))
    return out


_MOORE = [(dx, dy) for dx in (-1, 0, 1) for dy in (-1, 0, 1)]


@dataclass
class CoverageWorld:
    """Grid world state: field, robot positions, flags, observation logs."""

    field_model: WorthField
    positions: list[Cell]
    prev_positions: list[Cell]
    flags: list[set[Cell]]
    logs: list[ObservationLog]
    cover_radius: float = 1.5
    move_costs: np.ndarray = field(default_factory=lambda: np.array([3e-5]))
    repeat_factor: int = 3
    worth_percentile: float = 60.0
    sensed_worths: list[list[float]] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.cover_radius <= 0:
            raise ValueError("cover_radius must be positive")
        n = len(self.positions)
        self.move_costs = np.broadcast_to(
            np.asarray(self.move_costs, dtype=float), (n,)
        ).copy()
        if (self.move_costs <= 0).any():
            raise ValueError("move costs must be positive")
        if not self.sensed_worths:
            self.sensed_worths = [[] for _ in range(n)]
        self._cover_offsets = _offsets_within(self.cover_radius)

    @classmethod
    def create(
        cls,
        field_model: WorthField,
        n_robots: int,
        rng: np.random.Generator,
        cover_radius: float = 1.5,
        move_cost: float | Sequence[float] = 3e-5,
        repeat_factor: int = 3,
        worth_percentile: float = 60.0,
    ) -> "CoverageWorld":
        """World with robots placed uniformly at random on the grid."""
        L = field_model.grid_size
        cells = [
            (int(rng.integers(L)), int(rng.integers(L))) for _ in range(n_robots)
        ]
        return cls(
            field_model=field_model,
            positions=list(cells),
            prev_positions=list(cells),
            flags=[set() for _ in range(n_robots)],
            logs=[ObservationLog() for _ in range(n_robots)],
            cover_radius=cover_radius,
            move_costs=np.asarray(
                move_cost if np.ndim(move_cost) else [move_cost] * n_robots,
                dtype=float,
            ),
            repeat_factor=repeat_factor,
            worth_percentile=worth_percentile,
        )

    @property
    def n_robots(self) -> int:
        return len(self.positions)

    @property
    def grid_size(self) -> int:
        return self.field_model.grid_size

    @property
    def flag_range(self) -> float:
        """Distance out to which foreign flags are detectable."""
        return 2.0 * self.cover_radius

    def worth_values(self) -> np.ndarray:
        return self.field_model.raster()


def neighbor_cells(world: CoverageWorld, position: Cell, radius: float) -> list[Cell]:
    """Cells whose centroids lie within `radius` of the position's centroid."""
    L = world.grid_size
    x, y = position
    if radius == world.cover_radius:
        offsets = world._cover_offsets
    else:
        offsets = _offsets_within(radius)
    return [
        (x + dx, y + dy)
        for dx, dy in offsets
        if 0 <= x + dx < L and 0 <= y + dy < L
    ]


def covered_worth(
    world: CoverageWorld,
    robot: int,
    position: Cell | None = None,
    values: np.ndarray | None = None,
) -> float:
    """Worth summed over the robot's covering disc."""
    pos = world.positions[robot] if position is None else position
    grid = world.worth_values() if values is None else values
    return float(
        sum(grid[c] for c in neighbor_cells(world, pos, world.cover_radius))
    )


def overlap_worth(
    world: CoverageWorld,
    robot: int,
    position: Cell | None = None,
    values: np.ndarray | None = None,
) -> float:
    """Worth in the robot's disc also covered by others, one term per other robot.

    Co-located robots each contribute the full shared worth, so three robots
    on one cell each see twice their covered worth here.
    """
    pos = world.positions[robot] if position is None else position
    grid = world.worth_values() if values is None else values
    own = set(neighbor_cells(world, pos, world.cover_radius))
    total = 0.0
    for j in range(world.n_robots):
        if j == robot:
            continue
        for c in neighbor_cells(world, world.positions[j], world.cover_radius):
            if c in own:
                total += float(grid[c])
    return total


def visible_foreign_flag(world: CoverageWorld, robot: int, cell: Cell, vantage: Cell) -> bool:
    """Whether `cell` carries another robot's flag detectable from `vantage`."""
    if math.dist(cell, vantage) > world.flag_range:
        return False
    return any(
        cell in world.flags[j] for j in range(world.n_robots) if j != robot
    )


def constrained_moves(world: CoverageWorld, position: Cell) -> list[Cell]:
    """The 8-neighborhood plus the current cell, truncated at grid boundaries."""
    L = world.grid_size
    x, y = position
    return [
        (x + dx, y + dy)
        for dx, dy in _MOORE
        if 0 <= x + dx < L and 0 <= y + dy < L
    ]


def utility(
    world: CoverageWorld,
    robot: int,
    new_pos: Cell,
    old_pos: Cell | None = None,
    values: np.ndarray | None = None,
    enforce_reachable: bool = True,
) -> float:
    """Move payoff: exclusively covered worth at the destination minus move cost.

    The coverage term vanishes when the destination carries a foreign flag
    the robot can detect from where it stands.  `values` substitutes an
    estimated worth raster for the true one (decisions under an unknown
    field); other robots' positions and all flags are frozen world state.
    """
    old = world.positions[robot] if old_pos is None else old_pos
    if enforce_reachable and new_pos not in constrained_moves(world, old):
        raise ValueError(f"move {old} -> {new_pos} outside the constrained set")
    move_cost = world.move_costs[robot] * math.dist(new_pos, old)
    if visible_foreign_flag(world, robot, new_pos, old):
        return -move_cost
    gain = covered_worth(world, robot, new_pos, values) - overlap_worth(
        world, robot, new_pos, values
    )
    return gain - move_cost


def potential(
    world: CoverageWorld,
    joint_new: Sequence[Cell],
    joint_old: Sequence[Cell] | None = None,
    values: np.ndarray | None = None,
    enforce_reachable: bool = True,
) -> float:
    """Sum of all robots' move payoffs, the exact potential of the step game."""
    old = list(world.positions) if joint_old is None else list(joint_old)
    return float(
        sum(
            utility(world, i, joint_new[i], old[i], values, enforce_reachable)
            for i in range(world.n_robots)
        )
    )


def sense(world: CoverageWorld, robot: int) -> tuple[float, float]:
    """Worth and gradient magnitude at the robot's cell, recorded for normalization."""
    pos = world.positions[robot]
    centroid = (pos[0] + 0.5, pos[1] + 0.5)
    f = float(world.worth_values()[pos])
    g = world.field_model.local_gradient(centroid)
    world.sensed_worths[robot].append(f)
    return f, g


def worth_threshold(world: CoverageWorld, robot: int) -> float:
    """Adaptive worthwhile-signal threshold: a percentile of sensed worths."""
    seen = world.sensed_worths[robot]
    if not seen:
        return 0.0
    return float(np.percentile(seen, world.worth_percentile))


def lay_flag(world: CoverageWorld, robot: int) -> None:
    world.flags[robot].add(world.positions[robot])


def lay_flag_and_observe(world: CoverageWorld, robot: int) -> int:
    """Flag the robot's cell and log it with worth-weighted multiplicity.

    Revisits leave the flag set unchanged (set semantics) but always add log
    entries.  Returns the multiplicity used.
    """
    pos = world.positions[robot]
    lay_flag(world, robot)
    f = float(world.worth_values()[pos])
    threshold = worth_threshold(world, robot)
    if threshold > 0:
        multiplicity = worth_weighted_multiplicity(f, threshold, world.repeat_factor)
    else:
        multiplicity = 1
    world.logs[robot].append((pos[0] + 0.5, pos[1] + 0.5), multiplicity)
    return multiplicity


def commit_positions(world: CoverageWorld, new_positions: Sequence[Cell]) -> None:
    """Advance the world one iteration: record previous and adopt new positions."""
    world.prev_positions = list(world.positions)
    world.positions = [tuple(p) for p in new_positions]


def total_covered_worth(world: CoverageWorld, values: np.ndarray | None = None) -> float:
    """Sum of every robot's covered worth (overlap deliberately not deducted)."""
    return float(
        sum(covered_worth(world, i, values=values) for i in range(world.n_robots))
    )


def cell_index(world: CoverageWorld, cell: Cell) -> int:
    return cell[0] * world.grid_size + cell[1]


def index_cell(world: CoverageWorld, index: int) -> Cell:
    return divmod(index, world.grid_size)


def as_game(
    world: CoverageWorld, values: np.ndarray | None = None
) -> GameDefinition:
    """View the frozen-context step game as a finite game over all cells.

    Player i's action is its destination cell; its payoff is its move payoff
    from its standing position, with the other robots and flags frozen.
    Useful for exhaustive potential checks at small grid sizes.
    """
    L = world.grid_size
    labels = tuple(f"{ix},{iy}" for ix in range(L) for iy in range(L))

    def payoff(i: int, joint: JointAction) -> float:
        return utility(
            world,
            i,
            index_cell(world, joint[i]),
            world.positions[i],
            values,
            enforce_reachable=False,
        )

    return GameDefinition(
        action_sets=tuple(labels for _ in range(world.n_robots)),
        utility_fn=payoff,
    )


def moves_constraint_map(world: CoverageWorld) -> ConstrainedActionMap:
    """Adjacency of `as_game` actions: Moore neighborhood plus staying put."""
    L = world.grid_size
    per_action = []
    for ix in range(L):
        for iy in range(L):
            per_action.append(
                tuple(
                    cell_index(world, c)
                    for c in constrained_moves(world, (ix, iy))
                )
            )
    player_map = tuple(per_action)
    return ConstrainedActionMap(tuple(player_map for _ in range(world.n_robots)))


def render_svg(
    field_model: WorthField,
    positions: Sequence[Cell],
    flags: Sequence[set[Cell]] | Sequence[Sequence[Cell]] = (),
    cell_px: int = 14,
) -> str:
    """SVG raster of the worth field with robots and flag traces overlaid.

    Cells are shaded by worth (white to dark blue), flags drawn as small
    marks in each owner's hue, robots as numbered circles.
    """
    L = field_model.grid_size
    raster = field_model.raster()
    top = float(raster.max()) or 1.0
    size = L * cell_px
    palette = ["#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">'
    ]
    for ix in range(L):
        for iy in range(L):
            shade = raster[ix, iy] / top
            level = int(255 - 175 * shade)
            parts.append(
                f'<rect x="{ix * cell_px}" y="{(L - 1 - iy) * cell_px}" '
                f'width="{cell_px}" height="{cell_px}" '
                f'fill="rgb({level},{level},255)"/>'
            )
    for owner, trace in enumerate(flags):
        color = palette[owner % len(palette)]
        for (ix, iy) in trace:
            cx = ix * cell_px + cell_px / 2
            cy = (L - 1 - iy) * cell_px + cell_px / 2
            parts.append(
                f'<rect x="{cx - 1.5:.1f}" y="{cy - 1.5:.1f}" width="3" height="3" '
                f'fill="{color}" opacity="0.55"/>'
            )
    for i, (ix, iy) in enumerate(positions):
        color = palette[i % len(palette)]
        cx = ix * cell_px + cell_px / 2
        cy = (L - 1 - iy) * cell_px + cell_px / 2
        parts.append(
            f'<circle cx="{cx:.1f}" cy="{cy:.1f}" r="{cell_px * 0.38:.1f}" '
            f'fill="{color}" stroke="black" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{cx:.1f}" y="{cy + 3:.1f}" text-anchor="middle" '
            f'font-size="{cell_px * 0.5:.0f}" fill="white">{i}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts)
