"""Discrete wall mazes and the 1-D goal-chain toy.

Maze cells are addressed as (x, y) with y = 0 at the bottom row; a state id is
``y * width + x`` and the achieved goal of a state is its cell.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .entropy_math import ConditionalModel, DiscretePmf

ACTIONS = ("up", "down", "left", "right", "stay")
_MOVES = ((0, 1), (0, -1), (-1, 0), (1, 0), (0, 0))
NUM_ACTIONS = len(ACTIONS)

DEFAULT_HORIZONS = {"spiral10": 50, "ucorridor": 150}


class LayoutError(ValueError):
    pass


@dataclass
class GridMaze:
    width: int
    height: int
    start_cell: tuple[int, int]
    desired_region: list[tuple[int, int]]
    horizon: int = 50
    wall_cells: frozenset = frozenset()
    # blocked edges given as frozenset({cell_a, cell_b}) pairs
    walls: frozenset = frozenset()
    name: str = "maze"
    next_state: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise LayoutError("maze dimensions must be positive")
        for cell in [self.start_cell, *self.desired_region]:
            if not self.in_bounds(cell):
                raise LayoutError(f"cell {cell} lies outside the maze")
            if cell in self.wall_cells:
                raise LayoutError(f"cell {cell} is a wall")
        if not self.desired_region:
            raise LayoutError("desired region is empty")
        self.desired_region = sorted(self.desired_region, key=lambda c: (c[1], c[0]))
        self.next_state = self._build_transitions()

    @property
    def num_states(self) -> int:
        return self.width * self.height

    def in_bounds(self, cell) -> bool:
        x, y = cell
        return 0 <= x < self.width and 0 <= y < self.height

    def cell_id(self, cell) -> int:
        return cell[1] * self.width + cell[0]

    def cell_of(self, state: int) -> tuple[int, int]:
        return state % self.width, state // self.width

    def _blocked(self, a, b) -> bool:
        return (
            not self.in_bounds(b)
            or a in self.wall_cells
            or b in self.wall_cells
            or frozenset((a, b)) in self.walls
        )

    def _build_transitions(self) -> np.ndarray:
        table = np.empty((self.num_states, NUM_ACTIONS), dtype=np.int64)
        for s in range(self.num_states):
            x, y = self.cell_of(s)
            for a, (dx, dy) in enumerate(_MOVES):
                target = (x + dx, y + dy)
                table[s, a] = s if self._blocked((x, y), target) else self.cell_id(target)
        return table

    @property
    def start_state(self) -> int:
        return self.cell_id(self.start_cell)

    @property
    def desired_ids(self) -> np.ndarray:
        return np.array([self.cell_id(c) for c in self.desired_region], dtype=np.int64)

    def goal_vectors(self) -> np.ndarray:
        """Achieved-goal coordinates for every state id, shape [num_states, 2]."""
        ids = np.arange(self.num_states)
        return np.stack([ids % self.width, ids // self.width], axis=1).astype(np.float64)

    def open_cells(self) -> list[tuple[int, int]]:
        return [
            (x, y)
            for y in range(self.height)
            for x in range(self.width)
            if (x, y) not in self.wall_cells
        ]


def maze_reset(maze: GridMaze, rng: np.random.Generator) -> tuple[int, int]:
    """Start state and a desired goal drawn uniformly from the desired region."""
    goal = int(maze.desired_ids[rng.integers(len(maze.desired_region))])
    return maze.start_state, goal


def maze_step(maze: GridMaze, state: int, action: int) -> int:
    if not 0 <= action < NUM_ACTIONS:
        raise ValueError(f"invalid action {action}")
    return int(maze.next_state[state, action])


def parse_layout(text: str, horizon: int = 50, name: str = "maze") -> GridMaze:
    """Parse the text-grid layout format.

    One row per line, top row first. ``.`` open, ``#`` wall, ``S`` start,
    ``G`` desired-region cell.
    """
    rows = [line.rstrip("\n") for line in text.strip("\n").splitlines()]
    rows = [r for r in rows if r and not r.lstrip().startswith(";")]
    if not rows:
        raise LayoutError("empty layout")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise LayoutError("layout rows have unequal lengths")
    height = len(rows)
    walls, region, start = set(), [], None
    for row_idx, row in enumerate(rows):
        y = height - 1 - row_idx
        for x, ch in enumerate(row):
            if ch == "#":
                walls.add((x, y))
            elif ch == "S":
                if start is not None:
                    raise LayoutError("layout has more than one start cell")
                start = (x, y)
            elif ch == "G":
                region.append((x, y))
            elif ch != ".":
                raise LayoutError(f"unknown layout character {ch!r}")
    if start is None:
        raise LayoutError("layout has no start cell")
    return GridMaze(
        width=width,
        height=height,
        start_cell=start,
        desired_region=region,
        horizon=horizon,
        wall_cells=frozenset(walls),
        name=name,
    )


def load_layout(name_or_path: str, horizon: int | None = None) -> GridMaze:
    """Load a stock layout by name or a layout file by path."""
    path = Path(name_or_path)
    if path.suffix == ".txt" or path.exists():
        text = path.read_text()
        name = path.stem
    else:
        try:
            text = resources.files("megalab.layouts").joinpath(f"{name_or_path}.txt").read_text()
        except FileNotFoundError:
            raise LayoutError(f"unknown environment {name_or_path!r}") from None
        name = name_or_path
    if horizon is None:
        horizon = DEFAULT_HORIZONS.get(name, 50)
    return parse_layout(text, horizon=horizon, name=name)


def shortest_path_lengths(maze: GridMaze, source: int | None = None) -> np.ndarray:
    """BFS distances from ``source`` (default: start); -1 marks unreachable states."""
    source = maze.start_state if source is None else source
    dist = np.full(maze.num_states, -1, dtype=np.int64)
    dist[source] = 0
    frontier = [source]
    while frontier:
        nxt = []
        for s in frontier:
            for s2 in maze.next_state[s]:
                if dist[s2] < 0:
                    dist[s2] = dist[s] + 1
                    nxt.append(int(s2))
        frontier = nxt
    return dist


TOY_KERNEL = {0: 0.4, 1: 0.2, -1: 0.2, 2: 0.1, -2: 0.1}


@dataclass
class ToyChain:
    """Goal chain {0, ..., 2n}; pursuing g lands near g per a truncated kernel."""

    n: int = 50
    probs: np.ndarray = field(init=False, repr=False)  # [2n+1, 2n+1] row-stochastic

    def __post_init__(self):
        if self.n <= 0:
            raise ValueError("n must be positive")
        size = self.num_goals
        probs = np.zeros((size, size))
        for g in range(size):
            for off, w in TOY_KERNEL.items():
                if 0 <= g + off < size:
                    probs[g, g + off] = w
        self.probs = probs / probs.sum(axis=1, keepdims=True)

    @property
    def num_goals(self) -> int:
        return 2 * self.n + 1

    def row(self, goal: int) -> dict[int, float]:
        self._check(goal)
        nz = np.nonzero(self.probs[goal])[0]
        return {int(g): float(self.probs[goal, g]) for g in nz}

    def conditional(self) -> ConditionalModel:
        return ConditionalModel({g: DiscretePmf(self.row(g)) for g in range(self.num_goals)})

    def _check(self, goal: int) -> None:
        if not 0 <= goal < self.num_goals:
            raise ValueError(f"goal {goal} outside the universe 0..{self.num_goals - 1}")


def toy_sample(chain: ToyChain, behavioural_goal: int, rng: np.random.Generator) -> int:
    chain._check(behavioural_goal)
    row = chain.probs[behavioural_goal]
    lo, hi = max(0, behavioural_goal - 2), min(chain.num_goals, behavioural_goal + 3)
    return int(lo + rng.choice(hi - lo, p=row[lo:hi]))
