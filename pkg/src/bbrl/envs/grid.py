"""Stochastic grid worlds: the lava lake maps and the flag-collection maze.

Maps ship as ASCII files (one character per cell, header line
``width height slip_intended slip_perp``) so layouts stay inspectable and
configurable.  Moving into a wall or out of bounds leaves the agent in
place.  Entering a goal or lava cell pays that cell's reward and teleports
the agent back to the start, which is also how episode resets appear in the
exported MDP.
"""
from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

import numpy as np

from ..mdp import DiscreteMdp
from .base import DiscreteEnv, StepResult

FREE, WALL, START, GOAL, LAVA, FLAG = ".", "#", "S", "G", "L", "F"
_CELL_KINDS = {FREE, WALL, START, GOAL, LAVA, FLAG}

# action index -> (drow, dcol)
MOVES = ((-1, 0), (1, 0), (0, -1), (0, 1))  # up, down, left, right
# perpendicular action pairs for the slip model
PERP = {0: (2, 3), 1: (2, 3), 2: (0, 1), 3: (0, 1)}


class MapParseError(ValueError):
    pass


@dataclass(frozen=True)
class GridMap:
    width: int
    height: int
    slip_intended: float
    slip_perp: float
    cells: tuple  # row-major tuple of cell kind characters

    def __post_init__(self):
        if len(self.cells) != self.width * self.height:
            raise MapParseError("cell count does not match declared dimensions")
        if sum(c == START for c in self.cells) != 1:
            raise MapParseError("map must contain exactly one start cell")
        if sum(c == GOAL for c in self.cells) < 1:
            raise MapParseError("map must contain at least one goal cell")
        if not self._all_reachable():
            raise MapParseError("some non-wall cell is unreachable from the start")

    def kind(self, row: int, col: int) -> str:
        return self.cells[row * self.width + col]

    def _all_reachable(self) -> bool:
        start = next(
            (r, c)
            for r in range(self.height)
            for c in range(self.width)
            if self.kind(r, c) == START
        )
        seen = {start}
        frontier = [start]
        while frontier:
            r, c = frontier.pop()
            for dr, dc in MOVES:
                nr, nc = r + dr, c + dc
                if 0 <= nr < self.height and 0 <= nc < self.width:
                    if self.kind(nr, nc) != WALL and (nr, nc) not in seen:
                        seen.add((nr, nc))
                        frontier.append((nr, nc))
        free = {
            (r, c)
            for r in range(self.height)
            for c in range(self.width)
            if self.kind(r, c) != WALL
        }
        return seen == free


def parse_map(text: str) -> GridMap:
    lines = text.splitlines()
    if not lines:
        raise MapParseError("empty map file")
    header = lines[0].split()
    if len(header) != 4:
        raise MapParseError("line 1: header must be 'width height slip_intended slip_perp'")
    try:
        width, height = int(header[0]), int(header[1])
        slip_intended, slip_perp = float(header[2]), float(header[3])
    except ValueError as exc:
        raise MapParseError(f"line 1: bad header value ({exc})") from None
    rows = lines[1:]
    if len(rows) < height:
        raise MapParseError(f"expected {height} map rows, found {len(rows)}")
    cells = []
    for r in range(height):
        row = rows[r]
        if len(row) != width:
            raise MapParseError(f"line {r + 2}: expected {width} cells, found {len(row)}")
        for c, ch in enumerate(row):
            if ch not in _CELL_KINDS:
                raise MapParseError(f"line {r + 2}, column {c + 1}: unknown cell {ch!r}")
            cells.append(ch)
    return GridMap(width, height, slip_intended, slip_perp, tuple(cells))


def load_bundled_map(name: str) -> GridMap:
    text = resources.files("bbrl.envs.maps").joinpath(name).read_text()
    return parse_map(text)


class GridEnv(DiscreteEnv):
    """Simulator over a GridMap; covers both lava-lake and flag-maze semantics.

    With ``collect_flags`` the state is (location, flag bitmask) and the goal
    pays one unit per collected flag; otherwise the state is the location and
    goal/lava pay fixed rewards.  Terminal cells teleport to the start.
    """

    def __init__(
        self,
        grid: GridMap,
        step_reward: float = -1.0,
        goal_reward: float = 50.0,
        lava_reward: float = -50.0,
        collect_flags: bool = False,
        seed=None,
        slip_intended: float | None = None,
        slip_perp: float | None = None,
    ):
        self.grid = grid
        self.step_reward = step_reward
        self.goal_reward = goal_reward
        self.lava_reward = lava_reward
        self.collect_flags = collect_flags
        self.slip_intended = grid.slip_intended if slip_intended is None else slip_intended
        self.slip_perp = grid.slip_perp if slip_perp is None else slip_perp

        self.locations = [
            (r, c)
            for r in range(grid.height)
            for c in range(grid.width)
            if grid.kind(r, c) != WALL
        ]
        self.loc_index = {loc: i for i, loc in enumerate(self.locations)}
        self.flag_cells = [loc for loc in self.locations if grid.kind(*loc) == FLAG]
        self.n_masks = 2 ** len(self.flag_cells) if collect_flags else 1
        start_loc = next(loc for loc in self.locations if grid.kind(*loc) == START)
        n_states = len(self.locations) * self.n_masks
        super().__init__(n_states, 4, self._encode(self.loc_index[start_loc], 0), seed=seed)

    def _encode(self, loc: int, mask: int) -> int:
        return loc * self.n_masks + mask

    def _decode(self, state: int):
        return divmod(state, self.n_masks)

    def _move_outcomes(self, loc: int, action: int):
        """[(prob, next_location)] after the slip model and wall blocking."""
        r, c = self.locations[loc]
        outcomes = []
        for act, prob in (
            (action, self.slip_intended),
            (PERP[action][0], self.slip_perp),
            (PERP[action][1], self.slip_perp),
        ):
            if prob <= 0:
                continue
            dr, dc = MOVES[act]
            nr, nc = r + dr, c + dc
            if (
                0 <= nr < self.grid.height
                and 0 <= nc < self.grid.width
                and self.grid.kind(nr, nc) != WALL
            ):
                outcomes.append((prob, self.loc_index[(nr, nc)]))
            else:
                outcomes.append((prob, loc))
        return outcomes

    def _resolve(self, state: int, next_loc: int):
        """(next_state, reward, terminal) for arriving at next_loc."""
        loc, mask = self._decode(state)
        kind = self.grid.kind(*self.locations[loc])
        if kind in (GOAL, LAVA):
            # occupying a terminal cell (reachable only via set_state): reset
            return self.start_state, 0.0, True
        next_kind = self.grid.kind(*self.locations[next_loc])
        if next_kind == GOAL:
            reward = float(bin(mask).count("1")) if self.collect_flags else self.goal_reward
            return self.start_state, reward, True
        if next_kind == LAVA:
            return self.start_state, self.lava_reward, True
        new_mask = mask
        if self.collect_flags and next_kind == FLAG:
            new_mask = mask | (1 << self.flag_cells.index(self.locations[next_loc]))
        return self._encode(next_loc, new_mask), self.step_reward, False

    def step(self, action: int) -> StepResult:
        self.check_action(action)
        loc, _ = self._decode(self.state)
        outcomes = self._move_outcomes(loc, action)
        probs = np.array([p for p, _ in outcomes])
        pick = self.rng.choice(len(outcomes), p=probs / probs.sum())
        nxt, reward, terminal = self._resolve(self.state, outcomes[pick][1])
        self.state = nxt
        return StepResult(nxt, reward, terminal)

    def as_mdp(self, gamma: float = 0.99) -> DiscreteMdp:
        n = self.n_states
        p = np.zeros((n, 4, n))
        r = np.zeros((n, 4))
        for s in range(n):
            loc, _ = self._decode(s)
            for a in range(4):
                for prob, next_loc in self._move_outcomes(loc, a):
                    nxt, rew, _ = self._resolve(s, next_loc)
                    p[s, a, nxt] += prob
                    r[s, a] += prob * rew
        return DiscreteMdp(p, r, gamma)

    def reward_bounds(self):
        if self.collect_flags:
            return 0.0, float(len(self.flag_cells))
        return min(self.lava_reward, self.step_reward), max(self.goal_reward, self.step_reward)


def lavalake(variant: str = "5x7", seed=None, **kwargs) -> GridEnv:
    if variant not in ("5x7", "10x10"):
        raise ValueError(f"unknown lava lake variant {variant!r}")
    grid = load_bundled_map(f"lavalake_{variant}.txt")
    return GridEnv(grid, seed=seed, **kwargs)


def maze(seed=None, **kwargs) -> GridEnv:
    grid = load_bundled_map("maze_33.txt")
    env = GridEnv(grid, step_reward=0.0, collect_flags=True, seed=seed, **kwargs)
    if env.n_states != 264:
        raise AssertionError(f"maze must have 264 states, got {env.n_states}")
    return env
