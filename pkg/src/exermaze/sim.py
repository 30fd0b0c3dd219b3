"""Stochastic player simulation and the rating model.

A simulated player walks the maze cell by cell.  Wherever more than one
direction is open it picks one with probability proportional to per-direction
weights that start at 1.0 and shrink by the repeat-decay factor each time the
direction is taken, so the walker grows reluctant to re-take paths it already
explored.  Every entry into an exercise room adds that room's effort.

Effort and step counts are turned into a 1..5 difficulty rating relative to a
player profile's capacities: a player exactly at capacity rates the maze 3.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import _simfast
from .grid import Cell
from .maze import Maze
from .rng import MASK64, SplitMix64

# A walk longer than this multiple of the corridor size signals corruption.
STEP_CAP_FACTOR = 50


class TraversalError(RuntimeError):
    """Goal unreachable or step cap exceeded; mazes built through
    apply_action never trigger this."""


@dataclass(frozen=True)
class PlayerProfile:
    """Simulated player capabilities.

    effort_capacity and cognitive_capacity are the effort sum and step count
    the player would rate as exactly "3 - moderately difficult".
    """

    name: str
    effort_capacity: float
    cognitive_capacity: float
    repeat_decay: float = 0.5

    def __post_init__(self):
        if self.effort_capacity <= 0:
            raise ValueError("effort_capacity must be positive")
        if self.cognitive_capacity <= 0:
            raise ValueError("cognitive_capacity must be positive")
        if not 0.0 < self.repeat_decay < 1.0:
            raise ValueError("repeat_decay must lie strictly between 0 and 1")


NOVICE = PlayerProfile("novice", effort_capacity=15.0, cognitive_capacity=120.0)
AVERAGE = PlayerProfile("average", effort_capacity=30.0, cognitive_capacity=200.0)
ATHLETE = PlayerProfile("athlete", effort_capacity=60.0, cognitive_capacity=300.0)

PROFILES: dict[str, PlayerProfile] = {p.name: p for p in (NOVICE, AVERAGE, ATHLETE)}


def get_profile(name: str) -> PlayerProfile:
    try:
        return PROFILES[name.lower()]
    except KeyError:
        raise KeyError(
            f"unknown profile {name!r}; built-ins: {', '.join(sorted(PROFILES))}"
        ) from None


def load_profile(path: str) -> PlayerProfile:
    """Read a profile from a JSON config: {name, e_cap, s_cap, beta}."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    try:
        return PlayerProfile(
            name=str(doc["name"]),
            effort_capacity=float(doc["e_cap"]),
            cognitive_capacity=float(doc["s_cap"]),
            repeat_decay=float(doc.get("beta", 0.5)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed profile config {path}: {exc}") from exc


@dataclass(frozen=True)
class TraversalResult:
    steps: int
    effort: float
    room_passes: tuple[tuple[int, int], ...]  # (room id, times passed)
    reached_end: bool


@dataclass(frozen=True)
class DifficultyEstimate:
    mean_rating: float
    mean_effort: float
    mean_steps: float
    n_runs: int

    @property
    def difficulty(self) -> float:
        """Normalized value fed into the network state."""
        return self.mean_rating / 5.0


def goal_cell(maze: Maze) -> Cell:
    """End cell for finished mazes; the most recently connected room acts as
    a provisional goal while the maze is still being built."""
    if maze.terminal:
        return maze.grid.end
    if maze.connected:
        return maze.grid.rooms[maze.connected[-1]].position
    return maze.grid.start


@dataclass(frozen=True)
class _WalkProblem:
    """Maze compiled to flat arrays shared by both walk implementations."""

    nbr: np.ndarray  # int64 (m, 4): neighbor indices in sorted order, -1 padded
    effort_of: np.ndarray  # float64 (m,)
    room_of: np.ndarray  # int64 (m,): room id at the cell, else -1
    start: int
    goal: int
    cap: int


def _compile_walk(maze: Maze) -> _WalkProblem:
    cells = sorted(maze.passable_adjacency)
    index = {cell: i for i, cell in enumerate(cells)}
    m = len(cells)
    nbr = np.full((m, 4), -1, dtype=np.int64)
    for i, cell in enumerate(cells):
        for j, neighbor in enumerate(sorted(maze.passable_adjacency[cell])):
            nbr[i, j] = index[neighbor]
    effort_of = np.zeros(m, dtype=np.float64)
    room_of = np.full(m, -1, dtype=np.int64)
    connected = set(maze.connected)
    for room in maze.grid.rooms:
        i = index.get(room.position)
        if i is not None and room.id in connected:
            effort_of[i] = room.effort
            room_of[i] = room.id
    goal = goal_cell(maze)
    if maze.grid.start not in index or goal not in index:
        raise TraversalError("start or goal cell is not part of the passable maze")
    return _WalkProblem(
        nbr=nbr,
        effort_of=effort_of,
        room_of=room_of,
        start=index[maze.grid.start],
        goal=index[goal],
        cap=STEP_CAP_FACTOR * max(1, len(maze.corridor_cells)),
    )


def _walk_arrays_py(problem: _WalkProblem, beta: float, rng: SplitMix64):
    """Reference walk; _simfast.walk_batch must match it move for move."""
    nbr = problem.nbr
    weights = np.ones(nbr.shape, dtype=np.float64)
    entries = np.zeros(nbr.shape[0], dtype=np.int64)
    effort_of = problem.effort_of
    pos, goal, prev = problem.start, problem.goal, -1
    steps = 0
    effort = 0.0
    while pos != goal:
        cands = [j for j in range(4) if nbr[pos, j] >= 0 and nbr[pos, j] != prev]
        if not cands:
            back = [j for j in range(4) if nbr[pos, j] == prev and prev >= 0]
            if not back:
                raise TraversalError("walker is stuck on a cell with no exits")
            chosen = back[0]
        elif len(cands) == 1:
            chosen = cands[0]
        else:
            total = 0.0
            for j in cands:
                total += weights[pos, j]
            r = rng.random() * total
            acc = 0.0
            chosen = cands[-1]
            for j in cands:
                acc += weights[pos, j]
                if r < acc:
                    chosen = j
                    break
        weights[pos, chosen] *= beta
        prev = pos
        pos = int(nbr[pos, chosen])
        steps += 1
        effort += effort_of[pos]
        entries[pos] += 1
        if steps > problem.cap:
            raise TraversalError(f"step cap {problem.cap} exceeded; maze looks corrupt")
    return steps, effort, entries


def traverse(maze: Maze, profile: PlayerProfile, seed: int) -> TraversalResult:
    """One simulated play-through; deterministic for a given seed."""
    goal = goal_cell(maze)
    if goal == maze.grid.start:
        return TraversalResult(steps=0, effort=0.0, room_passes=(), reached_end=maze.terminal)
    problem = _compile_walk(maze)
    steps, effort, entries = _walk_arrays_py(problem, profile.repeat_decay, SplitMix64(seed))
    passes = tuple(
        (int(problem.room_of[i]), int(entries[i]))
        for i in np.flatnonzero((problem.room_of >= 0) & (entries > 0))
    )
    passes = tuple(sorted(passes))
    return TraversalResult(
        steps=int(steps), effort=float(effort), room_passes=passes, reached_end=maze.terminal
    )


def rate(result: TraversalResult, profile: PlayerProfile) -> int:
    """Map a traversal to the 1..5 difficulty scale.

    Raw difficulty is the mean of effort and steps, each normalized by the
    profile's capacity; a player exactly at capacity rates 3.  Rounding is
    half-up so the scale is symmetric around the anchor.
    """
    d = (
        0.5 * result.effort / profile.effort_capacity
        + 0.5 * result.steps / profile.cognitive_capacity
    )
    return int(min(5.0, max(1.0, math.floor((1.0 + 2.0 * d) + 0.5))))


def _ratings_from(steps: np.ndarray, efforts: np.ndarray, profile: PlayerProfile) -> np.ndarray:
    # Must stay arithmetically identical to rate().
    d = 0.5 * efforts / profile.effort_capacity + 0.5 * steps / profile.cognitive_capacity
    return np.clip(np.floor((1.0 + 2.0 * d) + 0.5), 1.0, 5.0)


def _run_batch(problem: _WalkProblem, beta: float, n_runs: int, seed: int):
    if _simfast.HAVE_NUMBA:
        steps, efforts = _simfast.walk_batch(
            problem.nbr,
            problem.start,
            problem.goal,
            problem.effort_of,
            beta,
            problem.cap,
            np.uint64(seed & MASK64),
            n_runs,
        )
    else:  # pragma: no cover - exercised only where numba is unavailable
        steps = np.empty(n_runs, dtype=np.int64)
        efforts = np.empty(n_runs, dtype=np.float64)
        for k in range(n_runs):
            steps[k], efforts[k], _ = _walk_arrays_py(problem, beta, SplitMix64(seed + k))
    if np.any(steps < 0):
        raise TraversalError(f"step cap {problem.cap} exceeded; maze looks corrupt")
    return steps, efforts


def estimate_difficulty(
    maze: Maze, profile: PlayerProfile, n_runs: int, seed: int
) -> DifficultyEstimate:
    """Average rating/effort/steps over n_runs walks seeded seed, seed+1, ..."""
    if n_runs < 1:
        raise ValueError("n_runs must be at least 1")
    goal = goal_cell(maze)
    if goal == maze.grid.start:
        # Nothing to walk: zero steps and effort always rate 1.
        return DifficultyEstimate(mean_rating=1.0, mean_effort=0.0, mean_steps=0.0, n_runs=n_runs)
    problem = _compile_walk(maze)
    steps, efforts = _run_batch(problem, profile.repeat_decay, n_runs, seed)
    ratings = _ratings_from(steps.astype(np.float64), efforts, profile)
    return DifficultyEstimate(
        mean_rating=float(ratings.mean()),
        mean_effort=float(efforts.mean()),
        mean_steps=float(steps.astype(np.float64).mean()),
        n_runs=n_runs,
    )
