import random

import pytest

from exermaze.grid import ExerciseKind, RoomGrid, RoomSpec, default_grid
from exermaze.maze import Action, Maze, apply_action, legal_actions, new_maze


@pytest.fixture(scope="session")
def grid():
    return default_grid()


def small_grid() -> RoomGrid:
    """Compact two-room grid that keeps agent tests fast."""
    return RoomGrid(
        width=8,
        height=8,
        start=(4, 0),
        end=(3, 7),
        rooms=(
            RoomSpec(0, ExerciseKind.ROTATION, 5, (2, 2)),
            RoomSpec(1, ExerciseKind.TORSO_BEND, 5, (6, 5)),
        ),
    )


def build_maze(grid, room_ids, connect_end=True) -> Maze:
    """Apply a fixed connection sequence; the workhorse of maze fixtures."""
    maze = new_maze(grid)
    for room_id in room_ids:
        maze = apply_action(maze, Action.connect_room(room_id))
    if connect_end:
        maze = apply_action(maze, Action.connect_end())
    return maze


def random_legal_episode(grid, rng: random.Random) -> Maze:
    """Uniformly random legal action at every step, until terminal."""
    maze = new_maze(grid)
    while not maze.terminal:
        actions = sorted(legal_actions(maze), key=lambda a: a.index(grid.n_rooms))
        maze = apply_action(maze, rng.choice(actions))
    return maze
