import json
import random

import numpy as np
import pytest

from conftest import build_maze, random_legal_episode
from exermaze.grid import RoomGrid, l_route
from exermaze.maze import Maze, crossings
from exermaze.rng import MASK64, SplitMix64
from exermaze.sim import (
    ATHLETE,
    AVERAGE,
    NOVICE,
    PlayerProfile,
    TraversalError,
    TraversalResult,
    _compile_walk,
    _walk_arrays_py,
    estimate_difficulty,
    get_profile,
    load_profile,
    rate,
    traverse,
)
from exermaze import _simfast
from oracles import count_decision_points, enumerate_walk


def synthetic_maze(grid, edges, terminal=True):
    """Maze built directly from an edge list (for walk-shape tests)."""
    adjacency = {}
    for a, b in edges:
        adjacency.setdefault(a, set()).add(b)
        adjacency.setdefault(b, set()).add(a)
    special = {grid.start, grid.end}
    corridor = frozenset(cell for cell in adjacency if cell not in special)
    return Maze(
        grid=grid,
        connected=(),
        corridor_cells=corridor,
        passable_adjacency={c: frozenset(n) for c, n in adjacency.items()},
        terminal=terminal,
    )


def corridor_grid():
    """Empty 10x12 grid for synthetic walks: start and end on one row."""
    return RoomGrid(width=12, height=10, start=(5, 0), end=(5, 9), rooms=())


def line_edges(cells):
    return list(zip(cells, cells[1:]))


# --- traverse basics ---------------------------------------------------------


def test_chain_traversal_is_forced(grid):
    maze = build_maze(grid, [0])
    result = traverse(maze, AVERAGE, seed=5)
    expected_steps = (len(l_route(grid.start, grid.rooms[0].position)) - 1) + (
        len(l_route(grid.rooms[0].position, grid.end)) - 1
    )
    assert result.steps == expected_steps
    assert result.effort == 5.0
    assert result.room_passes == ((0, 1),)
    assert result.reached_end


def test_traversal_deterministic_per_seed(grid):
    maze = build_maze(grid, [3, 0, 6, 2])
    a = traverse(maze, AVERAGE, seed=1234)
    b = traverse(maze, AVERAGE, seed=1234)
    assert a == b
    c = traverse(maze, AVERAGE, seed=1235)
    assert isinstance(c.steps, int)


def test_fresh_maze_traversal_is_empty(grid):
    from exermaze.maze import new_maze

    result = traverse(new_maze(grid), AVERAGE, seed=0)
    assert result == TraversalResult(steps=0, effort=0.0, room_passes=(), reached_end=False)


def test_provisional_goal_is_last_connected_room(grid):
    maze = build_maze(grid, [3, 0], connect_end=False)
    result = traverse(maze, AVERAGE, seed=9)
    assert result.steps > 0
    assert not result.reached_end
    assert any(room_id == 0 for room_id, _ in result.room_passes)


def test_effort_additivity(grid):
    rng = random.Random(3)
    for _ in range(20):
        maze = random_legal_episode(grid, rng)
        result = traverse(maze, AVERAGE, seed=rng.randrange(1 << 40))
        efforts = {room.id: room.effort for room in grid.rooms}
        total = sum(passes * efforts[room_id] for room_id, passes in result.room_passes)
        assert result.effort == pytest.approx(total)


def test_unreachable_goal_raises():
    grid = corridor_grid()
    # start sits on an isolated loop; the end is in a separate component
    loop = [(5, 0), (5, 1), (4, 1), (4, 0), (5, 0)]
    edges = line_edges(loop) + [((5, 9), (5, 8))]
    maze = synthetic_maze(grid, edges)
    with pytest.raises(TraversalError):
        traverse(maze, AVERAGE, seed=0)


def test_goal_missing_from_maze_raises():
    grid = corridor_grid()
    edges = [((5, 0), (5, 1))]
    maze = synthetic_maze(grid, edges)  # end cell untouched
    with pytest.raises(TraversalError):
        traverse(maze, AVERAGE, seed=0)


# --- fast path equivalence ---------------------------------------------------


@pytest.mark.skipif(not _simfast.HAVE_NUMBA, reason="numba unavailable")
def test_batch_kernel_matches_reference_walk(grid):
    rng = random.Random(7)
    for _ in range(12):
        maze = random_legal_episode(grid, rng)
        problem = _compile_walk(maze)
        seed = rng.randrange(1 << 60)
        n = 40
        ks, ke = _simfast.walk_batch(
            problem.nbr,
            problem.start,
            problem.goal,
            problem.effort_of,
            AVERAGE.repeat_decay,
            problem.cap,
            np.uint64(seed & MASK64),
            n,
        )
        for k in range(n):
            steps, effort, _ = _walk_arrays_py(
                problem, AVERAGE.repeat_decay, SplitMix64(seed + k)
            )
            assert steps == ks[k]
            assert effort == ke[k]


# --- rating model ------------------------------------------------------------


def test_rating_at_capacity_is_three():
    result = TraversalResult(steps=200, effort=30.0, room_passes=(), reached_end=True)
    assert rate(result, AVERAGE) == 3


def test_rating_of_nothing_is_one():
    result = TraversalResult(steps=0, effort=0.0, room_passes=(), reached_end=True)
    assert rate(result, AVERAGE) == 1


def test_rating_at_double_capacity_is_five():
    result = TraversalResult(steps=400, effort=60.0, room_passes=(), reached_end=True)
    assert rate(result, AVERAGE) == 5


def test_rating_clamps_beyond_double():
    result = TraversalResult(steps=4000, effort=600.0, room_passes=(), reached_end=True)
    assert rate(result, AVERAGE) == 5


def test_rating_rounds_half_up():
    # d = 0.75 -> raw 2.5 -> 3 under half-up rounding
    result = TraversalResult(steps=300, effort=0.0, room_passes=(), reached_end=True)
    assert rate(result, AVERAGE) == 3


# --- profiles ----------------------------------------------------------------


def test_builtin_profiles():
    assert get_profile("novice") is NOVICE
    assert get_profile("Average") is AVERAGE
    assert ATHLETE.effort_capacity == 60.0
    with pytest.raises(KeyError):
        get_profile("superhuman")


def test_profile_validation():
    with pytest.raises(ValueError):
        PlayerProfile("bad", effort_capacity=0.0, cognitive_capacity=10.0)
    with pytest.raises(ValueError):
        PlayerProfile("bad", effort_capacity=1.0, cognitive_capacity=-5.0)
    with pytest.raises(ValueError):
        PlayerProfile("bad", effort_capacity=1.0, cognitive_capacity=5.0, repeat_decay=1.0)


def test_profile_json_config(tmp_path):
    path = tmp_path / "profile.json"
    path.write_text(json.dumps({"name": "tester", "e_cap": 22, "s_cap": 180, "beta": 0.4}))
    profile = load_profile(str(path))
    assert profile == PlayerProfile("tester", 22.0, 180.0, 0.4)


def test_profile_json_config_rejects_missing_fields(tmp_path):
    path = tmp_path / "profile.json"
    path.write_text(json.dumps({"name": "x"}))
    with pytest.raises(ValueError):
        load_profile(str(path))


# --- estimate_difficulty ------------------------------------------------------


def test_estimate_rejects_zero_runs(grid):
    with pytest.raises(ValueError):
        estimate_difficulty(build_maze(grid, [0]), AVERAGE, n_runs=0, seed=0)


def test_fresh_maze_estimates_rating_one(grid):
    from exermaze.maze import new_maze

    est = estimate_difficulty(new_maze(grid), AVERAGE, n_runs=10, seed=0)
    assert est.mean_rating == 1.0
    assert est.mean_steps == 0.0
    assert est.difficulty == pytest.approx(0.2)


def test_chain_estimate_equals_single_run(grid):
    maze = build_maze(grid, [0])
    single = rate(traverse(maze, AVERAGE, seed=123), AVERAGE)
    for n_runs in (1, 7, 50):
        est = estimate_difficulty(maze, AVERAGE, n_runs=n_runs, seed=123)
        assert est.mean_rating == float(single)


def test_estimate_deterministic(grid):
    maze = build_maze(grid, [3, 0, 6, 2])
    a = estimate_difficulty(maze, AVERAGE, n_runs=64, seed=5)
    b = estimate_difficulty(maze, AVERAGE, n_runs=64, seed=5)
    assert a == b


# --- enumeration oracle ------------------------------------------------------


def dead_end_maze(branch_length=2):
    """Straight corridor with one dead-end branch: one decision point."""
    grid = corridor_grid()
    spine = [(5, c) for c in range(10)]
    branch = [(5, 3)] + [(5 - k, 3) for k in range(1, branch_length + 1)]
    edges = line_edges(spine) + line_edges(branch)
    return synthetic_maze(grid, edges)


def test_dead_end_maze_has_one_decision_point():
    assert count_decision_points(dead_end_maze()) == 1


def test_enumeration_matches_monte_carlo_dead_end():
    maze = dead_end_maze()
    profile = AVERAGE  # beta = 0.5
    oracle = enumerate_walk(maze, profile)
    assert oracle["lost"] < 1e-9
    est = estimate_difficulty(maze, profile, n_runs=20000, seed=77)
    assert est.mean_steps == pytest.approx(oracle["mean_steps"], rel=0.02)
    assert est.mean_rating == pytest.approx(oracle["mean_rating"], rel=0.02)


def test_enumeration_matches_monte_carlo_built_maze(grid):
    maze = build_maze(grid, [3, 0, 6, 2])
    assert count_decision_points(maze) >= 1
    oracle = enumerate_walk(maze, AVERAGE)
    assert oracle["lost"] < 1e-7  # negligible against the 2% comparison
    est = estimate_difficulty(maze, AVERAGE, n_runs=20000, seed=11)
    assert est.mean_steps == pytest.approx(oracle["mean_steps"], rel=0.02)
    assert est.mean_effort == pytest.approx(oracle["mean_effort"], rel=0.02)


def test_monte_carlo_error_shrinks_with_runs():
    maze = dead_end_maze(branch_length=3)
    oracle = enumerate_walk(maze, AVERAGE)
    errors = []
    for n_runs in (100, 10000):
        est = estimate_difficulty(maze, AVERAGE, n_runs=n_runs, seed=31)
        errors.append(abs(est.mean_steps - oracle["mean_steps"]))
    assert errors[1] < errors[0]
    assert errors[1] / oracle["mean_steps"] < 0.02


def test_forced_chain_exact_agreement(grid):
    # No decision points: enumeration and a single run agree exactly.
    maze = build_maze(grid, [0])
    assert count_decision_points(maze) == 0
    oracle = enumerate_walk(maze, AVERAGE)
    result = traverse(maze, AVERAGE, seed=0)
    assert oracle["mean_steps"] == result.steps
    assert oracle["mean_effort"] == result.effort
    assert oracle["covered"] == 1.0


def test_chain_monotonicity_mean_effort(grid):
    # Growing a crossing-free chain by one room never lowers mean effort.
    sequences = [[0], [0, 4], [0, 4, 2]]
    previous = -1.0
    for rooms in sequences:
        maze = build_maze(grid, rooms)
        assert crossings(maze) == 0, f"fixture {rooms} is not a chain"
        est = estimate_difficulty(maze, AVERAGE, n_runs=500, seed=13)
        assert est.mean_effort >= previous
        previous = est.mean_effort


def test_step_cap_triggers_on_corrupt_maze():
    grid = corridor_grid()
    loop = [(5, 0), (5, 1), (4, 1), (4, 0), (5, 0)]
    edges = line_edges(loop) + [((5, 9), (5, 8)), ((5, 8), (5, 7))]
    maze = synthetic_maze(grid, edges)
    with pytest.raises(TraversalError):
        traverse(maze, AVERAGE, seed=3)
