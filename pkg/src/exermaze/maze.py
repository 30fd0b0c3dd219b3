"""Maze construction by iterated connection actions.

A maze starts as the bare start cell.  Each action routes a deterministic
horizontal-then-vertical L-corridor from the anchor (the most recently
connected room, or the start) to an unconnected exercise room, or to the end
cell, which finishes the maze.  Corridors merge where they overlap;
passability only opens along routed paths, so two corridors meeting at a
cell form a junction while parallel corridors stay walled off.

A crossing is any cell with three or more passable directions: the decision
points a player has to choose at.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .grid import Cell, InvalidGridError, RoomGrid, l_route, validate_grid

MAZE_SCHEMA_VERSION = 1

# Cell codes used by the network's 2D map input.
CODE_EMPTY = 0
CODE_CORRIDOR = 1
CODE_CROSSING = 2
CODE_START = 3
CODE_END = 4
CODE_ROOM_BASE = 5  # room i is coded CODE_ROOM_BASE + i
CODE_SCALE = 12.0


class IllegalActionError(ValueError):
    """Action not in legal_actions for the given maze."""


class MazeSchemaError(ValueError):
    """Maze document malformed or of an unsupported schema version."""


@dataclass(frozen=True)
class Action:
    """Connect one more exercise room (room=<id>) or the end room (room=None)."""

    room: int | None

    @classmethod
    def connect_room(cls, room_id: int) -> "Action":
        return cls(room=room_id)

    @classmethod
    def connect_end(cls) -> "Action":
        return cls(room=None)

    @property
    def is_end(self) -> bool:
        return self.room is None

    def index(self, n_rooms: int) -> int:
        """Position of this action in the Q-value vector (end room last)."""
        return n_rooms if self.room is None else self.room


def action_from_index(index: int, n_rooms: int) -> Action:
    if not 0 <= index <= n_rooms:
        raise IllegalActionError(f"action index {index} out of range for {n_rooms} rooms")
    return Action.connect_end() if index == n_rooms else Action.connect_room(index)


@dataclass
class Maze:
    """A (possibly intermediate) maze.  Treated as immutable: apply_action
    returns a new value and never mutates its input."""

    grid: RoomGrid
    connected: tuple[int, ...] = ()
    corridor_cells: frozenset[Cell] = frozenset()
    passable_adjacency: dict[Cell, frozenset[Cell]] = field(default_factory=dict)
    terminal: bool = False

    @property
    def anchor(self) -> Cell:
        """Cell new corridors start from: last connected room, else start."""
        if self.connected:
            return self.grid.rooms[self.connected[-1]].position
        return self.grid.start

    def degree(self, cell: Cell) -> int:
        return len(self.passable_adjacency.get(cell, ()))

    def key(self) -> tuple:
        """Identity of this maze among all mazes on the same grid."""
        return (self.connected, self.terminal)


def new_maze(grid: RoomGrid) -> Maze:
    report = validate_grid(grid)
    if not report.ok:
        raise InvalidGridError(f"grid fails validation:\n{report.summary()}")
    return Maze(grid=grid)


def legal_actions(maze: Maze) -> set[Action]:
    if maze.terminal:
        return set()
    taken = set(maze.connected)
    actions = {Action.connect_room(room.id) for room in maze.grid.rooms if room.id not in taken}
    actions.add(Action.connect_end())
    return actions


def legal_action_mask(maze: Maze) -> np.ndarray:
    """Boolean vector over action indices (rooms 0..n-1, then end)."""
    n = maze.grid.n_rooms
    mask = np.zeros(n + 1, dtype=bool)
    for action in legal_actions(maze):
        mask[action.index(n)] = True
    return mask


def apply_action(maze: Maze, action: Action) -> Maze:
    if maze.terminal:
        raise IllegalActionError("maze is terminal; no further actions apply")
    if action.is_end:
        target = maze.grid.end
        connected = maze.connected
        terminal = True
    else:
        if not 0 <= (action.room or 0) < maze.grid.n_rooms:
            raise IllegalActionError(f"room {action.room} does not exist")
        if action.room in maze.connected:
            raise IllegalActionError(f"room {action.room} is already connected")
        target = maze.grid.rooms[action.room].position
        connected = maze.connected + (action.room,)
        terminal = False

    path = l_route(maze.anchor, target, horizontal_first=True)
    adjacency = {cell: set(nbrs) for cell, nbrs in maze.passable_adjacency.items()}
    for u, v in zip(path, path[1:]):
        adjacency.setdefault(u, set()).add(v)
        adjacency.setdefault(v, set()).add(u)
    corridor = set(maze.corridor_cells)
    corridor.update(path[1:-1])

    return Maze(
        grid=maze.grid,
        connected=connected,
        corridor_cells=frozenset(corridor),
        passable_adjacency={cell: frozenset(nbrs) for cell, nbrs in adjacency.items()},
        terminal=terminal,
    )


def crossings(maze: Maze) -> int:
    """Number of decision points: cells with passable degree >= 3."""
    return sum(1 for nbrs in maze.passable_adjacency.values() if len(nbrs) >= 3)


@dataclass(frozen=True, eq=False)
class StateEncoding:
    """Network input for one maze: coded 2D map plus scalar features.

    map_codes holds the raw integer cell codes; map2d is the normalized
    float view the network consumes.
    """

    map_codes: np.ndarray  # int8 (height, width), values 0..12
    difficulty: float  # [0, 1], simulated rating of this maze / 5
    crossings: int
    occupied: np.ndarray  # int8 (n_rooms,), 1 per connected room

    @property
    def map2d(self) -> np.ndarray:
        return self.map_codes.astype(np.float64) / CODE_SCALE

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, StateEncoding):
            return NotImplemented
        return (
            np.array_equal(self.map_codes, other.map_codes)
            and self.difficulty == other.difficulty
            and self.crossings == other.crossings
            and np.array_equal(self.occupied, other.occupied)
        )


def encode_state(maze: Maze, difficulty: float) -> StateEncoding:
    if not 0.0 <= difficulty <= 1.0:
        raise ValueError(f"difficulty {difficulty} outside [0, 1]")
    grid = maze.grid
    codes = np.zeros((grid.height, grid.width), dtype=np.int8)
    for cell in maze.corridor_cells:
        codes[cell] = CODE_CROSSING if maze.degree(cell) >= 3 else CODE_CORRIDOR
    codes[grid.start] = CODE_START
    if maze.terminal:
        codes[grid.end] = CODE_END
    for room_id in maze.connected:
        codes[grid.rooms[room_id].position] = CODE_ROOM_BASE + room_id
    occupied = np.zeros(grid.n_rooms, dtype=np.int8)
    for room_id in maze.connected:
        occupied[room_id] = 1
    return StateEncoding(
        map_codes=codes,
        difficulty=float(difficulty),
        crossings=crossings(maze),
        occupied=occupied,
    )


def _canonical_edges(maze: Maze) -> list[list[list[int]]]:
    edges = set()
    for cell, nbrs in maze.passable_adjacency.items():
        for nbr in nbrs:
            edges.add((min(cell, nbr), max(cell, nbr)))
    return [[list(a), list(b)] for a, b in sorted(edges)]


def to_json(maze: Maze) -> str:
    """Stable, byte-deterministic maze document (schema field "v")."""
    doc = {
        "v": MAZE_SCHEMA_VERSION,
        "grid": maze.grid.to_json_dict(),
        "connected": list(maze.connected),
        "terminal": maze.terminal,
        "corridor": [list(cell) for cell in sorted(maze.corridor_cells)],
        "edges": _canonical_edges(maze),
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def from_json(text: str) -> Maze:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MazeSchemaError(f"maze document is not valid JSON: {exc}") from exc
    return from_json_dict(doc)


def from_json_dict(doc: dict) -> Maze:
    if not isinstance(doc, dict) or "v" not in doc:
        raise MazeSchemaError("maze document missing schema version field 'v'")
    if doc["v"] != MAZE_SCHEMA_VERSION:
        raise MazeSchemaError(
            f"unsupported maze schema version {doc['v']} (expected {MAZE_SCHEMA_VERSION})"
        )
    try:
        grid = RoomGrid.from_json_dict(doc["grid"])
        connected = tuple(int(i) for i in doc["connected"])
        corridor = frozenset((int(r), int(c)) for r, c in doc["corridor"])
        adjacency: dict[Cell, set[Cell]] = {}
        for (r1, c1), (r2, c2) in doc["edges"]:
            a, b = (int(r1), int(c1)), (int(r2), int(c2))
            adjacency.setdefault(a, set()).add(b)
            adjacency.setdefault(b, set()).add(a)
        terminal = bool(doc["terminal"])
    except (KeyError, IndexError, TypeError, ValueError) as exc:
        raise MazeSchemaError(f"malformed maze document: {exc}") from exc
    return Maze(
        grid=grid,
        connected=connected,
        corridor_cells=corridor,
        passable_adjacency={cell: frozenset(nbrs) for cell, nbrs in adjacency.items()},
        terminal=terminal,
    )


def render_ascii(maze: Maze) -> str:
    """Top-down text rendering: corridors '#', crossings '+', start 'S',
    end 'E', connected rooms by their id digit, everything else blank."""
    grid = maze.grid
    rows = [[" "] * grid.width for _ in range(grid.height)]
    for r, c in maze.corridor_cells:
        rows[r][c] = "+" if maze.degree((r, c)) >= 3 else "#"
    rows[grid.start[0]][grid.start[1]] = "S"
    if maze.terminal:
        rows[grid.end[0]][grid.end[1]] = "E"
    for room_id in maze.connected:
        r, c = maze.grid.rooms[room_id].position
        rows[r][c] = str(room_id)[-1]
    return "\n".join("".join(row).rstrip() for row in rows)
