"""The fixed room grid every maze is built on.

A grid places a start cell, an end cell and a set of single-cell exercise
rooms on a rectangular cell lattice.  Corridors are always routed as one of
the two axis-aligned L-shapes between two cells, so grid validation checks
that no L-route between any pair of special cells runs through a third one:
that guarantee is what lets the maze builder connect any two rooms without
accidentally swallowing another room.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

Cell = tuple[int, int]

GRID_SCHEMA_VERSION = 1


class ExerciseKind(str, Enum):
    """The three back-exercise types a room can hold."""

    ROTATION = "rotation"
    TORSO_BEND = "torso_bend"
    BEND_STRETCH = "bend_stretch"


# Effort contributed by one repetition of each exercise kind.
BASE_COST: dict[ExerciseKind, float] = {
    ExerciseKind.ROTATION: 1.0,
    ExerciseKind.TORSO_BEND: 1.2,
    ExerciseKind.BEND_STRETCH: 1.5,
}

# Same-kind rooms closer than this (Chebyshev) violate the spread rule.
MIN_SAME_KIND_DISTANCE = 3


class InvalidGridError(ValueError):
    """Raised when an operation requires a grid that passes validation."""


@dataclass(frozen=True)
class RoomSpec:
    """One exercise room: a kind, a repetition count and a cell."""

    id: int
    kind: ExerciseKind
    repetitions: int
    position: Cell

    @property
    def effort(self) -> float:
        return BASE_COST[self.kind] * self.repetitions


@dataclass(frozen=True)
class RoomGrid:
    """Immutable layout of start, end and exercise rooms on a cell lattice."""

    width: int
    height: int
    start: Cell
    end: Cell
    rooms: tuple[RoomSpec, ...]

    @property
    def n_rooms(self) -> int:
        return len(self.rooms)

    def room_cells(self) -> dict[Cell, RoomSpec]:
        return {room.position: room for room in self.rooms}

    def special_cells(self) -> dict[Cell, str]:
        """All cells corridors must not cross: start, end and every room."""
        cells: dict[Cell, str] = {self.start: "start", self.end: "end"}
        for room in self.rooms:
            cells[room.position] = f"room {room.id}"
        return cells

    def to_json_dict(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "start": list(self.start),
            "end": list(self.end),
            "rooms": [
                {
                    "id": room.id,
                    "kind": room.kind.value,
                    "reps": room.repetitions,
                    "effort": room.effort,
                    "pos": list(room.position),
                }
                for room in self.rooms
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json_dict(cls, doc: dict) -> "RoomGrid":
        try:
            rooms = tuple(
                RoomSpec(
                    id=int(r["id"]),
                    kind=ExerciseKind(r["kind"]),
                    repetitions=int(r["reps"]),
                    position=(int(r["pos"][0]), int(r["pos"][1])),
                )
                for r in doc["rooms"]
            )
            grid = cls(
                width=int(doc["width"]),
                height=int(doc["height"]),
                start=(int(doc["start"][0]), int(doc["start"][1])),
                end=(int(doc["end"][0]), int(doc["end"][1])),
                rooms=rooms,
            )
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise InvalidGridError(f"malformed grid document: {exc}") from exc
        for room, spec in zip(doc["rooms"], grid.rooms):
            if "effort" in room and abs(float(room["effort"]) - spec.effort) > 1e-9:
                raise InvalidGridError(
                    f"room {spec.id}: stored effort {room['effort']} does not match "
                    f"{spec.kind.value} x {spec.repetitions}"
                )
        return grid

    @classmethod
    def from_json(cls, text: str) -> "RoomGrid":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidGridError(f"grid document is not valid JSON: {exc}") from exc
        return cls.from_json_dict(doc)


@dataclass(frozen=True)
class Violation:
    """One broken grid invariant."""

    code: str
    message: str
    cells: tuple[Cell, ...] = ()


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def summary(self) -> str:
        if self.ok:
            return "OK"
        return "\n".join(f"[{v.code}] {v.message}" for v in self.violations)


def l_route(a: Cell, b: Cell, horizontal_first: bool = True) -> list[Cell]:
    """Cells of the axis-aligned L from a to b, inclusive of both ends.

    The corner cell appears once.  Degenerate (same row or column) routes
    are a straight line and identical for both orientations.
    """
    (ra, ca), (rb, cb) = a, b
    path = [a]
    if horizontal_first:
        step = 1 if cb > ca else -1
        for c in range(ca + step, cb + step, step) if cb != ca else []:
            path.append((ra, c))
        step = 1 if rb > ra else -1
        for r in range(ra + step, rb + step, step) if rb != ra else []:
            path.append((r, cb))
    else:
        step = 1 if rb > ra else -1
        for r in range(ra + step, rb + step, step) if rb != ra else []:
            path.append((r, ca))
        step = 1 if cb > ca else -1
        for c in range(ca + step, cb + step, step) if cb != ca else []:
            path.append((rb, c))
    return path


def chebyshev(a: Cell, b: Cell) -> int:
    return max(abs(a[0] - b[0]), abs(a[1] - b[1]))


def validate_grid(grid: RoomGrid) -> ValidationReport:
    """Check every grid invariant; violations are report entries, not errors."""
    report = ValidationReport()
    add = report.violations.append

    def in_grid(cell: Cell) -> bool:
        return 0 <= cell[0] < grid.height and 0 <= cell[1] < grid.width

    for label, cell in (("start", grid.start), ("end", grid.end)):
        if not in_grid(cell):
            add(Violation("bounds", f"{label} {cell} outside the grid", (cell,)))
    for room in grid.rooms:
        r, c = room.position
        if not (0 < r < grid.height - 1 and 0 < c < grid.width - 1):
            add(
                Violation(
                    "bounds",
                    f"room {room.id} at {room.position} not strictly inside the grid",
                    (room.position,),
                )
            )
        if room.repetitions <= 0:
            add(Violation("bad_repetitions", f"room {room.id} has repetitions {room.repetitions}"))
        if room.effort <= 0:
            add(Violation("bad_effort", f"room {room.id} has effort {room.effort}"))

    if grid.start == grid.end:
        add(Violation("duplicate_position", "start and end share a cell", (grid.start,)))
    seen: dict[Cell, str] = {grid.start: "start"}
    seen.setdefault(grid.end, "end")
    for room in grid.rooms:
        label = f"room {room.id}"
        if room.position in seen:
            add(
                Violation(
                    "duplicate_position",
                    f"{label} shares cell {room.position} with {seen[room.position]}",
                    (room.position,),
                )
            )
        else:
            seen[room.position] = label

    for i, a in enumerate(grid.rooms):
        for b in grid.rooms[i + 1 :]:
            if a.kind == b.kind and chebyshev(a.position, b.position) < MIN_SAME_KIND_DISTANCE:
                add(
                    Violation(
                        "proximity",
                        f"rooms {a.id} and {b.id} ({a.kind.value}) are within "
                        f"Chebyshev distance {chebyshev(a.position, b.position)}",
                        (a.position, b.position),
                    )
                )

    # Both L-orientations between every pair of special cells must keep their
    # interiors clear of all other special cells.
    specials = list(grid.special_cells().items())
    cell_names = dict(specials)
    for i, (cell_a, name_a) in enumerate(specials):
        for cell_b, name_b in specials[i + 1 :]:
            if cell_a == cell_b:
                continue  # already reported as duplicate_position
            for horizontal_first in (True, False):
                interior = l_route(cell_a, cell_b, horizontal_first)[1:-1]
                for cell in interior:
                    if cell in cell_names:
                        orientation = "horizontal-then-vertical" if horizontal_first else "vertical-then-horizontal"
                        add(
                            Violation(
                                "route_crossing",
                                f"{orientation} route between {name_a} and {name_b} "
                                f"passes through {cell_names[cell]} at {cell}",
                                (cell_a, cell_b, cell),
                            )
                        )
    return report


# Pinned default layout.  Rows and columns of all special cells are pairwise
# distinct, which makes every L-route interior trivially clear of thirds.
_DEFAULT_ROOMS = (
    (ExerciseKind.ROTATION, 5, (2, 2)),
    (ExerciseKind.ROTATION, 10, (12, 5)),
    (ExerciseKind.ROTATION, 15, (5, 11)),
    (ExerciseKind.TORSO_BEND, 5, (10, 13)),
    (ExerciseKind.TORSO_BEND, 10, (3, 7)),
    (ExerciseKind.BEND_STRETCH, 5, (13, 9)),
    (ExerciseKind.BEND_STRETCH, 10, (6, 3)),
    (ExerciseKind.BEND_STRETCH, 15, (9, 14)),
)


def default_grid() -> RoomGrid:
    """The 16x16 layout used throughout: start on the left edge, end on the
    right edge, eight exercise rooms covering all three kinds."""
    rooms = tuple(
        RoomSpec(id=i, kind=kind, repetitions=reps, position=pos)
        for i, (kind, reps, pos) in enumerate(_DEFAULT_ROOMS)
    )
    return RoomGrid(width=16, height=16, start=(8, 0), end=(7, 15), rooms=rooms)
