/**
 * Maze model: parses the service's maze document into fast lookup
 * structures keyed by "row,col" strings.
 */

import type { Cell, MazeDoc, RoomDoc } from './types.js';

export class MazeParseError extends Error {}

export const SCHEMA_VERSION = 1;

export function cellKey(cell: Cell): string {
  return `${cell[0]},${cell[1]}`;
}

export interface MazeModel {
  width: number;
  height: number;
  start: Cell;
  end: Cell;
  terminal: boolean;
  /** room lookup by cell for connected rooms only (they are walkable) */
  roomsByCell: Map<string, RoomDoc>;
  corridor: Set<string>;
  /** passable neighbors per cell */
  adjacency: Map<string, Cell[]>;
}

function asCell(value: unknown, context: string): Cell {
  if (!Array.isArray(value) || value.length !== 2 ||
      !Number.isInteger(value[0]) || !Number.isInteger(value[1])) {
    throw new MazeParseError(`${context}: expected [row, col], got ${JSON.stringify(value)}`);
  }
  return [value[0], value[1]] as const;
}

export function parseMaze(doc: unknown): MazeModel {
  if (typeof doc !== 'object' || doc === null) {
    throw new MazeParseError('maze document is not an object');
  }
  const maze = doc as Partial<MazeDoc>;
  if (maze.v !== SCHEMA_VERSION) {
    throw new MazeParseError(`unsupported maze schema version ${maze.v}`);
  }
  if (!maze.grid || !Array.isArray(maze.edges) || !Array.isArray(maze.corridor)) {
    throw new MazeParseError('maze document missing grid, corridor or edges');
  }
  const grid = maze.grid;
  if (!Number.isInteger(grid.width) || !Number.isInteger(grid.height)) {
    throw new MazeParseError('grid dimensions must be integers');
  }

  const connected = new Set(maze.connected ?? []);
  const roomsByCell = new Map<string, RoomDoc>();
  for (const room of grid.rooms ?? []) {
    if (connected.has(room.id)) {
      roomsByCell.set(cellKey(asCell(room.pos, `room ${room.id}`)), room);
    }
  }

  const adjacency = new Map<string, Cell[]>();
  const addEdge = (a: Cell, b: Cell) => {
    const key = cellKey(a);
    const list = adjacency.get(key) ?? [];
    if (!list.some((c) => c[0] === b[0] && c[1] === b[1])) {
      list.push(b);
      adjacency.set(key, list);
    }
  };
  for (const edge of maze.edges) {
    if (!Array.isArray(edge) || edge.length !== 2) {
      throw new MazeParseError(`malformed edge ${JSON.stringify(edge)}`);
    }
    const a = asCell(edge[0], 'edge');
    const b = asCell(edge[1], 'edge');
    addEdge(a, b);
    addEdge(b, a);
  }

  return {
    width: grid.width,
    height: grid.height,
    start: asCell(grid.start, 'start'),
    end: asCell(grid.end, 'end'),
    terminal: Boolean(maze.terminal),
    roomsByCell,
    corridor: new Set(maze.corridor.map((c) => cellKey(asCell(c, 'corridor')))),
    adjacency,
  };
}

export function neighbors(model: MazeModel, cell: Cell): Cell[] {
  return model.adjacency.get(cellKey(cell)) ?? [];
}

export function isPassable(model: MazeModel, from: Cell, to: Cell): boolean {
  return neighbors(model, from).some((c) => c[0] === to[0] && c[1] === to[1]);
}
