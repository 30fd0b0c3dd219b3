/**
 * Fog of war: players cannot see over walls, so only cells they have
 * visited plus straight line-of-sight runs along open passages are drawn.
 */

import { cellKey, isPassable, type MazeModel } from './maze.js';
import { DIRECTION_DELTAS, type Cell } from './types.js';

export interface FogState {
  visited: Set<string>;
  revealed: Set<string>;
}

export function createFog(): FogState {
  return { visited: new Set(), revealed: new Set() };
}

/** Mark a cell visited and sweep line-of-sight rays from it. */
export function visit(fog: FogState, model: MazeModel, cell: Cell): void {
  fog.visited.add(cellKey(cell));
  fog.revealed.add(cellKey(cell));
  for (const [dr, dc] of Object.values(DIRECTION_DELTAS)) {
    let current: Cell = cell;
    for (;;) {
      const next: Cell = [current[0] + dr, current[1] + dc];
      if (!isPassable(model, current, next)) {
        break;
      }
      fog.revealed.add(cellKey(next));
      current = next;
    }
  }
}

export function isRevealed(fog: FogState, cell: Cell): boolean {
  return fog.revealed.has(cellKey(cell));
}

export function isVisited(fog: FogState, cell: Cell): boolean {
  return fog.visited.has(cellKey(cell));
}
