/**
 * Game state: position, fog, exercise gates and end detection for one maze.
 * Pure state transitions; rendering and input live elsewhere.
 */

import { createFog, visit, type FogState } from './fog.js';
import { gateProgress, openGate, tickGate, type ExerciseGate } from './exercise.js';
import { cellKey, isPassable, type MazeModel } from './maze.js';
import { DIRECTION_DELTAS, type Cell, type Direction } from './types.js';

export interface GameState {
  model: MazeModel;
  position: Cell;
  fog: FogState;
  gate: ExerciseGate | null;
  steps: number;
  reachedEnd: boolean;
}

export function startGame(model: MazeModel): GameState {
  const state: GameState = {
    model,
    position: model.start,
    fog: createFog(),
    gate: null,
    steps: 0,
    reachedEnd: false,
  };
  visit(state.fog, model, model.start);
  return state;
}

/**
 * Try to move one cell.  Fails against walls, and while an incomplete
 * exercise gate holds the player in a room.
 */
export function move(state: GameState, direction: Direction): boolean {
  if (state.reachedEnd) {
    return false;
  }
  if (state.gate && !state.gate.complete) {
    return false;
  }
  const [dr, dc] = DIRECTION_DELTAS[direction];
  const target: Cell = [state.position[0] + dr, state.position[1] + dc];
  if (!isPassable(state.model, state.position, target)) {
    return false;
  }
  state.position = target;
  state.steps += 1;
  visit(state.fog, state.model, target);
  const room = state.model.roomsByCell.get(cellKey(target));
  state.gate = room ? openGate(room) : null;
  if (target[0] === state.model.end[0] && target[1] === state.model.end[1]) {
    state.reachedEnd = true;
  }
  return true;
}

/** Advance time: exercise progress accrues while the hold key is down. */
export function tick(state: GameState, dt: number, holding: boolean): void {
  if (state.gate && !state.gate.complete) {
    tickGate(state.gate, dt, holding);
  }
}

export function exerciseProgress(state: GameState): number | null {
  if (!state.gate || state.gate.complete) {
    return null;
  }
  return gateProgress(state.gate);
}
