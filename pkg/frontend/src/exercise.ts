/**
 * Exercise gate: entering an exercise room blocks movement until the player
 * holds the exercise key for repetitions x 0.5 seconds, standing in for the
 * physical activity.  Passing the same room again requires a fresh hold.
 */

import { HOLD_SECONDS_PER_REP } from './types.js';
import type { RoomDoc } from './types.js';

export interface ExerciseGate {
  room: RoomDoc;
  requiredSeconds: number;
  heldSeconds: number;
  complete: boolean;
}

export function openGate(room: RoomDoc): ExerciseGate {
  return {
    room,
    requiredSeconds: room.reps * HOLD_SECONDS_PER_REP,
    heldSeconds: 0,
    complete: false,
  };
}

/** Advance the gate by dt seconds; progress only accrues while holding. */
export function tickGate(gate: ExerciseGate, dt: number, holding: boolean): void {
  if (gate.complete) {
    return;
  }
  if (holding) {
    gate.heldSeconds = Math.min(gate.requiredSeconds, gate.heldSeconds + dt);
    if (gate.heldSeconds >= gate.requiredSeconds) {
      gate.complete = true;
    }
  }
}

export function gateProgress(gate: ExerciseGate): number {
  return gate.requiredSeconds === 0 ? 1 : gate.heldSeconds / gate.requiredSeconds;
}
