/** Wire types for the adaptation service's HTTP/JSON API. */

export type Cell = readonly [number, number]; // [row, col]

export interface RoomDoc {
  id: number;
  kind: string;
  reps: number;
  effort: number;
  pos: [number, number];
}

export interface GridDoc {
  width: number;
  height: number;
  start: [number, number];
  end: [number, number];
  rooms: RoomDoc[];
}

export interface MazeDoc {
  v: number;
  grid: GridDoc;
  connected: number[];
  terminal: boolean;
  corridor: [number, number][];
  edges: [[number, number], [number, number]][];
}

export interface MazeResponse {
  session: string;
  maze_id: string;
  sequence: number;
  maze: MazeDoc;
}

export interface RatingResponse {
  accepted: boolean;
  next_available: boolean;
}

export interface StatusResponse {
  session: string;
  mazes_served: number;
  ratings: number[];
  mean_abs_error: number | null;
  checkpoint_age_seconds: number | null;
  outstanding_maze_id: string | null;
  sequence: number;
}

export type Direction = 'up' | 'down' | 'left' | 'right';

export const DIRECTION_DELTAS: Record<Direction, [number, number]> = {
  up: [-1, 0],
  down: [1, 0],
  left: [0, -1],
  right: [0, 1],
};

/** Seconds of key-hold required per exercise repetition. */
export const HOLD_SECONDS_PER_REP = 0.5;
