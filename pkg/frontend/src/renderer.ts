/**
 * Canvas renderer: top-down maze view under fog of war.  Only revealed
 * cells are drawn; exercise rooms show their kind and repetition count.
 */

import { isRevealed, isVisited } from './fog.js';
import { cellKey } from './maze.js';
import { exerciseProgress, type GameState } from './game.js';
import type { Cell } from './types.js';

const COLORS = {
  background: '#101018',
  hidden: '#101018',
  corridor: '#3a3a4e',
  visited: '#4c4c66',
  start: '#2e7d32',
  end: '#c9a227',
  room: '#8e3b46',
  player: '#f0f0f0',
  text: '#e8e8e8',
};

const KIND_LABELS: Record<string, string> = {
  rotation: 'ROT',
  torso_bend: 'BEND',
  bend_stretch: 'B+S',
};

export function renderGame(ctx: CanvasRenderingContext2D, state: GameState, cellSize: number): void {
  const { model, fog } = state;
  ctx.fillStyle = COLORS.background;
  ctx.fillRect(0, 0, model.width * cellSize, model.height * cellSize);

  for (let row = 0; row < model.height; row++) {
    for (let col = 0; col < model.width; col++) {
      const cell: Cell = [row, col];
      if (!isRevealed(fog, cell)) {
        continue;
      }
      const key = cellKey(cell);
      let fill = COLORS.hidden;
      if (model.corridor.has(key)) {
        fill = isVisited(fog, cell) ? COLORS.visited : COLORS.corridor;
      }
      if (key === cellKey(model.start)) {
        fill = COLORS.start;
      } else if (model.terminal && key === cellKey(model.end)) {
        fill = COLORS.end;
      } else if (model.roomsByCell.has(key)) {
        fill = COLORS.room;
      }
      ctx.fillStyle = fill;
      ctx.fillRect(col * cellSize + 1, row * cellSize + 1, cellSize - 2, cellSize - 2);

      const room = model.roomsByCell.get(key);
      if (room) {
        ctx.fillStyle = COLORS.text;
        ctx.font = `${Math.max(8, cellSize * 0.28)}px monospace`;
        ctx.textAlign = 'center';
        ctx.fillText(
          KIND_LABELS[room.kind] ?? room.kind,
          (col + 0.5) * cellSize,
          (row + 0.45) * cellSize,
        );
        ctx.fillText(`R${room.reps}`, (col + 0.5) * cellSize, (row + 0.8) * cellSize);
      }
    }
  }

  // player marker
  const [pr, pc] = state.position;
  ctx.fillStyle = COLORS.player;
  ctx.beginPath();
  ctx.arc((pc + 0.5) * cellSize, (pr + 0.5) * cellSize, cellSize * 0.3, 0, Math.PI * 2);
  ctx.fill();

  // exercise hold progress
  const progress = exerciseProgress(state);
  if (progress !== null) {
    const barWidth = model.width * cellSize * 0.5;
    const x = (model.width * cellSize - barWidth) / 2;
    const y = model.height * cellSize - 18;
    ctx.fillStyle = '#222';
    ctx.fillRect(x, y, barWidth, 10);
    ctx.fillStyle = '#6fbf73';
    ctx.fillRect(x, y, barWidth * progress, 10);
    ctx.strokeStyle = COLORS.text;
    ctx.strokeRect(x, y, barWidth, 10);
  }
}
