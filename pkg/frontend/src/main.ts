/**
 * Entry point: fetch the outstanding maze, run the walk loop, collect the
 * rating at the end, submit, and render the next maze the service returns.
 */

import { ApiClient } from './api.js';
import { move, startGame, tick, type GameState } from './game.js';
import { parseMaze, MazeParseError } from './maze.js';
import { renderGame } from './renderer.js';
import { sessionId } from './session.js';
import type { Direction } from './types.js';

const CELL_SIZE = 34;
const RATING_LABELS = [
  '1 - not at all difficult',
  '2',
  '3',
  '4',
  '5 - extremely difficult',
];

const canvas = document.getElementById('maze') as HTMLCanvasElement;
const ctx = canvas.getContext('2d')!;
const banner = document.getElementById('banner')!;
const hud = document.getElementById('hud')!;
const dialog = document.getElementById('rating-dialog')!;

const baseUrl =
  new URLSearchParams(window.location.search).get('service') ?? 'http://127.0.0.1:8000';
const api = new ApiClient(baseUrl);
const session = sessionId(window.localStorage);

let game: GameState | null = null;
let mazeId = '';
let sequence = 0;
let holding = false;
let ratingShown = false;

function showBanner(text: string, retry?: () => void): void {
  banner.textContent = text;
  banner.classList.remove('hidden');
  if (retry) {
    const button = document.createElement('button');
    button.textContent = 'Retry';
    button.onclick = () => {
      banner.classList.add('hidden');
      retry();
    };
    banner.append(' ');
    banner.appendChild(button);
  }
}

function showRatingDialog(): void {
  ratingShown = true;
  dialog.innerHTML = '<p>How difficult and exhausting was this maze?</p>';
  for (let rating = 1; rating <= 5; rating++) {
    const button = document.createElement('button');
    button.textContent = RATING_LABELS[rating - 1];
    button.onclick = () => submitRating(rating);
    dialog.appendChild(button);
  }
  dialog.classList.remove('hidden');
}

async function submitRating(rating: number): Promise<void> {
  dialog.querySelectorAll('button').forEach((b) => (b.disabled = true));
  try {
    const response = await api.submitRating(session, mazeId, rating);
    dialog.classList.add('hidden');
    ratingShown = false;
    applyMaze(response);
  } catch (error) {
    showBanner(`Could not submit rating: ${error}`, () => void submitRating(rating));
  }
}

function applyMaze(response: {
  maze_id: string;
  sequence: number;
  maze: unknown;
}): void {
  try {
    const model = parseMaze(response.maze);
    game = startGame(model);
    mazeId = response.maze_id;
    sequence = response.sequence;
    canvas.width = model.width * CELL_SIZE;
    canvas.height = model.height * CELL_SIZE;
  } catch (error) {
    if (error instanceof MazeParseError) {
      showBanner(`Maze document rejected: ${error.message}`);
      return;
    }
    throw error;
  }
}

async function loadMaze(): Promise<void> {
  try {
    applyMaze(await api.getMaze(session));
  } catch (error) {
    showBanner(`Could not reach the maze service: ${error}`, () => void loadMaze());
  }
}

const KEY_DIRECTIONS: Record<string, Direction> = {
  ArrowUp: 'up',
  ArrowDown: 'down',
  ArrowLeft: 'left',
  ArrowRight: 'right',
  w: 'up',
  s: 'down',
  a: 'left',
  d: 'right',
};

window.addEventListener('keydown', (event) => {
  if (!game || ratingShown) {
    return;
  }
  if (event.key === ' ') {
    holding = true;
    event.preventDefault();
    return;
  }
  const direction = KEY_DIRECTIONS[event.key];
  if (direction) {
    move(game, direction);
    event.preventDefault();
  }
});

window.addEventListener('keyup', (event) => {
  if (event.key === ' ') {
    holding = false;
  }
});

let lastFrame = performance.now();
function frame(now: number): void {
  const dt = Math.min(0.1, (now - lastFrame) / 1000);
  lastFrame = now;
  if (game) {
    tick(game, dt, holding);
    renderGame(ctx, game, CELL_SIZE);
    const gate = game.gate && !game.gate.complete
      ? ' - hold SPACE to complete the exercise'
      : '';
    hud.textContent = `maze ${sequence} - steps ${game.steps}${gate}`;
    if (game.reachedEnd && !ratingShown) {
      showRatingDialog();
    }
  }
  requestAnimationFrame(frame);
}

void loadMaze();
requestAnimationFrame(frame);
