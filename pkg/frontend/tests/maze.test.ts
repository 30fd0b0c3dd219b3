import { readFileSync } from 'node:fs';
import { describe, expect, it } from 'vitest';

import { cellKey, MazeParseError, neighbors, parseMaze } from '../src/maze.js';

const fixture = JSON.parse(
  readFileSync(new URL('./fixtures/maze.json', import.meta.url), 'utf-8'),
);

describe('parseMaze', () => {
  it('parses the service maze document', () => {
    const model = parseMaze(fixture);
    expect(model.width).toBe(16);
    expect(model.height).toBe(16);
    expect(model.terminal).toBe(true);
    expect(model.start).toEqual([8, 0]);
    expect(model.end).toEqual([7, 15]);
    expect(model.roomsByCell.size).toBe(fixture.connected.length);
    expect(model.corridor.size).toBeGreaterThan(0);
  });

  it('builds symmetric adjacency', () => {
    const model = parseMaze(fixture);
    for (const [key, cells] of model.adjacency) {
      const [r, c] = key.split(',').map(Number);
      for (const cell of cells) {
        const back = neighbors(model, cell);
        expect(back.some((b) => b[0] === r && b[1] === c)).toBe(true);
      }
    }
  });

  it('only connected rooms are walkable rooms', () => {
    const model = parseMaze(fixture);
    for (const room of fixture.grid.rooms) {
      const walkable = model.roomsByCell.has(cellKey(room.pos));
      expect(walkable).toBe(fixture.connected.includes(room.id));
    }
  });

  it('rejects wrong schema versions', () => {
    expect(() => parseMaze({ ...fixture, v: 99 })).toThrow(MazeParseError);
  });

  it('rejects malformed documents', () => {
    expect(() => parseMaze(null)).toThrow(MazeParseError);
    expect(() => parseMaze({ v: 1 })).toThrow(MazeParseError);
    expect(() => parseMaze({ ...fixture, edges: [[1, 2, 3]] })).toThrow(MazeParseError);
  });
});
