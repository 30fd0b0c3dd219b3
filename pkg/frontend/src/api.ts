/**
 * Typed client for the adaptation service.  The server is authoritative:
 * a 409 on rating submission means the rating already landed, so the client
 * just refetches the current state.
 */

import type { MazeResponse, RatingResponse, StatusResponse } from './types.js';

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private baseUrl: string,
    private fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private url(path: string): string {
    return `${this.baseUrl.replace(/\/$/, '')}${path}`;
  }

  async getMaze(session: string): Promise<MazeResponse> {
    const response = await this.fetchImpl(
      this.url(`/api/v1/maze?session=${encodeURIComponent(session)}`),
    );
    if (!response.ok) {
      throw new ApiError(response.status, `maze fetch failed (${response.status})`);
    }
    return (await response.json()) as MazeResponse;
  }

  /**
   * Submit a rating and fetch the next maze.  A 409 means this maze was
   * already rated (double submit, reconnect): silently refetch instead.
   */
  async submitRating(session: string, mazeId: string, rating: number): Promise<MazeResponse> {
    const response = await this.fetchImpl(this.url('/api/v1/rating'), {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ session, maze_id: mazeId, rating }),
    });
    if (!response.ok && response.status !== 409) {
      throw new ApiError(response.status, `rating submission failed (${response.status})`);
    }
    if (response.ok) {
      (await response.json()) as RatingResponse;
    }
    return this.getMaze(session);
  }

  async getStatus(session: string): Promise<StatusResponse> {
    const response = await this.fetchImpl(
      this.url(`/api/v1/status?session=${encodeURIComponent(session)}`),
    );
    if (!response.ok) {
      throw new ApiError(response.status, `status fetch failed (${response.status})`);
    }
    return (await response.json()) as StatusResponse;
  }
}
