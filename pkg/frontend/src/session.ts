/** Session identity is the only state that survives a reload. */

const STORAGE_KEY = 'exermaze-session';

export interface StorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
}

export function sessionId(storage: StorageLike): string {
  const existing = storage.getItem(STORAGE_KEY);
  if (existing) {
    return existing;
  }
  const fresh = `p-${Date.now().toString(36)}-${Math.random().toString(36).slice(2, 10)}`;
  storage.setItem(STORAGE_KEY, fresh);
  return fresh;
}
