import type { ExplainResponse } from "./api.js";

// Key is the method plus params serialized with sorted keys, so logically
// equal param objects hit the same entry regardless of construction order.
export function explainKey(
  method: string,
  params: Record<string, unknown>,
): string {
  const canonical: Record<string, unknown> = {};
  for (const name of Object.keys(params).sort()) {
    canonical[name] = params[name];
  }
  return `${method}:${JSON.stringify(canonical)}`;
}

// Stores promises rather than results: a second request for the same
// (method, params) while the first is still in flight coalesces onto it,
// and a settled success keeps serving from cache with no network call.
// Failures evict themselves so a retry issues a fresh request.
export class ExplainCache {
  private readonly store = new Map<string, Promise<ExplainResponse>>();

  fetch(
    method: string,
    params: Record<string, unknown>,
    load: () => Promise<ExplainResponse>,
  ): Promise<ExplainResponse> {
    const key = explainKey(method, params);
    const hit = this.store.get(key);
    if (hit) return hit;
    const task = load();
    this.store.set(key, task);
    task.catch(() => {
      if (this.store.get(key) === task) this.store.delete(key);
    });
    return task;
  }

  has(method: string, params: Record<string, unknown>): boolean {
    return this.store.has(explainKey(method, params));
  }

  clear(): void {
    this.store.clear();
  }
}
