/**
 * Replay helpers: a fetch stand-in that serves the recorded API fixtures.
 *
 * URLs are canonicalized (path + sorted decoded query pairs) exactly like
 * the recorder does, so encoding differences cannot cause silent misses. An
 * un-recorded URL rejects loudly unless it looks like a study lookup, which
 * returns 404 (for the not-found path).
 */

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import type { FetchLike } from "../src/api.js";
import type { ExplorerState } from "../src/state.js";

const here = dirname(fileURLToPath(import.meta.url));

export interface RecordedFixtures {
  seed: number;
  accessions: string[];
  tiers: Record<string, string>;
  api: Record<string, unknown>;
  empty_api: Record<string, unknown>;
}

export function loadFixtures(): RecordedFixtures {
  return JSON.parse(readFileSync(join(here, "fixtures", "api_fixtures.json"), "utf-8"));
}

export function loadStates(): ExplorerState[] {
  return JSON.parse(readFileSync(join(here, "fixtures", "states.json"), "utf-8"));
}

export function canonicalKey(url: string): string {
  const parsed = new URL(url, "http://fixture.local");
  const pairs: [string, string][] = [];
  parsed.searchParams.forEach((value, key) => pairs.push([key, value]));
  pairs.sort(([ak, av], [bk, bv]) => (ak === bk ? (av < bv ? -1 : av > bv ? 1 : 0) : ak < bk ? -1 : 1));
  const query = pairs.map(([k, v]) => `${k}=${v}`).join("&");
  return query ? `${parsed.pathname}?${query}` : parsed.pathname;
}

export function mockFetch(payloads: Record<string, unknown>): FetchLike {
  return async (url: string) => {
    const key = canonicalKey(url);
    if (key in payloads) {
      const body = payloads[key];
      return { ok: true, status: 200, json: async () => body };
    }
    if (/^\/studies\/[^/]+(\/metadata)?$/.test(key)) {
      return { ok: false, status: 404, json: async () => ({ error: "not-found" }) };
    }
    throw new Error(`request outside the recorded fixture set: ${url} (key ${key})`);
  };
}
