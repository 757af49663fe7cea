/**
 * Explorer contract tests against the recorded API.
 *
 * The table rows, facet counts, and CSV export must be element-equal to the
 * recorded payloads for each scripted state; the UI computes nothing itself.
 */

import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient, type SearchResponse } from "../src/api.js";
import {
  FACET_FIELDS,
  facetCounts,
  loadExplorer,
  renderExplorer,
  renderResultsTable,
  resultsCsv,
  tableRowValues,
} from "../src/explorer.js";
import { escapeHtml } from "../src/render.js";
import { normalize, parseState, serializeState } from "../src/state.js";
import { canonicalKey, loadFixtures, loadStates, mockFetch } from "./helpers.js";

const fixtures = loadFixtures();
const states = loadStates().map(normalize);

function client(): ApiClient {
  return new ApiClient("", mockFetch(fixtures.api));
}

function recordedStudies(state: (typeof states)[number]): SearchResponse {
  const key = canonicalKey(`/studies?${ApiClient.studiesQuery(state)}`);
  const payload = fixtures.api[key];
  expect(payload, `missing fixture for ${key}`).toBeDefined();
  return payload as SearchResponse;
}

describe("explorer contract over 20 scripted states", () => {
  it("ships at least 20 scripted states", () => {
    expect(states.length).toBeGreaterThanOrEqual(20);
  });

  for (const [i, state] of states.entries()) {
    it(`state ${i}: rows, counts, and CSV equal the API payloads`, async () => {
      const api = client();
      const data = await loadExplorer(api, state);
      const expected = recordedStudies(state);

      // table rows element-equal to the payload, same order
      expect(data.results).toEqual(expected);
      const html = renderResultsTable(data.results);
      for (const record of expected.studies) {
        for (const cell of tableRowValues(record)) {
          expect(html).toContain(escapeHtml(cell));
        }
        expect(html).toContain(`data-accession="${record.study.accession}"`);
      }
      expect(html.match(/<tr data-accession=/g)?.length ?? 0).toBe(expected.studies.length);

      // facet sidebar counts equal the recorded /facets payloads
      for (const field of FACET_FIELDS) {
        const key = canonicalKey(`/facets?field=${field}`);
        expect(data.facets[field]).toEqual(fixtures.api[key]);
      }
      const full = renderExplorer(data, state);
      for (const { value, count } of facetCounts(data)) {
        expect(full).toContain(`${escapeHtml(value)} <span class="count">(${count})</span>`);
      }

      // CSV export mirrors the page rows exactly
      const lines = resultsCsv(data.results).trimEnd().split("\n");
      expect(lines.length).toBe(expected.studies.length + 1);

      // URL round-trip reproduces the identical view
      const reparsed = parseState(serializeState(state));
      expect(reparsed).toEqual(state);
      const again = await loadExplorer(client(), reparsed);
      expect(renderResultsTable(again.results)).toBe(html);
    });
  }

  it("never requests data-file bytes", async () => {
    const api = client();
    for (const state of states) {
      await loadExplorer(api, state);
    }
    expect(api.requestLog.length).toBeGreaterThan(0);
    for (const url of api.requestLog) {
      expect(url).not.toMatch(/\/files\//);
    }
  });

  it("renders the empty corpus as an empty state with zero facet counts", async () => {
    const api = new ApiClient("", mockFetch(fixtures.empty_api));
    const data = await loadExplorer(api, normalize(states[0]!));
    expect(data.results.total).toBe(0);
    expect(renderResultsTable(data.results)).toContain("No studies match");
    expect(facetCounts(data)).toEqual([]);
  });

  it("passes autocomplete tokens through verbatim", async () => {
    const api = client();
    for (const prefix of ["te", "cov", "zzz"]) {
      const payload = await api.autocomplete(prefix, 8);
      const key = canonicalKey(`/autocomplete?prefix=${prefix}&k=8`);
      expect(payload).toEqual(fixtures.api[key]);
    }
  });
});
