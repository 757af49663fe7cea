/**
 * Study explorer: results table plus facet sidebar.
 *
 * The view is a pure function of the API payloads for the current state;
 * nothing is filtered, counted, or re-sorted on the client. Facet counts
 * are re-fetched after every state change.
 */

import type { ApiClient, FacetsResponse, SearchResponse, StudyRecordPayload } from "./api.js";
import { csvCell, escapeAttr, escapeHtml } from "./render.js";
import type { ExplorerState } from "./state.js";

/** Sidebar facets, in display order. */
export const FACET_FIELDS = [
  "program",
  "nih_institute",
  "study_domains",
  "population_focus",
  "data_collection_methods",
  "study_design",
  "cohort_size",
  "has_data_files",
] as const;

export const TABLE_COLUMNS = [
  "Study Name",
  "dbGaP Study Accession",
  "Estimated Cohort Size",
  "NIH Institute / Center",
  "RADx Data Program",
] as const;

export interface ExplorerData {
  results: SearchResponse;
  facets: Record<string, FacetsResponse>;
}

export async function loadExplorer(api: ApiClient, state: ExplorerState): Promise<ExplorerData> {
  const results = await api.searchStudies(state);
  const facets: Record<string, FacetsResponse> = {};
  for (const field of FACET_FIELDS) {
    facets[field] = await api.facets(field);
  }
  return { results, facets };
}

export function tableRowValues(record: StudyRecordPayload): string[] {
  const s = record.study;
  return [s.title, s.accession, String(s.estimated_cohort_size), s.nih_institute, s.program];
}

export function renderResultsTable(results: SearchResponse): string {
  if (results.total === 0) {
    return '<p class="empty-state">No studies match the current filters.</p>';
  }
  const head = TABLE_COLUMNS.map((c) => `<th>${escapeHtml(c)}</th>`).join("");
  const body = results.studies
    .map((record) => {
      const cells = tableRowValues(record)
        .map((v) => `<td>${escapeHtml(v)}</td>`)
        .join("");
      return `<tr data-accession="${escapeAttr(record.study.accession)}">${cells}</tr>`;
    })
    .join("\n");
  const shownFrom = results.offset + 1;
  const shownTo = results.offset + results.studies.length;
  return [
    `<p class="result-count">${results.total} studies (showing ${shownFrom}–${shownTo})</p>`,
    `<table class="studies"><thead><tr>${head}</tr></thead><tbody>`,
    body,
    "</tbody></table>",
  ].join("\n");
}

export function renderFacetSidebar(facets: Record<string, FacetsResponse>, state: ExplorerState): string {
  const blocks: string[] = [];
  for (const field of FACET_FIELDS) {
    const payload = facets[field];
    if (!payload) continue;
    const selected = new Set(state.filters[field] ?? []);
    const items = payload.histogram
      .map((entry) => {
        const checked = selected.has(entry.value) ? " checked" : "";
        const count = entry.counts["count"] ?? 0;
        return (
          `<li><label><input type="checkbox" data-field="${escapeAttr(field)}" ` +
          `data-value="${escapeAttr(entry.value)}"${checked}> ` +
          `${escapeHtml(entry.value)} <span class="count">(${count})</span></label></li>`
        );
      })
      .join("\n");
    blocks.push(
      `<section class="facet" data-field="${escapeAttr(field)}">` +
        `<h3>${escapeHtml(field.replaceAll("_", " "))}</h3><ul>${items}</ul></section>`,
    );
  }
  return blocks.join("\n");
}

export function renderExplorer(data: ExplorerData, state: ExplorerState): string {
  return [
    '<div class="explorer">',
    `<aside class="filters">${renderFacetSidebar(data.facets, state)}</aside>`,
    `<main class="results">${renderResultsTable(data.results)}</main>`,
    "</div>",
  ].join("\n");
}

/** The current page of results as CSV, straight from the API payload. */
export function resultsCsv(results: SearchResponse): string {
  const lines = [TABLE_COLUMNS.map(csvCell).join(",")];
  for (const record of results.studies) {
    lines.push(tableRowValues(record).map(csvCell).join(","));
  }
  return lines.join("\n") + "\n";
}

export interface FacetCount {
  field: string;
  value: string;
  count: number;
}

/** Flattened sidebar counts, handy for asserting against the API payloads. */
export function facetCounts(data: ExplorerData): FacetCount[] {
  const out: FacetCount[] = [];
  for (const field of FACET_FIELDS) {
    for (const entry of data.facets[field]?.histogram ?? []) {
      out.push({ field, value: entry.value, count: entry.counts["count"] ?? 0 });
    }
  }
  return out;
}
