/**
 * Study overview: metadata summary on the left, documents and data files on
 * the right. Controlled-tier studies render a request-access affordance in
 * place of download links; the client never touches /files/ URLs itself.
 */

import type { ApiClient, OverviewResponse } from "./api.js";
import { escapeAttr, escapeHtml, renderValue } from "./render.js";

export const SUMMARY_FIELDS: [string, string][] = [
  ["accession", "dbGaP Study Accession"],
  ["nih_institute", "NIH Institute/Center"],
  ["program", "RADx Data Program"],
  ["doi", "DOI"],
  ["release_date", "Release Date"],
  ["principal_investigator", "Principal Investigator"],
  ["study_domains", "Study Domain"],
  ["data_collection_methods", "Data Collection Method"],
  ["keywords", "Keywords"],
  ["study_design", "Study Design"],
  ["multi_center", "Multi-Center Study"],
  ["sites", "Study Sites"],
  ["data_types", "Data Types"],
];

export function summaryEntries(overview: OverviewResponse): [string, unknown][] {
  const study = overview.study as unknown as Record<string, unknown>;
  return SUMMARY_FIELDS.map(([key, label]) => [label, study[key]]);
}

export function renderSummaryPanel(overview: OverviewResponse): string {
  const rows = summaryEntries(overview)
    .map(([label, value]) => `<dt>${escapeHtml(label)}</dt><dd>${renderValue(value)}</dd>`)
    .join("\n");
  return `<section class="study-information"><h2>Study Information</h2><dl>${rows}</dl></section>`;
}

export function renderDocumentsPanel(api: ApiClient, overview: OverviewResponse): string {
  if (overview.documents.length === 0) {
    return '<section class="documents"><h2>Study Documents</h2><p class="empty">No documents.</p></section>';
  }
  const rows = overview.documents
    .map(
      (doc) =>
        `<tr><td>${escapeHtml(doc.name)}</td><td>${(doc.size / 1024).toFixed(2)} KB</td>` +
        `<td><a href="${escapeAttr(api.documentHref(overview.accession, doc.name))}" download>Download</a></td></tr>`,
    )
    .join("\n");
  return (
    '<section class="documents"><h2>Study Documents</h2>' +
    `<table><thead><tr><th>Document Name</th><th>File Size</th><th>Download</th></tr></thead><tbody>${rows}</tbody></table></section>`
  );
}

export function renderFilesPanel(api: ApiClient, overview: OverviewResponse): string {
  const isPublic = overview.study.access_tier === "public";
  const rows = overview.files
    .map((f) => {
      const kind = f.harmonized ? "Tabular Data - Harmonized" : "Tabular Data - Non-harmonized";
      const action = isPublic
        ? `<a href="${escapeAttr(api.dataFileHref(overview.accession, f.file_name))}" download>Download</a>`
        : '<a class="request-access" href="https://fairhub.local/docs/access">How to Request Access</a>';
      return (
        `<tr><td>${escapeHtml(f.file_name)}</td><td>${escapeHtml(kind)}</td>` +
        `<td>${f.n_records ?? "—"}</td><td>${f.n_variables ?? "—"}</td><td>${action}</td></tr>`
      );
    })
    .join("\n");
  const note = isPublic ? "" : '<p class="access-note">Data files are in the controlled tier; request access to download.</p>';
  return (
    '<section class="data-files"><h2>Data Files</h2>' +
    note +
    `<table><thead><tr><th>File Name</th><th>File Type</th><th># of Records</th><th># of Variables</th><th>Access</th></tr></thead><tbody>${rows}</tbody></table></section>`
  );
}

export function renderOverview(api: ApiClient, overview: OverviewResponse): string {
  return [
    '<div class="overview">',
    renderSummaryPanel(overview),
    renderDocumentsPanel(api, overview),
    renderFilesPanel(api, overview),
    "</div>",
  ].join("\n");
}

export function renderNotFound(accession: string): string {
  return `<div class="not-found"><h2>Study not found</h2><p>No study with accession ${escapeHtml(accession)}.</p></div>`;
}
