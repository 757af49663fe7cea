/**
 * Metadata viewer: the serialized study metadata rendered as expandable
 * sections. Scalar fields group into one section, every list field gets its
 * own, and any absolute-IRI value renders as a link whose target is the IRI.
 * A document that is not a plain JSON object falls back to raw JSON.
 */

import type { MetadataDocument } from "./api.js";
import { escapeAttr, escapeHtml, renderValue } from "./render.js";

export interface MetadataSection {
  title: string;
  fields: [string, unknown][];
}

export function buildSections(doc: MetadataDocument): MetadataSection[] | null {
  if (typeof doc !== "object" || doc === null || Array.isArray(doc)) return null;
  const scalars: [string, unknown][] = [];
  const lists: MetadataSection[] = [];
  for (const key of Object.keys(doc).sort()) {
    if (key === "@context") continue;
    const value = doc[key];
    if (Array.isArray(value)) {
      lists.push({ title: key, fields: value.map((item, i) => [`${key} ${i + 1}`, item]) });
    } else {
      scalars.push([key, value]);
    }
  }
  const sections: MetadataSection[] = [{ title: "Study Fields", fields: scalars }, ...lists];
  return sections;
}

export function renderMetadataViewer(doc: MetadataDocument, expandAll = false): string {
  const sections = buildSections(doc);
  if (sections === null) {
    return `<pre class="raw-json">${escapeHtml(JSON.stringify(doc, null, 2))}</pre>`;
  }
  const blocks = sections.map((section) => {
    const rows =
      section.fields.length === 0
        ? '<p class="empty">—</p>'
        : section.fields
            .map(([name, value]) => `<dt>${escapeHtml(name)}</dt><dd>${renderValue(value)}</dd>`)
            .join("\n");
    const open = expandAll ? " open" : "";
    return (
      `<details class="metadata-section" data-section="${escapeAttr(section.title)}"${open}>` +
      `<summary>${escapeHtml(section.title)}</summary><dl>${rows}</dl></details>`
    );
  });
  return `<div class="metadata-viewer">${blocks.join("\n")}</div>`;
}

/** Every IRI-valued leaf in the document (used to assert link rendering). */
export function iriValues(doc: MetadataDocument): string[] {
  const out: string[] = [];
  const walk = (value: unknown): void => {
    if (typeof value === "string") {
      if (/^[a-z][a-z0-9+.-]*:\/\//i.test(value)) out.push(value);
    } else if (Array.isArray(value)) {
      value.forEach(walk);
    } else if (typeof value === "object" && value !== null) {
      for (const [k, v] of Object.entries(value)) {
        if (k === "@context") continue;
        walk(v);
      }
    }
  };
  walk(doc);
  return out;
}
