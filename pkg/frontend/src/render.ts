/** Small HTML-string helpers shared by the views. */

export function escapeHtml(value: unknown): string {
  return String(value)
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;")
    .replaceAll("'", "&#39;");
}

export function escapeAttr(value: unknown): string {
  return escapeHtml(value);
}

const ABSOLUTE_IRI = /^[a-z][a-z0-9+.-]*:\/\//i;

export function isIri(value: unknown): value is string {
  return typeof value === "string" && ABSOLUTE_IRI.test(value);
}

/** Render a value; absolute IRIs become links whose target is the IRI. */
export function renderValue(value: unknown): string {
  if (value === null || value === undefined || value === "") return '<span class="empty">—</span>';
  if (Array.isArray(value)) {
    if (value.length === 0) return '<span class="empty">—</span>';
    return value.map(renderValue).join("; ");
  }
  if (isIri(value)) {
    return `<a href="${escapeAttr(value)}" rel="noopener">${escapeHtml(value)}</a>`;
  }
  if (typeof value === "boolean") return value ? "TRUE" : "FALSE";
  if (typeof value === "object") return `<code>${escapeHtml(JSON.stringify(value))}</code>`;
  return escapeHtml(value);
}

/** RFC 4180-ish CSV cell quoting for the results download. */
export function csvCell(value: unknown): string {
  const text = value === null || value === undefined ? "" : String(value);
  if (/[",\n\r]/.test(text)) {
    return `"${text.replaceAll('"', '""')}"`;
  }
  return text;
}
