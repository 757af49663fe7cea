/**
 * Explorer state and its URL query-string mapping.
 *
 * The whole state round-trips through the URL so any view is shareable as a
 * link: parse(serialize(s)) === s for every normalized state. Filters encode
 * as repeated `f=field:value` parameters (the first `:` splits); defaults
 * are omitted from the string.
 */

export type SortOrder = "asc" | "desc";

export interface ExplorerState {
  text: string;
  /** field -> selected values, values sorted, fields with none omitted */
  filters: Record<string, string[]>;
  sort: string;
  order: SortOrder;
  offset: number;
  limit: number;
  /** accession selected for the overview panel, if any */
  selected: string | null;
}

export const DEFAULT_LIMIT = 50;

export function defaultState(): ExplorerState {
  return {
    text: "",
    filters: {},
    sort: "title",
    order: "asc",
    offset: 0,
    limit: DEFAULT_LIMIT,
    selected: null,
  };
}

/** Canonical form: filter values deduplicated and sorted, empty lists dropped. */
export function normalize(state: ExplorerState): ExplorerState {
  const filters: Record<string, string[]> = {};
  for (const field of Object.keys(state.filters).sort()) {
    const values = Array.from(new Set(state.filters[field] ?? [])).sort();
    if (values.length > 0) filters[field] = values;
  }
  return { ...state, filters };
}

export function serializeState(state: ExplorerState): string {
  const s = normalize(state);
  const params = new URLSearchParams();
  if (s.text) params.append("q", s.text);
  for (const field of Object.keys(s.filters)) {
    for (const value of s.filters[field] ?? []) {
      params.append("f", `${field}:${value}`);
    }
  }
  if (s.sort !== "title") params.append("sort", s.sort);
  if (s.order !== "asc") params.append("order", s.order);
  if (s.offset !== 0) params.append("offset", String(s.offset));
  if (s.limit !== DEFAULT_LIMIT) params.append("limit", String(s.limit));
  if (s.selected) params.append("study", s.selected);
  return params.toString();
}

export function parseState(query: string): ExplorerState {
  const params = new URLSearchParams(query);
  const state = defaultState();
  state.text = params.get("q") ?? "";
  for (const raw of params.getAll("f")) {
    const sep = raw.indexOf(":");
    if (sep <= 0) continue;
    const field = raw.slice(0, sep);
    const value = raw.slice(sep + 1);
    (state.filters[field] ??= []).push(value);
  }
  state.sort = params.get("sort") ?? "title";
  const order = params.get("order");
  state.order = order === "desc" ? "desc" : "asc";
  state.offset = intOr(params.get("offset"), 0);
  state.limit = intOr(params.get("limit"), DEFAULT_LIMIT);
  state.selected = params.get("study");
  return normalize(state);
}

function intOr(raw: string | null, fallback: number): number {
  if (raw === null) return fallback;
  const n = Number.parseInt(raw, 10);
  return Number.isFinite(n) && n >= 0 ? n : fallback;
}

export function toggleFilter(state: ExplorerState, field: string, value: string): ExplorerState {
  const current = new Set(state.filters[field] ?? []);
  if (current.has(value)) {
    current.delete(value);
  } else {
    current.add(value);
  }
  const filters = { ...state.filters, [field]: Array.from(current) };
  // a filter change starts paging over
  return normalize({ ...state, filters, offset: 0 });
}

export function withText(state: ExplorerState, text: string): ExplorerState {
  return normalize({ ...state, text, offset: 0 });
}

export function withPage(state: ExplorerState, offset: number): ExplorerState {
  return normalize({ ...state, offset: Math.max(0, offset) });
}

export function withSelection(state: ExplorerState, accession: string | null): ExplorerState {
  return normalize({ ...state, selected: accession });
}
