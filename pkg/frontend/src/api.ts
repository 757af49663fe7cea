/**
 * Typed client for the fairhub read-only API.
 *
 * The client never interprets result contents: callers receive the payloads
 * exactly as the service produced them. The fetch function is injected so
 * tests can replay recorded responses; every issued URL is also kept in a
 * log, which the contract tests use to prove that no controlled-tier data
 * file is ever requested.
 */

import type { ExplorerState } from "./state.js";

export interface StudyInstance {
  accession: string;
  title: string;
  principal_investigator: string;
  program: string;
  nih_institute: string;
  study_design: string;
  estimated_cohort_size: number;
  multi_center: boolean;
  doi?: string;
  release_date?: string;
  study_domains: string[];
  population_focus: string[];
  data_collection_methods: string[];
  keywords: string[];
  sites: string[];
  data_types: string[];
  access_tier: "public" | "controlled";
}

export interface StudyRecordPayload {
  study: StudyInstance;
  variable_names: string[];
  n_data_files: number;
}

export interface SearchResponse {
  total: number;
  offset: number;
  limit: number;
  studies: StudyRecordPayload[];
}

export interface FacetEntry {
  value: string;
  counts: Record<string, number>;
}

export interface FacetsResponse {
  field: string;
  stack_by: string | null;
  histogram: FacetEntry[];
}

export interface AutocompleteResponse {
  prefix: string;
  tokens: string[];
}

export interface StoredFilePayload {
  file_name: string;
  harmonized: boolean;
  version: number;
  deid_applied: boolean;
  n_records: number | null;
  n_variables: number | null;
}

export interface OverviewResponse {
  accession: string;
  local_id: string;
  study: StudyInstance;
  documents: { name: string; size: number }[];
  files: StoredFilePayload[];
  variable_names: string[];
}

export type MetadataDocument = Record<string, unknown>;

export type FetchLike = (url: string) => Promise<{
  ok: boolean;
  status: number;
  json(): Promise<unknown>;
}>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly url: string,
    message: string,
  ) {
    super(message);
  }
}

export class ApiClient {
  readonly requestLog: string[] = [];

  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike,
  ) {}

  /** Query string for /studies derived from an explorer state; fixed key order. */
  static studiesQuery(state: ExplorerState): string {
    const params = new URLSearchParams();
    if (state.text) params.append("text", state.text);
    for (const field of Object.keys(state.filters).sort()) {
      for (const value of state.filters[field] ?? []) {
        params.append("filter", `${field}=${value}`);
      }
    }
    params.append("sort", state.sort);
    params.append("order", state.order);
    params.append("offset", String(state.offset));
    params.append("limit", String(state.limit));
    return params.toString();
  }

  private async get<T>(pathAndQuery: string): Promise<T> {
    const url = `${this.baseUrl}${pathAndQuery}`;
    this.requestLog.push(url);
    const response = await this.fetchFn(url);
    if (!response.ok) {
      throw new ApiError(response.status, url, `GET ${pathAndQuery} -> ${response.status}`);
    }
    return (await response.json()) as T;
  }

  searchStudies(state: ExplorerState): Promise<SearchResponse> {
    return this.get<SearchResponse>(`/studies?${ApiClient.studiesQuery(state)}`);
  }

  facets(field: string, stackBy?: string): Promise<FacetsResponse> {
    const params = new URLSearchParams();
    params.append("field", field);
    if (stackBy) params.append("stack_by", stackBy);
    return this.get<FacetsResponse>(`/facets?${params.toString()}`);
  }

  autocomplete(prefix: string, k = 8): Promise<AutocompleteResponse> {
    const params = new URLSearchParams();
    params.append("prefix", prefix);
    params.append("k", String(k));
    return this.get<AutocompleteResponse>(`/autocomplete?${params.toString()}`);
  }

  overview(accession: string): Promise<OverviewResponse> {
    return this.get<OverviewResponse>(`/studies/${encodeURIComponent(accession)}`);
  }

  metadata(accession: string): Promise<MetadataDocument> {
    return this.get<MetadataDocument>(`/studies/${encodeURIComponent(accession)}/metadata`);
  }

  /** Browser href for a public data file; the client never fetches these. */
  dataFileHref(accession: string, fileName: string): string {
    return `${this.baseUrl}/studies/${encodeURIComponent(accession)}/files/${encodeURIComponent(fileName)}`;
  }

  documentHref(accession: string, name: string): string {
    return `${this.baseUrl}/studies/${encodeURIComponent(accession)}/docs/${encodeURIComponent(name)}`;
  }
}
