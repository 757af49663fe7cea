/**
 * Browser bootstrap: wires the pure views to the DOM and keeps the state in
 * the URL (History API), so every view is a shareable link. In-flight
 * requests resolve last-write-wins keyed by a state serial.
 */

import { ApiClient } from "./api.js";
import { loadExplorer, renderExplorer, resultsCsv } from "./explorer.js";
import { renderMetadataViewer } from "./metadataViewer.js";
import { renderNotFound, renderOverview } from "./overview.js";
import {
  type ExplorerState,
  parseState,
  serializeState,
  toggleFilter,
  withPage,
  withSelection,
  withText,
} from "./state.js";

const API_BASE = (window as { FAIRHUB_API_BASE?: string }).FAIRHUB_API_BASE ?? "";

const api = new ApiClient(API_BASE, (url) => fetch(url));

let state: ExplorerState = parseState(window.location.search.replace(/^\?/, ""));
let serial = 0;

function pushUrl(): void {
  const query = serializeState(state);
  window.history.pushState(null, "", query ? `?${query}` : window.location.pathname);
}

function setState(next: ExplorerState): void {
  state = next;
  pushUrl();
  void render();
}

function banner(message: string): void {
  const el = document.querySelector("#banner");
  if (el) {
    el.innerHTML = message ? `<div class="banner">${message}</div>` : "";
  }
}

async function render(): Promise<void> {
  const mine = ++serial;
  const root = document.querySelector("#app");
  if (!root) return;
  try {
    if (state.selected) {
      await renderStudyPages(root, state.selected, mine);
    } else {
      const data = await loadExplorer(api, state);
      if (mine !== serial) return; // a newer state finished first
      root.innerHTML = renderExplorer(data, state);
      wireExplorer(data);
    }
    banner("");
  } catch (err) {
    banner(`The catalog service is unreachable or returned an error (${String(err)}). Showing the previous view.`);
  }
}

async function renderStudyPages(root: Element, accession: string, mine: number): Promise<void> {
  let overview;
  try {
    overview = await api.overview(accession);
  } catch {
    root.innerHTML = renderNotFound(accession);
    return;
  }
  let metadataHtml = "";
  try {
    const doc = await api.metadata(accession);
    metadataHtml = renderMetadataViewer(doc);
  } catch {
    metadataHtml = '<p class="empty">Metadata unavailable.</p>';
  }
  if (mine !== serial) return;
  root.innerHTML =
    '<p><a href="#" id="back-to-explorer">&larr; Back to Study Explorer</a></p>' +
    renderOverview(api, overview) +
    '<h2>Visualize Metadata <button id="expand-all">Expand All</button> <button id="collapse-all">Collapse All</button></h2>' +
    metadataHtml;
  document.querySelector("#back-to-explorer")?.addEventListener("click", (e) => {
    e.preventDefault();
    setState(withSelection(state, null));
  });
  document.querySelector("#expand-all")?.addEventListener("click", () => {
    document.querySelectorAll("details.metadata-section").forEach((d) => d.setAttribute("open", ""));
  });
  document.querySelector("#collapse-all")?.addEventListener("click", () => {
    document.querySelectorAll("details.metadata-section").forEach((d) => d.removeAttribute("open"));
  });
}

function wireExplorer(data: Awaited<ReturnType<typeof loadExplorer>>): void {
  document.querySelectorAll<HTMLInputElement>(".facet input[type=checkbox]").forEach((box) => {
    box.addEventListener("change", () => {
      const field = box.dataset["field"];
      const value = box.dataset["value"];
      if (field && value !== undefined) setState(toggleFilter(state, field, value));
    });
  });
  document.querySelectorAll<HTMLTableRowElement>("tr[data-accession]").forEach((row) => {
    row.addEventListener("click", () => {
      const accession = row.dataset["accession"];
      if (accession) setState(withSelection(state, accession));
    });
  });
  const download = document.querySelector("#download-csv");
  if (download) {
    download.addEventListener("click", (e) => {
      e.preventDefault();
      const blob = new Blob([resultsCsv(data.results)], { type: "text/csv" });
      const a = document.createElement("a");
      a.href = URL.createObjectURL(blob);
      a.download = "studies.csv";
      a.click();
      URL.revokeObjectURL(a.href);
    });
  }
  wirePager(data.results.total);
}

function wirePager(total: number): void {
  document.querySelector("#prev-page")?.addEventListener("click", () => {
    setState(withPage(state, state.offset - state.limit));
  });
  document.querySelector("#next-page")?.addEventListener("click", () => {
    if (state.offset + state.limit < total) setState(withPage(state, state.offset + state.limit));
  });
}

function wireSearchBox(): void {
  const input = document.querySelector<HTMLInputElement>("#search-box");
  const suggestions = document.querySelector("#suggestions");
  if (!input) return;
  input.value = state.text;
  input.addEventListener("keydown", (e) => {
    if (e.key === "Enter") {
      setState(withText(state, input.value));
      if (suggestions) suggestions.innerHTML = "";
    }
  });
  input.addEventListener("input", () => {
    const prefix = input.value.split(/\s+/).pop() ?? "";
    if (!suggestions) return;
    if (prefix.length < 2) {
      suggestions.innerHTML = "";
      return;
    }
    void api.autocomplete(prefix).then((payload) => {
      suggestions.innerHTML = payload.tokens
        .map((t) => `<li class="suggestion">${t}</li>`)
        .join("");
      suggestions.querySelectorAll(".suggestion").forEach((li) => {
        li.addEventListener("click", () => {
          const words = input.value.split(/\s+/);
          words[words.length - 1] = li.textContent ?? "";
          input.value = words.join(" ");
          suggestions.innerHTML = "";
          setState(withText(state, input.value));
        });
      });
    });
  });
}

window.addEventListener("popstate", () => {
  state = parseState(window.location.search.replace(/^\?/, ""));
  void render();
});

wireSearchBox();
void render();
