import { describe, expect, it } from "vitest";

import {
  defaultState,
  normalize,
  parseState,
  serializeState,
  toggleFilter,
  withPage,
  withText,
} from "../src/state.js";
import { loadStates } from "./helpers.js";

describe("explorer state <-> URL", () => {
  it("round-trips every scripted state", () => {
    for (const state of loadStates()) {
      const normalized = normalize(state);
      expect(parseState(serializeState(normalized))).toEqual(normalized);
    }
  });

  it("serializes the default state to an empty string", () => {
    expect(serializeState(defaultState())).toBe("");
    expect(parseState("")).toEqual(defaultState());
  });

  it("round-trips values that need URL encoding", () => {
    const state = normalize({
      ...defaultState(),
      text: "covid testing",
      filters: { population_focus: ["Underserved/Vulnerable Populations"] },
      selected: "phs002920",
    });
    const query = serializeState(state);
    expect(parseState(query)).toEqual(state);
  });

  it("ignores malformed filter parameters", () => {
    const state = parseState("f=novalue&f=:missingfield&q=x");
    expect(state.filters).toEqual({});
    expect(state.text).toBe("x");
  });

  it("toggleFilter adds, removes, and resets paging", () => {
    let state = withPage(defaultState(), 20);
    state = toggleFilter(state, "program", "RADx-UP");
    expect(state.filters["program"]).toEqual(["RADx-UP"]);
    expect(state.offset).toBe(0);
    state = toggleFilter(state, "program", "RADx-rad");
    expect(state.filters["program"]).toEqual(["RADx-UP", "RADx-rad"]);
    state = toggleFilter(state, "program", "RADx-UP");
    expect(state.filters["program"]).toEqual(["RADx-rad"]);
    state = toggleFilter(state, "program", "RADx-rad");
    expect(state.filters).toEqual({});
  });

  it("withText resets the page", () => {
    const state = withText(withPage(defaultState(), 45), "covid");
    expect(state.offset).toBe(0);
    expect(state.text).toBe("covid");
  });

  it("rejects negative offsets", () => {
    expect(withPage(defaultState(), -10).offset).toBe(0);
    expect(parseState("offset=-5").offset).toBe(0);
  });
});
