import { describe, expect, it } from "vitest";

import { highlightEntities } from "../src/highlight.js";

describe("highlightEntities", () => {
  it("marks head and tail occurrences and keeps the rest plain", () => {
    const segments = highlightEntities("Ada was born in London.", "Ada", "London");
    expect(segments).toEqual([
      { text: "Ada", kind: "head" },
      { text: " was born in ", kind: "plain" },
      { text: "London", kind: "tail" },
      { text: ".", kind: "plain" },
    ]);
  });

  it("is case-insensitive but preserves original casing", () => {
    const segments = highlightEntities("ADA lives in london", "Ada", "London");
    expect(segments[0]).toEqual({ text: "ADA", kind: "head" });
    expect(segments.at(-1)).toEqual({ text: "london", kind: "tail" });
  });

  it("reassembles to the original sentence", () => {
    const sentence = "The Acme Corp. hired Bob; Bob praised Acme Corp.";
    const segments = highlightEntities(sentence, "Bob", "Acme Corp.");
    expect(segments.map((s) => s.text).join("")).toBe(sentence);
    expect(segments.filter((s) => s.kind === "head")).toHaveLength(2);
    expect(segments.filter((s) => s.kind === "tail")).toHaveLength(2);
  });

  it("handles sentences without any mention", () => {
    expect(highlightEntities("nothing here", "Ada", "London")).toEqual([
      { text: "nothing here", kind: "plain" },
    ]);
  });

  it("prefers the longer match when entities overlap", () => {
    const segments = highlightEntities("New York City", "New York City", "York");
    expect(segments).toEqual([{ text: "New York City", kind: "head" }]);
  });
});
