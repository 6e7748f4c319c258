/** Split sentence text into segments so entity mentions can be marked. */

export interface Segment {
  text: string;
  kind: "plain" | "head" | "tail";
}

interface Hit {
  start: number;
  end: number;
  kind: "head" | "tail";
}

/**
 * Find non-overlapping occurrences of the head and tail entities in a
 * sentence (case-insensitive; earlier and longer matches win) and return
 * the sentence as an ordered list of plain/head/tail segments.
 */
export function highlightEntities(sentence: string, head: string, tail: string): Segment[] {
  const hits: Hit[] = [];
  const lower = sentence.toLowerCase();
  const needles: Array<[string, "head" | "tail"]> = [
    [head.toLowerCase(), "head"],
    [tail.toLowerCase(), "tail"],
  ];
  for (const [needle, kind] of needles) {
    if (!needle) continue;
    let from = 0;
    while (true) {
      const at = lower.indexOf(needle, from);
      if (at < 0) break;
      hits.push({ start: at, end: at + needle.length, kind });
      from = at + needle.length;
    }
  }
  hits.sort((a, b) => a.start - b.start || b.end - a.end);

  const segments: Segment[] = [];
  let cursor = 0;
  for (const hit of hits) {
    if (hit.start < cursor) continue; // overlaps an earlier, longer match
    if (hit.start > cursor) {
      segments.push({ text: sentence.slice(cursor, hit.start), kind: "plain" });
    }
    segments.push({ text: sentence.slice(hit.start, hit.end), kind: hit.kind });
    cursor = hit.end;
  }
  if (cursor < sentence.length) {
    segments.push({ text: sentence.slice(cursor), kind: "plain" });
  }
  return segments;
}
