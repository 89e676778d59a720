/** Dataset TSV parsing, reduced to what the exporter needs.
 *
 * The file has a header row naming eight columns.  Rows with a usage_id
 * describe one usage (text plus an optional target span); rows with an
 * empty usage_id declare a sense id and its gloss.  The exporter embeds
 * every usage and every declared gloss.
 */

import { unescapeField } from "./tsv.js";

export const COLUMNS = [
  "word",
  "usage_id",
  "period",
  "text",
  "start",
  "end",
  "sense_id",
  "gloss",
] as const;

export type Span = readonly [number, number];

export interface UsageItem {
  usageId: string;
  word: string;
  period: "old" | "new";
  text: string;
  span: Span | null;
}

export interface GlossItem {
  senseId: string;
  word: string;
  gloss: string;
}

export interface ParsedDataset {
  usages: UsageItem[];
  glosses: GlossItem[];
}

export class DatasetFormatError extends Error {}

function fail(lineno: number, message: string): never {
  throw new DatasetFormatError(`line ${lineno}: ${message}`);
}

function quoted(value: string): string {
  return JSON.stringify(value);
}

function parseSpan(
  lineno: number,
  start: string,
  end: string,
  text: string,
): Span | null {
  if (start === "" && end === "") {
    return null;
  }
  if (start === "" || end === "") {
    fail(lineno, "start and end must be both present or both empty");
  }
  if (!/^\d+$/.test(start) || !/^\d+$/.test(end)) {
    fail(
      lineno,
      `span bounds must be non-negative integers, got ${quoted(start)}..${quoted(end)}`,
    );
  }
  const s = Number(start);
  const e = Number(end);
  if (!(s < e) || e > text.length) {
    fail(lineno, `span ${s}..${e} out of bounds for text of length ${text.length}`);
  }
  return [s, e];
}

export function parseDataset(content: string): ParsedDataset {
  const lines = content.split(/\r?\n/);
  if (lines.length > 0 && lines[lines.length - 1] === "") {
    lines.pop();
  }
  if (lines.length === 0) {
    fail(1, "empty file, expected a header row");
  }
  if (lines[0] !== COLUMNS.join("\t")) {
    fail(1, `header must be ${COLUMNS.join(", ")}`);
  }

  const usages: UsageItem[] = [];
  const glosses: GlossItem[] = [];
  const seenUsages = new Set<string>();
  const seenSenses = new Set<string>();

  for (let i = 1; i < lines.length; i++) {
    const lineno = i + 1;
    const raw = lines[i] ?? "";
    if (raw === "") {
      continue;
    }
    const cells = raw.split("\t").map(unescapeField);
    if (cells.length !== COLUMNS.length) {
      fail(lineno, `expected ${COLUMNS.length} columns, got ${cells.length}`);
    }
    const cell = (index: number): string => cells[index] ?? "";
    const word = cell(0);
    const usageId = cell(1);
    const period = cell(2);
    const text = cell(3);
    if (word === "") {
      fail(lineno, "word must not be empty");
    }

    if (usageId === "") {
      const senseId = cell(6);
      const gloss = cell(7);
      if (senseId === "" || gloss === "") {
        fail(lineno, "sense rows need both sense_id and gloss");
      }
      if (seenSenses.has(senseId)) {
        fail(lineno, `duplicate sense ${quoted(senseId)}`);
      }
      seenSenses.add(senseId);
      glosses.push({ senseId, word, gloss });
      continue;
    }

    if (period !== "old" && period !== "new") {
      fail(lineno, `period must be old or new, got ${quoted(period)}`);
    }
    if (seenUsages.has(usageId)) {
      fail(lineno, `duplicate usage ${quoted(usageId)}`);
    }
    seenUsages.add(usageId);
    usages.push({
      usageId,
      word,
      period,
      text,
      span: parseSpan(lineno, cell(4), cell(5), text),
    });
  }
  return { usages, glosses };
}
