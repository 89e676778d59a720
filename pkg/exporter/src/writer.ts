/** Embedding TSV serialization and a standalone format checker.
 *
 * Layout: a `#space NAME dim D` header, then one row per vector:
 * `usage|gloss <TAB> id <TAB> space-separated floats`.  The checker
 * enforces everything the toolkit's loader enforces so exported files can
 * be validated without the toolkit installed.
 */

export interface EmbeddingRow {
  kind: "usage" | "gloss";
  id: string;
  values: readonly number[];
}

export interface CheckedFile {
  spaceName: string;
  dim: number;
  usageRows: number;
  glossRows: number;
}

export class EmbeddingFormatError extends Error {}

function fail(message: string): never {
  throw new EmbeddingFormatError(message);
}

function checkSpaceName(spaceName: string): void {
  if (spaceName === "" || /\s/.test(spaceName)) {
    fail(
      `space name ${JSON.stringify(spaceName)} must be one non-empty whitespace-free token`,
    );
  }
}

export function serializeEmbeddings(
  spaceName: string,
  dim: number,
  rows: readonly EmbeddingRow[],
): string {
  checkSpaceName(spaceName);
  if (!(Number.isInteger(dim) && dim >= 1)) {
    fail(`dim must be a positive integer, got ${dim}`);
  }
  const lines = [`#space ${spaceName} dim ${dim}`];
  const seen = new Set<string>();
  for (const row of rows) {
    if (row.id === "" || /\s/.test(row.id)) {
      fail(`row id ${JSON.stringify(row.id)} must be non-empty without whitespace`);
    }
    const key = `${row.kind}\t${row.id}`;
    if (seen.has(key)) {
      fail(`duplicate ${row.kind} row ${JSON.stringify(row.id)}`);
    }
    seen.add(key);
    if (row.values.length !== dim) {
      fail(
        `row ${JSON.stringify(row.id)} has ${row.values.length} values, expected ${dim}`,
      );
    }
    for (const v of row.values) {
      if (!Number.isFinite(v)) {
        fail(`row ${JSON.stringify(row.id)} contains a non-finite value`);
      }
    }
    lines.push(`${row.kind}\t${row.id}\t${row.values.map(String).join(" ")}`);
  }
  return lines.join("\n") + "\n";
}

export function checkEmbeddingText(content: string): CheckedFile {
  const lines = content.split("\n");
  if (lines.length > 0 && lines[lines.length - 1] === "") {
    lines.pop();
  }
  const header = lines[0] ?? "";
  const match = /^#space (\S+) dim (\d+)$/.exec(header);
  if (!match) {
    fail(`bad header ${JSON.stringify(header)}, expected "#space NAME dim D"`);
  }
  const spaceName = match[1] as string;
  const dim = Number(match[2]);
  if (dim < 1) {
    fail(`dim must be >= 1, got ${dim}`);
  }

  let usageRows = 0;
  let glossRows = 0;
  const seen = new Set<string>();
  for (let i = 1; i < lines.length; i++) {
    const lineno = i + 1;
    const parts = (lines[i] as string).split("\t");
    if (parts.length !== 3) {
      fail(`line ${lineno}: expected 3 tab-separated fields, got ${parts.length}`);
    }
    const [kind, id, vector] = parts as [string, string, string];
    if (kind !== "usage" && kind !== "gloss") {
      fail(`line ${lineno}: kind must be usage or gloss, got ${JSON.stringify(kind)}`);
    }
    if (id === "") {
      fail(`line ${lineno}: empty id`);
    }
    const key = `${kind}\t${id}`;
    if (seen.has(key)) {
      fail(`line ${lineno}: duplicate ${kind} row ${JSON.stringify(id)}`);
    }
    seen.add(key);
    const values = vector.split(" ");
    if (values.length !== dim) {
      fail(`line ${lineno}: ${values.length} values, expected ${dim}`);
    }
    for (const value of values) {
      if (value === "" || !Number.isFinite(Number(value))) {
        fail(`line ${lineno}: bad float ${JSON.stringify(value)}`);
      }
    }
    if (kind === "usage") {
      usageRows++;
    } else {
      glossRows++;
    }
  }
  return { spaceName, dim, usageRows, glossRows };
}
