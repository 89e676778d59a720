/** The export job: dataset in, one embedding TSV per run out.
 *
 * Emits one gloss row per declared sense and one usage row per usage, in
 * dataset order (glosses first), so ids and row order are reproducible
 * across reruns.  Encoding proceeds in batches; writing is a single
 * atomic step at the end (temp file + rename).
 */

import { readFileSync, renameSync, writeFileSync } from "node:fs";

import { parseDataset } from "./dataset.js";
import { loadEncoder } from "./encoder.js";
import { serializeEmbeddings, type EmbeddingRow } from "./writer.js";

export interface ExportJob {
  datasetPath: string;
  checkpoint: string;
  spaceName: string;
  outPath: string;
  batchSize: number;
  deviceHint?: string;
}

export interface ExportSummary {
  usageRows: number;
  glossRows: number;
  dim: number;
  outPath: string;
}

export class ExportError extends Error {}

interface WorkItem {
  kind: "usage" | "gloss";
  id: string;
  encode: () => number[] | Promise<number[]>;
}

export async function exportEmbeddings(job: ExportJob): Promise<ExportSummary> {
  if (!(Number.isInteger(job.batchSize) && job.batchSize >= 1)) {
    throw new ExportError(`batch size must be an integer >= 1, got ${job.batchSize}`);
  }

  let content: string;
  try {
    content = readFileSync(job.datasetPath, "utf8");
  } catch (e) {
    const reason = e instanceof Error ? e.message : String(e);
    throw new ExportError(`cannot read dataset: ${reason}`);
  }
  const dataset = parseDataset(content);
  const encoder = await loadEncoder(job.checkpoint, {
    deviceHint: job.deviceHint ?? "cpu",
  });

  if (encoder.requiresSpan) {
    const missing = dataset.usages.filter((u) => u.span === null);
    if (missing.length > 0) {
      const ids = missing.slice(0, 5).map((u) => u.usageId).join(", ");
      throw new ExportError(
        `${missing.length} usages have no target span but the encoder requires one ` +
          `(first: ${ids}); run the toolkit's positions command first`,
      );
    }
  }

  const items: WorkItem[] = [
    ...dataset.glosses.map((g): WorkItem => ({
      kind: "gloss",
      id: g.senseId,
      encode: () => encoder.encodeGloss(g.gloss),
    })),
    ...dataset.usages.map((u): WorkItem => ({
      kind: "usage",
      id: u.usageId,
      encode: () => encoder.encodeContext(u.text, u.span),
    })),
  ];

  const rows: EmbeddingRow[] = [];
  for (let offset = 0; offset < items.length; offset += job.batchSize) {
    const batch = items.slice(offset, offset + job.batchSize);
    const vectors = await Promise.all(batch.map((item) => item.encode()));
    batch.forEach((item, i) => {
      rows.push({ kind: item.kind, id: item.id, values: vectors[i] as number[] });
    });
  }

  const text = serializeEmbeddings(job.spaceName, encoder.dim, rows);
  const tmp = `${job.outPath}.tmp`;
  writeFileSync(tmp, text, "utf8");
  renameSync(tmp, job.outPath);

  return {
    usageRows: dataset.usages.length,
    glossRows: dataset.glosses.length,
    dim: encoder.dim,
    outPath: job.outPath,
  };
}
