/** Command line entry: `embed-export export --dataset ... --out ...`. */

import { parseArgs } from "node:util";
import { pathToFileURL } from "node:url";

import { exportEmbeddings } from "./exporter.js";

const USAGE =
  "usage: embed-export export --dataset FILE --checkpoint SPEC --space NAME " +
  "--out FILE [--batch-size N]";

export async function main(argv: string[]): Promise<number> {
  if (argv[0] !== "export") {
    process.stderr.write(`${USAGE}\n`);
    return 1;
  }

  let parsed;
  try {
    parsed = parseArgs({
      args: argv.slice(1),
      options: {
        dataset: { type: "string" },
        checkpoint: { type: "string" },
        space: { type: "string" },
        out: { type: "string" },
        "batch-size": { type: "string", default: "64" },
      },
      allowPositionals: false,
    });
  } catch (e) {
    const reason = e instanceof Error ? e.message : String(e);
    process.stderr.write(`error: ${reason}\n${USAGE}\n`);
    return 1;
  }

  const values = parsed.values;
  const missing = ["dataset", "checkpoint", "space", "out"].filter(
    (name) => values[name as "dataset"] === undefined,
  );
  if (missing.length > 0) {
    process.stderr.write(`error: missing --${missing.join(", --")}\n${USAGE}\n`);
    return 1;
  }
  const batchSize = Number(values["batch-size"]);
  if (!(Number.isInteger(batchSize) && batchSize >= 1)) {
    process.stderr.write(
      `error: --batch-size must be an integer >= 1, got ${values["batch-size"]}\n`,
    );
    return 1;
  }

  try {
    const summary = await exportEmbeddings({
      datasetPath: values.dataset as string,
      checkpoint: values.checkpoint as string,
      spaceName: values.space as string,
      outPath: values.out as string,
      batchSize,
    });
    process.stdout.write(
      `wrote ${summary.usageRows} usage rows and ${summary.glossRows} gloss rows ` +
        `(dim ${summary.dim}) to ${summary.outPath}\n`,
    );
    return 0;
  } catch (e) {
    const reason = e instanceof Error ? e.message : String(e);
    process.stderr.write(`error: ${reason}\n`);
    return 1;
  }
}

const invokedDirectly =
  typeof process.argv[1] === "string" &&
  import.meta.url === pathToFileURL(process.argv[1]).href;

if (invokedDirectly) {
  main(process.argv.slice(2)).then((rc) => {
    process.exitCode = rc;
  });
}
