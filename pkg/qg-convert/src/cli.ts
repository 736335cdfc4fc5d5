#!/usr/bin/env node
/**
 * qg-convert: turn public quark/gluon .npz jet archives into JSONL.
 *
 *   qg-convert --out jets.jsonl [--n-jets 12500] [--min-particles 10]
 *              [--seed 0] archive1.npz [archive2.npz ...]
 *
 * Exit codes: 0 success, 1 usage error, 2 unreadable or malformed input
 * (missing file, not an archive, schema drift, too few qualifying jets).
 */
import { readFileSync, writeFileSync } from "node:fs";
import { parseArgs } from "node:util";

import { ArchiveFormatError, parseNpz } from "./npy";
import {
  ArchiveJet,
  ConvertError,
  convertJets,
  formatSummary,
  jetsFromArrays,
} from "./convert";

const USAGE =
  "usage: qg-convert --out <path> [--n-jets N] [--min-particles N] " +
  "[--seed N] <archive.npz> [...]";

function intFlag(raw: string | undefined, fallback: number, name: string): number {
  if (raw === undefined) {
    return fallback;
  }
  const v = Number(raw);
  if (!Number.isInteger(v)) {
    throw new RangeError(`--${name} must be an integer, got ${raw}`);
  }
  return v;
}

export function main(argv: string[]): number {
  let parsed;
  try {
    parsed = parseArgs({
      args: argv,
      options: {
        out: { type: "string" },
        "n-jets": { type: "string" },
        "min-particles": { type: "string" },
        seed: { type: "string" },
        help: { type: "boolean" },
      },
      allowPositionals: true,
    });
  } catch (err) {
    console.error(`${USAGE}\nerror: ${(err as Error).message}`);
    return 1;
  }
  if (parsed.values.help) {
    console.log(USAGE);
    return 0;
  }
  const archives = parsed.positionals;
  const out = parsed.values.out;
  if (!out || archives.length === 0) {
    console.error(`${USAGE}\nerror: --out and at least one archive are required`);
    return 1;
  }
  let nJets: number, minParticles: number, seed: number;
  try {
    nJets = intFlag(parsed.values["n-jets"], 12500, "n-jets");
    minParticles = intFlag(parsed.values["min-particles"], 10, "min-particles");
    seed = intFlag(parsed.values.seed, 0, "seed");
  } catch (err) {
    console.error(`${USAGE}\nerror: ${(err as Error).message}`);
    return 1;
  }

  try {
    const jets: ArchiveJet[] = [];
    for (const path of archives) {
      const arrays = parseNpz(readFileSync(path));
      const x = arrays.get("X");
      const y = arrays.get("y");
      if (!x || !y) {
        throw new ArchiveFormatError(
          `${path}: expected arrays "X" and "y", found ` +
            `[${[...arrays.keys()].join(", ")}]`,
        );
      }
      jets.push(...jetsFromArrays(x, y));
    }
    const { lines, summary } = convertJets(jets, { nJets, minParticles, seed });
    writeFileSync(out, lines.join("\n") + "\n");
    console.log(formatSummary(summary));
    console.log(`wrote ${out}`);
    return 0;
  } catch (err) {
    if (
      err instanceof ArchiveFormatError ||
      err instanceof ConvertError ||
      (err as NodeJS.ErrnoException).code === "ENOENT"
    ) {
      console.error(`error: ${(err as Error).message}`);
      return 2;
    }
    throw err;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
