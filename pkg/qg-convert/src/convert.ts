/**
 * Core conversion: padded per-jet arrays -> JSONL jet lines.
 *
 * The archives hold X with shape (n_jets, max_particles, 4) — rows of
 * (pt, rapidity, phi, pid), zero-padded — and y with one 0/1 label per jet.
 * Conversion drops padding rows, filters out jets with too few particles,
 * samples a fixed number with a seeded shuffle, and writes one compact JSON
 * object per line.  Values pass through verbatim: the shortest decimal that
 * round-trips to the same float64.
 */
import type { NpyArray } from "./npy";
import { ArchiveFormatError } from "./npy";
import { shuffle } from "./rng";

export class ConvertError extends Error {}

export interface ArchiveJet {
  label: number;
  /** (pt, rapidity, phi, pid) rows with the zero padding removed. */
  particles: number[][];
}

export interface ConvertOptions {
  nJets: number;
  minParticles: number;
  seed: number;
}

export interface SplitCount {
  name: string;
  size: number;
  quark: number;
  gluon: number;
}

export interface ConvertSummary {
  totalJets: number;
  qualifying: number;
  written: number;
  splits: SplitCount[];
}

/** Quark (label 1) counts per 10000/1250/1250 split reported in the
 * dataset's original description; printed for comparison only. */
export const REFERENCE_QUARK_COUNTS = [4982, 658, 583] as const;

/** Unpack one archive's (X, y) pair into jets with padding removed. */
export function jetsFromArrays(x: NpyArray, y: NpyArray): ArchiveJet[] {
  if (x.shape.length !== 3 || x.shape[2] !== 4) {
    throw new ArchiveFormatError(
      `expected X with shape (n, m, 4), got (${x.shape.join(", ")})`,
    );
  }
  if (y.shape.length !== 1 || y.shape[0] !== x.shape[0]) {
    throw new ArchiveFormatError(
      `expected y with shape (${x.shape[0]}), got (${y.shape.join(", ")})`,
    );
  }
  const [n, m] = x.shape as [number, number, number];
  const jets: ArchiveJet[] = [];
  for (let i = 0; i < n; i++) {
    const label = y.data[i]!;
    if (label !== 0 && label !== 1) {
      throw new ArchiveFormatError(`label must be 0 or 1, got ${label} at jet ${i}`);
    }
    const particles: number[][] = [];
    for (let j = 0; j < m; j++) {
      const base = (i * m + j) * 4;
      const pt = x.data[base]!;
      if (pt === 0) {
        continue; // zero-padded row
      }
      const row = [pt, x.data[base + 1]!, x.data[base + 2]!, x.data[base + 3]!];
      for (const v of row) {
        if (!Number.isFinite(v)) {
          throw new ArchiveFormatError(`non-finite value in jet ${i}`);
        }
      }
      if (!Number.isInteger(row[3])) {
        throw new ArchiveFormatError(
          `particle id column must hold whole numbers, got ${row[3]} at jet ${i}`,
        );
      }
      particles.push(row);
    }
    jets.push({ label, particles });
  }
  return jets;
}

/** Shortest round-trip decimal; keeps the sign of -0.0 (JSON.stringify
 * would drop it and decode to a different double). */
function numText(v: number): string {
  return Object.is(v, -0) ? "-0.0" : JSON.stringify(v);
}

/** One output line in the jet schema the training loader reads:
 * {"label":L,"particles":[[pt,eta,phi,pid],...]}.  Integral values
 * print without a decimal point, so pid always parses as an integer. */
export function serializeJet(jet: ArchiveJet): string {
  const rows = jet.particles
    .map((p) => "[" + p.map(numText).join(",") + "]")
    .join(",");
  return `{"label":${jet.label},"particles":[${rows}]}`;
}

function splitSizes(total: number): [number, number, number] {
  if (total === 12500) {
    return [10000, 1250, 1250];
  }
  const train = Math.floor(total * 0.8);
  const val = Math.floor(total * 0.1);
  return [train, val, total - train - val];
}

/** Filter, sample, and serialize; returns output lines plus the summary. */
export function convertJets(
  jets: ArchiveJet[],
  options: ConvertOptions,
): { lines: string[]; summary: ConvertSummary } {
  const { nJets, minParticles, seed } = options;
  if (nJets < 1 || minParticles < 1) {
    throw new ConvertError("n-jets and min-particles must be positive");
  }
  const qualifying: number[] = [];
  for (let i = 0; i < jets.length; i++) {
    if (jets[i]!.particles.length >= minParticles) {
      qualifying.push(i);
    }
  }
  if (qualifying.length < nJets) {
    throw new ConvertError(
      `need ${nJets} jets with >= ${minParticles} particles, ` +
        `archives provide only ${qualifying.length}`,
    );
  }
  const picked = shuffle(qualifying, seed).slice(0, nJets);
  const lines = picked.map((i) => serializeJet(jets[i]!));

  const [nTrain, nVal, nTest] = splitSizes(nJets);
  const bounds: Array<[string, number, number]> = [
    ["train", 0, nTrain],
    ["val", nTrain, nTrain + nVal],
    ["test", nTrain + nVal, nTrain + nVal + nTest],
  ];
  const splits = bounds.map(([name, lo, hi]) => {
    let quark = 0;
    for (let k = lo; k < hi; k++) {
      if (jets[picked[k]!]!.label === 1) {
        quark++;
      }
    }
    return { name, size: hi - lo, quark, gluon: hi - lo - quark };
  });
  return {
    lines,
    summary: {
      totalJets: jets.length,
      qualifying: qualifying.length,
      written: lines.length,
      splits,
    },
  };
}

export function formatSummary(summary: ConvertSummary): string {
  const parts = [
    `${summary.totalJets} jets read, ${summary.qualifying} qualifying, ` +
      `${summary.written} written`,
  ];
  summary.splits.forEach((s, i) => {
    const ref = REFERENCE_QUARK_COUNTS[i];
    parts.push(
      `${s.name}: ${s.size} jets, ${s.quark} quark / ${s.gluon} gluon` +
        (ref !== undefined ? ` (original description: ${ref} quark)` : ""),
    );
  });
  return parts.join("\n");
}
