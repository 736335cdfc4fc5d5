/**
 * Builds synthetic .npz archives in memory so the converter can be tested
 * without the real (non-redistributable) datasets.  Writes v1.0 .npy
 * payloads into a stored-entry ZIP, the same container numpy produces.
 */
import { deflateRawSync, crc32 } from "node:zlib";

export function npyBytes(shape: number[], values: Float64Array): Buffer {
  const dict = `{'descr': '<f8', 'fortran_order': False, 'shape': (${shape.join(", ")}${
    shape.length === 1 ? "," : ""
  }), }`;
  // header (magic..dict+newline) padded with spaces to a multiple of 64
  const base = 10 + dict.length + 1;
  const padded = Math.ceil(base / 64) * 64;
  const header = Buffer.alloc(padded);
  header[0] = 0x93;
  header.write("NUMPY", 1, "latin1");
  header[6] = 1;
  header[7] = 0;
  header.writeUInt16LE(padded - 10, 8);
  header.write(dict, 10, "latin1");
  header.fill(0x20, 10 + dict.length, padded - 1);
  header[padded - 1] = 0x0a;
  const body = Buffer.from(values.buffer, values.byteOffset, values.byteLength);
  return Buffer.concat([header, Buffer.from(body)]);
}

interface Member {
  name: string;
  payload: Buffer;
  deflate?: boolean;
}

export function zipBytes(members: Member[]): Buffer {
  const chunks: Buffer[] = [];
  const central: Buffer[] = [];
  let offset = 0;
  for (const m of members) {
    const name = Buffer.from(m.name, "utf8");
    const data = m.deflate ? deflateRawSync(m.payload) : m.payload;
    const method = m.deflate ? 8 : 0;
    const crc = crc32(m.payload) >>> 0;

    const local = Buffer.alloc(30);
    local.writeUInt32LE(0x04034b50, 0);
    local.writeUInt16LE(20, 4); // version needed
    local.writeUInt16LE(method, 8);
    local.writeUInt32LE(crc, 14);
    local.writeUInt32LE(data.length, 18);
    local.writeUInt32LE(m.payload.length, 22);
    local.writeUInt16LE(name.length, 26);
    chunks.push(local, name, data);

    const cent = Buffer.alloc(46);
    cent.writeUInt32LE(0x02014b50, 0);
    cent.writeUInt16LE(20, 6); // version needed
    cent.writeUInt16LE(method, 10);
    cent.writeUInt32LE(crc, 16);
    cent.writeUInt32LE(data.length, 20);
    cent.writeUInt32LE(m.payload.length, 24);
    cent.writeUInt16LE(name.length, 28);
    cent.writeUInt32LE(offset, 42);
    central.push(cent, name);

    offset += local.length + name.length + data.length;
  }
  const centralStart = offset;
  const centralBytes = Buffer.concat(central);
  const eocd = Buffer.alloc(22);
  eocd.writeUInt32LE(0x06054b50, 0);
  eocd.writeUInt16LE(members.length, 8);
  eocd.writeUInt16LE(members.length, 10);
  eocd.writeUInt32LE(centralBytes.length, 12);
  eocd.writeUInt32LE(centralStart, 16);
  return Buffer.concat([...chunks, centralBytes, eocd]);
}

/** splitmix64-ish float generator for reproducible fixture contents. */
function lcg(seed: number): () => number {
  let s = seed >>> 0;
  return () => {
    s = (Math.imul(s, 1664525) + 1013904223) >>> 0;
    return s / 4294967296;
  };
}

export interface FixtureOptions {
  nJets: number;
  maxParticles: number;
  seed?: number;
  deflate?: boolean;
  /** Sprinkle jets with fewer than this many particles to test filtering. */
  minParticles?: number;
}

/** A padded (X, y) archive in the public datasets' layout. */
export function makeArchive(options: FixtureOptions): Buffer {
  const { nJets, maxParticles, seed = 1, deflate = false } = options;
  const next = lcg(seed);
  const x = new Float64Array(nJets * maxParticles * 4);
  const y = new Float64Array(nJets);
  const pids = [22, 211, -211, 321, -321, 2212, -2212, 130, 11, -11, 13, -13];
  for (let i = 0; i < nJets; i++) {
    y[i] = next() < 0.5 ? 0 : 1;
    // between 5 and maxParticles real rows, the rest zero padding
    const n = 5 + Math.floor(next() * (maxParticles - 5 + 1));
    for (let j = 0; j < n; j++) {
      const base = (i * maxParticles + j) * 4;
      x[base] = 0.1 + 100 * next(); // pt > 0
      x[base + 1] = 4 * next() - 2; // rapidity
      x[base + 2] = 2 * Math.PI * next() - Math.PI; // phi
      x[base + 3] = pids[Math.floor(next() * pids.length)]!;
    }
  }
  return zipBytes([
    { name: "X.npy", payload: npyBytes([nJets, maxParticles, 4], x), deflate },
    { name: "y.npy", payload: npyBytes([nJets], y), deflate },
  ]);
}
