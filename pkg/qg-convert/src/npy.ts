/**
 * Minimal readers for .npy arrays and the .npz (ZIP) containers that hold
 * them.  Supports exactly what the public jet archives use: little-endian
 * numeric dtypes, C order, stored or deflate ZIP entries, < 4 GiB files.
 */
import { inflateRawSync, crc32 } from "node:zlib";

export class ArchiveFormatError extends Error {}

export interface NpyArray {
  shape: number[];
  /** Values widened to float64 regardless of on-disk dtype. */
  data: Float64Array;
}

const DTYPE_READERS: Record<
  string,
  (view: DataView, byteOffset: number) => number
> = {
  "<f8": (v, o) => v.getFloat64(o, true),
  "<f4": (v, o) => v.getFloat32(o, true),
  "<i8": (v, o) => Number(v.getBigInt64(o, true)),
  "<i4": (v, o) => v.getInt32(o, true),
  "<i2": (v, o) => v.getInt16(o, true),
  "|i1": (v, o) => v.getInt8(o),
  "|u1": (v, o) => v.getUint8(o),
};

const DTYPE_SIZES: Record<string, number> = {
  "<f8": 8,
  "<f4": 4,
  "<i8": 8,
  "<i4": 4,
  "<i2": 2,
  "|i1": 1,
  "|u1": 1,
};

/** Parse one .npy payload (v1.0 or v2.0 header). */
export function parseNpy(buf: Buffer): NpyArray {
  if (buf.length < 10 || buf[0] !== 0x93 || buf.toString("latin1", 1, 6) !== "NUMPY") {
    throw new ArchiveFormatError("not an .npy payload (bad magic)");
  }
  const major = buf[6]!;
  let headerLen: number;
  let headerStart: number;
  if (major === 1) {
    headerLen = buf.readUInt16LE(8);
    headerStart = 10;
  } else if (major === 2) {
    headerLen = buf.readUInt32LE(8);
    headerStart = 12;
  } else {
    throw new ArchiveFormatError(`unsupported .npy version ${major}`);
  }
  const header = buf.toString("latin1", headerStart, headerStart + headerLen);

  const descr = /'descr'\s*:\s*'([^']+)'/.exec(header)?.[1];
  const fortran = /'fortran_order'\s*:\s*(True|False)/.exec(header)?.[1];
  const shapeText = /'shape'\s*:\s*\(([^)]*)\)/.exec(header)?.[1];
  if (!descr || !fortran || shapeText === undefined) {
    throw new ArchiveFormatError(`unparseable .npy header: ${header.trim()}`);
  }
  if (fortran !== "False") {
    throw new ArchiveFormatError("fortran-ordered arrays are not supported");
  }
  const read = DTYPE_READERS[descr];
  const itemSize = DTYPE_SIZES[descr];
  if (!read || !itemSize) {
    throw new ArchiveFormatError(`unsupported dtype ${descr}`);
  }
  const shape = shapeText
    .split(",")
    .map((s) => s.trim())
    .filter((s) => s.length > 0)
    .map((s) => {
      const n = Number(s);
      if (!Number.isInteger(n) || n < 0) {
        throw new ArchiveFormatError(`bad shape entry ${s}`);
      }
      return n;
    });
  const count = shape.reduce((a, b) => a * b, 1);
  const dataStart = headerStart + headerLen;
  if (buf.length - dataStart < count * itemSize) {
    throw new ArchiveFormatError(
      `truncated .npy payload: need ${count * itemSize} bytes, have ${buf.length - dataStart}`,
    );
  }
  const view = new DataView(buf.buffer, buf.byteOffset + dataStart, count * itemSize);
  const data = new Float64Array(count);
  for (let i = 0; i < count; i++) {
    data[i] = read(view, i * itemSize);
  }
  return { shape, data };
}

interface ZipEntry {
  method: number;
  compressedSize: number;
  crc: number;
  localOffset: number;
}

const EOCD_SIG = 0x06054b50;
const CENTRAL_SIG = 0x02014b50;
const LOCAL_SIG = 0x04034b50;

function findEocd(buf: Buffer): number {
  const floor = Math.max(0, buf.length - 22 - 0xffff);
  for (let i = buf.length - 22; i >= floor; i--) {
    if (buf.readUInt32LE(i) === EOCD_SIG) {
      return i;
    }
  }
  throw new ArchiveFormatError("not a ZIP archive (no end-of-central-directory)");
}

/** List the members of a ZIP held fully in memory. */
export function readZipEntries(buf: Buffer): Map<string, ZipEntry> {
  const eocd = findEocd(buf);
  const count = buf.readUInt16LE(eocd + 10);
  let offset = buf.readUInt32LE(eocd + 16);
  if (offset === 0xffffffff || count === 0xffff) {
    throw new ArchiveFormatError("zip64 archives are not supported");
  }
  const entries = new Map<string, ZipEntry>();
  for (let k = 0; k < count; k++) {
    if (buf.readUInt32LE(offset) !== CENTRAL_SIG) {
      throw new ArchiveFormatError("corrupt central directory");
    }
    const method = buf.readUInt16LE(offset + 10);
    const crc = buf.readUInt32LE(offset + 16);
    const compressedSize = buf.readUInt32LE(offset + 20);
    const nameLen = buf.readUInt16LE(offset + 28);
    const extraLen = buf.readUInt16LE(offset + 30);
    const commentLen = buf.readUInt16LE(offset + 32);
    const localOffset = buf.readUInt32LE(offset + 42);
    const name = buf.toString("utf8", offset + 46, offset + 46 + nameLen);
    if (compressedSize === 0xffffffff || localOffset === 0xffffffff) {
      throw new ArchiveFormatError("zip64 archives are not supported");
    }
    entries.set(name, { method, compressedSize, crc, localOffset });
    offset += 46 + nameLen + extraLen + commentLen;
  }
  return entries;
}

/** Extract and checksum one member. */
export function extractZipEntry(buf: Buffer, entry: ZipEntry): Buffer {
  const at = entry.localOffset;
  if (buf.readUInt32LE(at) !== LOCAL_SIG) {
    throw new ArchiveFormatError("corrupt local file header");
  }
  const nameLen = buf.readUInt16LE(at + 26);
  const extraLen = buf.readUInt16LE(at + 28);
  const start = at + 30 + nameLen + extraLen;
  const raw = buf.subarray(start, start + entry.compressedSize);
  let out: Buffer;
  if (entry.method === 0) {
    out = Buffer.from(raw);
  } else if (entry.method === 8) {
    out = inflateRawSync(raw);
  } else {
    throw new ArchiveFormatError(`unsupported compression method ${entry.method}`);
  }
  if ((crc32(out) >>> 0) !== entry.crc) {
    throw new ArchiveFormatError("CRC mismatch while extracting archive member");
  }
  return out;
}

/** Read every array from an .npz held in memory, keyed without ".npy". */
export function parseNpz(buf: Buffer): Map<string, NpyArray> {
  const out = new Map<string, NpyArray>();
  for (const [name, entry] of readZipEntries(buf)) {
    const key = name.endsWith(".npy") ? name.slice(0, -4) : name;
    out.set(key, parseNpy(extractZipEntry(buf, entry)));
  }
  return out;
}
