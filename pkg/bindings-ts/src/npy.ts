/**
 * NPY v1.0 array file codec.
 *
 * Supports the same subset as the Python side: little-endian float32/float64
 * payloads plus 1-byte booleans, C order only. The encoder reproduces the
 * Python writer byte-for-byte (same header text, space padding to 64-byte
 * data alignment, trailing newline), so files written here are
 * indistinguishable from files written by the CLI's own serializer.
 */

const MAGIC = Buffer.from([0x93, 0x4e, 0x55, 0x4d, 0x50, 0x59]); // \x93NUMPY

export type NpyDtype = "<f4" | "<f8" | "|b1";

export interface NpyArray {
  dtype: NpyDtype;
  shape: number[];
  /** Flat C-order payload; Uint8Array (0/1) for the boolean dtype. */
  data: Float32Array | Float64Array | Uint8Array;
}

export class NpyError extends Error {}
export class NpyBadMagic extends NpyError {}
export class NpyUnsupportedVersion extends NpyError {}
export class NpyUnsupportedDtype extends NpyError {}
export class NpyFortranOrder extends NpyError {}
export class NpyTruncated extends NpyError {}

const ITEM_SIZE: Record<NpyDtype, number> = { "<f4": 4, "<f8": 8, "|b1": 1 };

function elementCount(shape: number[]): number {
  return shape.reduce((a, b) => a * b, 1);
}

/** Python-style tuple repr: (), (3,), (3, 4). */
function tupleRepr(shape: number[]): string {
  if (shape.length === 0) return "()";
  if (shape.length === 1) return `(${shape[0]},)`;
  return `(${shape.join(", ")})`;
}

export function encodeNpy(array: NpyArray): Buffer {
  const { dtype, shape, data } = array;
  if (!(dtype in ITEM_SIZE)) throw new NpyUnsupportedDtype(`dtype ${dtype} not supported`);
  if (data.length !== elementCount(shape)) {
    throw new NpyError(`payload has ${data.length} elements, shape ${tupleRepr(shape)} needs ${elementCount(shape)}`);
  }
  let header = `{'descr': '${dtype}', 'fortran_order': False, 'shape': ${tupleRepr(shape)}, }`;
  const unpadded = 10 + header.length + 1;
  header = header + " ".repeat((64 - (unpadded % 64)) % 64) + "\n";

  const head = Buffer.alloc(10);
  MAGIC.copy(head, 0);
  head[6] = 1;
  head[7] = 0;
  head.writeUInt16LE(header.length, 8);
  const payload = Buffer.from(data.buffer, data.byteOffset, data.byteLength);
  return Buffer.concat([head, Buffer.from(header, "latin1"), payload]);
}

export function decodeNpy(raw: Buffer): NpyArray {
  if (raw.length < 10 || !raw.subarray(0, 6).equals(MAGIC)) {
    throw new NpyBadMagic("not an NPY file (bad magic bytes)");
  }
  if (raw[6] !== 1 || raw[7] !== 0) {
    throw new NpyUnsupportedVersion(`NPY version ${raw[6]}.${raw[7]} not supported (1.0 only)`);
  }
  const headerLen = raw.readUInt16LE(8);
  if (raw.length < 10 + headerLen) {
    throw new NpyTruncated(`header declares ${headerLen} bytes, file is shorter`);
  }
  const header = raw.subarray(10, 10 + headerLen).toString("latin1");
  const descrMatch = header.match(/'descr'\s*:\s*'([^']+)'/);
  const orderMatch = header.match(/'fortran_order'\s*:\s*(True|False)/);
  const shapeMatch = header.match(/'shape'\s*:\s*\(([^)]*)\)/);
  if (!descrMatch || !orderMatch || !shapeMatch) {
    throw new NpyBadMagic("malformed NPY header");
  }
  const descr = descrMatch[1];
  if (!(descr in ITEM_SIZE)) throw new NpyUnsupportedDtype(`dtype ${descr} not supported`);
  if (orderMatch[1] === "True") throw new NpyFortranOrder("fortran_order arrays are rejected");
  const dtype = descr as NpyDtype;
  const shape = shapeMatch[1]
    .split(",")
    .map((s) => s.trim())
    .filter((s) => s.length > 0)
    .map((s) => {
      const v = Number(s);
      if (!Number.isInteger(v) || v < 0) throw new NpyBadMagic(`bad shape entry ${s}`);
      return v;
    });

  const expected = elementCount(shape) * ITEM_SIZE[dtype];
  const payload = raw.subarray(10 + headerLen);
  if (payload.length !== expected) {
    throw new NpyTruncated(`shape ${tupleRepr(shape)} needs ${expected} payload bytes, found ${payload.length}`);
  }
  // copy so the typed array is aligned and detached from the file buffer
  const bytes = new Uint8Array(payload.length);
  bytes.set(payload);
  let data: NpyArray["data"];
  if (dtype === "<f4") data = new Float32Array(bytes.buffer);
  else if (dtype === "<f8") data = new Float64Array(bytes.buffer);
  else data = bytes;
  return { dtype, shape, data };
}

export function float64(shape: number[], data: ArrayLike<number>): NpyArray {
  return { dtype: "<f8", shape, data: Float64Array.from(data as number[]) };
}
