/**
 * Array container IO: the wire format shared with the segmentation engine.
 *
 * Layout: \x93NUMPY \x01\x00 | headerLen:uint16 LE | header | payload.
 * The header is an ASCII dict literal with keys descr / fortran_order /
 * shape, space-padded so the whole prelude is a multiple of 64 bytes and
 * terminated by a newline. Payload is raw little-endian C-order data.
 * Only float32, uint8 and int32 cross the wire; downcast before writing.
 */

import { BadMagic, HeaderParse, TruncatedData, UnsupportedDtype } from "./errors.js";

export type Dtype = "float32" | "uint8" | "int32";
export type TypedData = Float32Array | Uint8Array | Int32Array;

export interface NpyArray {
  dtype: Dtype;
  shape: number[];
  data: TypedData;
}

const MAGIC = Buffer.from([0x93, 0x4e, 0x55, 0x4d, 0x50, 0x59]); // \x93NUMPY
const VERSION = Buffer.from([0x01, 0x00]);
const HEADER_ALIGN = 64;

const DESCR: Record<Dtype, string> = {
  float32: "<f4",
  uint8: "|u1",
  int32: "<i4",
};
const ITEMSIZE: Record<Dtype, number> = { float32: 4, uint8: 1, int32: 4 };

function dtypeOfDescr(descr: string): Dtype {
  const entry = (Object.entries(DESCR) as [Dtype, string][]).find(([, d]) => d === descr);
  if (!entry) {
    throw new UnsupportedDtype(`dtype code ${JSON.stringify(descr)} not supported`);
  }
  return entry[0];
}

function shapeRepr(shape: number[]): string {
  if (shape.length === 1) return `(${shape[0]},)`;
  return `(${shape.join(", ")})`;
}

export function elementCount(shape: number[]): number {
  return shape.reduce((a, b) => a * b, 1);
}

/** Encode an array to the container bytes, stable for a given input. */
export function encodeNpy(arr: NpyArray): Buffer {
  if (!(arr.dtype in DESCR)) {
    throw new UnsupportedDtype(`dtype ${arr.dtype} not supported (float32/uint8/int32 only)`);
  }
  if (arr.shape.length === 0) {
    throw new UnsupportedDtype("scalar (rank-0) arrays not supported");
  }
  const count = elementCount(arr.shape);
  if (count !== arr.data.length) {
    throw new HeaderParse(`shape ${shapeRepr(arr.shape)} needs ${count} elements, got ${arr.data.length}`);
  }
  const head = `{'descr': '${DESCR[arr.dtype]}', 'fortran_order': False, 'shape': ${shapeRepr(arr.shape)}, }`;
  const unpadded = MAGIC.length + VERSION.length + 2 + head.length + 1;
  const pad = (HEADER_ALIGN - (unpadded % HEADER_ALIGN)) % HEADER_ALIGN;
  const header = Buffer.from(head + " ".repeat(pad) + "\n", "ascii");

  const lenBuf = Buffer.alloc(2);
  lenBuf.writeUInt16LE(header.length, 0);

  const payload = Buffer.alloc(count * ITEMSIZE[arr.dtype]);
  const view = new DataView(payload.buffer, payload.byteOffset, payload.byteLength);
  if (arr.dtype === "float32") {
    const data = arr.data as Float32Array;
    for (let i = 0; i < count; i++) view.setFloat32(i * 4, data[i], true);
  } else if (arr.dtype === "int32") {
    const data = arr.data as Int32Array;
    for (let i = 0; i < count; i++) view.setInt32(i * 4, data[i], true);
  } else {
    payload.set(arr.data as Uint8Array);
  }
  return Buffer.concat([MAGIC, VERSION, lenBuf, header, payload]);
}

interface ParsedHeader {
  dtype: Dtype;
  shape: number[];
  payloadOffset: number;
}

function parseHeader(buf: Buffer, context: string): ParsedHeader {
  if (buf.length < MAGIC.length || !buf.subarray(0, MAGIC.length).equals(MAGIC)) {
    throw new BadMagic(`${context}: not an array container (bad magic bytes)`);
  }
  if (buf.length < 10) {
    throw new HeaderParse(`${context}: file too short for a container header`);
  }
  if (!buf.subarray(6, 8).equals(VERSION)) {
    throw new HeaderParse(`${context}: unsupported container version`);
  }
  const headerLen = buf.readUInt16LE(8);
  if (buf.length < 10 + headerLen) {
    throw new HeaderParse(`${context}: header truncated`);
  }
  const text = buf.subarray(10, 10 + headerLen).toString("ascii");
  const match = text.match(
    /^\{'descr':\s*'([^']+)',\s*'fortran_order':\s*(True|False),\s*'shape':\s*\(([^)]*)\),\s*\}\s*\n?\s*$/
  );
  if (!match) {
    throw new HeaderParse(`${context}: malformed header dict: ${JSON.stringify(text.trim())}`);
  }
  if (match[2] !== "False") {
    throw new HeaderParse(`${context}: fortran_order must be False`);
  }
  const dtype = dtypeOfDescr(match[1]);
  const shape = match[3]
    .split(",")
    .map((s) => s.trim())
    .filter((s) => s.length > 0)
    .map((s) => {
      const n = Number(s);
      if (!Number.isInteger(n) || n < 0) throw new HeaderParse(`${context}: bad shape entry ${s}`);
      return n;
    });
  return { dtype, shape, payloadOffset: 10 + headerLen };
}

/** Decode container bytes; strict about truncation and trailing data. */
export function decodeNpy(buf: Buffer, context = "buffer"): NpyArray {
  const { dtype, shape, payloadOffset } = parseHeader(buf, context);
  const count = elementCount(shape);
  const expected = count * ITEMSIZE[dtype];
  const payload = buf.subarray(payloadOffset);
  if (payload.length < expected) {
    throw new TruncatedData(`${context}: payload has ${payload.length} bytes, shape requires ${expected}`);
  }
  if (payload.length > expected) {
    throw new HeaderParse(`${context}: ${payload.length - expected} trailing bytes after payload`);
  }
  const view = new DataView(payload.buffer, payload.byteOffset, payload.byteLength);
  if (dtype === "float32") {
    const data = new Float32Array(count);
    for (let i = 0; i < count; i++) data[i] = view.getFloat32(i * 4, true);
    return { dtype, shape, data };
  }
  if (dtype === "int32") {
    const data = new Int32Array(count);
    for (let i = 0; i < count; i++) data[i] = view.getInt32(i * 4, true);
    return { dtype, shape, data };
  }
  return { dtype, shape, data: Uint8Array.from(payload) };
}

/** Header-only probe: (dtype, shape) without touching the payload. */
export function readHeader(buf: Buffer, context = "buffer"): { dtype: Dtype; shape: number[] } {
  const { dtype, shape } = parseHeader(buf, context);
  return { dtype, shape };
}
