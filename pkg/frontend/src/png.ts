/**
 * Minimal PNG codec: enough to write the response images and read back the
 * 8-bit RGB/RGBA frames the rest of the toolchain produces. Non-interlaced
 * only; all five scanline filters are handled on read, writes use filter 0.
 */

import * as zlib from "node:zlib";

import { BadImage } from "./errors.js";

export interface Rgb {
  width: number;
  height: number;
  /** H*W*3 bytes, row-major RGB. */
  pixels: Uint8Array;
}

const SIGNATURE = Buffer.from([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]);

const CRC_TABLE = (() => {
  const table = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) {
      c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    }
    table[n] = c >>> 0;
  }
  return table;
})();

function crc32(...parts: Buffer[]): number {
  let c = 0xffffffff;
  for (const part of parts) {
    for (let i = 0; i < part.length; i++) {
      c = CRC_TABLE[(c ^ part[i]) & 0xff] ^ (c >>> 8);
    }
  }
  return (c ^ 0xffffffff) >>> 0;
}

function chunk(type: string, data: Buffer): Buffer {
  const len = Buffer.alloc(4);
  len.writeUInt32BE(data.length, 0);
  const typeBuf = Buffer.from(type, "ascii");
  const crc = Buffer.alloc(4);
  crc.writeUInt32BE(crc32(typeBuf, data), 0);
  return Buffer.concat([len, typeBuf, data, crc]);
}

export function encodePng(image: Rgb): Buffer {
  const { width, height, pixels } = image;
  if (pixels.length !== width * height * 3) {
    throw new BadImage(`pixel buffer has ${pixels.length} bytes, expected ${width * height * 3}`);
  }
  const ihdr = Buffer.alloc(13);
  ihdr.writeUInt32BE(width, 0);
  ihdr.writeUInt32BE(height, 4);
  ihdr[8] = 8; // bit depth
  ihdr[9] = 2; // color type: truecolor RGB
  // compression 0, filter 0, interlace 0

  const stride = width * 3;
  const raw = Buffer.alloc(height * (stride + 1));
  for (let y = 0; y < height; y++) {
    raw[y * (stride + 1)] = 0; // filter type 0 per scanline
    raw.set(pixels.subarray(y * stride, (y + 1) * stride), y * (stride + 1) + 1);
  }
  const idat = zlib.deflateSync(raw);
  return Buffer.concat([
    SIGNATURE,
    chunk("IHDR", ihdr),
    chunk("IDAT", idat),
    chunk("IEND", Buffer.alloc(0)),
  ]);
}

function paeth(a: number, b: number, c: number): number {
  const p = a + b - c;
  const pa = Math.abs(p - a);
  const pb = Math.abs(p - b);
  const pc = Math.abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

export function decodePng(buf: Buffer, context = "png"): Rgb {
  if (buf.length < 8 || !buf.subarray(0, 8).equals(SIGNATURE)) {
    throw new BadImage(`${context}: not a PNG file`);
  }
  let offset = 8;
  let width = 0;
  let height = 0;
  let channels = 0;
  const idat: Buffer[] = [];
  while (offset + 8 <= buf.length) {
    const length = buf.readUInt32BE(offset);
    const type = buf.subarray(offset + 4, offset + 8).toString("ascii");
    const data = buf.subarray(offset + 8, offset + 8 + length);
    if (type === "IHDR") {
      width = data.readUInt32BE(0);
      height = data.readUInt32BE(4);
      const bitDepth = data[8];
      const colorType = data[9];
      const interlace = data[12];
      if (bitDepth !== 8) throw new BadImage(`${context}: only 8-bit PNGs supported`);
      if (colorType === 2) channels = 3;
      else if (colorType === 6) channels = 4;
      else throw new BadImage(`${context}: only RGB/RGBA PNGs supported (color type ${colorType})`);
      if (interlace !== 0) throw new BadImage(`${context}: interlaced PNGs not supported`);
    } else if (type === "IDAT") {
      idat.push(data);
    } else if (type === "IEND") {
      break;
    }
    offset += 12 + length;
  }
  if (width === 0 || height === 0 || idat.length === 0) {
    throw new BadImage(`${context}: missing IHDR or IDAT`);
  }
  const raw = zlib.inflateSync(Buffer.concat(idat));
  const stride = width * channels;
  if (raw.length !== height * (stride + 1)) {
    throw new BadImage(`${context}: decompressed size mismatch`);
  }

  const prior = new Uint8Array(stride);
  const line = new Uint8Array(stride);
  const pixels = new Uint8Array(width * height * 3);
  for (let y = 0; y < height; y++) {
    const filter = raw[y * (stride + 1)];
    const src = raw.subarray(y * (stride + 1) + 1, (y + 1) * (stride + 1));
    for (let x = 0; x < stride; x++) {
      const left = x >= channels ? line[x - channels] : 0;
      const up = prior[x];
      const upLeft = x >= channels ? prior[x - channels] : 0;
      let value: number;
      switch (filter) {
        case 0:
          value = src[x];
          break;
        case 1:
          value = src[x] + left;
          break;
        case 2:
          value = src[x] + up;
          break;
        case 3:
          value = src[x] + ((left + up) >> 1);
          break;
        case 4:
          value = src[x] + paeth(left, up, upLeft);
          break;
        default:
          throw new BadImage(`${context}: unknown scanline filter ${filter}`);
      }
      line[x] = value & 0xff;
    }
    for (let x = 0; x < width; x++) {
      pixels[(y * width + x) * 3 + 0] = line[x * channels + 0];
      pixels[(y * width + x) * 3 + 1] = line[x * channels + 1];
      pixels[(y * width + x) * 3 + 2] = line[x * channels + 2];
    }
    prior.set(line);
  }
  return { width, height, pixels };
}
