/**
 * DIAW weight bundle writer/reader.
 *
 * Layout (all integers little-endian):
 *   magic "DIAW" | version u32 | tensorCount u32
 *   per tensor: nameLen u16 | name utf-8 | ndim u8 | dims u32[ndim] | f32 payload
 *
 * Conv weights are stored [outC, inC, kH, kW] row-major under
 * "<name>.weight", biases [outC] under "<name>.bias".
 */

export const DIAW_MAGIC = 'DIAW';
export const DIAW_VERSION = 1;

export interface TensorEntry {
  name: string;
  dims: number[];
  /** row-major f32 payload; length must equal the product of dims */
  data: Float32Array;
}

export class DiawError extends Error {}

function payloadLength(dims: number[]): number {
  return dims.reduce((acc, d) => acc * d, 1);
}

export function writeDiaw(tensors: TensorEntry[]): Buffer {
  let size = 12;
  for (const t of tensors) {
    if (t.data.length !== payloadLength(t.dims)) {
      throw new DiawError(
        `tensor '${t.name}': payload ${t.data.length} does not match dims [${t.dims}]`
      );
    }
    size += 2 + Buffer.byteLength(t.name, 'utf-8') + 1 + 4 * t.dims.length + 4 * t.data.length;
  }

  const buf = Buffer.alloc(size);
  let off = 0;
  off += buf.write(DIAW_MAGIC, off, 'ascii');
  off = buf.writeUInt32LE(DIAW_VERSION, off);
  off = buf.writeUInt32LE(tensors.length, off);
  for (const t of tensors) {
    const nameBytes = Buffer.from(t.name, 'utf-8');
    off = buf.writeUInt16LE(nameBytes.length, off);
    off += nameBytes.copy(buf, off);
    off = buf.writeUInt8(t.dims.length, off);
    for (const d of t.dims) {
      off = buf.writeUInt32LE(d, off);
    }
    for (let i = 0; i < t.data.length; i++) {
      off = buf.writeFloatLE(t.data[i], off);
    }
  }
  return buf;
}

export function parseDiaw(buf: Buffer): TensorEntry[] {
  if (buf.length < 12) {
    throw new DiawError('truncated before header');
  }
  if (buf.toString('ascii', 0, 4) !== DIAW_MAGIC) {
    throw new DiawError(`bad magic '${buf.toString('ascii', 0, 4)}'`);
  }
  const version = buf.readUInt32LE(4);
  if (version !== DIAW_VERSION) {
    throw new DiawError(`unsupported version ${version}`);
  }
  const count = buf.readUInt32LE(8);
  const tensors: TensorEntry[] = [];
  let off = 12;
  for (let i = 0; i < count; i++) {
    if (off + 2 > buf.length) {
      throw new DiawError(`truncated at tensor ${i}: missing name length`);
    }
    const nameLen = buf.readUInt16LE(off);
    off += 2;
    if (off + nameLen + 1 > buf.length) {
      throw new DiawError(`truncated at tensor ${i}: missing name or ndim`);
    }
    const name = buf.toString('utf-8', off, off + nameLen);
    off += nameLen;
    const ndim = buf.readUInt8(off);
    off += 1;
    if (off + 4 * ndim > buf.length) {
      throw new DiawError(`tensor '${name}': missing dims`);
    }
    const dims: number[] = [];
    for (let d = 0; d < ndim; d++) {
      dims.push(buf.readUInt32LE(off));
      off += 4;
    }
    const n = payloadLength(dims);
    if (off + 4 * n > buf.length) {
      throw new DiawError(`tensor '${name}': payload truncated`);
    }
    const data = new Float32Array(n);
    for (let j = 0; j < n; j++) {
      data[j] = buf.readFloatLE(off);
      off += 4;
    }
    tensors.push({ name, dims, data });
  }
  if (off !== buf.length) {
    throw new DiawError(`trailing data after last tensor (${buf.length - off} bytes)`);
  }
  return tensors;
}
