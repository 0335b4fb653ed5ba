/**
 * Reader/writer for the `.chpt` tensor file format: magic "CHPT",
 * uint16 version (1), uint8 dtype code (0 = float32 LE), uint8 rank,
 * rank x uint32 dims, then the row-major float32 payload.
 */

export interface Tensor {
  data: Float32Array;
  dims: number[];
}

const MAGIC = 0x43485054; // "CHPT" big-endian read of the 4 magic bytes

export function encodeTensor(tensor: Tensor): Buffer {
  const { data, dims } = tensor;
  const count = dims.reduce((a, b) => a * b, 1);
  if (count !== data.length) {
    throw new Error(`dims [${dims}] imply ${count} values, buffer has ${data.length}`);
  }
  const header = Buffer.alloc(8 + 4 * dims.length);
  header.write("CHPT", 0, "ascii");
  header.writeUInt16LE(1, 4);
  header.writeUInt8(0, 6);
  header.writeUInt8(dims.length, 7);
  dims.forEach((d, i) => header.writeUInt32LE(d, 8 + 4 * i));
  const payload = Buffer.alloc(data.length * 4);
  for (let i = 0; i < data.length; i++) {
    payload.writeFloatLE(data[i], i * 4);
  }
  return Buffer.concat([header, payload]);
}

export function decodeTensor(blob: Buffer): Tensor {
  if (blob.length < 8 || blob.readUInt32BE(0) !== MAGIC) {
    throw new Error("not a CHPT tensor file");
  }
  const version = blob.readUInt16LE(4);
  if (version !== 1) {
    throw new Error(`unsupported tensor file version ${version}`);
  }
  if (blob.readUInt8(6) !== 0) {
    throw new Error(`unsupported dtype code ${blob.readUInt8(6)}`);
  }
  const rank = blob.readUInt8(7);
  const dims: number[] = [];
  for (let i = 0; i < rank; i++) {
    dims.push(blob.readUInt32LE(8 + 4 * i));
  }
  const count = dims.reduce((a, b) => a * b, 1);
  const start = 8 + 4 * rank;
  if (blob.length - start !== count * 4) {
    throw new Error(`payload is ${blob.length - start} bytes, expected ${count * 4}`);
  }
  const data = new Float32Array(count);
  for (let i = 0; i < count; i++) {
    data[i] = blob.readFloatLE(start + i * 4);
  }
  return { data, dims };
}
