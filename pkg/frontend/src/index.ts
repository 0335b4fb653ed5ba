/**
 * Flat-buffer bindings for the centerhead toolkit.
 *
 * Six operations are exposed over plain numeric buffers plus shape
 * descriptors; every call marshals its inputs into the toolkit's file
 * formats (annotation JSON, CHPT tensors), invokes the native CLI in a
 * temp directory and parses the results back.  No object graphs cross
 * the boundary.
 *
 * Box buffers are Float64Array-compatible with stride 8:
 *   [cx, cy, w, h, hx, hy, classId, score] per box.
 * Evaluation buffers prepend an image index (stride 9):
 *   [imageIndex, cx, cy, w, h, hx, hy, classId, score].
 *
 * Constraints of the wire format apply: centers must be non-negative
 * and finite (they must sit inside the synthesized image bounds), class
 * ids integral and in range.  Violations throw before any native call.
 */

import { readFileSync, writeFileSync, mkdirSync } from "node:fs";
import * as path from "node:path";

import { decodeTensor, encodeTensor, Tensor } from "./chpt";
import { runCli, withTempDir } from "./runner";

export { Tensor } from "./chpt";

export const BOX_STRIDE = 8;
export const EVAL_STRIDE = 9;

export interface TargetMaps {
  center: Tensor;
  centerOffset: Tensor;
  size: Tensor;
  headReg: Tensor;
  head: Tensor;
  headOffset: Tensor;
}

export interface EncodeOptions {
  imageW: number;
  imageH: number;
  numClasses: number;
  stride?: number;
  alpha?: number;
  minOverlap?: number;
}

export interface DecodeOptions {
  topK?: number;
  headScoreThreshold?: number;
  scoreFloor?: number;
  stride?: number;
}

export interface EvaluateOptions {
  numClasses: number;
  thresholds?: number[];
  bdaIou?: number;
}

export interface EvaluationReport {
  mapAt: Record<string, number>;
  bda: number;
  perClassAp: Record<string, Record<string, number | null>>;
}

interface Box {
  cx: number;
  cy: number;
  w: number;
  h: number;
  hx: number;
  hy: number;
  classId: number;
  score: number;
}

function checkFinite(name: string, values: ArrayLike<number>): void {
  for (let i = 0; i < values.length; i++) {
    if (!Number.isFinite(values[i])) {
      throw new Error(`${name}[${i}] is not finite`);
    }
  }
}

function parseBoxes(buffer: ArrayLike<number>, stride: number, name: string): Box[] {
  checkFinite(name, buffer);
  if (buffer.length % stride !== 0) {
    throw new Error(`${name} length ${buffer.length} is not a multiple of stride ${stride}`);
  }
  const offset = stride - BOX_STRIDE;
  const boxes: Box[] = [];
  for (let i = 0; i < buffer.length; i += stride) {
    const classId = buffer[i + offset + 6];
    if (!Number.isInteger(classId) || classId < 0) {
      throw new Error(`${name}: classId ${classId} at box ${i / stride} must be a non-negative integer`);
    }
    boxes.push({
      cx: buffer[i + offset],
      cy: buffer[i + offset + 1],
      w: buffer[i + offset + 2],
      h: buffer[i + offset + 3],
      hx: buffer[i + offset + 4],
      hy: buffer[i + offset + 5],
      classId,
      score: buffer[i + offset + 7],
    });
  }
  return boxes;
}

function classNames(numClasses: number): string[] {
  return Array.from({ length: numClasses }, (_, i) => `class${i}`);
}

function writeClassConfig(dir: string, meanLengths: ArrayLike<number>, coeff = 0.2, gsd = 1.0): string {
  const config = {
    coeff,
    gsd,
    classes: Array.from(meanLengths, (len, i) => ({ name: `class${i}`, mean_length_m: len })),
  };
  const file = path.join(dir, "classes.json");
  writeFileSync(file, JSON.stringify(config));
  return file;
}

function imageExtent(boxes: Box[], floor = 64): { width: number; height: number } {
  let width = floor;
  let height = floor;
  for (const b of boxes) {
    width = Math.max(width, Math.ceil(b.cx) + 2);
    height = Math.max(height, Math.ceil(b.cy) + 2);
  }
  return { width, height };
}

function writeAnnotations(
  file: string,
  imageId: string,
  width: number,
  height: number,
  boxes: Box[],
  numClasses: number,
  withScores: boolean,
): void {
  for (const b of boxes) {
    if (b.classId >= numClasses) {
      throw new Error(`classId ${b.classId} out of range [0, ${numClasses})`);
    }
    if (b.cx < 0 || b.cy < 0) {
      throw new Error(`box center (${b.cx}, ${b.cy}) must be non-negative for the wire format`);
    }
  }
  const objects = boxes.map((b) => {
    const rec: Record<string, unknown> = {
      class_name: `class${b.classId}`,
      cx: b.cx,
      cy: b.cy,
      w: b.w,
      h: b.h,
      hx: b.hx,
      hy: b.hy,
    };
    if (withScores) {
      rec.score = b.score;
    }
    return rec;
  });
  writeFileSync(file, JSON.stringify({ image_id: imageId, width, height, gsd: 1.0, objects }));
}

function readDetections(file: string): Float64Array {
  const doc = JSON.parse(readFileSync(file, "utf-8"));
  const out = new Float64Array(doc.objects.length * BOX_STRIDE);
  doc.objects.forEach((rec: Record<string, unknown>, i: number) => {
    const classId = Number(String(rec.class_name).replace("class", ""));
    out.set(
      [
        rec.cx as number,
        rec.cy as number,
        rec.w as number,
        rec.h as number,
        rec.hx as number,
        rec.hy as number,
        classId,
        (rec.score as number) ?? 1.0,
      ],
      i * BOX_STRIDE,
    );
  });
  return out;
}

/** Exact rotated IoU of two (cx, cy, w, h, thetaDegrees) rectangles. */
export function rotatedIou(a: ArrayLike<number>, b: ArrayLike<number>): number {
  for (const [name, box] of [
    ["a", a],
    ["b", b],
  ] as const) {
    if (box.length !== 5) {
      throw new Error(`${name} must have exactly 5 entries (cx, cy, w, h, theta)`);
    }
    checkFinite(name, box);
  }
  // --a=... form: a leading minus sign would otherwise parse as a flag
  const literal = (box: ArrayLike<number>) => Array.from(box).join(",");
  const out = runCli(["iou", `--a=${literal(a)}`, `--b=${literal(b)}`]);
  return Number.parseFloat(out.trim());
}

/** Greedy rotated NMS; returns the kept indices into the input buffer. */
export function rotatedNms(
  boxes: ArrayLike<number>,
  iouThreshold = 0.15,
  classAgnostic = false,
): Int32Array {
  const parsed = parseBoxes(boxes, BOX_STRIDE, "boxes");
  if (parsed.length === 0) {
    return new Int32Array(0);
  }
  const numClasses = Math.max(...parsed.map((b) => b.classId)) + 1;
  return withTempDir((dir) => {
    const { width, height } = imageExtent(parsed);
    const input = path.join(dir, "in.json");
    writeAnnotations(input, "nms", width, height, parsed, numClasses, true);
    const classes = writeClassConfig(dir, new Array(numClasses).fill(100.0));
    const args = [
      "nms",
      "--in",
      input,
      "--out",
      path.join(dir, "out.json"),
      "--iou",
      String(iouThreshold),
      "--print-indices",
      "--classes",
      classes,
    ];
    if (classAgnostic) {
      args.push("--class-agnostic");
    }
    return Int32Array.from(JSON.parse(runCli(args)) as number[]);
  });
}

/** Encode ground-truth boxes into the six training target maps. */
export function encodeTargets(boxes: ArrayLike<number>, opts: EncodeOptions): TargetMaps {
  const parsed = parseBoxes(boxes, BOX_STRIDE, "boxes");
  const stride = opts.stride ?? 4;
  if (opts.imageW % stride !== 0 || opts.imageH % stride !== 0) {
    throw new Error(`image ${opts.imageW}x${opts.imageH} not divisible by stride ${stride}`);
  }
  return withTempDir((dir) => {
    const input = path.join(dir, "gt.json");
    writeAnnotations(input, "encode", opts.imageW, opts.imageH, parsed, opts.numClasses, false);
    const classes = writeClassConfig(dir, new Array(opts.numClasses).fill(100.0));
    const outDir = path.join(dir, "maps");
    runCli([
      "encode",
      "--ann",
      input,
      "--out-dir",
      outDir,
      "--stride",
      String(stride),
      "--alpha",
      String(opts.alpha ?? 1.2),
      "--min-overlap",
      String(opts.minOverlap ?? 0.7),
      "--classes",
      classes,
    ]);
    const read = (name: string) => decodeTensor(readFileSync(path.join(outDir, `${name}.chpt`)));
    return {
      center: read("center"),
      centerOffset: read("center_offset"),
      size: read("size"),
      headReg: read("head_reg"),
      head: read("head"),
      headOffset: read("head_offset"),
    };
  });
}

/** Decode predicted target maps into a stride-8 detection buffer. */
export function decodeDetections(maps: TargetMaps, opts: DecodeOptions = {}): Float64Array {
  const [numClasses, mapH, mapW] = maps.center.dims;
  if (maps.center.dims.length !== 3) {
    throw new Error(`center map must be (classes, h, w), got dims [${maps.center.dims}]`);
  }
  const expect: Array<[keyof TargetMaps, number]> = [
    ["centerOffset", 2],
    ["size", 2],
    ["headReg", 2],
    ["head", 1],
    ["headOffset", 2],
  ];
  for (const [name, channels] of expect) {
    const dims = maps[name].dims;
    if (dims.length !== 3 || dims[0] !== channels || dims[1] !== mapH || dims[2] !== mapW) {
      throw new Error(`${name} dims [${dims}] incompatible with center dims [${maps.center.dims}]`);
    }
  }
  return withTempDir((dir) => {
    const mapsDir = path.join(dir, "maps");
    mkdirSync(mapsDir);
    const write = (name: string, tensor: Tensor) =>
      writeFileSync(path.join(mapsDir, `${name}.chpt`), encodeTensor(tensor));
    write("center", maps.center);
    write("center_offset", maps.centerOffset);
    write("size", maps.size);
    write("head_reg", maps.headReg);
    write("head", maps.head);
    write("head_offset", maps.headOffset);
    const classes = writeClassConfig(dir, new Array(numClasses).fill(100.0));
    const out = path.join(dir, "dets.json");
    runCli([
      "decode",
      "--tensors",
      mapsDir,
      "--out",
      out,
      "--top-k",
      String(opts.topK ?? 100),
      "--head-thresh",
      String(opts.headScoreThreshold ?? 0.1),
      "--score-floor",
      String(opts.scoreFloor ?? 0.0),
      "--stride",
      String(opts.stride ?? 4),
      "--classes",
      classes,
    ]);
    return readDetections(out);
  });
}

/** Rescale detection scores by the per-class ship-length prior. */
export function refineScores(
  boxes: ArrayLike<number>,
  meanLengths: ArrayLike<number>,
  coeff = 0.2,
  gsd = 1.0,
): Float64Array {
  const parsed = parseBoxes(boxes, BOX_STRIDE, "boxes");
  checkFinite("meanLengths", meanLengths);
  for (const b of parsed) {
    if (b.classId >= meanLengths.length) {
      throw new Error(`classId ${b.classId} has no mean length (table has ${meanLengths.length})`);
    }
  }
  if (parsed.length === 0) {
    return new Float64Array(0);
  }
  return withTempDir((dir) => {
    const { width, height } = imageExtent(parsed);
    const input = path.join(dir, "in.json");
    writeAnnotations(input, "refine", width, height, parsed, meanLengths.length, true);
    const classes = writeClassConfig(dir, meanLengths, coeff, gsd);
    const out = path.join(dir, "out.json");
    runCli(["refine", "--in", input, "--out", out, "--classes", classes]);
    return readDetections(out);
  });
}

/** VOC07 evaluation of stride-9 detection/ground-truth buffers. */
export function evaluateDetections(
  dets: ArrayLike<number>,
  gts: ArrayLike<number>,
  opts: EvaluateOptions,
): EvaluationReport {
  const detRows = splitByImage(dets, "dets");
  const gtRows = splitByImage(gts, "gts");
  const allBoxes = [...flatten(detRows), ...flatten(gtRows)];
  const { width, height } = imageExtent(allBoxes);
  return withTempDir((dir) => {
    const detDir = path.join(dir, "dets");
    const gtDir = path.join(dir, "gts");
    mkdirSync(detDir);
    mkdirSync(gtDir);
    const images = new Set([...detRows.keys(), ...gtRows.keys()]);
    for (const img of images) {
      writeAnnotations(
        path.join(detDir, `img${img}.json`),
        `img${img}`,
        width,
        height,
        detRows.get(img) ?? [],
        opts.numClasses,
        true,
      );
      writeAnnotations(
        path.join(gtDir, `img${img}.json`),
        `img${img}`,
        width,
        height,
        gtRows.get(img) ?? [],
        opts.numClasses,
        false,
      );
    }
    const classes = writeClassConfig(dir, new Array(opts.numClasses).fill(100.0));
    const prefix = path.join(dir, "report");
    runCli([
      "eval",
      "--dets",
      detDir,
      "--gt",
      gtDir,
      "--out-prefix",
      prefix,
      "--thresholds",
      (opts.thresholds ?? [0.5, 0.6, 0.7, 0.8]).join(","),
      "--bda-iou",
      String(opts.bdaIou ?? 0.5),
      "--classes",
      classes,
    ]);
    const report = JSON.parse(readFileSync(`${prefix}.json`, "utf-8"));
    return {
      mapAt: report.map_at,
      bda: report.bda,
      perClassAp: report.per_class_ap,
    };
  });

  function splitByImage(buffer: ArrayLike<number>, name: string): Map<number, Box[]> {
    checkFinite(name, buffer);
    if (buffer.length % EVAL_STRIDE !== 0) {
      throw new Error(`${name} length ${buffer.length} is not a multiple of stride ${EVAL_STRIDE}`);
    }
    const rows = new Map<number, Box[]>();
    for (let i = 0; i < buffer.length; i += EVAL_STRIDE) {
      const img = buffer[i];
      if (!Number.isInteger(img) || img < 0) {
        throw new Error(`${name}: image index ${img} must be a non-negative integer`);
      }
      const box = parseBoxes(Array.from({ length: BOX_STRIDE }, (_, k) => buffer[i + 1 + k]), BOX_STRIDE, name)[0];
      if (!rows.has(img)) {
        rows.set(img, []);
      }
      rows.get(img)!.push(box);
    }
    return rows;
  }

  function flatten(rows: Map<number, Box[]>): Box[] {
    return [...rows.values()].flat();
  }
}
