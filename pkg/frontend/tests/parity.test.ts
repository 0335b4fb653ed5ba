/**
 * Parity suite: every bound function replayed against fixtures that the
 * native library generated, agreement required to 1e-9 (exact for
 * integer outputs).
 */

import assert from "node:assert/strict";
import { readFileSync } from "node:fs";
import * as path from "node:path";
import { test } from "node:test";

import { decodeTensor } from "../src/chpt";
import {
  BOX_STRIDE,
  decodeDetections,
  encodeTargets,
  evaluateDetections,
  refineScores,
  rotatedIou,
  rotatedNms,
} from "../src/index";

const FIXTURES = path.resolve(__dirname, "..", "..", "fixtures");

function fixture<T>(name: string): T {
  return JSON.parse(readFileSync(path.join(FIXTURES, name), "utf-8")) as T;
}

function close(actual: number, expected: number, tol = 1e-9): void {
  assert.ok(
    Math.abs(actual - expected) <= tol,
    `expected ${expected}, got ${actual} (|diff| ${Math.abs(actual - expected)})`,
  );
}

test("rotatedIou matches native on the fixture pairs", () => {
  const cases = fixture<Array<{ a: number[]; b: number[]; expected: number }>>("iou.json");
  for (const { a, b, expected } of cases) {
    close(rotatedIou(a, b), expected);
  }
});

test("rotatedIou validates shapes before calling out", () => {
  assert.throws(() => rotatedIou([1, 2, 3], [0, 0, 1, 1, 0]), /5 entries/);
  assert.throws(() => rotatedIou([0, 0, 1, 1, Number.NaN], [0, 0, 1, 1, 0]), /not finite/);
});

test("rotatedNms matches native kept indices", () => {
  const fix = fixture<{
    boxes: number[][];
    cases: Array<{ iouThreshold: number; classAgnostic: boolean; keptIndices: number[] }>;
  }>("nms.json");
  const buffer = Float64Array.from(fix.boxes.flat());
  for (const { iouThreshold, classAgnostic, keptIndices } of fix.cases) {
    const kept = rotatedNms(buffer, iouThreshold, classAgnostic);
    assert.deepEqual(Array.from(kept), keptIndices);
  }
});

test("rotatedNms on an empty buffer returns an empty result", () => {
  assert.equal(rotatedNms(new Float64Array(0), 0.15).length, 0);
});

test("encodeTargets matches the native target maps bit for bit", () => {
  const fix = fixture<{
    imageW: number;
    imageH: number;
    numClasses: number;
    stride: number;
    boxes: number[][];
  }>("encode_decode.json");
  const maps = encodeTargets(Float64Array.from(fix.boxes.flat()), {
    imageW: fix.imageW,
    imageH: fix.imageH,
    numClasses: fix.numClasses,
    stride: fix.stride,
  });
  const names: Array<[keyof typeof maps, string]> = [
    ["center", "center"],
    ["centerOffset", "center_offset"],
    ["size", "size"],
    ["headReg", "head_reg"],
    ["head", "head"],
    ["headOffset", "head_offset"],
  ];
  for (const [key, file] of names) {
    const expected = decodeTensor(readFileSync(path.join(FIXTURES, "encode_expected", `${file}.chpt`)));
    assert.deepEqual(maps[key].dims, expected.dims, `${file} dims`);
    for (let i = 0; i < expected.data.length; i++) {
      if (maps[key].data[i] !== expected.data[i]) {
        assert.fail(`${file}[${i}]: ${maps[key].data[i]} != ${expected.data[i]}`);
      }
    }
  }
});

test("decodeDetections matches the native decoder", () => {
  const fix = fixture<{ expectedDetections: number[][] }>("encode_decode.json");
  const read = (name: string) =>
    decodeTensor(readFileSync(path.join(FIXTURES, "encode_expected", `${name}.chpt`)));
  const dets = decodeDetections(
    {
      center: read("center"),
      centerOffset: read("center_offset"),
      size: read("size"),
      headReg: read("head_reg"),
      head: read("head"),
      headOffset: read("head_offset"),
    },
    { stride: 4 },
  );
  const expected = fix.expectedDetections;
  assert.equal(dets.length, expected.length * BOX_STRIDE);
  expected.forEach((erow, i) => {
    erow.forEach((value, k) => close(dets[i * BOX_STRIDE + k], value));
  });
});

test("decodeDetections rejects inconsistent map shapes", () => {
  const t = (dims: number[]) => ({
    data: new Float32Array(dims.reduce((x, y) => x * y, 1)),
    dims,
  });
  assert.throws(
    () =>
      decodeDetections({
        center: t([2, 16, 16]),
        centerOffset: t([2, 16, 16]),
        size: t([2, 8, 8]),
        headReg: t([2, 16, 16]),
        head: t([1, 16, 16]),
        headOffset: t([2, 16, 16]),
      }),
    /size dims/,
  );
});

test("refineScores matches native rescoring", () => {
  const fix = fixture<{
    boxes: number[][];
    meanLengths: number[];
    coeff: number;
    gsd: number;
    expectedScores: number[];
  }>("refine.json");
  const out = refineScores(Float64Array.from(fix.boxes.flat()), fix.meanLengths, fix.coeff, fix.gsd);
  fix.expectedScores.forEach((score, i) => {
    close(out[i * BOX_STRIDE + 7], score);
    // geometry passes through untouched
    for (let k = 0; k < 7; k++) {
      close(out[i * BOX_STRIDE + k], fix.boxes[i][k], 0);
    }
  });
});

test("refineScores refuses a class without a mean length", () => {
  const box = [10, 10, 4, 20, 10, 0, 5, 0.5];
  assert.throws(() => refineScores(Float64Array.from(box), [100.0]), /no mean length/);
});

test("evaluateDetections matches the native report", () => {
  const fix = fixture<{
    numClasses: number;
    thresholds: number[];
    bdaIou: number;
    dets: number[][];
    gts: number[][];
    expected: { map_at: Record<string, number>; bda: number; per_class_ap: Record<string, Record<string, number | null>> };
  }>("evaluate.json");
  const report = evaluateDetections(
    Float64Array.from(fix.dets.flat()),
    Float64Array.from(fix.gts.flat()),
    { numClasses: fix.numClasses, thresholds: fix.thresholds, bdaIou: fix.bdaIou },
  );
  close(report.bda, fix.expected.bda);
  for (const [thr, value] of Object.entries(fix.expected.map_at)) {
    close(report.mapAt[thr], value);
  }
  for (const [thr, perClass] of Object.entries(fix.expected.per_class_ap)) {
    for (const [cls, ap] of Object.entries(perClass)) {
      if (ap === null) {
        assert.equal(report.perClassAp[thr][cls], null);
      } else {
        close(report.perClassAp[thr][cls] as number, ap);
      }
    }
  }
});

test("evaluateDetections validates stride and image indices", () => {
  assert.throws(
    () => evaluateDetections(new Float64Array(5), new Float64Array(0), { numClasses: 1 }),
    /multiple of stride/,
  );
  const bad = [0.5, 10, 10, 4, 20, 10, 0, 0, 0.5];
  assert.throws(
    () => evaluateDetections(Float64Array.from(bad), new Float64Array(0), { numClasses: 1 }),
    /image index/,
  );
});

test("native errors surface as exceptions with the diagnostic", () => {
  // decode with maps whose class config cannot resolve is fine; instead
  // drive an error through nms with an impossible threshold
  const box = [10, 10, 4, 20, 10, 0, 0, 0.5];
  assert.throws(() => rotatedNms(Float64Array.from(box), 3.0), /iou_threshold/);
});
