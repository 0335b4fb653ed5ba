"""Built-in oracle suites: cheap brute-force cross-checks of every module.

Each check returns ``(ok, detail)`` and is independent of the code path
it verifies (grid counting vs polygon clipping, finite differences vs
analytic gradients, exhaustive suppression vs greedy NMS, quadrature vs
the closed-form tail).  ``run_all`` powers the ``selftest`` CLI command;
the pytest acceptance suite runs the same ideas at full sample counts.
"""

from __future__ import annotations

import time

import numpy as np

from .dataio import SceneSpec, default_class_table, synth_scene
from .decoding import DecodeConfig, decode_detections
from .encoding import EncodingConfig, encode_targets
from .evaluation import evaluate, voc07_ap
from .geometry import RBox, chp_to_rbox, rotated_iou, rotated_iou_raster
from .losses import LossConfig, masked_l1_loss, variant_focal_loss
from .nms import rotated_nms_indices
from .oim import arf_convolve, arf_convolve_grad, orpool, orpool_grad
from .size_prior import gaussian_tail_quadrature, size_prior_probability
from .tiling import box_to_global, box_to_model, make_slices, SliceSpec

__all__ = ["run_all"]


def random_box_pair(rng, dim_lo=2.0, dim_hi=200.0, offset=150.0):
    a = RBox(
        float(rng.uniform(-50, 50)),
        float(rng.uniform(-50, 50)),
        float(rng.uniform(dim_lo, dim_hi)),
        float(rng.uniform(dim_lo, dim_hi)),
        float(rng.uniform(0, 360)),
    )
    b = RBox(
        a.cx + float(rng.uniform(-offset, offset)),
        a.cy + float(rng.uniform(-offset, offset)),
        float(rng.uniform(dim_lo, dim_hi)),
        float(rng.uniform(dim_lo, dim_hi)),
        float(rng.uniform(0, 360)),
    )
    return a, b


def check_iou_oracle(n_pairs=200, grid=512, tol=0.02, seed=0):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_pairs):
        a, b = random_box_pair(rng)
        worst = max(worst, abs(rotated_iou(a, b) - rotated_iou_raster(a, b, grid)))
    return worst <= tol, f"max |exact - raster| = {worst:.5f} over {n_pairs} pairs (tol {tol})"


def rel_err(analytic, fd, floor=1e-4):
    return abs(analytic - fd) / max(abs(analytic), abs(fd), floor)


def fd_gradient(fun, x, indices, step=1e-5):
    """Central finite differences of a scalar function at chosen indices."""
    out = {}
    for idx in indices:
        xp = x.copy()
        xp[idx] += step
        xm = x.copy()
        xm[idx] -= step
        out[idx] = (fun(xp) - fun(xm)) / (2.0 * step)
    return out


def _all_indices(shape):
    return list(np.ndindex(*shape))


def check_focal_gradient(seeds=3, size=16, tol=1e-4):
    cfg = LossConfig()
    worst = 0.0
    for seed in range(seeds):
        rng = np.random.default_rng(seed)
        pred = rng.uniform(0.01, 0.99, size=(size, size))
        target = rng.uniform(0.0, 0.95, size=(size, size))
        pos = rng.random((size, size)) < 0.05
        target[pos] = 1.0
        n_obj = max(int(pos.sum()), 1)
        res = variant_focal_loss(pred, target, n_obj, cfg)
        fd = fd_gradient(
            lambda x: variant_focal_loss(x, target, n_obj, cfg).value, pred, _all_indices(pred.shape)
        )
        for idx, val in fd.items():
            worst = max(worst, rel_err(res.gradient[idx], val))
    return worst <= tol, f"max relative error {worst:.2e} (tol {tol:g})"


def check_l1_gradient(seeds=3, size=16, tol=1e-4):
    worst = 0.0
    for seed in range(seeds):
        rng = np.random.default_rng(100 + seed)
        pred = rng.uniform(-2, 2, size=(2, size, size))
        # keep every difference well away from the |x| kink
        target = pred - np.where(rng.random(pred.shape) < 0.5, -1.0, 1.0) * rng.uniform(
            0.05, 1.0, size=pred.shape
        )
        cells = [
            (int(r), int(c))
            for r, c in zip(rng.integers(0, size, 8), rng.integers(0, size, 8))
        ]
        n_obj = len(cells)
        res = masked_l1_loss(pred, target, cells, n_obj)
        probe = [(ch, r, c) for ch in (0, 1) for (r, c) in cells]
        fd = fd_gradient(
            lambda x: masked_l1_loss(x, target, cells, n_obj).value, pred, probe
        )
        for idx, val in fd.items():
            worst = max(worst, rel_err(res.gradient[idx], val))
    return worst <= tol, f"max relative error {worst:.2e} (tol {tol:g})"


def check_arf_gradient(seeds=2, size=8, n_orient=4, tol=1e-4):
    worst = 0.0
    for seed in range(seeds):
        rng = np.random.default_rng(200 + seed)
        feat = rng.normal(size=(size, size, n_orient))
        weights = rng.normal(size=(3, 3, n_orient))
        upstream = rng.normal(size=(size, size, n_orient))

        def objective_w(w):
            return float(np.sum(upstream * arf_convolve(feat, w)))

        def objective_f(f):
            return float(np.sum(upstream * arf_convolve(f, weights)))

        grad_f, grad_w = arf_convolve_grad(feat, weights, upstream)
        for idx, val in fd_gradient(objective_w, weights, _all_indices(weights.shape)).items():
            worst = max(worst, rel_err(grad_w[idx], val))
        probe = [tuple(map(int, t)) for t in rng.integers(0, [size, size, n_orient], size=(20, 3))]
        for idx, val in fd_gradient(objective_f, feat, probe).items():
            worst = max(worst, rel_err(grad_f[idx], val))
    return worst <= tol, f"max relative error {worst:.2e} (tol {tol:g})"


def check_orpool_gradient(seeds=3, size=8, n_orient=8, tol=1e-4):
    worst = 0.0
    for seed in range(seeds):
        rng = np.random.default_rng(300 + seed)
        feat = rng.normal(size=(size, size, n_orient))
        upstream = rng.normal(size=(size, size))
        grad = orpool_grad(feat, upstream)

        def objective(f):
            return float(np.sum(upstream * orpool(f)))

        probe = [tuple(map(int, t)) for t in rng.integers(0, [size, size, n_orient], size=(40, 3))]
        for idx, val in fd_gradient(objective, feat, probe).items():
            worst = max(worst, rel_err(grad[idx], val))
    return worst <= tol, f"max relative error {worst:.2e} (tol {tol:g})"


def roundtrip_scene(seed, table=None, image=256):
    """synth -> encode -> decode for one scene; returns (gt, detections)."""
    table = table or default_class_table()
    spec = SceneSpec(seed=seed, image_w=image, image_h=image, count_min=2, count_max=6)
    ann = synth_scene(spec, table)
    gt = ann.boxes(table)
    cfg = EncodingConfig(num_classes=table.num_classes, input_w=image, input_h=image)
    dets = decode_detections(encode_targets(gt, cfg), DecodeConfig())
    return gt, dets


def check_roundtrip(n_scenes=20, seed0=0):
    table = default_class_table()
    dets_by_image, gts_by_image = {}, {}
    for seed in range(seed0, seed0 + n_scenes):
        gt, dets = roundtrip_scene(seed, table)
        gts_by_image[f"scene{seed}"] = gt
        dets_by_image[f"scene{seed}"] = dets
    report = evaluate(dets_by_image, gts_by_image, thresholds=(0.5,))
    ok = report.map_at[0.5] == 1.0 and report.bda >= 0.99
    return ok, f"mAP@0.5 = {report.map_at[0.5]:.4f}, BDA = {report.bda:.4f} over {n_scenes} scenes"


def exhaustive_nms_indices(dets, iou_threshold, class_agnostic=False):
    """All-pairs reference suppression with the same ordering rules."""
    order = sorted(
        range(len(dets)), key=lambda i: (-dets[i].score, dets[i].class_id, dets[i].cx, dets[i].cy)
    )
    kept = []
    for i in order:
        ok = True
        for j in kept:
            if not class_agnostic and dets[i].class_id != dets[j].class_id:
                continue
            if rotated_iou(chp_to_rbox(dets[j]), chp_to_rbox(dets[i])) > iou_threshold:
                ok = False
                break
        if ok:
            kept.append(i)
    return kept


def random_detections(rng, n, num_classes=3, span=120.0):
    dets = []
    for _ in range(n):
        r = RBox(
            float(rng.uniform(0, span)),
            float(rng.uniform(0, span)),
            float(rng.uniform(4, 30)),
            float(rng.uniform(10, 80)),
            float(rng.uniform(0, 360)),
        )
        from .geometry import rbox_to_chp

        dets.append(
            rbox_to_chp(r, class_id=int(rng.integers(0, num_classes)), score=float(rng.uniform(0, 1)))
        )
    return dets


def check_nms_oracle(n_sets=50, seed=0):
    rng = np.random.default_rng(seed)
    for k in range(n_sets):
        dets = random_detections(rng, int(rng.integers(0, 21)))
        for thr in (0.0, 0.15, 0.5, 1.0):
            for agnostic in (False, True):
                if rotated_nms_indices(dets, thr, agnostic) != exhaustive_nms_indices(
                    dets, thr, agnostic
                ):
                    return False, f"mismatch at set {k}, threshold {thr}, agnostic={agnostic}"
    return True, f"greedy == exhaustive on {n_sets} random sets, thresholds {{0, 0.15, 0.5, 1}}"


def check_size_prior():
    expected = {0.0: 1.0, 1.0: 0.31731, 3.0: 0.00270}
    worst = 0.0
    for z, want in expected.items():
        got = size_prior_probability(100.0 + z * 20.0, 100.0, 0.2)
        quad = gaussian_tail_quadrature(z)
        worst = max(worst, abs(got - want), abs(got - quad))
    return worst <= 1e-3, f"max deviation {worst:.2e} from tail values / quadrature"


def check_voc_ap():
    ap = voc07_ap([True, False, True], 2)
    want = (6 * 1.0 + 5 * (2.0 / 3.0)) / 11.0
    return abs(ap - want) <= 1e-9, f"hand case AP = {ap:.6f}, expected {want:.6f}"


def check_tiling(n_sizes=10, seed=0):
    rng = np.random.default_rng(seed)
    for _ in range(n_sizes):
        w = int(rng.integers(150, 4000))
        h = int(rng.integers(150, 4000))
        slices = make_slices(w, h)
        covered_x = np.zeros(w, dtype=bool)
        covered_y = np.zeros(h, dtype=bool)
        for s in slices:
            covered_x[s.origin_x : s.origin_x + s.slice_size] = True
            covered_y[s.origin_y : s.origin_y + s.slice_size] = True
        if not (covered_x.all() and covered_y.all()):
            return False, f"coverage gap for image {w}x{h}"
    from .geometry import ChpBox

    spec = SliceSpec(820, 0)
    box = ChpBox(1000.0, 400.0, 12.0, 60.0, 1000.0, 370.0, class_id=1, score=0.7)
    back = box_to_global(spec, box_to_model(spec, box))
    err = max(
        abs(back.cx - box.cx), abs(back.cy - box.cy), abs(back.hx - box.hx), abs(back.hy - box.hy)
    )
    return err <= 1e-9, f"coverage ok on {n_sizes} sizes; round-trip error {err:.1e}"


def run_all(fast=True):
    """Run every suite; returns a list of (name, ok, detail)."""
    scale = 1 if fast else 5
    suites = [
        ("iou-oracle", lambda: check_iou_oracle(n_pairs=100 * scale)),
        ("focal-gradient", lambda: check_focal_gradient(seeds=2 * scale)),
        ("l1-gradient", lambda: check_l1_gradient(seeds=2 * scale)),
        ("arf-gradient", lambda: check_arf_gradient(seeds=1 * scale)),
        ("orpool-gradient", lambda: check_orpool_gradient(seeds=2 * scale)),
        ("encode-decode-roundtrip", lambda: check_roundtrip(n_scenes=10 * scale)),
        ("nms-oracle", lambda: check_nms_oracle(n_sets=30 * scale)),
        ("size-prior", check_size_prior),
        ("voc07-ap", check_voc_ap),
        ("tiling", lambda: check_tiling(n_sizes=10 * scale)),
    ]
    results = []
    for name, fn in suites:
        start = time.perf_counter()
        ok, detail = fn()
        results.append((name, ok, f"{detail} [{time.perf_counter() - start:.2f}s]"))
    return results
