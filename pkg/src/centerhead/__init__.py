"""Deterministic core of center/head-point oriented ship detection.

Box geometry and rotated IoU, rotated-Gaussian target encoding, keypoint
decoding with head assignment, training losses with analytic gradients,
orientation-invariant filter kernels, ship-length rescoring, rotated NMS,
tiled inference geometry and VOC07 evaluation -- all pure numpy, all
verifiable against brute-force oracles without a trained network.
"""

from .geometry import (
    ChpBox,
    RBox,
    angle_diff,
    chp_to_rbox,
    quad_to_rbox,
    rbox_to_chp,
    rbox_to_quad,
    rotated_iou,
    rotated_iou_raster,
)
from .encoding import (
    CovarianceKernel,
    EncodingConfig,
    TargetTensors,
    covariance_kernel,
    encode_targets,
    gaussian_covariance,
    gaussian_radius,
    splat_rotated_gaussian,
)
from .decoding import DecodeConfig, Peak, decode_detections, extract_peaks
from .losses import LossConfig, LossResult, masked_l1_loss, total_loss, variant_focal_loss
from .oim import arf_convolve, arf_convolve_grad, orpool, orpool_grad, rotate_filter
from .size_prior import ClassLengthTable, refine_scores, size_prior_probability
from .nms import rotated_nms, rotated_nms_indices
from .evaluation import EvalReport, evaluate, match_detections, voc07_ap
from .tiling import SliceSpec, make_slices, merge_detections, slice_annotations
from .dataio import (
    AnnotationFile,
    SceneSpec,
    default_class_table,
    load_annotations,
    load_class_table,
    load_targets,
    load_tensor,
    save_annotations,
    save_class_table,
    save_targets,
    save_tensor,
    synth_scene,
)

__version__ = "0.1.0"
