"""Landmark-guided garment warping, glitch synthesis and compositing."""

from .compositor import (
    build_person_agnostic,
    combined_representation,
    convex_combine,
)
from .glitch import (
    PerturbConfig,
    dilate_mask,
    make_training_sample,
    perturb_landmarks,
    synthesize_glitch,
)
from .imaging import ImageBuffer, SegMask, read_image, read_mask, write_image, write_mask
from .landmarks import (
    ControlPairs,
    Landmark,
    LandmarkAnnotation,
    build_control_pairs,
    denormalize_landmarks,
    normalize_landmarks,
    parse_annotation,
    serialize_annotation,
)
from .metrics import SsimConfig, dssim, psnr, ssim
from .pipeline import PipelineConfig, run_pipeline
from .tps import TpsTransform, bending_energy, evaluate_tps, fit_tps, kernel_phi
from .warp import bilinear_sample, warp_image, warp_points

__version__ = "0.1.0"
