"""Finger-photo to optical-sensor fingerprint matching toolkit."""

from .imagio import Roi, load_image, write_image, to_grayscale, hdr_merge, crop_roi
from .enhance import ClaheConfig, clahe
from .gabor import GaborParams, make_kernel, make_bank, convolve, convolve_parallel, fuse_responses
from .orientation import OrientationField, orientation_field
from .corepoint import CorePoint, detect_core, poincare_index
from .align import AlignConfig, mirror_horizontal, crop_about_core
from .minutiae import Minutia, MinutiaTemplate, read_template, write_template
from .matcher import MatchConfig, MatchResult, match_templates
from .pipeline import PipelineConfig, run_pipeline

__version__ = "0.1.0"

__all__ = [
    "Roi", "load_image", "write_image", "to_grayscale", "hdr_merge", "crop_roi",
    "ClaheConfig", "clahe",
    "GaborParams", "make_kernel", "make_bank", "convolve", "convolve_parallel", "fuse_responses",
    "OrientationField", "orientation_field",
    "CorePoint", "detect_core", "poincare_index",
    "AlignConfig", "mirror_horizontal", "crop_about_core",
    "Minutia", "MinutiaTemplate", "read_template", "write_template",
    "MatchConfig", "MatchResult", "match_templates",
    "PipelineConfig", "run_pipeline",
]
