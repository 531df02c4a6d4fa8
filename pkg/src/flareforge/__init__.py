"""Deterministic multi-flare nighttime image synthesis toolkit."""

__version__ = "0.1.0"

from .afm import MaskResult, ThresholdStrategy, apply_mask, compute_threshold, generate_mask
from .augment import (AffineParams, AffineRanges, SeededRng, apply_affine,
                      apply_affine_mask, derive_stream_index, sample_affine)
from .bam import BrightnessContext, apply_scale, brightness_scales
from .errors import (BoundsError, ConfigError, DimensionError, EmptyFlareError,
                     EmptyRegionError, FlareforgeError, FormatError,
                     MissingDepthError, PairingError)
from .imgcore import (DepthMap, Image, LuminanceMap, RegionMask, add_clip,
                      gamma_decode, gamma_encode, load_mask, load_pfm, load_png,
                      to_luma_bt601, write_mask, write_pfm, write_png)
from .metrics import MetricsReport, evaluate_dirs, masked_psnr, psnr, ssim
from .spe import (FlarePlacement, LightSourceRegion, extract_light_source,
                  incident_angle, mean_depth, mean_radius)
from .synth import (AffineConfig, FlareTemplate, SynthConfig, SynthRecord,
                    load_templates, replay_record, run_dataset, synthesize_pair,
                    synthesize_pair_detailed)
