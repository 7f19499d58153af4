"""Rectified-flow inversion and KV-context-enriched dual-path editing workbench."""

from .dit import (
    AttentionTap,
    Conditioning,
    DiTConfig,
    DiTWeights,
    enriched_attention,
    forward_velocity,
    init_weights,
    time_embedding,
)
from .engine import (
    EditSession,
    EnrichmentPolicy,
    KVCache,
    guidance_active,
    invert_source,
    run_dual_path,
    single_path,
)
from .errors import ConfigError, FormatError, NumericError, ShapeError
from .fields import AnalyticField
from .metrics import PixelFrame, RegionMask, convergence_order, psnr, rel_l2, ssim
from .probe import (
    GRProfile,
    ProbeItem,
    ProbeSet,
    guidance_responsiveness,
    min_max_normalize,
    select_vital_layers,
)
from .solver import (
    SolverSchedule,
    cfg_velocity,
    estimate_velocity_derivative,
    euler_step,
    integrate,
    make_schedule,
    rf2_step,
)
from .synth import EditSpec, SyntheticVideoSpec, apply_first_frame_edit, gen_synthetic_video
from .tensor_io import export_pgm, load_tensor, save_tensor
from .tensors import Rng, cosine_similarity, layer_norm, matmul, seeded_gaussian, softmax_rows

__version__ = "0.1.0"
