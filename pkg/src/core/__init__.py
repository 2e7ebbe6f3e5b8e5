from . import plotting
from .adam import AdamOptimizer
from .aggregation import aggregate_feature_map, grid_from_feature_maps, pyramid_feature_maps
from .analysis import (
    DEFAULT_HEATMAP_CHANNELS,
    AblationResult,
    InvarianceResult,
    LevelHistogram,
    SweepPoint,
    compare_encodings,
    entry_histograms,
    layer_ablation,
    sweep_inversions,
    table_size_sweep,
    translation_invariance,
)
from .errors import (
    BadMagicError,
    ConfigMismatchError,
    CoordinateRangeError,
    CorpusMismatchError,
    GridConfigError,
    HashEncodingError,
    ImageFormatError,
    ImageSizeError,
    MarginViolationError,
    ModelFormatError,
    NonFiniteLossError,
    NonFiniteValueError,
    ShapeMismatchError,
    ShiftRangeError,
    StaleCacheError,
    StencilError,
    TrainConfigError,
    TruncatedModelError,
    UnsupportedVersionError,
    UsageError,
)
from .field_model import (
    DecodedSample,
    FieldGradients,
    backward,
    decode,
    level_group_masks,
    pixel_centers,
    reconstruct,
)
from .flow_problem import (
    EncodedField,
    FlowEstimate,
    FlowMode,
    FlowProblem,
    sample_points,
    synth_translation_pair,
    translate,
)
from .flow_solver import (
    FlowTable,
    encode_pair,
    flow_benchmark,
    flow_report,
    flow_visualization,
    photometric_objective,
    solve_flow,
)
from .grid_config import GridConfig, LevelGeometry, resolution_schedule
from .hash_grid import HashGrid
from .image_buffer import ImageBuffer, load_image, save_image
from .interpolation import LevelSample, interpolate_level
from .lagrange import axis_stencil, interpolant_trace, lagrange_basis, lagrange_basis_derivative
from .metrics import mse, psnr
from .model_graph_builder import ModelGraphBuilder
from .model_io import deserialize, load_model, save_model, serialize
from .pixel_decoder import PixelDecoder
from .run_manifest import RunDirectory, load_config
from .spatial_hash import index_map, repetition_offsets, spatial_hash, voxel_vertices
from .train_config import TrainConfig, TrainMode, TrainReport
from .trainer import Trainer

__all__ = [
    "plotting",
    "AdamOptimizer",
    "aggregate_feature_map",
    "grid_from_feature_maps",
    "pyramid_feature_maps",
    "DEFAULT_HEATMAP_CHANNELS",
    "AblationResult",
    "InvarianceResult",
    "LevelHistogram",
    "SweepPoint",
    "compare_encodings",
    "entry_histograms",
    "layer_ablation",
    "sweep_inversions",
    "table_size_sweep",
    "translation_invariance",
    "BadMagicError",
    "ConfigMismatchError",
    "CoordinateRangeError",
    "CorpusMismatchError",
    "GridConfigError",
    "HashEncodingError",
    "ImageFormatError",
    "ImageSizeError",
    "MarginViolationError",
    "ModelFormatError",
    "NonFiniteLossError",
    "NonFiniteValueError",
    "ShapeMismatchError",
    "ShiftRangeError",
    "StaleCacheError",
    "StencilError",
    "TrainConfigError",
    "TruncatedModelError",
    "UnsupportedVersionError",
    "UsageError",
    "DecodedSample",
    "FieldGradients",
    "backward",
    "decode",
    "level_group_masks",
    "pixel_centers",
    "reconstruct",
    "EncodedField",
    "FlowEstimate",
    "FlowMode",
    "FlowProblem",
    "sample_points",
    "synth_translation_pair",
    "translate",
    "FlowTable",
    "encode_pair",
    "flow_benchmark",
    "flow_report",
    "flow_visualization",
    "photometric_objective",
    "solve_flow",
    "GridConfig",
    "LevelGeometry",
    "resolution_schedule",
    "HashGrid",
    "ImageBuffer",
    "load_image",
    "save_image",
    "LevelSample",
    "interpolate_level",
    "axis_stencil",
    "interpolant_trace",
    "lagrange_basis",
    "lagrange_basis_derivative",
    "mse",
    "psnr",
    "ModelGraphBuilder",
    "deserialize",
    "load_model",
    "save_model",
    "serialize",
    "PixelDecoder",
    "RunDirectory",
    "load_config",
    "index_map",
    "repetition_offsets",
    "spatial_hash",
    "voxel_vertices",
    "TrainConfig",
    "TrainMode",
    "TrainReport",
    "Trainer",
]
