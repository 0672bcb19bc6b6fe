"""Linear intra-prediction toolkit.

Designed angular/DC/planar predictor matrices, cluster-and-regress
refinement of those matrices from training patches, and best-case /
worst-case PSNR evaluation protocols.
"""

from .designed import (
    PROVENANCE_DESIGNED_HEVC,
    PROVENANCE_DESIGNED_UNIFORM,
    PROVENANCE_RIP_TRAINED,
    UNIFORM_MODE_COUNTS,
    PredictorMatrix,
    PredictorSet,
    build_angular_matrix,
    build_dc_matrix,
    build_hevc_set,
    build_planar_matrix,
    build_uniform_angular_set,
    hevc_direction_angles,
    uniform_angles,
)
from .engine import (
    BlockRecord,
    EvaluationReport,
    StackedPredictor,
    best_case_evaluate,
    best_case_prediction,
    predict,
    predict_all,
    psnr,
    psnr_from_mse,
    select_mode,
    stack,
    worst_case_reconstruct,
)
from .geometry import (
    MID_GRAY,
    BlockGeometry,
    PatchDataset,
    extract_block,
    extract_reference,
    merge_datasets,
    reference_coords,
    reference_length,
    sample_patches,
    valid_patch_positions,
)
from .image_io import (
    ImageFormatError,
    decode_to_luminance,
    quantize,
    read_pgm,
    rgb_to_luminance,
    write_pgm,
)
from .regression import (
    ClusterAssignment,
    ModelFormatError,
    SingularSystemError,
    TrainingConfig,
    TrainingTrace,
    assign_clusters,
    load_model,
    prediction_error,
    ridge_update,
    save_model,
    train,
)

__all__ = [
    "MID_GRAY",
    "PROVENANCE_DESIGNED_HEVC",
    "PROVENANCE_DESIGNED_UNIFORM",
    "PROVENANCE_RIP_TRAINED",
    "UNIFORM_MODE_COUNTS",
    "BlockGeometry",
    "BlockRecord",
    "ClusterAssignment",
    "EvaluationReport",
    "ImageFormatError",
    "ModelFormatError",
    "PatchDataset",
    "PredictorMatrix",
    "PredictorSet",
    "SingularSystemError",
    "StackedPredictor",
    "TrainingConfig",
    "TrainingTrace",
    "assign_clusters",
    "best_case_evaluate",
    "best_case_prediction",
    "build_angular_matrix",
    "build_dc_matrix",
    "build_hevc_set",
    "build_planar_matrix",
    "build_uniform_angular_set",
    "decode_to_luminance",
    "extract_block",
    "extract_reference",
    "hevc_direction_angles",
    "load_model",
    "merge_datasets",
    "predict",
    "predict_all",
    "prediction_error",
    "psnr",
    "psnr_from_mse",
    "quantize",
    "read_pgm",
    "reference_coords",
    "reference_length",
    "rgb_to_luminance",
    "ridge_update",
    "sample_patches",
    "save_model",
    "select_mode",
    "stack",
    "train",
    "uniform_angles",
    "valid_patch_positions",
    "worst_case_reconstruct",
    "write_pgm",
]
