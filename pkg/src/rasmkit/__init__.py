"""rasmkit: offline handwritten Arabic character recognition.

Preprocessing (binarization, denoising, deslanting, size normalization),
a fixed 133-dimensional feature vector including secondary-component
(dot/hamza) geometry, and a log-sigmoid MLP trained with scaled conjugate
gradient.  The estimator classes follow the sklearn fit/transform/predict
conventions so the stages compose with standard pipelines.
"""

from .components import BoundingBox, ComponentSet, SecondaryStats, label_components, secondary_summary
from .dataset import DatasetManifest, SplitSpec, augment_noisy, scan_directory, split
from .features import (
    FEATURE_LENGTH,
    FeatureExtractor,
    MinMaxNormalizer,
    NormStats,
    apply_minmax,
    aspect_ratio,
    count_end_points,
    extract,
    fit_minmax,
    pixel_ratio,
    profile,
    projection,
)
from .image import PgmError, from_gray_thresholded, read_pgm, read_pgm_file, to_gray, write_pgm, write_pgm_file
from .mlp import (
    MlpConfig,
    MlpModel,
    ModelFormatError,
    ScgMlpClassifier,
    TrainingDivergedError,
    TrainReport,
    forward,
    load_model,
    logsig,
    predict,
    save_model,
    sse_and_gradient,
    train_scg,
)
from .pipeline import EvalReport, evaluate, predict_gray, train_recognizer
from .preprocess import (
    BlankImageError,
    CharacterPreprocessor,
    PreprocessConfig,
    binarize,
    dilate2x2,
    estimate_slant,
    median3x3,
    morph,
    otsu_threshold,
    preprocess,
    resize_normalize,
    shear,
)
from .synth import ARCHETYPE_NAMES, gen_synthetic, render_sample

__version__ = "0.1.0"
