"""Depth-based normalization and outlier screening for sample matrices."""

from ._kernels import backend
from .core import (
    ClassPartition,
    DataError,
    DegenerateScaleError,
    DimensionError,
    DomainError,
    EmptyResultError,
    ExpressionMatrix,
    ParseError,
    PartitionError,
    column_sort,
    component_wise_median,
    filter_zero_rows,
    linear_prenormalize,
    load_class_labels,
    load_matrix,
    log1_transform,
    save_matrix,
)
from .depth import (
    Border,
    BorderSequence,
    DepthResult,
    DistanceMatrix,
    deepest_curve,
    depth_values,
    extract_borders,
    pairwise_distances,
)
from .normalize import (
    PipelineResult,
    QuantileGrid,
    ReferenceCurve,
    normalize_pipeline,
    quantile_normalize_full,
    quantile_normalize_subset,
)
from .outlier import (
    OutlierReport,
    TukeyCalibration,
    calibrate_g,
    detect_outliers,
    robust_covariance,
    robust_iqr,
)
from .pipeline import (
    MedianPolishFit,
    ProbeMatrix,
    TestResult,
    biweight_location,
    median_polish,
    power_false_discovery,
    summarize_genes,
    two_sample_ttest,
)
from .simulate import (
    ALL_METHODS,
    METHOD_FDN_BW,
    METHOD_FDN_MP,
    METHOD_RMA,
    SimulationConfig,
    StudyReport,
    generate_dataset,
    run_grid,
    run_study,
)

__version__ = "0.1.0"
