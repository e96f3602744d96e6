"""Cross-benchmarking of DEA units against a common family of frontier faces."""
from .dataset import Dataset, DatasetError, DmuRecord, load_dataset, parse_dataset, rescale
from .efficiency import EfficiencyClassification, extreme_efficient_set, pareto_efficient
from .selection import (
    HyperplaneCertificate,
    ReferenceSet,
    SelectionConfig,
    SelectionState,
    compute_bigM,
    run_selection,
    select_first,
    select_next,
    weighted_l1_distance,
)
from .targets import (
    CrossBenchmarkResult,
    DeviationMatrix,
    TargetBundle,
    closest_targets_for_face,
    cross_benchmark,
    deviation_report,
)

__version__ = "0.1.0"
