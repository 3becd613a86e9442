from .experiment import ExperimentConfig, LabelOracle, RunMetrics, run_experiment, split
from .io import load_dataset, read_profiles, write_dataset, write_profiles

__all__ = [
    "ExperimentConfig",
    "LabelOracle",
    "RunMetrics",
    "load_dataset",
    "read_profiles",
    "run_experiment",
    "split",
    "write_dataset",
    "write_profiles",
]
