"""Experiment drivers: learned projection, constrained VAE, timing."""
from .bench import bench_inference
from .config import (BenchConfig, ConfigError, DataConfig, ProjectionExperimentConfig,
                     VAEConfig, apply_overrides, from_dict, load_config, to_dict)
from .metrics import MetricsLog, read_metrics
from .models import VAE, ProjectionNet, build_from_topology, gaussian_kl, load_model, save_model
from .projection import make_dataset, mse, run_projection_experiment, violation
from .vae import decode_prior, feasibility_report, run_vae_experiment, sample_vae

__all__ = [
    "bench_inference", "BenchConfig", "ConfigError", "DataConfig",
    "ProjectionExperimentConfig", "VAEConfig", "apply_overrides", "from_dict",
    "load_config", "to_dict", "MetricsLog", "read_metrics", "VAE", "ProjectionNet",
    "build_from_topology", "gaussian_kl", "load_model", "save_model", "make_dataset",
    "mse", "run_projection_experiment", "violation", "decode_prior",
    "feasibility_report", "run_vae_experiment", "sample_vae",
]
