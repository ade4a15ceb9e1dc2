"""Phantoms, noise, metrics, result files and the experiments behind the CLI."""

from inverselab.harness.experiments import EXPERIMENT_DEFAULTS, run_experiment
from inverselab.harness.io import (
    decode_pgm,
    encode_pgm,
    format_csv,
    parse_config_text,
    read_config_file,
    read_pgm,
    write_csv,
    write_pgm,
)
from inverselab.harness.phantoms import ELLIPSES, Ellipse, ellipse_mask, phantom_ellipses
from inverselab.harness.schemas import (
    ConfigFileError,
    ExperimentConfig,
    ExperimentName,
    ImageBuffer,
    NoiseMode,
    PgmFormatError,
)
from inverselab.harness.selftest import run_checks, run_selftest
from inverselab.harness.service import add_noise, metrics, sparse_spikes, support_size

__all__ = [
    "ELLIPSES",
    "EXPERIMENT_DEFAULTS",
    "ConfigFileError",
    "Ellipse",
    "ExperimentConfig",
    "ExperimentName",
    "ImageBuffer",
    "NoiseMode",
    "PgmFormatError",
    "add_noise",
    "decode_pgm",
    "ellipse_mask",
    "encode_pgm",
    "format_csv",
    "metrics",
    "parse_config_text",
    "phantom_ellipses",
    "read_config_file",
    "read_pgm",
    "run_checks",
    "run_experiment",
    "run_selftest",
    "sparse_spikes",
    "support_size",
    "write_csv",
    "write_pgm",
]
