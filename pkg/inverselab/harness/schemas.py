"""Schemas for images, noise models and experiment configuration."""

from enum import Enum
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class PgmFormatError(ValueError):
    """Raised when a PGM file cannot be parsed.

    Attributes:
        offset: Byte offset where parsing failed.
    """

    def __init__(self, offset: int, message: str):
        self.offset = offset
        super().__init__(f"byte {offset}: {message}")


class ConfigFileError(ValueError):
    """Raised for malformed lines or unknown keys in an experiment config file."""

    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"config line {line}: {message}")


class NoiseMode(str, Enum):
    """How ``delta`` is interpreted when adding noise."""

    GAUSSIAN_SIGMA = "gaussian_sigma"
    SCALED_TO_NORM = "scaled_to_norm"


class ExperimentName(str, Enum):
    """CLI experiments."""

    NUMDIFF = "numdiff"
    CT = "ct"
    DECONV = "deconv"
    TV = "tv"
    LEARN_SPECTRAL = "learn-spectral"
    SELFTEST = "selftest"


class ImageBuffer(BaseModel):
    """Image with the display range used for PGM scaling and PSNR.

    Attributes:
        values: height x width array, row 0 at the top.
        lo: Value mapped to black.
        hi: Value mapped to white.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    values: np.ndarray
    lo: float = 0.0
    hi: float = 1.0

    @model_validator(mode="after")
    def _check_image(self) -> "ImageBuffer":
        if self.values.ndim != 2 or self.values.size == 0:
            raise ValueError(f"image must be a non-empty 2-D array, got shape {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("image values must be finite")
        if not self.lo < self.hi:
            raise ValueError(f"display range needs lo < hi, got [{self.lo}, {self.hi}]")
        return self

    @property
    def height(self) -> int:
        return int(self.values.shape[0])

    @property
    def width(self) -> int:
        return int(self.values.shape[1])

    @classmethod
    def from_array(cls, values: np.ndarray, lo: float | None = None, hi: float | None = None):
        """Wrap an array, taking the display range from its extremes when not given."""
        arr = np.array(values, dtype=float)
        lo = float(arr.min()) if lo is None else lo
        hi = float(arr.max()) if hi is None else hi
        if hi <= lo:
            hi = lo + 1.0
        return cls(values=arr, lo=lo, hi=hi)


class ExperimentConfig(BaseModel):
    """Parameters of one CLI experiment.

    Fields left at ``None`` fall back to the per-experiment defaults in
    ``harness.experiments``. Precedence is model defaults, then the config
    file, then command-line flags.
    """

    model_config = ConfigDict(extra="forbid")

    experiment: ExperimentName
    seed: int = 1
    output_dir: Path = Path("out")
    n: int | None = Field(None, ge=2)
    delta: float | None = Field(None, ge=0)
    alpha: float | None = Field(None, gt=0)
    mu: float = Field(1.0, ge=1)
    method: str | None = None
    noise: str | None = None
    max_iter: int | None = Field(None, ge=1)
    tau: float | None = Field(None, gt=0)
    k_values: list[int] | None = None
    alphas: list[float] | None = None
    angles: int | None = Field(None, ge=1)
    offsets: int | None = Field(None, ge=1)
    spikes: int | None = Field(None, ge=0)
    sigma: float | None = Field(None, gt=0)
    modes: int | None = Field(None, ge=1)
    samples: int | None = Field(None, ge=1)
    epochs: int | None = Field(None, ge=1)
    batch_size: int | None = Field(None, ge=1)

    def resolved(self, defaults: dict) -> "ExperimentConfig":
        """Copy with every ``None`` field replaced by ``defaults``."""
        fill = {
            key: value
            for key, value in defaults.items()
            if key in type(self).model_fields and getattr(self, key) is None
        }
        return self.model_copy(update=fill)
