import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import pandas as pd

from src.backend.model.bloch import BlochVector, bloch_lengths
from src.common.config import CONFIG
from src.common.errors import RspError

logger = logging.getLogger("EngineResults")


@dataclass(frozen=True)
class TrajectoryRecord:
    """
    One integrated or simulated path on a uniform grid.

    Args:
        seed (int, optional): RNG seed of a stochastic path, None for ODE runs.
        dt (float): Grid spacing.
        times (numpy.ndarray): Grid, shape (n,).
        states (numpy.ndarray): Bloch components, shape (n, 3).
        record (numpy.ndarray, optional): Cumulative measurement record R(t), shape (n,).
        scenario (str): Scenario tag.
    """

    seed: Optional[int]
    dt: float
    times: np.ndarray = field(repr=False)
    states: np.ndarray = field(repr=False)
    record: Optional[np.ndarray] = field(default=None, repr=False)
    scenario: str = "custom"

    def __post_init__(self):
        steps = np.diff(self.times)
        if self.times.ndim != 1 or np.any(steps <= 0.0):
            raise RspError("trajectory times must be strictly increasing")
        if steps.size and not np.allclose(steps, self.dt, rtol=1e-9, atol=1e-12):
            raise RspError("trajectory times must be uniformly spaced by dt")
        if self.states.shape != (self.times.size, 3):
            raise RspError(f"states must have shape ({self.times.size}, 3), got {self.states.shape}")

    @property
    def x(self):
        return self.states[:, 0]

    @property
    def y(self):
        return self.states[:, 1]

    @property
    def z(self):
        return self.states[:, 2]

    @property
    def lengths(self):
        return bloch_lengths(self.states)

    @property
    def lambda_max(self):
        return 0.5 * (1.0 + self.lengths)

    def bloch(self, index):
        return BlochVector.from_array(self.states[index])

    def component(self, name):
        if name == "lambda":
            return self.lambda_max
        return {"x": self.x, "y": self.y, "z": self.z}[name]

    def to_frame(self):
        frame = pd.DataFrame({"t": self.times, "x": self.x, "y": self.y, "z": self.z})
        if self.record is not None:
            frame["R"] = self.record
        return frame


@dataclass
class RunningMoments:
    """Per-time-point count, Σv and Σv²; merging is associative."""

    count: int
    total: np.ndarray
    total_sq: np.ndarray

    @classmethod
    def empty(cls, size):
        return cls(0, np.zeros(size), np.zeros(size))

    @classmethod
    def from_values(cls, values):
        values = np.atleast_2d(np.asarray(values, dtype=float))
        return cls(values.shape[0], values.sum(axis=0), np.square(values).sum(axis=0))

    def merge(self, other):
        return RunningMoments(self.count + other.count, self.total + other.total, self.total_sq + other.total_sq)

    def mean(self):
        return self.total / self.count

    def stderr(self):
        if self.count < 2:
            raise RspError("a standard error needs at least two samples")
        mean = self.mean()
        variance = (self.total_sq - self.count * mean * mean) / (self.count - 1)
        return np.sqrt(np.clip(variance, 0.0, None) / self.count)


@dataclass(frozen=True)
class EnsembleSummary:
    """
    Mean and standard error per time point over N samples.

    ``extras`` carries additional per-time arrays, e.g. the importance
    weight statistics of the linear-trajectory sampler.
    """

    times: np.ndarray = field(repr=False)
    mean: np.ndarray = field(repr=False)
    stderr: np.ndarray = field(repr=False)
    n: int
    scenario: str
    component: str = "x"
    extras: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_moments(cls, times, moments, scenario, component="x", extras=None):
        return cls(
            times=np.asarray(times, dtype=float),
            mean=moments.mean(),
            stderr=moments.stderr(),
            n=moments.count,
            scenario=scenario,
            component=component,
            extras=extras or {},
        )

    def index_of(self, t):
        index = int(np.argmin(np.abs(self.times - t)))
        spacing = self.times[1] - self.times[0] if self.times.size > 1 else 0.0
        if abs(self.times[index] - t) > max(0.5 * spacing, 1e-12) + 1e-9:
            raise RspError(f"t = {t} is not on the ensemble grid")
        return index

    def at(self, t):
        """(mean, stderr) at the grid point nearest to t."""
        index = self.index_of(t)
        return float(self.mean[index]), float(self.stderr[index])

    def to_frame(self):
        return pd.DataFrame({"t": self.times, "value": self.mean, "stderr": self.stderr})


def merge_all(parts):
    parts = list(parts)
    result = parts[0]
    for part in parts[1:]:
        result = result.merge(part)
    return result


def default_batch_size():
    return int(CONFIG["batch_size"])
