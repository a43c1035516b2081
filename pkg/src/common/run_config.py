import os
from pathlib import Path
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from src.backend.model.scenario import ScenarioParams
from src.common.config import CONFIG

ENGINES = ("analytic", "ode", "sme", "linear-mc")


class RunConfig(BaseModel):
    """
    Everything one CLI run needs.

    Times are in units of 1/γ; γ itself lives in ``params``.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    scenario: str = "ideal"
    params: ScenarioParams = Field(default_factory=ScenarioParams)
    t_end: float = Field(default=5.0, gt=0)
    points: int = Field(default=501, ge=2)
    engine: Literal["analytic", "ode", "sme", "linear-mc"] = "analytic"
    n_traj: int = Field(default=10_000, ge=2)
    seed: int = Field(default=0, ge=0)
    dt: Optional[float] = Field(default=None, gt=0)
    benchmark: Literal["bloch", "lambda"] = "lambda"
    out: Optional[Path] = None

    @field_validator("out")
    @classmethod
    def _check_out(cls, value):
        if value is not None:
            parent = value.parent if str(value.parent) else Path(".")
            if parent.exists() and not os.access(parent, os.W_OK):
                raise ValueError(f"output directory {parent} is not writable")
        return value

    def engine_dt(self):
        """Step size for the selected engine, falling back to the CONFIG defaults."""
        if self.dt is not None:
            return self.dt
        return CONFIG["sme_dt"] if self.engine == "sme" else CONFIG["ode_dt"]

    def time_grid(self):
        return np.linspace(0.0, self.t_end, self.points)
