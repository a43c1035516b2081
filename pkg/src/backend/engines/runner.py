import logging

import numpy as np
import pandas as pd

from src.backend.analytic.curves import scenario_curve
from src.backend.engines.linear_trajectory import linear_trajectory_sample
from src.backend.engines.ode import BlochRhs, integrate_ode
from src.backend.engines.sme import ensemble_mean
from src.backend.model.scenario import initial_state, scenario_params
from src.common.errors import ConfigError

logger = logging.getLogger("CurveRunner")


def run_curve(config):
    """
    Curve of ``config.scenario`` on the configured grid with the selected engine.

    Returns:
        pandas.DataFrame: Columns t, value and, for stochastic engines, stderr.
    """
    params = scenario_params(config.scenario, config.params)
    grid = config.time_grid()
    logger.info(f"Curve '{config.scenario}' with engine '{config.engine}' on {grid.size} points")

    if config.engine == "analytic":
        curve = scenario_curve(config.scenario, params)
        return pd.DataFrame({"t": grid, "value": curve.values(grid)})

    if config.engine == "ode":
        if config.scenario == "open-loop":
            raise ConfigError("open-loop has no deterministic feedback equation; use the sme or linear-mc engine")
        rhs = BlochRhs(params, scenario=config.scenario)
        path = integrate_ode(rhs, initial_state(config.scenario), config.t_end, config.engine_dt())
        component = "y" if config.scenario == "measurement-only" else "x"
        return pd.DataFrame({"t": grid, "value": np.interp(grid, path.times, path.component(component))})

    if config.engine == "sme":
        summary = ensemble_mean(
            params,
            n_traj=config.n_traj,
            t_end=config.t_end,
            dt=config.engine_dt(),
            base_seed=config.seed,
            b0=initial_state(config.scenario),
            component="y" if config.scenario == "measurement-only" else None,
        )
        indices = [summary.index_of(t) for t in grid]
        return pd.DataFrame({"t": grid, "value": summary.mean[indices], "stderr": summary.stderr[indices]})

    if config.engine == "linear-mc":
        if config.scenario != "open-loop":
            raise ConfigError("the linear-mc engine only samples the open-loop scenario")
        values = np.full(grid.size, 0.5)
        errors = np.zeros(grid.size)
        positive = grid > 0.0
        if np.any(positive):
            summary = linear_trajectory_sample(grid[positive], config.n_traj, config.seed, params.gamma)
            values[positive] = summary.mean
            errors[positive] = summary.stderr
        return pd.DataFrame({"t": grid, "value": values, "stderr": errors})

    raise ConfigError(f"unknown engine '{config.engine}'")
