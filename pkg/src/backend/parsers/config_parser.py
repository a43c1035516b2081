import configparser
import logging
import os

from src.common.errors import ConfigError

logger = logging.getLogger("ConfigParser")

RUN_KEYS = {
    "scenario": str,
    "engine": str,
    "t_end": float,
    "points": int,
    "n_traj": int,
    "seed": int,
    "dt": float,
    "benchmark": str,
    "out": str,
}

PARAM_KEYS = ("gamma", "eta", "tau", "delta", "alpha", "gamma_iso", "gamma_d")


class RunConfigParser:
    def __init__(self, file_path=None):
        """
        Reads run configuration files.

        The file has a ``[run]`` section with run settings and any number of
        ``[scenario:<name>]`` sections with parameter values; the section of
        the selected scenario is applied on top of ``[run]``.

        Args:
            file_path (str, optional): Path of the configuration file.
        """
        self.file_path = file_path
        self.settings = None

    def parse(self, file_path=None, scenario=None):
        """
        Parse the file into a flat dict of run settings plus ``params``.

        Args:
            file_path (str, optional): Overrides the path given to the constructor.
            scenario (str, optional): Scenario chosen outside the file (a command-line
                flag); it wins over ``[run]`` and selects the ``[scenario:<name>]`` section.

        Returns:
            dict: Keys of RunConfig; parameter values are collected under "params".
        """
        file_path = file_path or self.file_path
        if file_path is None:
            raise ConfigError("no configuration file given")
        if not os.path.exists(file_path):
            raise FileNotFoundError(f"Configuration file {file_path} not found")

        reader = configparser.ConfigParser()
        try:
            reader.read(file_path, encoding="utf-8")
        except configparser.Error as exc:
            raise ConfigError(f"Cannot parse {file_path}: {exc}") from exc

        settings = {"params": {}}
        if reader.has_section("run"):
            for key, value in reader.items("run"):
                self._store(settings, key, value, "run")

        if scenario is not None:
            settings["scenario"] = scenario
        scenario = settings.get("scenario")
        available = [s.split(":", 1)[1].strip() for s in reader.sections() if s.startswith("scenario:")]
        if scenario is None and len(available) == 1:
            scenario = settings["scenario"] = available[0]
        if scenario is not None and reader.has_section(f"scenario:{scenario}"):
            for key, value in reader.items(f"scenario:{scenario}"):
                self._store(settings, key, value, f"scenario:{scenario}")

        logger.info(f"Read configuration from {file_path} (scenario sections: {', '.join(available) or 'none'})")
        self.settings = settings
        return settings

    def _store(self, settings, key, value, section):
        key = key.replace("-", "_")
        try:
            if key in PARAM_KEYS:
                settings["params"][key] = float(value)
            elif key in RUN_KEYS:
                settings[key] = RUN_KEYS[key](value)
            else:
                raise ConfigError(f"Unknown key '{key}' in section [{section}]")
        except ValueError as exc:
            raise ConfigError(f"Invalid value for '{key}' in section [{section}]: {value!r}") from exc
