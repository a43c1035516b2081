import logging
import os

import pandas as pd

logger = logging.getLogger("ResultRepository")

# 17 significant digits make the CSV round trip bit exact
FLOAT_FORMAT = "%.17g"
RESULT_TYPES = ("curves", "tables", "crossings", "validation")


class ResultRepository:
    def __init__(self, storage_path):
        """
        Initialize the repository with a storage path.

        Args:
            storage_path (str): Directory for stored results, one subdirectory per result type.
        """
        self.storage_path = storage_path
        os.makedirs(storage_path, exist_ok=True)
        for result_type in RESULT_TYPES:
            os.makedirs(os.path.join(storage_path, result_type), exist_ok=True)

    def save_data(self, result_type, frame, name):
        """
        Save a result frame as CSV.

        Args:
            result_type (str): One of RESULT_TYPES.
            frame (pandas.DataFrame): Data to save.
            name (str): File name without extension.

        Returns:
            str: Path to the saved file.
        """
        if result_type not in RESULT_TYPES:
            raise ValueError(f"Unknown result type '{result_type}'")
        filepath = os.path.join(self.storage_path, result_type, f"{name}.csv")
        write_csv(frame, filepath)
        return filepath

    def load_data(self, result_type, name):
        filepath = os.path.join(self.storage_path, result_type, f"{name}.csv")
        if not os.path.exists(filepath):
            return None
        return read_csv(filepath)

    def list_available_data(self):
        """
        List stored results.

        Returns:
            dict: Result type -> sorted file names, only for non-empty types.
        """
        result = {}
        for result_type in RESULT_TYPES:
            directory = os.path.join(self.storage_path, result_type)
            files = sorted(f for f in os.listdir(directory) if f.endswith(".csv"))
            if files:
                result[result_type] = files
        return result


def write_csv(frame, filepath):
    directory = os.path.dirname(str(filepath))
    if directory:
        os.makedirs(directory, exist_ok=True)
    frame.to_csv(filepath, index=False, float_format=FLOAT_FORMAT)
    logger.info(f"Wrote {len(frame)} rows to {filepath}")
    return str(filepath)


def read_csv(filepath):
    return pd.read_csv(filepath, float_precision="round_trip")
