import os

from dotenv import load_dotenv

# Standard-Konfiguration
CONFIG = {
    "bloch_tol": 1e-9,
    "omega_max_factor": 1e3,
    "ode_dt": 1e-4,
    "sme_dt": 1e-3,
    "ode_norm_tol": 1e-6,
    "sme_positivity_tol": 0.1,
    "batch_size": 1000,
    "root_time_tol": 1e-4,
    "root_param_tol": 1e-10,
    "storage_dir": "./data/results",
    "log_level": "INFO",
}

# Überschreiben mit Umgebungsvariablen (auch aus einer .env-Datei)
load_dotenv()
for _key, _default in list(CONFIG.items()):
    _value = os.environ.get(f"RSP_{_key.upper()}")
    if _value is not None:
        CONFIG[_key] = type(_default)(_value)


def omega_max(gamma=1.0):
    """Default feedback cap Ω_max = omega_max_factor·√(2γ)."""
    return CONFIG["omega_max_factor"] * (2.0 * gamma) ** 0.5
