"""Link-level simulator for a cooperative DS-CDMA uplink with buffer-aided
relay pair selection and distributed space-time coding."""

__version__ = "0.1.0"

from .config import ConfigError, SimConfig, parse_config
from .protocol import run_point, run_sweep, run_trial

__all__ = [
    "__version__",
    "ConfigError",
    "SimConfig",
    "parse_config",
    "run_trial",
    "run_point",
    "run_sweep",
]
