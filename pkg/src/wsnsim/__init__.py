"""Round-based simulator for clustered wireless sensor networks."""

from .engine import run_simulation
from .model import NetworkConfig, Protocol, ProtocolParams, RadioParams, load_config, validate_config

__all__ = ["NetworkConfig", "Protocol", "ProtocolParams", "RadioParams", "load_config",
           "run_simulation", "validate_config"]
__version__ = "0.1.0"
