"""Link-level simulation of NR PUCCH formats 0 to 4."""
from .errors import (ConfigError, InsufficientRateError, InsufficientSamplesError,
                     InvalidArgumentError, LayoutError)
from .phy import Format, Modulation, PucchConfig, ResourceGrid

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "InsufficientRateError", "InsufficientSamplesError", "InvalidArgumentError",
    "LayoutError", "Format", "Modulation", "PucchConfig", "ResourceGrid", "__version__",
]
