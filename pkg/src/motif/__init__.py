"""Motion description toolkit: trajectories, a motion DSL, an analytic discriminator, and dataset tooling."""

from .config import DEFAULT, Config, load_config
from .errors import MotifError

__all__ = ["Config", "DEFAULT", "load_config", "MotifError"]
__version__ = "0.1.0"
