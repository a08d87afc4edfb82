"""Multi-UAV NOMA cellular offloading simulator with shared-network deep Q-learning."""

__version__ = "0.1.0"

from .env import Env, EnvConfig  # noqa: E402
from .trainer import Trainer, TrainerConfig  # noqa: E402

__all__ = ["Env", "EnvConfig", "Trainer", "TrainerConfig", "__version__"]
