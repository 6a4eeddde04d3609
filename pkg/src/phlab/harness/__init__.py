from .config import ConfigError, ExperimentConfig, load_config
from .run import load_manifest, report, run

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "load_manifest", "report", "run"]
