from .config import RunConfig, load_config, parse_config
from .experiments import SplitStatistics, split_experiment
from .main import run
from .output import write_vtk

__all__ = ["RunConfig", "load_config", "parse_config", "SplitStatistics", "split_experiment", "run", "write_vtk"]
