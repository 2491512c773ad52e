# EGO factor study engine for bocoa

__version__ = "0.1.0"

from core.bo_loop import RunResult, random_search_baseline, replay, run
from core.configs import BOConfig, config_from_name, config_names
from core.testbed import FunctionInstance, TestFunctionId, make_instance

__all__ = [
    '__version__',
    'BOConfig',
    'FunctionInstance',
    'RunResult',
    'TestFunctionId',
    'config_from_name',
    'config_names',
    'make_instance',
    'random_search_baseline',
    'replay',
    'run',
]
