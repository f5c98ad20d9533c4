# hybrid/runtime
# Particle-based hybrid inference over the symbolic state, the enumeration
# oracle and synthetic data generation.

from dotenv import load_dotenv

from .config import Engine, RunConfig, get_config
from .engine import Interpreter, RandomChooser, ScriptedChooser
from .infer import Diagnostics, InferenceResult, prepare_data, required_rows, run
from .oracle import MAX_DISCRETE, OracleResult, compare, oracle_posterior
from .particles import Particle, ess, resample, systematic_indices
from .simulate import synthesize

load_dotenv()

__all__ = [
    "Engine", "RunConfig", "get_config",
    "Interpreter", "RandomChooser", "ScriptedChooser",
    "Diagnostics", "InferenceResult", "prepare_data", "required_rows", "run",
    "MAX_DISCRETE", "OracleResult", "compare", "oracle_posterior",
    "Particle", "ess", "resample", "systematic_indices",
    "synthesize",
]
