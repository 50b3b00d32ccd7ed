"""High-dimensional Bayesian optimization solvers and a BBOB-style benchmark harness."""

from .cmaes import CmaesConfig, run_cmaes
from .embedding import EmbeddingConfig, run_embedding_bo
from .harness import ExperimentPlan, run_experiment
from .registry import dispatch, list_solvers
from .runs import Archive, Evaluation, RunConfig, default_budget
from .surrogate import GpConfig, GpModel
from .testbed import Problem, make_problem
from .turbo import TurboConfig, run_turbo
from .vanilla import run_vanilla_bo

__all__ = [
    "Archive", "CmaesConfig", "EmbeddingConfig", "Evaluation", "ExperimentPlan", "GpConfig", "GpModel",
    "Problem", "RunConfig", "TurboConfig", "default_budget", "dispatch", "list_solvers", "make_problem",
    "run_cmaes", "run_embedding_bo", "run_experiment", "run_turbo", "run_vanilla_bo",
]
__version__ = "0.1.0"
