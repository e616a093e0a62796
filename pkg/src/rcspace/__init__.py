"""Behaviour-space characterisation of reservoir-computing substrates.

Workflow: explore a substrate's behaviour space (kernel rank,
generalisation rank, memory capacity) with novelty search, score the
coverage of the discovered behaviours with a voxel measure, evaluate
sampled configurations on benchmark tasks, and fit small feed-forward
models that predict task performance from behaviour alone.
"""

from .exceptions import (
    ConfigurationError,
    DegenerateRunError,
    IngestionError,
    NumericalError,
    RcSpaceError,
)
from .learning import PerformancePredictor, TrainSpec, prediction_error, spearman, transfer_predict
from .measures import (
    BehaviourEvaluator,
    BehaviourPoint,
    MeasureConfig,
    behaviour,
    effective_rank,
    generalisation_rank,
    kernel_rank,
    memory_capacity,
)
from .quality import compare, coverage, coverage_curve
from .readout import LinearReadout, nmse
from .search import NoveltySearch, NsParams, SearchIndividual, random_search, sparseness, update_rho_min
from .substrates import (
    DrParams,
    EchoStateNetwork,
    EsnParams,
    Genotype,
    MackeyGlassReservoir,
    SubstrateBase,
    dr_integrate,
    esn_step,
    infect,
    mutate,
)
from .tasks import TaskDataset, evaluate_task, gen_narma, gen_nce, load_laser, make_dataset

__version__ = "0.1.0"

__all__ = [
    "BehaviourEvaluator",
    "BehaviourPoint",
    "ConfigurationError",
    "DegenerateRunError",
    "DrParams",
    "EchoStateNetwork",
    "EsnParams",
    "Genotype",
    "IngestionError",
    "LinearReadout",
    "MackeyGlassReservoir",
    "MeasureConfig",
    "NoveltySearch",
    "NsParams",
    "NumericalError",
    "PerformancePredictor",
    "RcSpaceError",
    "SearchIndividual",
    "SubstrateBase",
    "TaskDataset",
    "TrainSpec",
    "behaviour",
    "compare",
    "coverage",
    "coverage_curve",
    "dr_integrate",
    "effective_rank",
    "esn_step",
    "evaluate_task",
    "gen_narma",
    "gen_nce",
    "generalisation_rank",
    "infect",
    "kernel_rank",
    "load_laser",
    "make_dataset",
    "memory_capacity",
    "mutate",
    "nmse",
    "prediction_error",
    "random_search",
    "sparseness",
    "spearman",
    "transfer_predict",
    "update_rho_min",
]
